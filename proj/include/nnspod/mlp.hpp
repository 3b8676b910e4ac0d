#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nnspod/errors.hpp"

namespace nnspod {

enum class Activation { linear, sigmoid, hard_sigmoid, prelu };

Activation activation_from_string(const std::string& s);
std::string activation_to_string(Activation a);

/// Dense layer y = act(W x + b). PReLU layers carry one learnable slope
/// scalar for the whole layer.
struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // row-major out x in
    std::vector<double> bias;     // out
    Activation activation = Activation::linear;
    double prelu_slope = 0.25;
};

struct Mlp {
    std::vector<Layer> layers;

    std::size_t input_dim() const { return layers.front().in; }
    std::size_t output_dim() const { return layers.back().out; }
    std::size_t parameter_count() const;
};

struct LayerSpec {
    std::size_t neurons = 0;
    Activation activation = Activation::linear;
};

/// Deterministic initialization: Glorot-uniform weights from a SplitMix64
/// stream seeded with `seed`, zero biases, PReLU slopes 0.25.
Mlp make_mlp(std::uint64_t seed, std::size_t input_dim, std::span<const LayerSpec> specs);

/// Everything backward() needs from the matching forward() call.
struct ForwardCache {
    std::vector<std::vector<double>> acts;     // layer inputs plus final output
    std::vector<std::vector<double>> preacts;  // one per layer
};

std::vector<double> forward(const Mlp& net, std::span<const double> input,
                            ForwardCache* cache = nullptr);

struct LayerGradients {
    std::vector<double> weights;
    std::vector<double> bias;
    double prelu_slope = 0.0;
};

struct MlpGradients {
    std::vector<LayerGradients> layers;

    static MlpGradients zeros_like(const Mlp& net);
    void reset();
};

/// Reverse-mode gradients for the scalar loss whose output gradient is
/// supplied. Accumulates parameter gradients into `grads` (when non-null)
/// and returns the gradient with respect to the input, so a frozen
/// downstream network can backpropagate into an upstream one.
std::vector<double> backward(const Mlp& net, const ForwardCache& cache,
                             std::span<const double> output_grad, MlpGradients* grads);

/// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8, bias-corrected.
struct AdamState {
    explicit AdamState(const Mlp& net, double learning_rate);
    double lr;
    std::uint64_t step = 0;
    std::vector<double> m, v;  // flattened parameter order
};

void adam_step(Mlp& net, const MlpGradients& grads, AdamState& state);

/// JSON checkpoint with flat parameter arrays at 17 significant digits.
void save_mlp(const Mlp& net, const std::filesystem::path& path);
std::string mlp_to_json(const Mlp& net);
Mlp load_mlp(const std::filesystem::path& path);

/// Reusable buffers for batched training sweeps. One instance per network
/// per training loop; single-writer.
class BatchWorkspace {
public:
    /// x is n x input_dim row-major; returns n x output_dim row-major,
    /// valid until the next forward() call.
    const double* forward(const Mlp& net, const double* x, std::size_t n);

    /// dy is n x output_dim. Accumulates parameter gradients into `grads`
    /// (when non-null) and writes n x input_dim input gradients into `dx`
    /// (when non-null). Uses the state of the last forward() call.
    void backward(const Mlp& net, const double* dy, std::size_t n, MlpGradients* grads,
                  double* dx);

private:
    void ensure(const Mlp& net, std::size_t n);
    std::vector<std::vector<double>> acts_;
    std::vector<std::vector<double>> preacts_;
    std::vector<double> da_, dz_;
    std::size_t n_ = 0;
};

/// Deterministic uniform RNG used for all library randomness.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

}  // namespace nnspod
