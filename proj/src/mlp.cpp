#include "nnspod/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace nnspod {

Activation activation_from_string(const std::string& s) {
    if (s == "linear") return Activation::linear;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "hardsigmoid" || s == "hard_sigmoid") return Activation::hard_sigmoid;
    if (s == "prelu") return Activation::prelu;
    throw InvalidInput("unknown activation '" + s + "'");
}

std::string activation_to_string(Activation a) {
    switch (a) {
        case Activation::linear: return "linear";
        case Activation::sigmoid: return "sigmoid";
        case Activation::hard_sigmoid: return "hardsigmoid";
        case Activation::prelu: return "prelu";
    }
    throw InvalidInput("unknown activation tag");
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) {
        n += l.weights.size() + l.bias.size();
        if (l.activation == Activation::prelu) ++n;
    }
    return n;
}

Mlp make_mlp(std::uint64_t seed, std::size_t input_dim, std::span<const LayerSpec> specs) {
    if (input_dim == 0 || specs.empty())
        throw InvalidInput("make_mlp: need a positive input dimension and at least one layer");
    SplitMix64 rng(seed);
    Mlp net;
    std::size_t in = input_dim;
    for (const LayerSpec& spec : specs) {
        if (spec.neurons == 0)
            throw InvalidInput("make_mlp: layer with zero neurons");
        Layer l;
        l.in = in;
        l.out = spec.neurons;
        l.activation = spec.activation;
        l.weights.resize(l.in * l.out);
        const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
        for (double& w : l.weights) w = (2.0 * rng.uniform() - 1.0) * limit;
        l.bias.assign(l.out, 0.0);
        l.prelu_slope = 0.25;
        net.layers.push_back(std::move(l));
        in = spec.neurons;
    }
    return net;
}

namespace {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double activate(Activation a, double z, double slope) {
    switch (a) {
        case Activation::linear: return z;
        case Activation::sigmoid: return sigmoid(z);
        case Activation::hard_sigmoid: return std::clamp(z / 6.0 + 0.5, 0.0, 1.0);
        case Activation::prelu: return z >= 0.0 ? z : slope * z;
    }
    return z;
}

/// derivative dy/dz; y is the already-computed activation value
inline double activate_grad(Activation a, double z, double y, double slope) {
    switch (a) {
        case Activation::linear: return 1.0;
        case Activation::sigmoid: return y * (1.0 - y);
        case Activation::hard_sigmoid: return (z >= -3.0 && z <= 3.0) ? 1.0 / 6.0 : 0.0;
        case Activation::prelu: return z >= 0.0 ? 1.0 : slope;
    }
    return 1.0;
}

}  // namespace

std::vector<double> forward(const Mlp& net, std::span<const double> input, ForwardCache* cache) {
    if (net.layers.empty())
        throw InvalidInput("forward: empty network");
    if (input.size() != net.input_dim())
        throw InvalidInput("forward: input length " + std::to_string(input.size()) +
                           " does not match network input dimension " +
                           std::to_string(net.input_dim()));
    if (cache) {
        cache->acts.assign(net.layers.size() + 1, {});
        cache->preacts.assign(net.layers.size(), {});
        cache->acts[0].assign(input.begin(), input.end());
    }

    std::vector<double> x(input.begin(), input.end());
    std::vector<double> z;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        z.assign(layer.out, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double* w = layer.weights.data() + o * layer.in;
            double acc = layer.bias[o];
            for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * x[i];
            z[o] = acc;
        }
        if (cache) cache->preacts[l] = z;
        x.resize(layer.out);
        for (std::size_t o = 0; o < layer.out; ++o)
            x[o] = activate(layer.activation, z[o], layer.prelu_slope);
        if (cache) cache->acts[l + 1] = x;
    }
    return x;
}

MlpGradients MlpGradients::zeros_like(const Mlp& net) {
    MlpGradients g;
    g.layers.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        g.layers[l].weights.assign(net.layers[l].weights.size(), 0.0);
        g.layers[l].bias.assign(net.layers[l].bias.size(), 0.0);
        g.layers[l].prelu_slope = 0.0;
    }
    return g;
}

void MlpGradients::reset() {
    for (LayerGradients& l : layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
        l.prelu_slope = 0.0;
    }
}

std::vector<double> backward(const Mlp& net, const ForwardCache& cache,
                             std::span<const double> output_grad, MlpGradients* grads) {
    const std::size_t n_layers = net.layers.size();
    if (cache.acts.size() != n_layers + 1 || cache.preacts.size() != n_layers)
        throw InvalidInput("backward: cache does not match network depth");
    for (std::size_t l = 0; l < n_layers; ++l)
        if (cache.preacts[l].size() != net.layers[l].out ||
            cache.acts[l].size() != net.layers[l].in)
            throw InvalidInput("backward: stale cache (layer dimension mismatch)");
    if (output_grad.size() != net.output_dim())
        throw InvalidInput("backward: output gradient length mismatch");
    if (grads && grads->layers.size() != n_layers)
        throw InvalidInput("backward: gradient accumulator does not match network");

    std::vector<double> da(output_grad.begin(), output_grad.end());
    std::vector<double> dz, dx;
    for (std::size_t l = n_layers; l-- > 0;) {
        const Layer& layer = net.layers[l];
        const auto& z = cache.preacts[l];
        const auto& y = cache.acts[l + 1];
        const auto& x = cache.acts[l];

        dz.assign(layer.out, 0.0);
        double dslope = 0.0;
        for (std::size_t o = 0; o < layer.out; ++o) {
            dz[o] = da[o] * activate_grad(layer.activation, z[o], y[o], layer.prelu_slope);
            if (layer.activation == Activation::prelu && z[o] < 0.0) dslope += da[o] * z[o];
        }
        if (grads) {
            LayerGradients& g = grads->layers[l];
            for (std::size_t o = 0; o < layer.out; ++o) {
                double* gw = g.weights.data() + o * layer.in;
                const double d = dz[o];
                for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * x[i];
                g.bias[o] += d;
            }
            g.prelu_slope += dslope;
        }
        dx.assign(layer.in, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double* w = layer.weights.data() + o * layer.in;
            const double d = dz[o];
            for (std::size_t i = 0; i < layer.in; ++i) dx[i] += d * w[i];
        }
        da = dx;
    }
    return da;
}

AdamState::AdamState(const Mlp& net, double learning_rate)
    : lr(learning_rate), m(net.parameter_count(), 0.0), v(net.parameter_count(), 0.0) {
    if (!(learning_rate > 0.0))
        throw InvalidInput("AdamState: learning rate must be positive");
}

void adam_step(Mlp& net, const MlpGradients& grads, AdamState& state) {
    if (grads.layers.size() != net.layers.size())
        throw InvalidInput("adam_step: gradient shape mismatch");
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

    std::size_t idx = 0;
    auto update = [&](double& param, double g, std::size_t layer) {
        if (!std::isfinite(g))
            throw TrainingError("adam_step: non-finite gradient in layer " +
                                std::to_string(layer), state.step);
        double& m = state.m[idx];
        double& v = state.v[idx];
        ++idx;
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        param -= state.lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
    };

    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        Layer& layer = net.layers[l];
        const LayerGradients& g = grads.layers[l];
        if (g.weights.size() != layer.weights.size() || g.bias.size() != layer.bias.size())
            throw InvalidInput("adam_step: gradient shape mismatch in layer " + std::to_string(l));
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            update(layer.weights[i], g.weights[i], l);
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            update(layer.bias[i], g.bias[i], l);
        if (layer.activation == Activation::prelu)
            update(layer.prelu_slope, g.prelu_slope, l);
    }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {
std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit_array(std::ostream& os, const std::vector<double>& values) {
    os << '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os << ',';
        os << g17(values[i]);
    }
    os << ']';
}
}  // namespace

std::string mlp_to_json(const Mlp& net) {
    std::ostringstream os;
    os << "{\n  \"format\": \"mlp-checkpoint-v1\",\n  \"layers\": [\n";
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        os << "    {\"in\": " << layer.in << ", \"out\": " << layer.out
           << ", \"activation\": \"" << activation_to_string(layer.activation) << "\"";
        if (layer.activation == Activation::prelu)
            os << ", \"prelu_slope\": " << g17(layer.prelu_slope);
        os << ",\n     \"weights\": ";
        emit_array(os, layer.weights);
        os << ",\n     \"bias\": ";
        emit_array(os, layer.bias);
        os << '}' << (l + 1 < net.layers.size() ? "," : "") << '\n';
    }
    os << "  ]\n}\n";
    return os.str();
}

void save_mlp(const Mlp& net, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os)
        throw FormatError("save_mlp: cannot open '" + path.string() + "'");
    os << mlp_to_json(net);
}

Mlp load_mlp(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is)
        throw FormatError("load_mlp: cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("load_mlp: invalid JSON in '" + path.string() + "': " + e.what());
    }
    if (j.value("format", "") != "mlp-checkpoint-v1")
        throw FormatError("load_mlp: '" + path.string() + "' is not an mlp checkpoint");
    Mlp net;
    for (const auto& jl : j.at("layers")) {
        Layer l;
        l.in = jl.at("in").get<std::size_t>();
        l.out = jl.at("out").get<std::size_t>();
        l.activation = activation_from_string(jl.at("activation").get<std::string>());
        if (l.activation == Activation::prelu)
            l.prelu_slope = jl.at("prelu_slope").get<double>();
        l.weights = jl.at("weights").get<std::vector<double>>();
        l.bias = jl.at("bias").get<std::vector<double>>();
        if (l.weights.size() != l.in * l.out || l.bias.size() != l.out)
            throw FormatError("load_mlp: parameter array sizes do not match layer dimensions");
        if (!net.layers.empty() && net.layers.back().out != l.in)
            throw FormatError("load_mlp: layer dimensions do not chain");
        net.layers.push_back(std::move(l));
    }
    if (net.layers.empty())
        throw FormatError("load_mlp: checkpoint has no layers");
    return net;
}

// ---------------------------------------------------------------------------
// Batched paths
// ---------------------------------------------------------------------------

void BatchWorkspace::ensure(const Mlp& net, std::size_t n) {
    const std::size_t n_layers = net.layers.size();
    acts_.resize(n_layers + 1);
    preacts_.resize(n_layers);
    std::size_t max_dim = net.input_dim();
    acts_[0].resize(n * net.input_dim());
    for (std::size_t l = 0; l < n_layers; ++l) {
        acts_[l + 1].resize(n * net.layers[l].out);
        preacts_[l].resize(n * net.layers[l].out);
        max_dim = std::max(max_dim, net.layers[l].out);
    }
    da_.resize(n * max_dim);
    dz_.resize(n * max_dim);
    n_ = n;
}

namespace {

/// dot product with four independent partial sums; the fixed combination
/// order keeps results deterministic while letting the compiler vectorize
inline double dot4(const double* a, const double* b, std::size_t n) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 += a[i] * b[i];
        a1 += a[i + 1] * b[i + 1];
        a2 += a[i + 2] * b[i + 2];
        a3 += a[i + 3] * b[i + 3];
    }
    double acc = (a0 + a1) + (a2 + a3);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

const double* BatchWorkspace::forward(const Mlp& net, const double* x, std::size_t n) {
    ensure(net, n);
    std::copy(x, x + n * net.input_dim(), acts_[0].begin());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        const double* in = acts_[l].data();
        double* z = preacts_[l].data();
        double* out = acts_[l + 1].data();
        const double* w = layer.weights.data();
        const double* b = layer.bias.data();
        for (std::size_t s = 0; s < n; ++s) {
            const double* xr = in + s * layer.in;
            double* zr = z + s * layer.out;
            for (std::size_t o = 0; o < layer.out; ++o)
                zr[o] = b[o] + dot4(w + o * layer.in, xr, layer.in);
        }
        const std::size_t count = n * layer.out;
        switch (layer.activation) {
            case Activation::linear:
                std::copy(z, z + count, out);
                break;
            case Activation::sigmoid:
                for (std::size_t i = 0; i < count; ++i) out[i] = sigmoid(z[i]);
                break;
            case Activation::hard_sigmoid:
                for (std::size_t i = 0; i < count; ++i)
                    out[i] = std::clamp(z[i] / 6.0 + 0.5, 0.0, 1.0);
                break;
            case Activation::prelu: {
                const double slope = layer.prelu_slope;
                for (std::size_t i = 0; i < count; ++i)
                    out[i] = z[i] >= 0.0 ? z[i] : slope * z[i];
                break;
            }
        }
    }
    return acts_[net.layers.size()].data();
}

void BatchWorkspace::backward(const Mlp& net, const double* dy, std::size_t n, MlpGradients* grads,
                              double* dx) {
    if (n != n_)
        throw InvalidInput("BatchWorkspace::backward: batch size does not match last forward");
    const std::size_t n_layers = net.layers.size();
    std::copy(dy, dy + n * net.output_dim(), da_.begin());

    for (std::size_t l = n_layers; l-- > 0;) {
        const Layer& layer = net.layers[l];
        const double* z = preacts_[l].data();
        const double* y = acts_[l + 1].data();
        const double* in = acts_[l].data();
        const std::size_t count = n * layer.out;

        double dslope = 0.0;
        switch (layer.activation) {
            case Activation::linear:
                std::copy(da_.begin(), da_.begin() + count, dz_.begin());
                break;
            case Activation::sigmoid:
                for (std::size_t i = 0; i < count; ++i) dz_[i] = da_[i] * y[i] * (1.0 - y[i]);
                break;
            case Activation::hard_sigmoid:
                for (std::size_t i = 0; i < count; ++i)
                    dz_[i] = (z[i] >= -3.0 && z[i] <= 3.0) ? da_[i] / 6.0 : 0.0;
                break;
            case Activation::prelu: {
                const double slope = layer.prelu_slope;
                for (std::size_t i = 0; i < count; ++i) {
                    if (z[i] >= 0.0) {
                        dz_[i] = da_[i];
                    } else {
                        dz_[i] = da_[i] * slope;
                        dslope += da_[i] * z[i];
                    }
                }
                break;
            }
        }

        if (grads) {
            LayerGradients& g = grads->layers[l];
            for (std::size_t s = 0; s < n; ++s) {
                const double* xr = in + s * layer.in;
                const double* dzr = dz_.data() + s * layer.out;
                for (std::size_t o = 0; o < layer.out; ++o) {
                    const double d = dzr[o];
                    if (d == 0.0) continue;
                    double* gw = g.weights.data() + o * layer.in;
                    for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * xr[i];
                    g.bias[o] += d;
                }
            }
            g.prelu_slope += dslope;
        }

        const bool need_dx = (l > 0) || (dx != nullptr);
        if (!need_dx) break;
        double* target = (l > 0) ? da_.data() : dx;
        const double* w = layer.weights.data();
        std::fill(target, target + n * layer.in, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            const double* dzr = dz_.data() + s * layer.out;
            double* dxr = target + s * layer.in;
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = dzr[o];
                if (d == 0.0) continue;
                const double* wr = w + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) dxr[i] += d * wr[i];
            }
        }
    }
}

}  // namespace nnspod
