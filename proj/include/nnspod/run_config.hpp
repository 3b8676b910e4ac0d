#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nnspod/auto_shift.hpp"
#include "nnspod/fom_advection.hpp"
#include "nnspod/shift.hpp"

namespace nnspod {

/// Configuration file or value violates the schema.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Monomial coef * x^px * y^py * t^pt of an analytic advection component.
struct PolyTerm {
    double coef = 0.0;
    unsigned px = 0, py = 0, pt = 0;
};

struct FieldConfig {
    std::string kind = "constant";  // constant | analytic
    double velocity_x = 1.0;
    double velocity_y = -1.0;
    std::vector<PolyTerm> terms_x, terms_y;

    AdvectionField build() const;
};

struct FomSection {
    std::string kind = "constant";  // constant | analytic | deforming | csv
    FieldConfig field{};
    Point ic_center{0.2, 0.8};
    double ic_sigma = 0.1;
    double ic_amplitude = 1.0;
    double t_final = 1.0;
    std::size_t n_steps = 100;
    bool include_ic = true;
    double solver_tol = 1e-10;
    std::size_t solver_max_iters = 5000;
    std::string csv_path;
};

struct PodSection {
    std::vector<double> thresholds{1e-1, 1e-2, 1e-3};
};

struct ShiftSection {
    FieldConfig field{};
    double t_ref = 0.0;
    std::size_t ode_steps = 32;
};

struct GridSection {
    std::size_t nx = 50, ny = 50;
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

    StructuredGrid build() const;
};

/// Whole-run configuration document. Unknown keys anywhere in the JSON are
/// rejected; load_run_config fills defaults for everything absent.
struct RunConfig {
    GridSection grid{};
    FomSection fom{};
    PodSection pod{};
    ShiftSection shift{};
    NnspodConfig nnspod{};
    std::string snapshots;  // input .snap path for reduce
    std::string output_dir = "out";
    std::uint64_t seed = 0;
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Deterministic serialization of the fully resolved configuration,
/// written next to every command's outputs.
std::string resolved_config_json(const RunConfig& cfg);

FomConfig build_fom_config(const RunConfig& cfg);
ShiftSpec build_shift_spec(const RunConfig& cfg);

}  // namespace nnspod
