#include "nnspod/run_config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"
#include "nnspod/format.hpp"

namespace nnspod {

using json = nlohmann::ordered_json;

namespace {

void check_keys(const json& obj, const std::string& section,
                const std::set<std::string>& allowed) {
    if (!obj.is_object())
        throw ConfigError("config: '" + section + "' must be a JSON object");
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            throw ConfigError("config: unknown key '" + item.key() + "' in " + section);
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
    if (!obj.contains(key)) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
}

std::vector<PolyTerm> read_terms(const json& arr, const std::string& name) {
    if (!arr.is_array())
        throw ConfigError("config: '" + name + "' must be an array of [coef,px,py,pt] terms");
    std::vector<PolyTerm> terms;
    for (const auto& t : arr) {
        if (!t.is_array() || t.size() != 4)
            throw ConfigError("config: each term of '" + name + "' must be [coef,px,py,pt]");
        terms.push_back({t[0].get<double>(), t[1].get<unsigned>(), t[2].get<unsigned>(),
                         t[3].get<unsigned>()});
    }
    return terms;
}

FieldConfig read_field(const json& obj, const std::string& section) {
    FieldConfig f;
    check_keys(obj, section, {"kind", "velocity", "terms_x", "terms_y"});
    read(obj, "kind", f.kind);
    if (obj.contains("velocity")) {
        const auto& v = obj.at("velocity");
        if (!v.is_array() || v.size() != 2)
            throw ConfigError("config: '" + section + ".velocity' must be [vx, vy]");
        f.velocity_x = v[0].get<double>();
        f.velocity_y = v[1].get<double>();
    }
    if (obj.contains("terms_x")) f.terms_x = read_terms(obj.at("terms_x"), section + ".terms_x");
    if (obj.contains("terms_y")) f.terms_y = read_terms(obj.at("terms_y"), section + ".terms_y");
    if (f.kind != "constant" && f.kind != "analytic")
        throw ConfigError("config: '" + section + ".kind' must be constant or analytic");
    if (f.kind == "analytic" && f.terms_x.empty() && f.terms_y.empty())
        throw ConfigError("config: analytic field in " + section + " needs terms_x/terms_y");
    return f;
}

Activation read_activation(const json& obj, const char* key, Activation fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return activation_from_string(obj.at(key).get<std::string>());
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

NetSpec read_net_spec(const json& obj, const std::string& section, const NetSpec& defaults) {
    NetSpec spec = defaults;
    check_keys(obj, section,
               {"hidden_layers", "neurons", "activation", "output_activation", "learning_rate",
                "eps", "max_epochs"});
    read(obj, "hidden_layers", spec.hidden_layers);
    read(obj, "neurons", spec.neurons);
    spec.hidden_activation = read_activation(obj, "activation", defaults.hidden_activation);
    spec.output_activation =
        read_activation(obj, "output_activation", defaults.output_activation);
    read(obj, "learning_rate", spec.learning_rate);
    read(obj, "eps", spec.eps);
    read(obj, "max_epochs", spec.max_epochs);
    return spec;
}

json field_to_json(const FieldConfig& f) {
    json obj;
    obj["kind"] = f.kind;
    if (f.kind == "constant") {
        obj["velocity"] = {f.velocity_x, f.velocity_y};
    } else {
        json tx = json::array(), ty = json::array();
        for (const auto& t : f.terms_x) tx.push_back({t.coef, t.px, t.py, t.pt});
        for (const auto& t : f.terms_y) ty.push_back({t.coef, t.px, t.py, t.pt});
        obj["terms_x"] = tx;
        obj["terms_y"] = ty;
    }
    return obj;
}

json net_spec_to_json(const NetSpec& spec) {
    json obj;
    obj["hidden_layers"] = spec.hidden_layers;
    obj["neurons"] = spec.neurons;
    obj["activation"] = activation_to_string(spec.hidden_activation);
    obj["output_activation"] = activation_to_string(spec.output_activation);
    obj["learning_rate"] = spec.learning_rate;
    obj["eps"] = spec.eps;
    obj["max_epochs"] = spec.max_epochs;
    return obj;
}

}  // namespace

AdvectionField FieldConfig::build() const {
    if (kind == "constant") return AdvectionField::constant(velocity_x, velocity_y);
    auto eval_terms = [](const std::vector<PolyTerm>& terms, double x, double y, double t) {
        double acc = 0.0;
        for (const auto& term : terms) {
            double v = term.coef;
            for (unsigned i = 0; i < term.px; ++i) v *= x;
            for (unsigned i = 0; i < term.py; ++i) v *= y;
            for (unsigned i = 0; i < term.pt; ++i) v *= t;
            acc += v;
        }
        return acc;
    };
    return AdvectionField::analytic(
        [tx = terms_x, ty = terms_y, eval_terms](double x, double y, double t) {
            return Point{eval_terms(tx, x, y, t), eval_terms(ty, x, y, t)};
        });
}

StructuredGrid GridSection::build() const {
    try {
        return StructuredGrid(nx, ny, x_min, x_max, y_min, y_max);
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("config: grid: ") + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError("config: cannot open '" + path.string() + "'");
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config: invalid JSON in '" + path.string() + "': " + e.what());
    }

    RunConfig cfg;
    check_keys(doc, "top level",
               {"grid", "fom", "pod", "shift", "nnspod", "snapshots", "output_dir", "seed"});

    if (doc.contains("grid")) {
        const auto& g = doc.at("grid");
        check_keys(g, "grid", {"nx", "ny", "x_min", "x_max", "y_min", "y_max"});
        read(g, "nx", cfg.grid.nx);
        read(g, "ny", cfg.grid.ny);
        read(g, "x_min", cfg.grid.x_min);
        read(g, "x_max", cfg.grid.x_max);
        read(g, "y_min", cfg.grid.y_min);
        read(g, "y_max", cfg.grid.y_max);
    }

    if (doc.contains("fom")) {
        const auto& f = doc.at("fom");
        check_keys(f, "fom",
                   {"kind", "velocity", "terms_x", "terms_y", "ic", "t_final", "n_steps",
                    "include_ic", "solver_tol", "solver_max_iters", "csv_path"});
        read(f, "kind", cfg.fom.kind);
        if (cfg.fom.kind != "constant" && cfg.fom.kind != "analytic" &&
            cfg.fom.kind != "deforming" && cfg.fom.kind != "csv")
            throw ConfigError("config: fom.kind must be constant, analytic, deforming or csv");
        if (cfg.fom.kind == "constant" || cfg.fom.kind == "analytic") {
            json field_obj;
            field_obj["kind"] = cfg.fom.kind;
            for (const char* key : {"velocity", "terms_x", "terms_y"})
                if (f.contains(key)) field_obj[key] = f.at(key);
            cfg.fom.field = read_field(field_obj, "fom");
        }
        if (f.contains("ic")) {
            const auto& ic = f.at("ic");
            check_keys(ic, "fom.ic", {"center", "sigma", "amplitude"});
            if (ic.contains("center")) {
                const auto& c = ic.at("center");
                if (!c.is_array() || c.size() != 2)
                    throw ConfigError("config: fom.ic.center must be [x, y]");
                cfg.fom.ic_center = {c[0].get<double>(), c[1].get<double>()};
            }
            read(ic, "sigma", cfg.fom.ic_sigma);
            read(ic, "amplitude", cfg.fom.ic_amplitude);
        }
        read(f, "t_final", cfg.fom.t_final);
        read(f, "n_steps", cfg.fom.n_steps);
        read(f, "include_ic", cfg.fom.include_ic);
        read(f, "solver_tol", cfg.fom.solver_tol);
        read(f, "solver_max_iters", cfg.fom.solver_max_iters);
        read(f, "csv_path", cfg.fom.csv_path);
    }

    if (doc.contains("pod")) {
        const auto& p = doc.at("pod");
        check_keys(p, "pod", {"thresholds"});
        read(p, "thresholds", cfg.pod.thresholds);
        for (double t : cfg.pod.thresholds)
            if (!(t > 0.0) || !(t < 1.0))
                throw ConfigError("config: pod.thresholds entries must lie in (0, 1)");
    }

    if (doc.contains("shift")) {
        const auto& s = doc.at("shift");
        check_keys(s, "shift", {"kind", "velocity", "terms_x", "terms_y", "t_ref", "ode_steps"});
        json field_obj;
        for (const char* key : {"kind", "velocity", "terms_x", "terms_y"})
            if (s.contains(key)) field_obj[key] = s.at(key);
        if (!field_obj.empty()) cfg.shift.field = read_field(field_obj, "shift");
        read(s, "t_ref", cfg.shift.t_ref);
        read(s, "ode_steps", cfg.shift.ode_steps);
    }

    if (doc.contains("nnspod")) {
        const auto& nn = doc.at("nnspod");
        check_keys(nn, "nnspod",
                   {"reference_candidates", "interp", "shift_net", "eps_svd", "r_target",
                    "regrid", "shift_map"});
        read(nn, "reference_candidates", cfg.nnspod.reference_candidates);
        if (nn.contains("interp"))
            cfg.nnspod.interp = read_net_spec(nn.at("interp"), "nnspod.interp", cfg.nnspod.interp);
        if (nn.contains("shift_net"))
            cfg.nnspod.shift =
                read_net_spec(nn.at("shift_net"), "nnspod.shift_net", cfg.nnspod.shift);
        read(nn, "eps_svd", cfg.nnspod.eps_svd);
        read(nn, "r_target", cfg.nnspod.r_target);
        if (nn.contains("shift_map")) {
            const auto form = nn.at("shift_map").get<std::string>();
            if (form == "displacement")
                cfg.nnspod.shift_map = ShiftMapForm::displacement;
            else if (form == "absolute")
                cfg.nnspod.shift_map = ShiftMapForm::absolute;
            else
                throw ConfigError("config: nnspod.shift_map must be displacement or absolute");
        }
        if (nn.contains("regrid")) {
            const auto& r = nn.at("regrid");
            check_keys(r, "nnspod.regrid", {"k_nn", "power", "cutoff_diagonals"});
            read(r, "k_nn", cfg.nnspod.regrid.k_nn);
            read(r, "power", cfg.nnspod.regrid.power);
            read(r, "cutoff_diagonals", cfg.nnspod.regrid.cutoff_diagonals);
        }
    }

    read(doc, "snapshots", cfg.snapshots);
    read(doc, "output_dir", cfg.output_dir);
    read(doc, "seed", cfg.seed);
    cfg.nnspod.seed = cfg.seed;
    return cfg;
}

std::string resolved_config_json(const RunConfig& cfg) {
    json doc;
    doc["grid"] = {{"nx", cfg.grid.nx},       {"ny", cfg.grid.ny},
                   {"x_min", cfg.grid.x_min}, {"x_max", cfg.grid.x_max},
                   {"y_min", cfg.grid.y_min}, {"y_max", cfg.grid.y_max}};

    json fom = field_to_json(cfg.fom.field);
    fom["kind"] = cfg.fom.kind;  // may be deforming/csv, overriding the field kind
    if (cfg.fom.kind == "deforming" || cfg.fom.kind == "csv") {
        fom.erase("velocity");
        fom.erase("terms_x");
        fom.erase("terms_y");
    }
    fom["ic"] = {{"center", {cfg.fom.ic_center.x, cfg.fom.ic_center.y}},
                 {"sigma", cfg.fom.ic_sigma},
                 {"amplitude", cfg.fom.ic_amplitude}};
    fom["t_final"] = cfg.fom.t_final;
    fom["n_steps"] = cfg.fom.n_steps;
    fom["include_ic"] = cfg.fom.include_ic;
    fom["solver_tol"] = cfg.fom.solver_tol;
    fom["solver_max_iters"] = cfg.fom.solver_max_iters;
    if (!cfg.fom.csv_path.empty()) fom["csv_path"] = cfg.fom.csv_path;
    doc["fom"] = fom;

    doc["pod"] = {{"thresholds", cfg.pod.thresholds}};

    json shift = field_to_json(cfg.shift.field);
    shift["t_ref"] = cfg.shift.t_ref;
    shift["ode_steps"] = cfg.shift.ode_steps;
    doc["shift"] = shift;

    doc["nnspod"] = {{"reference_candidates", cfg.nnspod.reference_candidates},
                     {"interp", net_spec_to_json(cfg.nnspod.interp)},
                     {"shift_net", net_spec_to_json(cfg.nnspod.shift)},
                     {"eps_svd", cfg.nnspod.eps_svd},
                     {"r_target", cfg.nnspod.r_target},
                     {"shift_map",
                      cfg.nnspod.shift_map == ShiftMapForm::displacement ? "displacement"
                                                                         : "absolute"},
                     {"regrid",
                      {{"k_nn", cfg.nnspod.regrid.k_nn},
                       {"power", cfg.nnspod.regrid.power},
                       {"cutoff_diagonals", cfg.nnspod.regrid.cutoff_diagonals}}}};

    if (!cfg.snapshots.empty()) doc["snapshots"] = cfg.snapshots;
    doc["output_dir"] = cfg.output_dir;
    doc["seed"] = cfg.seed;
    return doc.dump(2) + "\n";
}

FomConfig build_fom_config(const RunConfig& cfg) {
    FomConfig fom;
    fom.grid = cfg.grid.build();
    if (cfg.fom.kind == "constant" || cfg.fom.kind == "analytic")
        fom.field = cfg.fom.field.build();
    fom.t_final = cfg.fom.t_final;
    fom.n_steps = cfg.fom.n_steps;
    fom.ic = {cfg.fom.ic_center, cfg.fom.ic_sigma, cfg.fom.ic_amplitude};
    fom.include_ic = cfg.fom.include_ic;
    fom.solver_tol = cfg.fom.solver_tol;
    fom.solver_max_iters = cfg.fom.solver_max_iters;
    if (fom.n_steps == 0)
        throw ConfigError("config: fom.n_steps must be >= 1");
    if (!(fom.t_final > 0.0))
        throw ConfigError("config: fom.t_final must be positive");
    if (!(fom.ic.sigma > 0.0))
        throw ConfigError("config: fom.ic.sigma must be positive");
    return fom;
}

ShiftSpec build_shift_spec(const RunConfig& cfg) {
    ShiftSpec spec;
    spec.field = cfg.shift.field.build();
    spec.t_ref = cfg.shift.t_ref;
    spec.ode_steps = cfg.shift.ode_steps;
    if (spec.ode_steps == 0)
        throw ConfigError("config: shift.ode_steps must be >= 1");
    return spec;
}

}  // namespace nnspod
