#pragma once

// JSON experiment configuration: strict schema, unknown keys rejected with
// their path, defaults filled on parse. Serialization round-trips to an
// equal config, and every archive embeds its fully resolved form.

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gradflux/chemotaxis.hpp"
#include "gradflux/convergence.hpp"
#include "gradflux/functionals.hpp"
#include "gradflux/grid.hpp"
#include "gradflux/heat.hpp"

namespace gradflux {

using nlohmann::json;

class ConfigError : public Error {
public:
    using Error::Error;
};

enum class ExperimentKind { Heat, Chemo, Sweep, Verify, Report };

inline std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Heat: return "heat";
        case ExperimentKind::Chemo: return "chemo";
        case ExperimentKind::Sweep: return "sweep";
        case ExperimentKind::Verify: return "verify";
        case ExperimentKind::Report: return "report";
    }
    return "?";
}

struct FieldSpec {
    std::string kind = "constant";  // constant | spike | gaussian | cosine
    double value = 0.0;             // constant
    double mass = 1.0;              // spike, gaussian
    double width = 0.1;             // gaussian
    double base = 1.0, amplitude = 0.0;  // cosine: base + amplitude*cos(pi m x/L)(*cos in y)
    int mode = 1;
    std::array<double, 2> center{0.5, 0.5};

    ScalarField build(const Grid& g) const {
        if (kind == "constant") return constant_field(g, value);
        if (kind == "spike") {
            ScalarField f(g, 0.0);
            int c0 = g.cells[0] / 2;
            int c1 = g.dim == 2 ? g.cells[1] / 2 : 0;
            f[g.index(c0, c1)] = mass / g.cell_volume();
            return f;
        }
        if (kind == "gaussian")
            return detail::gaussian_bump(g, width, center, mass);
        if (kind == "cosine") {
            const double m = mode;
            // varies along axis 0 only
            return sample_field(g, [&](double x, double = 0.0) {
                return base + amplitude * std::cos(m * M_PI * x / g.extents[0]);
            });
        }
        throw ConfigError("FieldSpec: unknown kind '" + kind + "'");
    }
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Heat;
    // grid
    int dim = 1;
    std::vector<double> extents{1.0};
    std::vector<int> cells{256};
    // time
    double T = 1.0;
    SolverConfig solver;
    int threads = 1;
    // heat
    double kappa = 0.0;
    FieldSpec v0{"constant", 1.0};
    FieldSpec f_source{"constant", 0.0};
    // chemo
    ChemoVariant variant = ChemoVariant::A;
    double chi = 1.0;
    double eps = 0.1;
    bool has_g = true;
    DampeningSpec g_spec;
    FieldSpec u0{"constant", 0.5};
    // sweep
    std::string family_kind = "mollified-spike";
    double target_mass = 1.0;
    double gamma = 0.5;
    int ladder_J = 6;
    int ladder_start = 0;
    std::vector<double> table_k{1.0, 2.0, 4.0, 8.0};
    std::vector<double> table_alpha{0.5, 1.0, 2.0};
    std::vector<double> table_lambda{1.0, 1.1};
    // checkers
    std::vector<std::string> checkers{"all"};
    std::string out_dir = "out";

    Grid grid() const { return make_grid(dim, extents, cells); }
    ChemoSystem chemo_system() const {
        ChemoSystem s;
        s.variant = variant;
        s.chi = chi;
        s.eps = eps;
        s.has_g = has_g;
        s.g = g_spec;
        return s;
    }
};

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key '" + path + it.key() + "'");
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value at '" + key + "': " + e.what());
    }
}

inline FieldSpec parse_field_spec(const json& j, const std::string& path) {
    reject_unknown_keys(j, {"kind", "value", "mass", "width", "base", "amplitude",
                            "mode", "center"},
                        path);
    FieldSpec f;
    f.kind = get_or<std::string>(j, "kind", "constant");
    if (f.kind != "constant" && f.kind != "spike" && f.kind != "gaussian" &&
        f.kind != "cosine")
        throw ConfigError("config: " + path + "kind must be one of constant|spike|gaussian|cosine");
    f.value = get_or(j, "value", 0.0);
    f.mass = get_or(j, "mass", 1.0);
    f.width = get_or(j, "width", 0.1);
    f.base = get_or(j, "base", 1.0);
    f.amplitude = get_or(j, "amplitude", 0.0);
    f.mode = get_or(j, "mode", 1);
    if (j.contains("center")) {
        auto c = j.at("center").get<std::vector<double>>();
        for (std::size_t i = 0; i < c.size() && i < 2; ++i) f.center[i] = c[i];
    }
    return f;
}

inline json field_spec_json(const FieldSpec& f) {
    json j;
    j["kind"] = f.kind;
    j["value"] = f.value;
    j["mass"] = f.mass;
    j["width"] = f.width;
    j["base"] = f.base;
    j["amplitude"] = f.amplitude;
    j["mode"] = f.mode;
    j["center"] = std::vector<double>{f.center[0], f.center[1]};
    return j;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& root) {
    detail::reject_unknown_keys(
        root, {"kind", "grid", "time", "solver", "threads", "heat", "chemo", "sweep",
               "tables", "checkers", "out"},
        "");
    ExperimentConfig c;

    const std::string kind = detail::get_or<std::string>(root, "kind", "heat");
    if (kind == "heat") c.kind = ExperimentKind::Heat;
    else if (kind == "chemo") c.kind = ExperimentKind::Chemo;
    else if (kind == "sweep") c.kind = ExperimentKind::Sweep;
    else if (kind == "verify") c.kind = ExperimentKind::Verify;
    else if (kind == "report") c.kind = ExperimentKind::Report;
    else throw ConfigError("config: kind must be heat|chemo|sweep|verify|report");

    if (root.contains("grid")) {
        const json& g = root.at("grid");
        detail::reject_unknown_keys(g, {"dim", "extents", "cells"}, "grid.");
        c.dim = detail::get_or(g, "dim", 1);
        c.extents = detail::get_or(g, "extents", std::vector<double>{1.0});
        c.cells = detail::get_or(g, "cells", std::vector<int>{256});
        if (c.dim != 1 && c.dim != 2)
            throw ConfigError("config: grid.dim must be 1 or 2");
        if (static_cast<int>(c.extents.size()) != c.dim ||
            static_cast<int>(c.cells.size()) != c.dim)
            throw ConfigError("config: grid.extents and grid.cells need one entry per axis");
        for (int cc : c.cells)
            if (cc < 4) throw ConfigError("config: grid.cells must be >= 4 per axis");
    }
    if (root.contains("time")) {
        const json& t = root.at("time");
        detail::reject_unknown_keys(t, {"T"}, "time.");
        c.T = detail::get_or(t, "T", 1.0);
        if (c.T <= 0.0) throw ConfigError("config: time.T must be positive");
    }
    if (root.contains("solver")) {
        const json& s = root.at("solver");
        detail::reject_unknown_keys(s, {"dt", "theta", "linear_tol", "max_iter"},
                                    "solver.");
        c.solver.dt = detail::get_or(s, "dt", 1e-3);
        c.solver.theta = detail::get_or(s, "theta", 1.0);
        c.solver.linear_tol = detail::get_or(s, "linear_tol", 1e-10);
        c.solver.max_iter = detail::get_or(s, "max_iter", 20000);
        try {
            c.solver.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("config: solver: ") + e.what());
        }
    }
    c.threads = detail::get_or(root, "threads", 1);
    if (c.threads < 1) throw ConfigError("config: threads must be >= 1");

    if (root.contains("heat")) {
        const json& h = root.at("heat");
        detail::reject_unknown_keys(h, {"kappa", "v0", "f"}, "heat.");
        c.kappa = detail::get_or(h, "kappa", 0.0);
        if (h.contains("v0")) c.v0 = detail::parse_field_spec(h.at("v0"), "heat.v0.");
        if (h.contains("f")) c.f_source = detail::parse_field_spec(h.at("f"), "heat.f.");
    }
    if (root.contains("chemo")) {
        const json& ch = root.at("chemo");
        detail::reject_unknown_keys(ch, {"variant", "chi", "eps", "g", "u0", "v0"},
                                    "chemo.");
        const std::string v = detail::get_or<std::string>(ch, "variant", "A");
        if (v == "A") c.variant = ChemoVariant::A;
        else if (v == "B") c.variant = ChemoVariant::B;
        else if (v == "C") c.variant = ChemoVariant::C;
        else throw ConfigError("config: chemo.variant must be A|B|C");
        c.chi = detail::get_or(ch, "chi", 1.0);
        c.eps = detail::get_or(ch, "eps", 0.1);
        if (!(c.eps > 0.0 && c.eps < 1.0))
            throw ConfigError("config: chemo.eps must lie in (0,1)");
        if (!(c.chi > 0.0)) throw ConfigError("config: chemo.chi must be positive");
        c.has_g = ch.contains("g");
        if (c.variant == ChemoVariant::B && c.has_g)
            throw ConfigError("config: chemo.g must be absent for variant B");
        if (c.variant != ChemoVariant::B && !c.has_g)
            throw ConfigError("config: chemo.g is required for variants A and C");
        if (c.has_g) {
            const json& gj = ch.at("g");
            detail::reject_unknown_keys(gj, {"lambda", "mu", "beta"}, "chemo.g.");
            c.g_spec.lambda = detail::get_or(gj, "lambda", 0.0);
            c.g_spec.mu = detail::get_or(gj, "mu", 1.0);
            c.g_spec.beta = detail::get_or(gj, "beta", 2.0);
            try {
                c.g_spec.validate();
            } catch (const Error& e) {
                throw ConfigError(std::string("config: chemo.g: ") + e.what());
            }
        }
        if (ch.contains("u0")) c.u0 = detail::parse_field_spec(ch.at("u0"), "chemo.u0.");
        if (ch.contains("v0")) c.v0 = detail::parse_field_spec(ch.at("v0"), "chemo.v0.");
    }
    if (root.contains("sweep")) {
        const json& s = root.at("sweep");
        detail::reject_unknown_keys(s, {"family", "mass", "gamma", "J", "j_start"},
                                    "sweep.");
        c.family_kind = detail::get_or<std::string>(s, "family", "mollified-spike");
        if (c.family_kind != "mollified-spike" && c.family_kind != "truncated-power")
            throw ConfigError("config: sweep.family must be mollified-spike|truncated-power");
        c.target_mass = detail::get_or(s, "mass", 1.0);
        c.gamma = detail::get_or(s, "gamma", 0.5);
        if (!(c.gamma > 0.0 && c.gamma <= 1.0))
            throw ConfigError("config: sweep.gamma must lie in (0,1]");
        c.ladder_J = detail::get_or(s, "J", 6);
        if (c.ladder_J < 3) throw ConfigError("config: sweep.J must be >= 3");
        c.ladder_start = detail::get_or(s, "j_start", 0);
        if (c.ladder_start < 0) throw ConfigError("config: sweep.j_start must be >= 0");
    }
    if (root.contains("tables")) {
        const json& t = root.at("tables");
        detail::reject_unknown_keys(t, {"k", "alpha", "lambda"}, "tables.");
        c.table_k = detail::get_or(t, "k", c.table_k);
        c.table_alpha = detail::get_or(t, "alpha", c.table_alpha);
        c.table_lambda = detail::get_or(t, "lambda", c.table_lambda);
        const double lmax = lambda_upper_bound(c.dim);
        for (double lam : c.table_lambda)
            if (!(lam >= 1.0 && lam < lmax))
                throw ConfigError(
                    "config: tables.lambda entry " + std::to_string(lam) +
                    " inadmissible: lambda must lie in [1, (n+2)/(n+1)) = [1, " +
                    std::to_string(lmax) + ") for n = " + std::to_string(c.dim));
        for (double k : c.table_k)
            if (!(k > 0.0)) throw ConfigError("config: tables.k entries must be positive");
        for (double a : c.table_alpha)
            if (!(a > 0.0))
                throw ConfigError("config: tables.alpha entries must be positive");
    }
    if (root.contains("checkers"))
        c.checkers = root.at("checkers").get<std::vector<std::string>>();
    c.out_dir = detail::get_or<std::string>(root, "out", "out");
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be a JSON object");
    return parse_config(root);
}

inline json serialize(const ExperimentConfig& c) {
    json root;
    root["kind"] = to_string(c.kind);
    root["grid"] = {{"dim", c.dim}, {"extents", c.extents}, {"cells", c.cells}};
    root["time"] = {{"T", c.T}};
    root["solver"] = {{"dt", c.solver.dt},
                      {"theta", c.solver.theta},
                      {"linear_tol", c.solver.linear_tol},
                      {"max_iter", c.solver.max_iter}};
    root["threads"] = c.threads;
    root["heat"] = {{"kappa", c.kappa},
                    {"v0", detail::field_spec_json(c.v0)},
                    {"f", detail::field_spec_json(c.f_source)}};
    json ch;
    ch["variant"] = to_string(c.variant);
    ch["chi"] = c.chi;
    ch["eps"] = c.eps;
    if (c.has_g)
        ch["g"] = {{"lambda", c.g_spec.lambda}, {"mu", c.g_spec.mu}, {"beta", c.g_spec.beta}};
    ch["u0"] = detail::field_spec_json(c.u0);
    ch["v0"] = detail::field_spec_json(c.v0);
    root["chemo"] = ch;
    root["sweep"] = {{"family", c.family_kind},
                     {"mass", c.target_mass},
                     {"gamma", c.gamma},
                     {"J", c.ladder_J},
                     {"j_start", c.ladder_start}};
    root["tables"] = {{"k", c.table_k}, {"alpha", c.table_alpha}, {"lambda", c.table_lambda}};
    root["checkers"] = c.checkers;
    root["out"] = c.out_dir;
    return root;
}

}  // namespace gradflux
