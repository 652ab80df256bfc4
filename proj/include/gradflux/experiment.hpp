#pragma once

// Batch execution: runs one experiment from a validated config, writes a
// RunArchive (manifest + CSV tables + field snapshots), and renders reports
// and plot columns. Re-running a manifest reproduces the CSVs byte for byte:
// doubles are printed with the shortest round-trip representation and no
// locale, and nothing in the pipeline is randomized.

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gradflux/chemotaxis.hpp"
#include "gradflux/config.hpp"
#include "gradflux/convergence.hpp"
#include "gradflux/snapshot.hpp"
#include "gradflux/verifier.hpp"

namespace gradflux {

inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct RunArchive {
    std::filesystem::path dir;
    ExperimentConfig config;
    std::string config_digest;
    std::vector<EstimateReport> reports;
    std::vector<ConvergenceReport> ladders;
    std::vector<std::pair<std::string, std::vector<double>>> tables;  // per-rung values
    std::vector<double> eps;                                          // sweep ladder
    std::vector<ChemoFrameDiagnostics> frames;                        // chemo diagnostics
    double wall_seconds = 0.0;
    bool any_check_failed = false;
};

namespace detail {

inline std::string config_digest_hex(const ExperimentConfig& c) {
    const std::string canon = serialize(c).dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "archive: cannot open " + path.string());
    out << text;
    require(out.good(), "archive: write failed for " + path.string());
}

}  // namespace detail

inline std::string reports_csv(const std::vector<EstimateReport>& reports) {
    std::ostringstream os;
    os << "check,lhs,rhs,margin,tolerance,mode,pass,digest,note\n";
    for (const auto& r : reports) {
        os << '"' << r.lemma_id << "\"," << format_double(r.lhs) << ','
           << format_double(r.rhs) << ',' << format_double(r.margin) << ','
           << format_double(r.tolerance) << ','
           << (r.equality_mode ? "equality" : "inequality") << ','
           << (r.pass ? "pass" : "fail") << ',' << std::hex << r.inputs_digest << std::dec
           << ",\"" << r.note << "\"\n";
    }
    return os.str();
}

inline std::string ladders_csv(const std::vector<ConvergenceReport>& ladders) {
    std::ostringstream os;
    os << "quantity,rung,difference,fitted_rate,verdict\n";
    for (const auto& l : ladders)
        for (std::size_t j = 0; j < l.differences.size(); ++j)
            os << '"' << l.quantity << "\"," << j << ','
               << format_double(l.differences[j]) << ',' << format_double(l.fitted_rate)
               << ',' << to_string(l.verdict) << '\n';
    return os.str();
}

inline std::string tables_csv(const std::vector<double>& eps,
                              const std::vector<std::pair<std::string, std::vector<double>>>& tables) {
    std::ostringstream os;
    os << "quantity,rung,eps,value\n";
    for (const auto& [name, vals] : tables)
        for (std::size_t j = 0; j < vals.size(); ++j)
            os << '"' << name << "\"," << j << ','
               << format_double(j < eps.size() ? eps[j] : 0.0) << ','
               << format_double(vals[j]) << '\n';
    return os.str();
}

inline std::string frames_csv(const std::vector<ChemoFrameDiagnostics>& frames) {
    std::ostringstream os;
    os << "t,mass_u,min_u,max_u,min_v,max_v,quasi_energy,diss_u,diss_v,g_integral,"
          "g_abs_integral\n";
    for (const auto& d : frames)
        os << format_double(d.t) << ',' << format_double(d.mass_u) << ','
           << format_double(d.min_u) << ',' << format_double(d.max_u) << ','
           << format_double(d.min_v) << ',' << format_double(d.max_v) << ','
           << format_double(d.quasi_energy) << ',' << format_double(d.diss_u) << ','
           << format_double(d.diss_v) << ',' << format_double(d.g_integral) << ','
           << format_double(d.g_abs_integral) << '\n';
    return os.str();
}

inline FieldTrajectory build_source_trajectory(const ExperimentConfig& cfg, const Grid& g) {
    FieldTrajectory f(g, cfg.solver.dt);
    const std::size_t steps =
        static_cast<std::size_t>(std::ceil(cfg.T / cfg.solver.dt - 1e-12));
    const ScalarField frame = cfg.f_source.build(g);
    for (std::size_t n = 0; n <= steps; ++n) f.push(frame);
    return f;
}

inline RunArchive run_experiment(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    RunArchive archive;
    archive.config = config;
    archive.config_digest = detail::config_digest_hex(config);
    archive.dir = config.out_dir;
    std::filesystem::create_directories(archive.dir);

    const Grid g = config.grid();
    const bool run_checkers = config.kind == ExperimentKind::Verify ||
                              !config.checkers.empty();

    switch (config.kind) {
        case ExperimentKind::Heat:
        case ExperimentKind::Verify: {
            HeatProblem p;
            p.kappa = config.kappa;
            p.v0 = config.v0.build(g);
            p.f = build_source_trajectory(config, g);
            FieldTrajectory traj = solve_heat(p, config.T, config.solver);
            write_snapshot((archive.dir / "v_final.gflx").string(), traj.frames.back());
            if (run_checkers && config.kappa == 0.0 && config.solver.theta == 1.0) {
                auto reports = check_heat_apriori(traj, p, config.solver);
                archive.reports.insert(archive.reports.end(), reports.begin(),
                                       reports.end());
                TestFunctionSet tests = default_test_set(g, config.T, config.solver.dt);
                archive.reports.push_back(
                    check_weak_solution_v(heat_weak_form(traj, p), tests));
            }
            std::vector<double> mass;
            for (const auto& fr : traj.frames) mass.push_back(integrate(fr));
            archive.tables.emplace_back("mass", std::move(mass));
            break;
        }
        case ExperimentKind::Chemo: {
            ChemoSystem sys = config.chemo_system();
            ChemoRun run = solve_chemo(sys, config.u0.build(g), config.v0.build(g),
                                       config.T, config.solver);
            archive.frames = run.diagnostics;
            write_snapshot((archive.dir / "u_final.gflx").string(),
                           run.u_traj.frames.back());
            write_snapshot((archive.dir / "v_final.gflx").string(),
                           run.v_traj.frames.back());
            if (run_checkers) {
                TestFunctionSet tests = default_test_set(g, config.T, config.solver.dt);
                auto mass = check_mass_budget(run);
                archive.reports.insert(archive.reports.end(), mass.begin(), mass.end());
                auto diss = check_dissipation_bounds(run);
                archive.reports.insert(archive.reports.end(), diss.begin(), diss.end());
                archive.reports.push_back(
                    check_weak_solution_v(chemo_weak_form(run), tests));
                if (sys.variant == ChemoVariant::A)
                    for (auto& r :
                         check_phi_supersolution(run, default_supersol_family(), tests))
                        archive.reports.push_back(std::move(r));
                else
                    archive.reports.push_back(check_ln_supersolution(run, tests));
            }
            break;
        }
        case ExperimentKind::Sweep: {
            DataFamilySpec spec;
            spec.kind = config.family_kind == "mollified-spike"
                            ? FamilyKind::MollifiedSpike
                            : FamilyKind::TruncatedPower;
            spec.target_mass = config.target_mass;
            spec.gamma = config.gamma;
            spec.J = config.ladder_J;
            spec.j_start = config.ladder_start;
            DataFamily family = make_data_family(spec, g, config.T, config.solver.dt);
            SweepConfig sc;
            sc.T = config.T;
            sc.solver = config.solver;
            sc.kappa = config.kappa;
            sc.threads = config.threads;
            SweepResult sweep = run_eps_sweep(family, sc);
            archive.eps = sweep.eps;
            archive.tables = sweep.tables;
            archive.ladders.push_back(cauchy_l1(sweep));
            for (double k : config.table_k)
                archive.ladders.push_back(cauchy_truncated_gradients(sweep, k));
            for (double lam : config.table_lambda)
                archive.ladders.push_back(cauchy_lambda_gradients(sweep, lam));
            archive.ladders.push_back(cauchy_weighted_gradients(sweep, 1.0));
            if (sweep.data_l1_cauchy) archive.ladders.push_back(cauchy_c0l1(sweep));
            break;
        }
        case ExperimentKind::Report:
            throw ConfigError("run_experiment: 'report' reads an existing archive");
    }

    for (const auto& r : archive.reports)
        if (!r.pass) archive.any_check_failed = true;

    // emit
    if (!archive.reports.empty())
        detail::write_text(archive.dir / "reports.csv", reports_csv(archive.reports));
    if (!archive.ladders.empty())
        detail::write_text(archive.dir / "ladders.csv", ladders_csv(archive.ladders));
    if (!archive.tables.empty())
        detail::write_text(archive.dir / "tables.csv",
                           tables_csv(archive.eps, archive.tables));
    if (!archive.frames.empty())
        detail::write_text(archive.dir / "frames.csv", frames_csv(archive.frames));

    archive.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest;
    manifest["config"] = serialize(config);
    manifest["digest"] = archive.config_digest;
    manifest["wall_seconds"] = archive.wall_seconds;
    manifest["any_check_failed"] = archive.any_check_failed;
    detail::write_text(archive.dir / "manifest.json", manifest.dump(2) + "\n");
    return archive;
}

inline ExperimentConfig config_from_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    require(in.good(), "manifest: cannot open " + manifest_path.string());
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("manifest: invalid JSON: ") + e.what());
    }
    require(root.contains("config"), "manifest: missing config section");
    return parse_config(root.at("config"));
}

inline std::string human_summary(const RunArchive& archive) {
    std::ostringstream os;
    os << "experiment " << to_string(archive.config.kind) << " (config digest "
       << archive.config_digest << ")\n";
    for (const auto& r : archive.reports)
        os << "  [" << (r.pass ? "pass" : "FAIL") << "] " << r.lemma_id
           << ": lhs=" << format_double(r.lhs) << " rhs=" << format_double(r.rhs)
           << " margin=" << format_double(r.margin)
           << " tol=" << format_double(r.tolerance)
           << (r.note.empty() ? "" : " (" + r.note + ")") << "\n";
    for (const auto& l : archive.ladders) {
        os << "  [" << to_string(l.verdict) << "] " << l.quantity << ": d =";
        for (double d : l.differences) os << ' ' << format_double(d);
        os << " (rate " << format_double(l.fitted_rate) << ")\n";
    }
    if (!archive.frames.empty())
        os << "  frames: " << archive.frames.size() << " diagnostics rows\n";
    return os.str();
}

// Whitespace-separated columns for external plotting, '#'-prefixed header.
inline std::string emit_plot_data(const RunArchive& archive, const std::string& quantity) {
    std::ostringstream os;
    for (const auto& l : archive.ladders) {
        if (l.quantity != quantity) continue;
        os << "# " << l.quantity << " — Cauchy ladder (j, d_j), verdict "
           << to_string(l.verdict) << "\n";
        for (std::size_t j = 0; j < l.differences.size(); ++j)
            os << j << ' ' << format_double(l.differences[j]) << '\n';
        return os.str();
    }
    for (const auto& [name, vals] : archive.tables) {
        if (name != quantity) continue;
        os << "# " << name << " — per-rung values (j, value)\n";
        for (std::size_t j = 0; j < vals.size(); ++j)
            os << j << ' ' << format_double(vals[j]) << '\n';
        return os.str();
    }
    if (quantity == "mass" && !archive.frames.empty()) {
        os << "# mass of u per frame (t, mass)\n";
        for (const auto& d : archive.frames)
            os << format_double(d.t) << ' ' << format_double(d.mass_u) << '\n';
        return os.str();
    }
    if (quantity == "quasi_energy" && !archive.frames.empty()) {
        os << "# quasi-energy per frame (t, value)\n";
        for (const auto& d : archive.frames)
            os << format_double(d.t) << ' ' << format_double(d.quasi_energy) << '\n';
        return os.str();
    }
    throw Error("emit_plot_data: unknown quantity '" + quantity + "'");
}

}  // namespace gradflux
