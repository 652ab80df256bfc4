// gradflux batch front end.
//
// Subcommands: heat, chemo, sweep, verify, report. Exit codes: 0 ok,
// 1 usage, 2 config, 3 solver failure, 4 checker failure in strict mode.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gradflux/gradflux.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitChecker = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw gradflux::ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run_kind(gradflux::ExperimentKind kind, const std::string& config_path,
             const std::string& out_dir, int threads, bool strict) {
    gradflux::ExperimentConfig config;
    try {
        config = gradflux::parse_config(read_file(config_path));
        if (config.kind != kind && kind != gradflux::ExperimentKind::Verify) {
            std::cerr << "config kind '" << gradflux::to_string(config.kind)
                      << "' does not match subcommand '" << gradflux::to_string(kind)
                      << "'\n";
            return kExitConfig;
        }
        if (kind == gradflux::ExperimentKind::Verify)
            config.kind = config.kind == gradflux::ExperimentKind::Heat ||
                                  config.kind == gradflux::ExperimentKind::Verify
                              ? gradflux::ExperimentKind::Verify
                              : config.kind;
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (threads > 0) config.threads = threads;
    } catch (const gradflux::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }

    try {
        gradflux::RunArchive archive = gradflux::run_experiment(config);
        std::cout << gradflux::human_summary(archive);
        std::cout << "archive written to " << archive.dir.string() << "\n";
        if (strict && archive.any_check_failed) {
            std::cerr << "strict mode: at least one check failed\n";
            return kExitChecker;
        }
        return kExitOk;
    } catch (const gradflux::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const gradflux::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitSolver;
    }
}

int run_report(const std::string& config_path, const std::string& out_dir,
               const std::string& quantity) {
    try {
        gradflux::ExperimentConfig config =
            gradflux::config_from_manifest(config_path);
        if (!out_dir.empty()) config.out_dir = out_dir;
        gradflux::RunArchive archive = gradflux::run_experiment(config);
        std::cout << gradflux::human_summary(archive);
        if (!quantity.empty()) {
            const std::string text = gradflux::emit_plot_data(archive, quantity);
            const auto path = archive.dir / ("plot_" + quantity + ".dat");
            std::ofstream out(path, std::ios::binary);
            out << text;
            std::cout << "plot data written to " << path.string() << "\n";
        }
        return kExitOk;
    } catch (const gradflux::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const gradflux::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitSolver;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradflux — finite-volume verification lab for weighted-gradient "
                 "estimates in parabolic and chemotaxis systems"};
    app.require_subcommand(1);

    std::string config_path, out_dir, quantity;
    int threads = 0;
    bool strict = false;

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        auto* opt = sub->add_option("--config", config_path, "experiment config (JSON)");
        if (needs_config) opt->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--threads", threads, "parallel sweep members");
        sub->add_flag("--strict", strict, "any checker failure exits nonzero");
    };

    auto* heat = app.add_subcommand("heat", "run a heat experiment");
    add_common(heat);
    auto* chemo = app.add_subcommand("chemo", "run a chemotaxis experiment");
    add_common(chemo);
    auto* sweep = app.add_subcommand("sweep", "run an eps-ladder sweep");
    add_common(sweep);
    auto* verify = app.add_subcommand("verify", "run with the full checker battery");
    add_common(verify);
    auto* report = app.add_subcommand("report", "re-run a manifest and emit reports");
    add_common(report);
    report->add_option("--quantity", quantity, "emit plot columns for this quantity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (heat->parsed())
        return run_kind(gradflux::ExperimentKind::Heat, config_path, out_dir, threads,
                        strict);
    if (chemo->parsed())
        return run_kind(gradflux::ExperimentKind::Chemo, config_path, out_dir, threads,
                        strict);
    if (sweep->parsed())
        return run_kind(gradflux::ExperimentKind::Sweep, config_path, out_dir, threads,
                        strict);
    if (verify->parsed())
        return run_kind(gradflux::ExperimentKind::Verify, config_path, out_dir, threads,
                        strict);
    if (report->parsed()) return run_report(config_path, out_dir, quantity);
    return kExitUsage;
}
