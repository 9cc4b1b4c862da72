// nelson-lab: experiment runner for the stochastic-mechanics laboratory.
//
// Exit codes: 0 = all verdicts pass, 1 = some metric failed, 2 = config or
// usage error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nelsonlab/harness.hpp"

namespace {

int load_config(const std::string& path, nelsonlab::harness::json& out) {
    std::ifstream is(path);
    if (!is) {
        std::cerr << "cannot open config file: " << path << "\n";
        return 2;
    }
    try {
        out = nelsonlab::harness::json::parse(is);
    } catch (const std::exception& e) {
        std::cerr << "config is not valid JSON: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "nelson-lab: stochastic-mechanics numerical laboratory\n"
        "(results are a pure function of config and seed; NELSON_LAB_THREADS caps workers)"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    auto* run_cmd = app.add_subcommand("run", "run one experiment from a config file");
    run_cmd->add_option("config", config_path, "JSON config file")->required();
    run_cmd->add_option("-o,--out", out_dir, "output directory (default: out)");

    std::string validate_path;
    auto* val_cmd = app.add_subcommand("validate", "check a config file, no side effects");
    val_cmd->add_option("config", validate_path, "JSON config file")->required();

    auto* list_cmd = app.add_subcommand("list-experiments", "print the experiment registry");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (list_cmd->parsed()) {
            for (const auto& name : nelsonlab::harness::list_experiments())
                std::cout << name << "\n";
            return 0;
        }
        if (val_cmd->parsed()) {
            nelsonlab::harness::json cfg;
            if (int rc = load_config(validate_path, cfg)) return rc;
            const auto violations = nelsonlab::harness::validate(cfg);
            if (violations.empty()) {
                std::cout << "config ok\n";
                return 0;
            }
            for (const auto& v : violations) std::cout << v << "\n";
            return 2;
        }
        // run
        nelsonlab::harness::json cfg;
        if (int rc = load_config(config_path, cfg)) return rc;
        const auto violations = nelsonlab::harness::validate(cfg);
        if (!violations.empty()) {
            for (const auto& v : violations) std::cerr << v << "\n";
            return 2;
        }
        const auto report = nelsonlab::harness::run(cfg, out_dir);
        for (const auto& m : report.metrics)
            std::printf("[%s] %-55s value=%.6g tol=%.6g (%s)\n", m.pass ? "PASS" : "FAIL",
                        m.name.c_str(), m.value, m.tolerance, m.comparator.c_str());
        std::printf("%s: %s in %.1fs, artifacts in %s\n", report.experiment.c_str(),
                    report.all_pass() ? "all metrics pass" : "SOME METRICS FAILED",
                    report.duration_seconds, out_dir.c_str());
        return report.all_pass() ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
