#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "ppde/errors.hpp"
#include "ppde/suites.hpp"

namespace {

int report_diagnostics(const std::string& source, const std::vector<ppde::Diagnostic>& diags) {
    for (const auto& d : diags) {
        std::cerr << source;
        if (d.line > 0) std::cerr << ":" << d.line;
        std::cerr << ": error: " << d.message << "\n";
    }
    return diags.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Experiment runner for path-dependent viscosity solutions"};
    std::string config_path, out, suite;
    std::uint64_t seed = 0;
    int jobs = 1;
    double budget = 0.0;
    bool validate_only = false, print_default = false, list = false;
    auto* o_config = app.add_option("--config", config_path, "configuration file");
    auto* o_seed = app.add_option("--seed", seed, "root seed");
    auto* o_out = app.add_option("--out", out, "output directory");
    auto* o_suite = app.add_option("--suite", suite, "suite name or all");
    auto* o_jobs = app.add_option("--jobs", jobs, "worker threads");
    auto* o_budget = app.add_option("--budget", budget, "per-suite time budget in seconds, 0 disables");
    app.add_flag("--validate", validate_only, "check the configuration and exit");
    app.add_flag("--print-default-config", print_default, "print the default configuration and exit");
    app.add_flag("--list-suites", list, "print the suite names and exit");
    CLI11_PARSE(app, argc, argv);

    if (print_default) {
        std::cout << ppde::default_config_text();
        return 0;
    }
    if (list) {
        for (const auto& n : ppde::suite_names()) std::cout << n << "\n";
        return 0;
    }

    std::vector<ppde::Diagnostic> diags;
    ppde::ExperimentConfig cfg;
    std::string source = "<defaults>";
    if (*o_config) {
        source = config_path;
        cfg = ppde::load_config(config_path, diags);
    }
    if (int rc = report_diagnostics(source, diags)) return rc;
    if (*o_seed) cfg.seed = seed;
    if (*o_out) cfg.out = out;
    if (*o_suite) cfg.suite = suite;
    if (*o_jobs) cfg.jobs = jobs;
    if (*o_budget) cfg.budget_seconds = budget;
    if (int rc = report_diagnostics("<command line>", ppde::validate(cfg))) return rc;
    if (validate_only) {
        std::cout << source << ": ok\n";
        return 0;
    }

    try {
        auto reports = ppde::run(cfg);
        bool all = true;
        for (const auto& r : reports) {
            int hard_failed = 0, soft_failed = 0;
            for (const auto& c : r.checks) {
                if (c.pass) continue;
                (c.hard ? hard_failed : soft_failed)++;
            }
            std::cout << (r.pass() ? "PASS " : "FAIL ") << r.suite << " (" << r.checks.size() << " checks, "
                      << hard_failed << " failed, " << soft_failed << " warnings" << (r.partial ? ", partial" : "")
                      << ")\n";
            for (const auto& c : r.checks)
                if (!c.pass)
                    std::cout << "  " << (c.hard ? "failed: " : "warning: ") << c.name << ": measured " << c.measured
                              << ", threshold " << c.threshold << (c.detail.empty() ? "" : " (" + c.detail + ")")
                              << "\n";
            all = all && r.pass();
        }
        std::cout << "summary written to " << cfg.out << "/summary.json\n";
        return all ? 0 : 1;
    } catch (const ppde::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
