#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ppde {

// Parameters of every experiment suite. Defaults reproduce the acceptance runs.
struct ExperimentConfig {
    // [run]
    std::string suite = "all";
    std::uint64_t seed = 1;
    std::string out = "out";
    int jobs = 1;
    double budget_seconds = 0.0;   // per suite; 0 disables the budget

    // [path_space]
    int p = 3;
    int d = 1;
    double T = 1.0;
    int N = 32;
    int triples = 1000;
    std::vector<double> p_schedule{3, 5, 9, 15, 31};

    // [regularization]
    std::vector<double> n_schedule{4, 8, 16, 32};
    double a = 0.05;
    std::vector<std::string> functionals{"terminal-tanh", "running-mean-tanh", "norm-sin"};
    int reg_cells = 32;
    int restarts = 5;
    int path_knots = 8;
    int time_knots = 3;
    long search_budget = 400000;
    int sample_points = 6;
    int semicontinuity_cells = 128;
    std::vector<double> residual_n{8, 16};
    int residual_points = 16;
    int residual_cells = 64;
    long power_samples = 100000;

    // [nonlinear_expectation]
    double L = 1.0;
    std::vector<int> lattice_steps{4, 8, 12};
    int enumeration_steps = 3;

    // [stopping_viscosity]
    std::vector<double> deltas{0.5, 0.25, 0.125};
    int jet_steps = 8;
    double L0 = 1.125;
    int chain_samples = 10000;
    std::vector<double> offsets{0.05, 0.1};
    std::vector<double> comparison_n{4, 8, 16};
    int comparison_points = 500;

    // [control_bench]
    std::string control_problem = "tanh-vol";
    int control_cells = 64;
    int control_points = 5;
    long paths = 20000;
    int pairs = 50;
    double dx = 0.02;
    int burkholder_integrands = 100;
    long burkholder_paths = 500;
    long holder_paths = 100000;
};

struct Diagnostic {
    int line = 0;                  // 0 when not tied to a line
    std::string key;
    std::string message;
};

// Flat INI text: [section] headers and key = value lines; lists are comma separated.
ExperimentConfig parse_config(const std::string& text, std::vector<Diagnostic>& diagnostics);
ExperimentConfig load_config(const std::string& path, std::vector<Diagnostic>& diagnostics);
// Range checks only; `lines` maps keys to the line they were read from.
std::vector<Diagnostic> validate(const ExperimentConfig& cfg, const std::map<std::string, int>& lines = {});
std::string default_config_text();

struct Check {
    std::string name;
    std::string property;          // the mathematical statement being checked
    bool pass = true;
    bool hard = true;              // soft checks only warn
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct Table {
    std::string file;              // CSV file name inside the output directory
    std::string csv;
};

struct SuiteReport {
    std::string suite;
    int criterion = 0;
    std::vector<Check> checks;
    std::vector<Table> tables;
    std::map<std::string, double> constants;
    std::vector<std::string> warnings;
    bool partial = false;
    double seconds = 0.0;
    bool pass() const;
};

std::vector<std::string> suite_names();
SuiteReport run_suite(const std::string& name, const ExperimentConfig& cfg);

// Runs the configured suite (or all), writes summary.json and the CSV tables
// into cfg.out, and returns the reports.
std::vector<SuiteReport> run(const ExperimentConfig& cfg);
std::string summary_json(const ExperimentConfig& cfg, const std::vector<SuiteReport>& reports);

}  // namespace ppde
