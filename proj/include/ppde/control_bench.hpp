#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppde/functional.hpp"
#include "ppde/path_space.hpp"

namespace ppde {

// dX = σ(t, X history, a) dW on a uniform grid, d = 1, no drift.
struct ControlProblem {
    std::string name;
    Grid grid{1.0, 64};
    int p = 3;
    // σ at grid time t given node values 0..k of the absolute path.
    std::function<double(double, std::span<const double>, double)> sigma;
    bool markov_sigma = true;        // σ reads the last node only
    double sigma_bound = 1.0;
    double C_lip = 0.0;              // d_p-Lipschitz constant of σ in θ
    // Terminal functional of the full path (node values 0..N).
    std::function<double(std::span<const double>)> g;
    bool markov_terminal = true;     // g reads the last node only
    Modulus rho;                     // concave modulus of g under d_p
    std::vector<double> controls;    // grid of |a| ≤ 1
};

struct ControlOptions {
    double horizon = 1.0;
    int cells = 64;
    int p = 3;
    int control_points = 5;
    double constant = 0.5;
};

std::vector<double> control_grid(int points);

// brownian-terminal, brownian-abs, brownian-integral, vol-square, tanh-vol, constant.
ControlProblem control_problem(const std::string& name, const ControlOptions& opt = {});
std::vector<std::string> control_problem_names();

using Policy = std::function<double(int, std::span<const double>)>;

// Euler path of X^{α,θ} continued from θ: nodes up to θ's index copy ω, later
// nodes are ω_t + X. Gaussian increments come from the seed.
DiscretePath simulate(const ControlProblem& problem, const Policy& policy, const PointInTheta& theta,
                      std::uint64_t seed);

enum class Engine { Lattice, MonteCarlo };

struct ValueOptions {
    Engine engine = Engine::Lattice;
    double dx = 0.02;                // lattice state spacing
    long paths = 20000;              // fresh paths for the reported estimate
    long selection_paths = 4000;     // common paths for selecting the policy
    int random_policies = 24;
    int pieces = 4;
    std::uint64_t seed = 1;
    int jobs = 1;
};

struct ValueResult {
    double value = 0.0;
    double std_error = 0.0;
    bool lower_bound = false;
    Engine engine = Engine::Lattice;
    std::vector<double> policy;      // selected piecewise-constant controls (MC)
};

ValueResult value(const ControlProblem& problem, const PointInTheta& theta, const ValueOptions& opt = {});

// Lattice value function on the whole grid, interpolated in (t, x).
Functional value_functional(const ControlProblem& problem, const ValueOptions& opt = {});

// ------------------------------------------------------------------ moduli

struct BurkholderCalibration {
    double constant = 0.0;           // 99th percentile of the ratios
    std::vector<double> ratios;
    int integrands = 0;
    long paths = 0;
};

// Ratio E‖∫φ dW‖_p^{2p} / E∫|φ|^{2p} over random bounded adapted integrands.
BurkholderCalibration calibrate_burkholder(int p, const Grid& grid, int integrands, long paths, std::uint64_t seed,
                                           int jobs = 1);

// (2C_lip)^{2p} C (T+1) exp((2C_lip)^{2p} C (T+1) T).
double c_tilde(double C_lip, double C, int p, double T);

struct ModulusRow {
    int pair_id = 0;
    double dp_dist = 0.0;
    double dt = 0.0;
    double measured = 0.0;
    double bound = 0.0;
    double std_error = 0.0;
    bool pass = true;
};

struct ModulusReport {
    std::vector<ModulusRow> rows;
    double C_burkholder = 0.0;
    double C_tilde = 0.0;
    double C_hat = 0.0;
    double holder_exponent = 0.0;
    int violations = 0;
    bool pass() const { return violations == 0; }
    std::string csv() const;
};

struct ModulusOptions {
    ValueOptions value;
    double C_burkholder = 0.0;
    long moment_paths = 4000;        // paths per control when measuring Ĉ
};

using ThetaPair = std::pair<PointInTheta, PointInTheta>;

// |u(t,ω) − u(t,ω′)| ≤ ρ((1 + C̃^{1/(2p)}) d_p).
ModulusReport modulus_space(const ControlProblem& problem, const std::vector<ThetaPair>& pairs,
                            const ModulusOptions& opt);
// |u(t,ω) − u(t′,ω)| ≤ ρ((1 + C̃^{1/(2p)}) ((T+1)Ĉ)^{1/p} (t′−t)^{1/2}) with ω frozen after t.
ModulusReport modulus_time(const ControlProblem& problem, const std::vector<ThetaPair>& pairs,
                           const ModulusOptions& opt);
// Mixed pairs against the sum of the two bounds through (t′, ω).
ModulusReport modulus_joint(const ControlProblem& problem, const std::vector<ThetaPair>& pairs,
                            const ModulusOptions& opt);

// sup over constant controls of E|X_Δ|^p / Δ^{p/2} plus three standard errors.
double measure_c_hat(const ControlProblem& problem, const std::vector<ThetaPair>& pairs, long paths,
                     std::uint64_t seed, int jobs = 1);

struct HolderFit {
    std::vector<double> dts, increments, std_errors;
    double exponent = 0.0;
    double intercept = 0.0;
};

// |u(T−Δ, 𝟎) − u(T, 𝟎)| for Δ = 2^{−k}, slope of the log-log regression.
HolderFit holder_experiment(const ControlProblem& problem, const std::vector<double>& dts, const ValueOptions& opt);

// Random θ pairs on the problem grid: same time, or t < t′ with ω frozen.
std::vector<ThetaPair> random_space_pairs(const ControlProblem& problem, int count, std::uint64_t seed);
std::vector<ThetaPair> random_time_pairs(const ControlProblem& problem, int count, std::uint64_t seed);
std::vector<ThetaPair> random_mixed_pairs(const ControlProblem& problem, int count, std::uint64_t seed);

}  // namespace ppde
