#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ppde/errors.hpp"

namespace ppde {

struct LatticeOptions {
    std::vector<double> drift_levels;   // empty: {-L, 0, L}
    std::vector<double> vol_levels;     // empty: {0, L/2, L}
    int depth_cap = 12;
    bool exhaustive = false;            // reject N above depth_cap
};

// Binary-branch lattice: one step moves each axis by α·h ± β·√h with equal
// probabilities, (α, β) chosen from per-axis control grids.
class LatticeModel {
public:
    LatticeModel(double L, double T, int N, int d, std::vector<double> drift_levels,
                 std::vector<double> vol_levels, int depth_cap);

    double bound() const { return L_; }
    double horizon() const { return T_; }
    int steps() const { return N_; }
    int dim() const { return d_; }
    int depth_cap() const { return cap_; }
    double step() const { return T_ / N_; }
    double time(int k) const { return k == N_ ? T_ : k * step(); }
    const std::vector<double>& drift_levels() const { return drift_; }
    const std::vector<double>& vol_levels() const { return vol_; }

    int controls() const { return controls_; }
    int branches() const { return 1 << d_; }
    int scenarios() const { return controls_ * branches(); }
    void control(int c, double* alpha, double* beta) const;
    // Drift part α·h and martingale part ±β·√h, summed per axis.
    void increment(int c, int b, double* out) const;
    void increment_parts(int c, int b, double* drift, double* martingale) const;
    std::string control_label(int c) const;

private:
    double L_, T_;
    int N_, d_, cap_;
    std::vector<double> drift_, vol_;
    int controls_ = 1;
};

LatticeModel build_lattice(double L, double T, int N, int d, const LatticeOptions& opt = {});

// Node of the lattice: step k and the positions at steps 0..k.
struct NodeView {
    int k;
    double t;
    int d;
    std::span<const double> path;
    std::span<const double> current() const {
        return path.subspan(static_cast<std::size_t>(k) * d, static_cast<std::size_t>(d));
    }
    std::span<const double> at(int j) const {
        return path.subspan(static_cast<std::size_t>(j) * d, static_cast<std::size_t>(d));
    }
};

// Markov payoffs depend on (k, current position) only and allow
// recombination; path payoffs keep explicit histories.
enum class Dependence { Markov, Path };

struct PayoffOnTree {
    std::string name;
    Dependence dependence = Dependence::Path;
    bool adapted = true;
    std::function<double(const NodeView&)> value;
};

// Built-ins: constant:c, B_T, B_T^2, abs-B_T, max-B, mean-B.
PayoffOnTree tree_payoff(const std::string& name, double constant = 0.0);
PayoffOnTree payoff_sum(const PayoffOnTree& f, const PayoffOnTree& g);
PayoffOnTree payoff_scaled(const PayoffOnTree& f, double c);

enum class Mode { Sup, Inf };
enum class Stopping { None, Max, Min };

const char* to_string(Mode m);

struct TreeOptions {
    Mode mode = Mode::Sup;
    Stopping stopping = Stopping::None;
    // Localization radius: nodes with |B| >= delta or t >= delta are absorbed.
    double delta = std::numeric_limits<double>::infinity();
    int jobs = 1;
    long max_states = 5'000'000;
};

struct TreeNode {
    int parent = -1;
    int via_control = -1;
    int via_branch = -1;
    std::vector<double> path;
    double payoff = 0.0;
    double continuation = 0.0;
    double value = 0.0;
    bool absorbed = false;
    bool stop = false;             // first-contact rule: payoff equals value
    int best_control = -1;
    std::vector<int> children;     // controls() * branches() entries
};

struct TreeSolution {
    double value = 0.0;
    std::vector<std::vector<TreeNode>> layers;
    long states = 0;
    std::string history(int layer, int index) const;
};

TreeSolution solve_tree(const LatticeModel& model, const PayoffOnTree& payoff, const TreeOptions& opt);

double sup_expectation(const LatticeModel& model, const PayoffOnTree& payoff, Mode mode = Mode::Sup,
                       double delta = std::numeric_limits<double>::infinity(), int jobs = 1);

// Linear expectation of f at the absorption node under the strategy chosen by
// the solution (best controls, stopping flags ignored).
double strategy_expectation(const LatticeModel& model, const TreeSolution& sol, const PayoffOnTree& f);

// δ ∧ T ∧ first grid time with |B_t| >= δ, for a path of positions.
double hitting_time(double delta, std::span<const double> path, int d, double step, double horizon);
// Absorption time on the lattice: first grid time with |B| >= δ or t >= δ.
double absorption_time(double delta, std::span<const double> path, int d, double step, double horizon);

struct MomentReport {
    bool pass = true;
    double delta = 0.0;
    double drift_constant = 0.0;     // L
    double second_constant = 0.0;    // 2L²(T+1)
    double worst_drift_excess = 0.0; // sup_P |E B_H| − L·E H
    double worst_second_excess = 0.0;
    double sup_mean_B = 0.0, sup_mean_H = 0.0, sup_second = 0.0;
    std::string witness;             // node history of the worst strategy
};

MomentReport moment_check(const LatticeModel& model, double delta, int jobs = 1);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    bool lower_bound = true;
    int strategies = 0;
    long paths = 0;
};

// Random feedback strategies evaluated by simulation; the selected strategy is
// re-evaluated on fresh paths, so the value is a lower bound of the sup.
McEstimate sup_expectation_mc(const LatticeModel& model, const PayoffOnTree& payoff, Mode mode, int strategies,
                              long paths, std::uint64_t seed, int jobs = 1);

std::string lattice_dump(const LatticeModel& model);
std::string strategy_dump(const LatticeModel& model, const TreeSolution& sol, int max_depth = 4);

}  // namespace ppde
