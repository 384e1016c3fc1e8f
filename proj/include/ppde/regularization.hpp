#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppde/functional.hpp"
#include "ppde/path_space.hpp"

namespace ppde {

enum class Direction { Sub, Super };

const char* to_string(Direction d);

// ‖ℓ − I‖^{2/(3p+3)} + ‖η(ℓ(t ∧ ·)) − ω(t ∧ ·)‖_{p+1}^{p+1}.
double penalty(double s, const PwlPath& eta, double t, const PwlPath& omega, const TimeChange& ell, int p);
double penalty(double s, const DiscretePath& eta, const PointInTheta& theta, const TimeChange& ell, int p);

struct SearchConfig {
    int restarts = 5;
    int path_knots = 8;
    int time_knots = 3;
    long budget = 400000;
    std::uint64_t seed = 1;
    double target_gap = 1e-6;
    int max_sweeps = 30;
    int scan_points = 8;
    int golden_iters = 40;
    double tolerance = 1e-11;
    int jobs = 1;
};

// Region that contains every 1-optimal point of the regularization.
struct PruneBox {
    double C0;
    double ell_bound;        // on ‖ℓ − I‖_∞
    double terminal_bound;   // on |η_s − ω_t|
    double integral_bound;   // on the integrated mismatch
    double path_bound;       // on ‖η − ω̂‖_p for a skeleton of i jumps
};

PruneBox prune_bounds(double n, double B, int p, double s = 0.0, int i = 1, double x_tuple_norm = 0.0);

struct RegularizationResult {
    double value = 0.0;
    Direction direction = Direction::Sub;
    double n = 0.0;
    double s = 0.0;
    double t_hat = 0.0;
    PwlPath omega_hat;
    DiscretePath omega_sampled = DiscretePath::zero(Grid(1.0, 1));
    TimeChange ell_hat = TimeChange::identity(0.0);
    double functional_value = 0.0;
    double penalty = 0.0;
    double penalty_check = 0.0;
    double sup_deviation = 0.0;
    double terminal_mismatch = 0.0;
    double integral_mismatch = 0.0;
    double gap = 0.0;
    bool certified = true;
    bool budget_exhausted = false;
    long evaluations = 0;
    int restarts = 0;
    int candidates = 0;
    std::vector<double> restart_values;
    double ramp_cells = 1.0;
};

// Sub: sup over (θ, ℓ) of u(θ) − nΦ. Super: inf of u(θ) + nΦ.
RegularizationResult regularize(const Functional& u, double n, double s, const PwlPath& eta, Direction dir,
                                const Grid& grid, int p, const SearchConfig& cfg);
RegularizationResult regularize(const Functional& u, double n, double s, const DiscretePath& eta, Direction dir,
                                int p, const SearchConfig& cfg);

// (s, x) -> regularization at the step path η^λ(x); results are memoized.
class FiniteDimMap {
public:
    FiniteDimMap(Functional u, double n, StepSkeleton skel, Grid grid, int p, Direction dir, SearchConfig cfg);

    const RegularizationResult& result(double s, std::span<const double> x) const;
    double operator()(double s, std::span<const double> x) const { return result(s, x).value; }
    double operator()(double s, double x) const { return (*this)(s, std::span<const double>(&x, 1)); }
    // u evaluated at the step path itself, without regularization.
    double unregularized(double s, std::span<const double> x) const;

    const StepSkeleton& skeleton() const { return skel_; }
    const Grid& grid() const { return grid_; }
    double n() const { return n_; }
    std::size_t cache_size() const;
    double max_gap() const;

private:
    using Key = std::pair<int, std::vector<long long>>;
    Functional u_;
    double n_;
    StepSkeleton skel_;
    Grid grid_;
    int p_;
    Direction dir_;
    SearchConfig cfg_;
    mutable std::mutex mutex_;
    mutable std::map<Key, std::unique_ptr<RegularizationResult>> cache_;
};

struct PartitionScheme {
    double n = 1.0;
    double a = 0.05;
    double horizon = 1.0;
    int m = 2;
    std::vector<double> times;   // s_1 = 0, ..., s_{m+1} = T

    // Partition times moved to the nearest grid node; PrecisionError when a
    // time moves by more than half a step.
    std::vector<double> snapped(const Grid& grid, double* max_shift = nullptr) const;
};

PartitionScheme partition(double n, double a, double horizon, int p = 3);

using FieldMap = std::function<double(double, std::span<const double>)>;

// Sub: e^{2L0 s} f − κ n^{−1−a}/(s − s_i) − |x|²/(2n). Super flips both signs.
FieldMap kappa_transform(FieldMap f, double kappa, double n, double a, double s_i, double L0, Direction dir);

struct ErrorTerms {
    double C = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double R = 0.0;
};

ErrorTerms error_terms(double n, double C, double s, double s_i, int i, std::span<const double> x_tuple, int dim,
                       const Modulus& rho_G, const Modulus& rho_u, double L0, double a, int p);

// |a+b|^{p+1} ≤ |a|^{p+1} + (p+1)(a·b)|a|^{p−1} + C|b|²(|b|^{p−1} + |a|^{p−1})
bool power_bound_check(std::span<const double> a, std::span<const double> b, int p, double C);

}  // namespace ppde
