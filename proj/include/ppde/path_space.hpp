#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppde/errors.hpp"

namespace ppde {

// Uniform time grid on [0, T] with N cells.
class Grid {
public:
    Grid(double horizon, int cells);

    double horizon() const { return T_; }
    int cells() const { return N_; }
    double step() const { return T_ / N_; }
    double time(int k) const { return k == N_ ? T_ : k * step(); }

    // Index of the node at time t; PrecisionError if t is farther than tol
    // from every node.
    int index_of(double t, double tol) const;
    int index_of(double t) const { return index_of(t, on_grid_tolerance()); }
    bool contains(double t) const;
    double on_grid_tolerance() const;

    bool operator==(const Grid& other) const;
    bool operator!=(const Grid& other) const { return !(*this == other); }

private:
    double T_;
    int N_;
};

enum class Interp { Linear, Step };

// Path sampled on a grid. Linear paths start at the origin; step paths
// (right-continuous between nodes) may start anywhere. Values after the stop
// index are held constant.
class DiscretePath {
public:
    DiscretePath(Grid grid, int dim, std::vector<double> values, int stop = -1,
                 Interp interp = Interp::Linear);

    static DiscretePath zero(const Grid& grid, int dim = 1);
    // Linear path whose node 0 is allowed to differ from the origin; used to
    // evaluate functionals on paths with a jump at time zero.
    static DiscretePath with_initial_jump(Grid grid, int dim, std::vector<double> values,
                                          int stop);

    const Grid& grid() const { return grid_; }
    int dim() const { return dim_; }
    int stop() const { return stop_; }
    double stop_time() const { return grid_.time(stop_); }
    Interp interp() const { return interp_; }
    int size() const { return grid_.cells() + 1; }

    double at(int k, int axis = 0) const { return values_[k * dim_ + axis]; }
    std::span<const double> node(int k) const {
        return {values_.data() + static_cast<std::size_t>(k) * dim_, static_cast<std::size_t>(dim_)};
    }
    const std::vector<double>& values() const { return values_; }
    std::span<const double> terminal() const { return node(grid_.cells()); }

    DiscretePath stopped(int k) const;
    DiscretePath stopped_at(double t) const { return stopped(grid_.index_of(t)); }

    bool operator==(const DiscretePath& other) const;

private:
    DiscretePath() = default;
    void apply_stop();

    Grid grid_{1.0, 1};
    int dim_ = 1;
    std::vector<double> values_;
    int stop_ = 0;
    Interp interp_ = Interp::Linear;
};

// θ = (t, ω) with ω stopped at t.
struct PointInTheta {
    double t;
    DiscretePath path;

    PointInTheta(double time, const DiscretePath& p);
    int index() const { return path.stop(); }
    std::span<const double> current() const { return path.node(path.stop()); }
};

PointInTheta origin_point(const Grid& grid, int dim = 1);

// Right-continuous piecewise-linear path on [0, horizon]. Segment j covers
// [knots[j], knots[j+1]) and runs linearly from start[j] to end[j] (a left
// limit); a jump at knots[j+1] is start[j+1] != end[j].
struct PwlPath {
    int dim = 1;
    std::vector<double> knots;
    std::vector<double> start;
    std::vector<double> end;
    std::vector<double> terminal;

    int segments() const { return static_cast<int>(knots.size()) - 1; }
    double horizon() const { return knots.back(); }
    int segment_of(double r) const;
    void value(double r, double* out) const;
    double value(double r) const;
};

PwlPath to_pwl(const DiscretePath& path);
PwlPath constant_pwl(double horizon, std::span<const double> value);
PwlPath pwl_from_knots(double horizon, int dim, const std::vector<double>& times,
                       const std::vector<double>& values);
PwlPath stopped(const PwlPath& x, double t);
PwlPath difference(const PwlPath& a, const PwlPath& b);
PwlPath sum(const PwlPath& a, const PwlPath& b);

// |x_T|^q + integral of |x|^q, computed segment by segment.
double pow_norm(const PwlPath& x, double q);
double sup_abs(const PwlPath& x);
// (pow_norm)^{1/q}, scaled to avoid overflow at large q.
double lp_norm(const PwlPath& x, double q);
// Integral of |a + (b-a)u|^q over u in [0,1] for a, b in R^dim.
double segment_pow_integral(const double* a, const double* b, int dim, double q);

// Grid sampling used to evaluate functionals on càdlàg paths: node values are
// right limits, so every jump is spread linearly over the preceding cell
// (over the following cell for a jump at time zero).
DiscretePath sample_on_grid(const PwlPath& x, const Grid& grid, int stop);

double path_norm(const DiscretePath& path, double q, std::optional<double> t_stop = std::nullopt);
double sup_norm(const DiscretePath& path, std::optional<double> t_stop = std::nullopt);

struct DistanceMode {
    bool infinity = false;
    double p = 3.0;
    static DistanceMode order(double q) { return {false, q}; }
    static DistanceMode sup() { return {true, 0.0}; }
};

double distance(const PointInTheta& a, const PointInTheta& b, DistanceMode mode);

DiscretePath concat(const DiscretePath& w, double t, const DiscretePath& tail);

// Odd order p >= 3.
struct MetricOrder {
    int p = 3;
    explicit MetricOrder(int order = 3);
};

struct StepSkeleton {
    int dim = 1;
    std::vector<double> times;   // s_1 = 0 < s_2 < ... < s_i
    std::vector<double> jumps;   // (i-1)*dim sizes x_1 .. x_{i-1}

    StepSkeleton(int d, std::vector<double> jump_times, std::vector<double> jump_sizes);
    int count() const { return static_cast<int>(times.size()); }
    double last_time() const { return times.back(); }
    // x_1 + ... + x_{i-1}
    std::vector<double> prior_sum() const;
    // Extends by one jump: (s_1..s_i, s_next), (x_1..x_{i-1}, x).
    StepSkeleton extended(double next_time, std::span<const double> x) const;
};

// η^λ(x) as a step path on the grid.
DiscretePath step_path(const StepSkeleton& skel, std::span<const double> x, const Grid& grid);
PwlPath step_pwl(const StepSkeleton& skel, std::span<const double> x, double horizon);

double tuple_norm(std::span<const double> points, int dim, double p);

// Increasing piecewise-linear map [0,t] -> [0,s], extended by r - t + s.
class TimeChange {
public:
    static TimeChange make(double t, double s, const std::vector<std::pair<double, double>>& interior);
    static TimeChange identity(double t) { return make(t, t, {}); }
    static TimeChange linear(double t, double s) { return make(t, s, {}); }

    double anchor() const { return t_; }
    double target() const { return s_; }
    double operator()(double r) const;
    double inverse(double y) const;
    double sup_deviation() const;
    const std::vector<double>& inputs() const { return in_; }
    const std::vector<double>& outputs() const { return out_; }

private:
    double t_ = 0, s_ = 0;
    std::vector<double> in_, out_;
};

// r -> η(ℓ(t ∧ r)) on [0, horizon].
PwlPath compose(const PwlPath& eta, const TimeChange& ell, double horizon);

void write_path_csv(const std::string& file, const DiscretePath& path);
std::string path_csv(const DiscretePath& path);
DiscretePath read_path_csv(const std::string& file);
std::string time_change_csv(const TimeChange& ell);
std::string pwl_csv(const PwlPath& x);

}  // namespace ppde
