#include "ppde/path_space.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

namespace ppde {

namespace {

constexpr int kGaussPoints = 16;

struct GaussRule {
    std::array<double, kGaussPoints> x{};
    std::array<double, kGaussPoints> w{};
};

// Gauss-Legendre nodes on [0, 1] by Newton iteration on P_n.
const GaussRule& gauss_rule() {
    static const GaussRule rule = [] {
        GaussRule r;
        const int n = kGaussPoints;
        for (int i = 0; i < n; ++i) {
            double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 1.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = z;
                for (int k = 2; k <= n; ++k) {
                    double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                dp = n * (z * p1 - p0) / (z * z - 1.0);
                double dz = p1 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            r.x[i] = 0.5 * (1.0 - z);
            r.w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
        }
        return r;
    }();
    return rule;
}

bool is_small_integer(double q) { return q == std::floor(q) && q >= 0 && q <= 64; }

// Integral of (x + (y - x)u)^q over [0,1] for x, y >= 0.
double mean_pow(double x, double y, double q) {
    if (is_small_integer(q)) {
        int n = static_cast<int>(q);
        double acc = 0.0, xp = 1.0;
        for (int k = 0; k <= n; ++k) {
            acc += xp * std::pow(y, n - k);
            xp *= x;
        }
        return acc / (q + 1.0);
    }
    double hi = std::max(x, y);
    if (hi == 0.0) return 0.0;
    if (std::abs(y - x) <= 1e-3 * hi) {
        const auto& g = gauss_rule();
        double acc = 0.0;
        for (int i = 0; i < kGaussPoints; ++i) acc += g.w[i] * std::pow(x + (y - x) * g.x[i], q);
        return acc;
    }
    return (std::pow(y, q + 1.0) - std::pow(x, q + 1.0)) / ((q + 1.0) * (y - x));
}

double norm2(const double* v, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

double gauss_piece(const double* a, const double* b, int dim, double q, double u0, double u1) {
    if (u1 <= u0) return 0.0;
    const auto& g = gauss_rule();
    double acc = 0.0;
    for (int i = 0; i < kGaussPoints; ++i) {
        double u = u0 + (u1 - u0) * g.x[i];
        double s = 0.0;
        for (int k = 0; k < dim; ++k) {
            double v = a[k] + (b[k] - a[k]) * u;
            s += v * v;
        }
        acc += g.w[i] * std::pow(s, 0.5 * q);
    }
    return acc * (u1 - u0);
}

void seg_value(const PwlPath& x, int j, double r, double* out) {
    double w = x.knots[j + 1] - x.knots[j];
    double lam = w > 0 ? (r - x.knots[j]) / w : 0.0;
    const double* a = x.start.data() + static_cast<std::size_t>(j) * x.dim;
    const double* b = x.end.data() + static_cast<std::size_t>(j) * x.dim;
    for (int k = 0; k < x.dim; ++k) out[k] = a[k] + (b[k] - a[k]) * lam;
}

void push_segment(PwlPath& x, double k0, const double* a, const double* b) {
    x.knots.push_back(k0);
    x.start.insert(x.start.end(), a, a + x.dim);
    x.end.insert(x.end.end(), b, b + x.dim);
}

PwlPath combine(const PwlPath& a, const PwlPath& b, double sign) {
    if (a.dim != b.dim) throw ConfigurationError("path dimensions differ");
    double horizon = a.horizon();
    if (std::abs(horizon - b.horizon()) > 1e-12 * std::max(1.0, horizon))
        throw ConfigurationError("path horizons differ");
    std::vector<double> ks;
    ks.reserve(a.knots.size() + b.knots.size());
    ks.insert(ks.end(), a.knots.begin(), a.knots.end());
    ks.insert(ks.end(), b.knots.begin(), b.knots.end());
    std::sort(ks.begin(), ks.end());
    double eps = 1e-14 * std::max(1.0, horizon);
    std::vector<double> uniq;
    for (double k : ks) {
        if (k > horizon) k = horizon;
        if (uniq.empty() || k - uniq.back() > eps) uniq.push_back(k);
    }
    uniq.back() = horizon;
    PwlPath out;
    out.dim = a.dim;
    std::vector<double> va0(a.dim), va1(a.dim), vb0(a.dim), vb1(a.dim), s0(a.dim), s1(a.dim);
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
        double r0 = uniq[i], r1 = uniq[i + 1];
        double mid = 0.5 * (r0 + r1);
        int ja = a.segment_of(mid), jb = b.segment_of(mid);
        seg_value(a, ja, r0, va0.data());
        seg_value(a, ja, r1, va1.data());
        seg_value(b, jb, r0, vb0.data());
        seg_value(b, jb, r1, vb1.data());
        for (int k = 0; k < a.dim; ++k) {
            s0[k] = va0[k] + sign * vb0[k];
            s1[k] = va1[k] + sign * vb1[k];
        }
        push_segment(out, r0, s0.data(), s1.data());
    }
    out.knots.push_back(horizon);
    out.terminal.resize(a.dim);
    for (int k = 0; k < a.dim; ++k) out.terminal[k] = a.terminal[k] + sign * b.terminal[k];
    return out;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------- Grid

Grid::Grid(double horizon, int cells) : T_(horizon), N_(cells) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigurationError("grid horizon must be positive");
    if (cells < 1) throw ConfigurationError("grid needs at least one cell");
}

double Grid::on_grid_tolerance() const { return 1e-9 * std::max(1.0, T_); }

int Grid::index_of(double t, double tol) const {
    double h = step();
    if (!std::isfinite(t) || t < -tol || t > T_ + tol) {
        std::ostringstream msg;
        msg << "time " << t << " outside [0, " << T_ << "]";
        throw PrecisionError(msg.str());
    }
    long k = std::lround(t / h);
    k = std::clamp<long>(k, 0, N_);
    if (std::abs(t - time(static_cast<int>(k))) > tol) {
        std::ostringstream msg;
        msg << "time " << t << " is not on the grid with step " << h;
        throw PrecisionError(msg.str());
    }
    return static_cast<int>(k);
}

bool Grid::contains(double t) const {
    try {
        index_of(t);
        return true;
    } catch (const PrecisionError&) {
        return false;
    }
}

bool Grid::operator==(const Grid& other) const {
    return N_ == other.N_ && std::abs(T_ - other.T_) <= 1e-12 * std::max(1.0, T_);
}

// ---------------------------------------------------------------- DiscretePath

DiscretePath::DiscretePath(Grid grid, int dim, std::vector<double> values, int stop, Interp interp)
    : grid_(grid), dim_(dim), values_(std::move(values)), stop_(stop), interp_(interp) {
    if (dim < 1) throw ConfigurationError("path dimension must be >= 1");
    if (values_.size() != static_cast<std::size_t>(grid_.cells() + 1) * dim)
        throw ConfigurationError("path needs (N+1)*d values");
    if (stop_ < 0) stop_ = grid_.cells();
    if (stop_ > grid_.cells()) throw DomainError("stop index beyond the grid");
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("path values must be finite");
    if (interp_ == Interp::Linear) {
        for (int k = 0; k < dim_; ++k)
            if (values_[k] != 0.0) throw DomainError("continuous paths start at the origin");
    }
    apply_stop();
}

DiscretePath DiscretePath::zero(const Grid& grid, int dim) {
    return DiscretePath(grid, dim, std::vector<double>(static_cast<std::size_t>(grid.cells() + 1) * dim, 0.0));
}

DiscretePath DiscretePath::with_initial_jump(Grid grid, int dim, std::vector<double> values, int stop) {
    DiscretePath p;
    p.grid_ = grid;
    p.dim_ = dim;
    p.values_ = std::move(values);
    p.stop_ = stop < 0 ? grid.cells() : stop;
    p.interp_ = Interp::Linear;
    if (p.values_.size() != static_cast<std::size_t>(grid.cells() + 1) * dim)
        throw ConfigurationError("path needs (N+1)*d values");
    p.apply_stop();
    return p;
}

void DiscretePath::apply_stop() {
    for (int j = stop_ + 1; j <= grid_.cells(); ++j)
        for (int k = 0; k < dim_; ++k) values_[j * dim_ + k] = values_[stop_ * dim_ + k];
}

DiscretePath DiscretePath::stopped(int k) const {
    if (k < 0 || k > grid_.cells()) throw DomainError("stop index beyond the grid");
    DiscretePath p = *this;
    p.stop_ = std::min(k, stop_);
    p.apply_stop();
    return p;
}

bool DiscretePath::operator==(const DiscretePath& other) const {
    return grid_ == other.grid_ && dim_ == other.dim_ && stop_ == other.stop_ &&
           interp_ == other.interp_ && values_ == other.values_;
}

PointInTheta::PointInTheta(double time, const DiscretePath& p) : t(time), path(p) {
    int k = p.grid().index_of(time);
    t = p.grid().time(k);
    path = p.stopped(k);
    if (path.stop() != k) throw DomainError("path is stopped before the point's time");
}

PointInTheta origin_point(const Grid& grid, int dim) { return PointInTheta(0.0, DiscretePath::zero(grid, dim)); }

// ---------------------------------------------------------------- PwlPath

int PwlPath::segment_of(double r) const {
    int m = segments();
    auto it = std::upper_bound(knots.begin(), knots.end(), r);
    int j = static_cast<int>(it - knots.begin()) - 1;
    return std::clamp(j, 0, m - 1);
}

void PwlPath::value(double r, double* out) const {
    if (r >= horizon()) {
        std::copy(terminal.begin(), terminal.end(), out);
        return;
    }
    seg_value(*this, segment_of(r), r, out);
}

double PwlPath::value(double r) const {
    std::vector<double> v(dim);
    value(r, v.data());
    return v[0];
}

PwlPath to_pwl(const DiscretePath& path) {
    PwlPath x;
    x.dim = path.dim();
    const Grid& g = path.grid();
    int N = g.cells();
    x.knots.reserve(N + 1);
    for (int k = 0; k < N; ++k) {
        auto a = path.node(k);
        auto b = path.interp() == Interp::Linear ? path.node(k + 1) : path.node(k);
        push_segment(x, g.time(k), a.data(), b.data());
    }
    x.knots.push_back(g.horizon());
    auto t = path.node(N);
    x.terminal.assign(t.begin(), t.end());
    return x;
}

PwlPath constant_pwl(double horizon, std::span<const double> value) {
    PwlPath x;
    x.dim = static_cast<int>(value.size());
    push_segment(x, 0.0, value.data(), value.data());
    x.knots.push_back(horizon);
    x.terminal.assign(value.begin(), value.end());
    return x;
}

PwlPath pwl_from_knots(double horizon, int dim, const std::vector<double>& times,
                       const std::vector<double>& values) {
    if (times.empty() || times.front() != 0.0) throw DomainError("knot times must start at 0");
    if (values.size() != times.size() * dim) throw ConfigurationError("knot values need one point per time");
    PwlPath x;
    x.dim = dim;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        if (!(times[i + 1] > times[i])) throw DomainError("knot times must increase");
        push_segment(x, times[i], values.data() + i * dim, values.data() + (i + 1) * dim);
    }
    const double* last = values.data() + (times.size() - 1) * dim;
    if (times.back() < horizon) push_segment(x, times.back(), last, last);
    if (x.knots.empty()) push_segment(x, 0.0, last, last);
    x.knots.push_back(horizon);
    x.terminal.assign(last, last + dim);
    return x;
}

PwlPath stopped(const PwlPath& x, double t) {
    double horizon = x.horizon();
    if (t >= horizon) return x;
    std::vector<double> v(x.dim);
    x.value(t, v.data());
    if (t <= 0.0) return constant_pwl(horizon, v);
    PwlPath out;
    out.dim = x.dim;
    std::vector<double> e(x.dim);
    for (int j = 0; j < x.segments() && x.knots[j] < t; ++j) {
        const double* a = x.start.data() + static_cast<std::size_t>(j) * x.dim;
        if (x.knots[j + 1] <= t) {
            push_segment(out, x.knots[j], a, x.end.data() + static_cast<std::size_t>(j) * x.dim);
        } else {
            seg_value(x, j, t, e.data());
            push_segment(out, x.knots[j], a, e.data());
        }
    }
    push_segment(out, t, v.data(), v.data());
    out.knots.push_back(horizon);
    out.terminal = v;
    return out;
}

PwlPath difference(const PwlPath& a, const PwlPath& b) { return combine(a, b, -1.0); }
PwlPath sum(const PwlPath& a, const PwlPath& b) { return combine(a, b, 1.0); }

double segment_pow_integral(const double* a, const double* b, int dim, double q) {
    if (dim == 1) {
        double A = a[0], B = b[0];
        if ((A >= 0 && B >= 0) || (A <= 0 && B <= 0)) return mean_pow(std::abs(A), std::abs(B), q);
        double x = std::abs(A), y = std::abs(B);
        // Crosses zero at u* = x/(x+y); each side is a pure power.
        return (std::pow(x, q + 1.0) + std::pow(y, q + 1.0)) / ((q + 1.0) * (x + y));
    }
    double dd = 0.0, ad = 0.0;
    for (int k = 0; k < dim; ++k) {
        double dk = b[k] - a[k];
        dd += dk * dk;
        ad += a[k] * dk;
    }
    if (dd == 0.0) return std::pow(norm2(a, dim), q);
    double u = std::clamp(-ad / dd, 0.0, 1.0);
    return gauss_piece(a, b, dim, q, 0.0, u) + gauss_piece(a, b, dim, q, u, 1.0);
}

double pow_norm(const PwlPath& x, double q) {
    if (q < 1.0) throw DomainError("norm order must be >= 1");
    double acc = std::pow(norm2(x.terminal.data(), x.dim), q);
    for (int j = 0; j < x.segments(); ++j) {
        double w = x.knots[j + 1] - x.knots[j];
        if (w <= 0) continue;
        acc += w * segment_pow_integral(x.start.data() + static_cast<std::size_t>(j) * x.dim,
                                        x.end.data() + static_cast<std::size_t>(j) * x.dim, x.dim, q);
    }
    return acc;
}

double lp_norm(const PwlPath& x, double q) {
    double m = sup_abs(x);
    if (m == 0.0) return 0.0;
    PwlPath y = x;
    for (double& v : y.start) v /= m;
    for (double& v : y.end) v /= m;
    for (double& v : y.terminal) v /= m;
    return m * std::pow(pow_norm(y, q), 1.0 / q);
}

double sup_abs(const PwlPath& x) {
    double m = norm2(x.terminal.data(), x.dim);
    for (int j = 0; j < x.segments(); ++j) {
        m = std::max(m, norm2(x.start.data() + static_cast<std::size_t>(j) * x.dim, x.dim));
        m = std::max(m, norm2(x.end.data() + static_cast<std::size_t>(j) * x.dim, x.dim));
    }
    return m;
}

DiscretePath sample_on_grid(const PwlPath& x, const Grid& grid, int stop) {
    int N = grid.cells();
    int d = x.dim;
    std::vector<double> vals(static_cast<std::size_t>(N + 1) * d, 0.0);
    for (int k = (stop == 0 ? 0 : 1); k <= stop; ++k) x.value(grid.time(k), vals.data() + static_cast<std::size_t>(k) * d);
    bool at_origin = true;
    for (int k = 0; k < d; ++k) at_origin = at_origin && vals[k] == 0.0;
    if (at_origin) return DiscretePath(grid, d, std::move(vals), stop);
    return DiscretePath::with_initial_jump(grid, d, std::move(vals), stop);
}

// ---------------------------------------------------------------- norms, metric

double path_norm(const DiscretePath& path, double q, std::optional<double> t_stop) {
    if (!(q >= 1.0)) throw DomainError("norm order must be >= 1");
    if (t_stop) return lp_norm(to_pwl(path.stopped_at(*t_stop)), q);
    return lp_norm(to_pwl(path), q);
}

double sup_norm(const DiscretePath& path, std::optional<double> t_stop) {
    if (t_stop) return sup_abs(to_pwl(path.stopped_at(*t_stop)));
    return sup_abs(to_pwl(path));
}

double distance(const PointInTheta& a, const PointInTheta& b, DistanceMode mode) {
    if (a.path.grid() != b.path.grid()) throw ConfigurationError("points live on different grids");
    if (a.path.dim() != b.path.dim()) throw ConfigurationError("points have different dimensions");
    double dt = std::abs(a.t - b.t);
    if (a.path.interp() == Interp::Linear && b.path.interp() == Interp::Linear) {
        int N = a.path.grid().cells(), d = a.path.dim();
        double h = a.path.grid().step();
        std::vector<double> diff(static_cast<std::size_t>(N + 1) * d);
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.path.values()[i] - b.path.values()[i];
        if (mode.infinity) {
            double m = 0.0;
            for (int k = 0; k <= N; ++k) m = std::max(m, norm2(diff.data() + static_cast<std::size_t>(k) * d, d));
            return dt + m;
        }
        if (!(mode.p >= 1.0)) throw DomainError("norm order must be >= 1");
        double m = 0.0;
        for (int k = 0; k <= N; ++k) m = std::max(m, norm2(diff.data() + static_cast<std::size_t>(k) * d, d));
        if (m == 0.0) return dt;
        for (double& v : diff) v /= m;
        double acc = std::pow(norm2(diff.data() + static_cast<std::size_t>(N) * d, d), mode.p);
        for (int k = 0; k < N; ++k)
            acc += h * segment_pow_integral(diff.data() + static_cast<std::size_t>(k) * d,
                                            diff.data() + static_cast<std::size_t>(k + 1) * d, d, mode.p);
        return dt + m * std::pow(acc, 1.0 / mode.p);
    }
    PwlPath diff = difference(to_pwl(a.path), to_pwl(b.path));
    if (mode.infinity) return dt + sup_abs(diff);
    return dt + lp_norm(diff, mode.p);
}

DiscretePath concat(const DiscretePath& w, double t, const DiscretePath& tail) {
    const Grid& g = w.grid();
    int k;
    try {
        k = g.index_of(t);
    } catch (const PrecisionError& e) {
        throw ConfigurationError(e.what());
    }
    int N = g.cells();
    if (std::abs(tail.grid().step() - g.step()) > 1e-12 * std::max(1.0, g.step()))
        throw ConfigurationError("concatenated paths use different grid steps");
    if (tail.grid().cells() < N - k) throw ConfigurationError("tail path does not cover the remaining horizon");
    if (tail.dim() != w.dim()) throw ConfigurationError("concatenated paths differ in dimension");
    int d = w.dim();
    std::vector<double> vals(static_cast<std::size_t>(N + 1) * d);
    for (int j = 0; j <= N; ++j)
        for (int a = 0; a < d; ++a)
            vals[j * d + a] = j < k ? w.at(j, a) : w.at(k, a) + tail.at(j - k, a);
    int stop = std::min(N, k + tail.stop());
    if (w.interp() == Interp::Linear) return DiscretePath(g, d, std::move(vals), stop);
    return DiscretePath(g, d, std::move(vals), stop, w.interp());
}

MetricOrder::MetricOrder(int order) : p(order) {
    if (order < 3 || order % 2 == 0) throw DomainError("metric order must be an odd integer >= 3");
}

// ---------------------------------------------------------------- step paths

StepSkeleton::StepSkeleton(int d, std::vector<double> jump_times, std::vector<double> jump_sizes)
    : dim(d), times(std::move(jump_times)), jumps(std::move(jump_sizes)) {
    if (d < 1) throw ConfigurationError("skeleton dimension must be >= 1");
    if (times.empty() || times.front() != 0.0) throw DomainError("skeleton times must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw DomainError("skeleton times must increase strictly");
    if (jumps.size() != (times.size() - 1) * static_cast<std::size_t>(d))
        throw DomainError("skeleton needs one jump per time except the last");
}

std::vector<double> StepSkeleton::prior_sum() const {
    std::vector<double> s(dim, 0.0);
    for (std::size_t j = 0; j + 1 < times.size(); ++j)
        for (int a = 0; a < dim; ++a) s[a] += jumps[j * dim + a];
    return s;
}

StepSkeleton StepSkeleton::extended(double next_time, std::span<const double> x) const {
    auto t = times;
    auto j = jumps;
    t.push_back(next_time);
    j.insert(j.end(), x.begin(), x.end());
    return StepSkeleton(dim, t, j);
}

DiscretePath step_path(const StepSkeleton& skel, std::span<const double> x, const Grid& grid) {
    if (static_cast<int>(x.size()) != skel.dim) throw ConfigurationError("jump size has wrong dimension");
    std::vector<int> idx;
    for (double s : skel.times) {
        try {
            idx.push_back(grid.index_of(s));
        } catch (const PrecisionError& e) {
            throw ConfigurationError(std::string("jump time off grid: ") + e.what());
        }
    }
    int N = grid.cells(), d = skel.dim;
    std::vector<double> vals(static_cast<std::size_t>(N + 1) * d, 0.0);
    int i = skel.count();
    for (int k = 0; k <= N; ++k)
        for (int j = 0; j < i; ++j) {
            if (idx[j] > k) break;
            const double* jump = j + 1 < i ? skel.jumps.data() + static_cast<std::size_t>(j) * d : x.data();
            for (int a = 0; a < d; ++a) vals[k * d + a] += jump[a];
        }
    return DiscretePath(grid, d, std::move(vals), N, Interp::Step);
}

PwlPath step_pwl(const StepSkeleton& skel, std::span<const double> x, double horizon) {
    int d = skel.dim, i = skel.count();
    if (static_cast<int>(x.size()) != d) throw ConfigurationError("jump size has wrong dimension");
    if (skel.last_time() > horizon) throw DomainError("skeleton extends beyond the horizon");
    PwlPath out;
    out.dim = d;
    std::vector<double> level(d, 0.0);
    for (int j = 0; j < i; ++j) {
        const double* jump = j + 1 < i ? skel.jumps.data() + static_cast<std::size_t>(j) * d : x.data();
        for (int a = 0; a < d; ++a) level[a] += jump[a];
        double end = j + 1 < i ? skel.times[j + 1] : horizon;
        if (end > skel.times[j]) push_segment(out, skel.times[j], level.data(), level.data());
    }
    out.knots.push_back(horizon);
    out.terminal = level;
    return out;
}

double tuple_norm(std::span<const double> points, int dim, double p) {
    if (!(p >= 1.0)) throw DomainError("tuple norm order must be >= 1");
    double acc = 0.0;
    for (std::size_t j = 0; j * dim < points.size(); ++j) acc += std::pow(norm2(points.data() + j * dim, dim), p);
    return std::pow(acc, 1.0 / p);
}

// ---------------------------------------------------------------- time changes

TimeChange TimeChange::make(double t, double s, const std::vector<std::pair<double, double>>& interior) {
    if (!(t >= 0.0) || !(s >= 0.0)) throw DomainError("time change endpoints must be nonnegative");
    TimeChange ell;
    ell.t_ = t;
    ell.s_ = s;
    if (s == 0.0) {
        if (!interior.empty()) throw DomainError("the map onto [0,0] has no interior knots");
        ell.in_ = {0.0, t};
        ell.out_ = {0.0, 0.0};
        return ell;
    }
    if (t == 0.0) throw DomainError("no increasing bijection from [0,0] onto [0,s] with s > 0");
    ell.in_.push_back(0.0);
    ell.out_.push_back(0.0);
    for (auto [r, y] : interior) {
        ell.in_.push_back(r);
        ell.out_.push_back(y);
    }
    ell.in_.push_back(t);
    ell.out_.push_back(s);
    for (std::size_t i = 1; i < ell.in_.size(); ++i)
        if (!(ell.in_[i] > ell.in_[i - 1]) || !(ell.out_[i] > ell.out_[i - 1]))
            throw DomainError("time change knots must increase strictly");
    return ell;
}

double TimeChange::operator()(double r) const {
    if (r >= t_) return r - t_ + s_;
    if (r <= 0.0) return 0.0;
    if (s_ == 0.0) return 0.0;
    auto it = std::upper_bound(in_.begin(), in_.end(), r);
    std::size_t j = static_cast<std::size_t>(it - in_.begin()) - 1;
    double lam = (r - in_[j]) / (in_[j + 1] - in_[j]);
    return out_[j] + lam * (out_[j + 1] - out_[j]);
}

double TimeChange::inverse(double y) const {
    if (y >= s_) return y - s_ + t_;
    if (s_ == 0.0) throw DomainError("the map onto [0,0] has no inverse");
    if (y <= 0.0) return 0.0;
    auto it = std::upper_bound(out_.begin(), out_.end(), y);
    std::size_t j = static_cast<std::size_t>(it - out_.begin()) - 1;
    double lam = (y - out_[j]) / (out_[j + 1] - out_[j]);
    return in_[j] + lam * (in_[j + 1] - in_[j]);
}

double TimeChange::sup_deviation() const {
    double m = 0.0;
    for (std::size_t i = 0; i < in_.size(); ++i) m = std::max(m, std::abs(out_[i] - in_[i]));
    return m;
}

PwlPath compose(const PwlPath& eta, const TimeChange& ell, double horizon) {
    double t = ell.anchor(), s = ell.target();
    if (t > horizon + 1e-12) throw DomainError("time change anchor beyond the horizon");
    if (s > eta.horizon() + 1e-12) throw DomainError("time change target beyond the path horizon");
    int d = eta.dim;
    std::vector<double> v0(d), v1(d);
    if (s == 0.0 || t == 0.0) {
        eta.value(0.0, v0.data());
        return constant_pwl(horizon, v0);
    }
    std::vector<double> br(ell.inputs().begin(), ell.inputs().end());
    for (double k : eta.knots)
        if (k > 0.0 && k < s) br.push_back(ell.inverse(k));
    std::sort(br.begin(), br.end());
    double eps = 1e-15 * std::max(1.0, t);
    std::vector<double> uniq;
    for (double r : br)
        if (uniq.empty() || r - uniq.back() > eps) uniq.push_back(r);
    uniq.back() = t;
    PwlPath out;
    out.dim = d;
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
        double r0 = uniq[i], r1 = uniq[i + 1];
        int j = eta.segment_of(ell(0.5 * (r0 + r1)));
        seg_value(eta, j, ell(r0), v0.data());
        seg_value(eta, j, ell(r1), v1.data());
        push_segment(out, r0, v0.data(), v1.data());
    }
    eta.value(s, v0.data());
    if (t < horizon) push_segment(out, t, v0.data(), v0.data());
    out.knots.push_back(horizon);
    out.terminal = v0;
    return out;
}

// ---------------------------------------------------------------- CSV

std::string path_csv(const DiscretePath& path) {
    std::ostringstream os;
    os << "time";
    for (int a = 0; a < path.dim(); ++a) os << ",v" << (a + 1);
    os << "\n";
    for (int k = 0; k <= path.grid().cells(); ++k) {
        os << fmt17(path.grid().time(k));
        for (int a = 0; a < path.dim(); ++a) os << "," << fmt17(path.at(k, a));
        os << "\n";
    }
    return os.str();
}

void write_path_csv(const std::string& file, const DiscretePath& path) {
    std::ofstream out(file);
    if (!out) throw ConfigurationError("cannot write " + file);
    out << path_csv(path);
}

DiscretePath read_path_csv(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigurationError("cannot read " + file);
    std::string line;
    std::getline(in, line);
    int dim = static_cast<int>(std::count(line.begin(), line.end(), ','));
    if (line.rfind("time", 0) != 0 || dim < 1) throw ConfigurationError(file + ": expected header time,v1,...");
    std::vector<double> times, vals;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            double v;
            try {
                v = std::stod(cell);
            } catch (...) {
                throw ConfigurationError(file + ":" + std::to_string(lineno) + ": bad number");
            }
            (col == 0 ? times : vals).push_back(v);
            ++col;
        }
        if (col != dim + 1) throw ConfigurationError(file + ":" + std::to_string(lineno) + ": wrong column count");
    }
    if (times.size() < 2) throw ConfigurationError(file + ": need at least two rows");
    Grid g(times.back(), static_cast<int>(times.size()) - 1);
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - g.time(static_cast<int>(k))) > g.on_grid_tolerance())
            throw PrecisionError(file + ": times are not uniform");
    return DiscretePath(g, dim, vals);
}

std::string time_change_csv(const TimeChange& ell) {
    std::ostringstream os;
    os << "input,output\n";
    for (std::size_t i = 0; i < ell.inputs().size(); ++i)
        os << fmt17(ell.inputs()[i]) << "," << fmt17(ell.outputs()[i]) << "\n";
    return os.str();
}

std::string pwl_csv(const PwlPath& x) {
    std::ostringstream os;
    os << "time";
    for (int a = 0; a < x.dim; ++a) os << ",v" << (a + 1);
    os << "\n";
    std::vector<double> v(x.dim);
    for (int j = 0; j < x.segments(); ++j) {
        os << fmt17(x.knots[j]);
        for (int a = 0; a < x.dim; ++a) os << "," << fmt17(x.start[static_cast<std::size_t>(j) * x.dim + a]);
        os << "\n";
    }
    os << fmt17(x.horizon());
    for (int a = 0; a < x.dim; ++a) os << "," << fmt17(x.terminal[a]);
    os << "\n";
    return os.str();
}

}  // namespace ppde
