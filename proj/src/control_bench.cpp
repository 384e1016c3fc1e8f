#include "ppde/control_bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include "ppde/parallel.hpp"
#include "ppde/rng.hpp"

namespace ppde {

namespace {

constexpr std::uint64_t kFreshStream = 1ULL << 40;

// Three-point Gauss-Hermite rule for a standard normal.
constexpr double kGhNode = 1.7320508075688772;
constexpr double kGhCenter = 2.0 / 3.0, kGhSide = 1.0 / 6.0;

double interp(const std::vector<double>& v, double x0, double dx, double x) {
    int n = static_cast<int>(v.size());
    double u = (x - x0) / dx;
    int i = static_cast<int>(std::floor(u));
    i = std::clamp(i, 0, n - 2);
    double w = u - i;
    return v[i] + w * (v[i + 1] - v[i]);
}

// Catmull-Rom cubic through the nodes, linear beyond the ends.
double cubic(const std::vector<double>& v, double x0, double dx, double x) {
    int n = static_cast<int>(v.size());
    double u = (x - x0) / dx;
    int i = static_cast<int>(std::floor(u));
    if (i < 1 || i > n - 3) return interp(v, x0, dx, x);
    double w = u - i;
    double p0 = v[i - 1], p1 = v[i], p2 = v[i + 1], p3 = v[i + 2];
    return p1 + 0.5 * w * (p2 - p0 + w * (2 * p0 - 5 * p1 + 4 * p2 - p3 + w * (3 * (p1 - p2) + p3 - p0)));
}

struct Layers {
    double x0 = 0.0, dx = 0.02;
    int k0 = 0;
    std::vector<std::vector<double>> v;   // v[k − k0][i]
};

void require_lattice(const ControlProblem& P) {
    if (!P.markov_sigma || !P.markov_terminal)
        throw ConfigurationError("lattice engine needs σ and g that depend on the current state only; use monte-carlo");
}

Layers lattice_dp(const ControlProblem& P, int k0, double center, double half_width, double dx, int jobs) {
    require_lattice(P);
    if (!(dx > 0.0)) throw ConfigurationError("lattice spacing must be positive");
    const int N = P.grid.cells();
    const double h = P.grid.step(), sq = std::sqrt(h);
    int n = static_cast<int>(std::ceil(2 * half_width / dx)) + 1;
    Layers L;
    L.dx = dx;
    L.x0 = center - 0.5 * (n - 1) * dx;
    L.k0 = k0;
    L.v.assign(N - k0 + 1, std::vector<double>(n));
    auto& term = L.v[N - k0];
    for (int i = 0; i < n; ++i) {
        double x = L.x0 + i * dx;
        term[i] = P.g(std::span<const double>(&x, 1));
    }
    for (int k = N - 1; k >= k0; --k) {
        const auto& next = L.v[k + 1 - k0];
        auto& cur = L.v[k - k0];
        double t = P.grid.time(k);
        parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t i) {
            double x = L.x0 + static_cast<double>(i) * dx;
            double best = -std::numeric_limits<double>::infinity();
            for (double a : P.controls) {
                double s = P.sigma(t, std::span<const double>(&x, 1), a) * sq;
                double e = kGhCenter * interp(next, L.x0, dx, x) +
                           kGhSide * (interp(next, L.x0, dx, x + s * kGhNode) + interp(next, L.x0, dx, x - s * kGhNode));
                best = std::max(best, e);
            }
            cur[i] = best;
        });
    }
    return L;
}

// Evaluates a piecewise-constant open-loop policy on paths [first, first+count).
void mc_samples(const ControlProblem& P, const PointInTheta& theta, const std::vector<double>& pieces,
                std::uint64_t seed, std::uint64_t first, long count, int jobs, std::vector<double>& out) {
    const int N = P.grid.cells(), k0 = theta.index();
    const double sq = std::sqrt(P.grid.step());
    const int steps = N - k0;
    const int m = static_cast<int>(pieces.size());
    out.assign(count, 0.0);
    std::vector<double> base(theta.path.values().begin(), theta.path.values().end());
    parallel_for(static_cast<std::size_t>(count), jobs, [&](std::size_t i) {
        Rng rng = make_rng(seed, first + i);
        std::normal_distribution<double> N01(0.0, 1.0);
        std::vector<double> path(base);
        for (int k = k0; k < N; ++k) {
            int piece = steps > 0 ? std::min(m - 1, (k - k0) * m / steps) : 0;
            double a = pieces[piece];
            std::span<const double> hist(path.data(), static_cast<std::size_t>(k) + 1);
            path[k + 1] = path[k] + P.sigma(P.grid.time(k), hist, a) * sq * N01(rng);
        }
        out[i] = P.g(std::span<const double>(path));
    });
}

void mean_se(const std::vector<double>& s, double* mean, double* se) {
    double m = 0.0;
    for (double v : s) m += v;
    m /= static_cast<double>(s.size());
    double q = 0.0;
    for (double v : s) q += (v - m) * (v - m);
    *mean = m;
    *se = s.size() > 1 ? std::sqrt(q / static_cast<double>(s.size() - 1) / static_cast<double>(s.size())) : 0.0;
}

PointInTheta frozen_at(const PointInTheta& theta, double t2) {
    const Grid& g = theta.path.grid();
    int k2 = g.index_of(t2);
    if (k2 < theta.index()) throw DomainError("frozen point precedes the path's time");
    std::vector<double> v = theta.path.values();
    if (theta.index() == 0 && k2 > 0 && v[0] != 0.0)
        return PointInTheta(g.time(k2), DiscretePath::with_initial_jump(g, 1, v, k2));
    return PointInTheta(g.time(k2), DiscretePath(g, 1, v, k2));
}

std::vector<double> random_walk(Rng& rng, const Grid& g, double scale) {
    std::normal_distribution<double> N01(0.0, 1.0);
    std::vector<double> v(g.cells() + 1, 0.0);
    double sd = scale * std::sqrt(g.step());
    for (int k = 1; k <= g.cells(); ++k) v[k] = v[k - 1] + sd * N01(rng);
    return v;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

std::vector<double> control_grid(int points) {
    if (points < 1) throw ConfigurationError("control grid needs at least one point");
    if (points == 1) return {0.0};
    std::vector<double> a(points);
    for (int i = 0; i < points; ++i) a[i] = -1.0 + 2.0 * i / (points - 1);
    return a;
}

std::vector<std::string> control_problem_names() {
    return {"brownian-terminal", "brownian-abs", "brownian-integral", "vol-square", "tanh-vol", "constant"};
}

ControlProblem control_problem(const std::string& name, const ControlOptions& opt) {
    ControlProblem P;
    P.name = name;
    P.grid = Grid(opt.horizon, opt.cells);
    P.p = opt.p;
    P.controls = control_grid(opt.control_points);
    auto unit = [](double, std::span<const double>, double) { return 1.0; };
    auto last = [](std::span<const double> w) { return w.back(); };
    P.rho = Modulus::linear(1.0);
    if (name == "brownian-terminal") {
        P.sigma = unit;
        P.g = last;
        return P;
    }
    if (name == "brownian-abs") {
        P.sigma = unit;
        P.g = [](std::span<const double> w) { return std::abs(w.back()); };
        return P;
    }
    if (name == "brownian-integral") {
        P.sigma = unit;
        double h = P.grid.step();
        P.g = [h](std::span<const double> w) {
            double s = 0.0;
            for (std::size_t k = 0; k + 1 < w.size(); ++k) s += 0.5 * h * (w[k] + w[k + 1]);
            return s;
        };
        P.markov_terminal = false;
        P.rho = Modulus::linear(std::pow(opt.horizon, 1.0 - 1.0 / opt.p));
        return P;
    }
    if (name == "vol-square") {
        P.sigma = [](double, std::span<const double>, double a) { return 1.0 + 0.5 * a; };
        P.sigma_bound = 1.5;
        P.g = [](std::span<const double> w) { return w.back() * w.back(); };
        P.rho = Modulus::linear(4.0);
        return P;
    }
    if (name == "tanh-vol") {
        P.sigma = [](double, std::span<const double> w, double a) { return 1.0 + 0.5 * std::tanh(w.back()) * a; };
        P.sigma_bound = 1.5;
        P.C_lip = 0.5;
        P.g = [](std::span<const double> w) { return std::tanh(w.back()); };
        return P;
    }
    if (name == "constant") {
        double c = opt.constant;
        P.sigma = unit;
        P.g = [c](std::span<const double>) { return c; };
        P.rho = Modulus::linear(0.0);
        return P;
    }
    throw ConfigurationError("unknown control problem '" + name + "'");
}

DiscretePath simulate(const ControlProblem& P, const Policy& policy, const PointInTheta& theta, std::uint64_t seed) {
    if (theta.path.grid() != P.grid) throw ConfigurationError("point grid differs from the problem grid");
    if (theta.path.dim() != 1) throw ConfigurationError("control problems are one-dimensional");
    const int N = P.grid.cells();
    const double sq = std::sqrt(P.grid.step());
    std::vector<double> v = theta.path.values();
    Rng rng = make_rng(seed, 0);
    std::normal_distribution<double> N01(0.0, 1.0);
    for (int k = theta.index(); k < N; ++k) {
        std::span<const double> hist(v.data(), static_cast<std::size_t>(k) + 1);
        double a = policy(k, hist);
        v[k + 1] = v[k] + P.sigma(P.grid.time(k), hist, a) * sq * N01(rng);
    }
    if (v[0] != 0.0) return DiscretePath::with_initial_jump(P.grid, 1, std::move(v), N);
    return DiscretePath(P.grid, 1, std::move(v));
}

ValueResult value(const ControlProblem& P, const PointInTheta& theta, const ValueOptions& opt) {
    if (theta.path.grid() != P.grid) throw ConfigurationError("point grid differs from the problem grid");
    ValueResult r;
    r.engine = opt.engine;
    const int N = P.grid.cells(), k0 = theta.index();
    if (k0 == N) {
        r.value = P.g(std::span<const double>(theta.path.values()));
        return r;
    }
    if (opt.engine == Engine::Lattice) {
        double x = theta.current()[0];
        double T = P.grid.horizon() - theta.t;
        double W = 6.0 * P.sigma_bound * std::sqrt(T) + 4.0 * opt.dx;
        Layers L = lattice_dp(P, k0, x, W, opt.dx, opt.jobs);
        r.value = interp(L.v[0], L.x0, L.dx, x);
        return r;
    }
    // Candidates: every constant control, then random piecewise-constant ones.
    std::vector<std::vector<double>> cands;
    for (double a : P.controls) cands.push_back(std::vector<double>(opt.pieces, a));
    Rng pick = make_rng(opt.seed, kFreshStream * 2);
    std::uniform_int_distribution<int> U(0, static_cast<int>(P.controls.size()) - 1);
    for (int j = 0; j < opt.random_policies; ++j) {
        std::vector<double> c(opt.pieces);
        for (double& a : c) a = P.controls[U(pick)];
        cands.push_back(c);
    }
    std::vector<double> s;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < cands.size(); ++j) {
        mc_samples(P, theta, cands[j], opt.seed, 0, opt.selection_paths, opt.jobs, s);
        double m, se;
        mean_se(s, &m, &se);
        if (m > best) {
            best = m;
            arg = j;
        }
    }
    mc_samples(P, theta, cands[arg], opt.seed, kFreshStream, opt.paths, opt.jobs, s);
    mean_se(s, &r.value, &r.std_error);
    r.lower_bound = true;
    r.policy = cands[arg];
    return r;
}

Functional value_functional(const ControlProblem& P, const ValueOptions& opt) {
    double T = P.grid.horizon();
    double W = 6.0 * P.sigma_bound * std::sqrt(T) + 4.0;
    auto L = std::make_shared<Layers>(lattice_dp(P, 0, 0.0, W, opt.dx, opt.jobs));
    double B = 0.0;
    for (const auto& layer : L->v)
        for (double v : layer) B = std::max(B, std::abs(v));
    Grid grid = P.grid;
    auto f = [L, grid](double t, std::span<const double> x) {
        double u = std::clamp(t / grid.step(), 0.0, static_cast<double>(grid.cells()));
        int k = std::min(static_cast<int>(std::floor(u)), grid.cells() - 1);
        double w = u - k;
        double a = cubic(L->v[k], L->x0, L->dx, x[0]), b = cubic(L->v[k + 1], L->x0, L->dx, x[0]);
        return (1 - w) * a + w * b;
    };
    return make_markov(P.name + "-value", f, B, P.rho, true);
}

// ------------------------------------------------------------------ moduli

BurkholderCalibration calibrate_burkholder(int p, const Grid& grid, int integrands, long paths, std::uint64_t seed,
                                           int jobs) {
    if (integrands < 1 || paths < 2) throw ConfigurationError("calibration needs integrands and paths");
    BurkholderCalibration cal;
    cal.integrands = integrands;
    cal.paths = paths;
    cal.ratios.assign(integrands, 0.0);
    const int N = grid.cells();
    const double h = grid.step(), sq = std::sqrt(h), q = p;
    parallel_for(static_cast<std::size_t>(integrands), jobs, [&](std::size_t j) {
        Rng coef = make_rng(seed, j);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        double c0 = U(coef), c1 = U(coef), c2 = 3.0 * U(coef), c3 = U(coef), c4 = 6.0 * U(coef);
        double num = 0.0, den = 0.0;
        for (long i = 0; i < paths; ++i) {
            Rng rng = make_rng(seed ^ 0xb5ad4eceda1ce2a9ULL, j * paths + i);
            std::normal_distribution<double> N01(0.0, 1.0);
            double M = 0.0, integral = 0.0, phi_int = 0.0;
            for (int k = 0; k < N; ++k) {
                double phi = c0 + c1 * std::tanh(c2 * M) + c3 * std::cos(c4 * grid.time(k));
                phi_int += h * std::pow(std::abs(phi), 2 * q);
                double next = M + phi * sq * N01(rng);
                integral += h * segment_pow_integral(&M, &next, 1, q);
                M = next;
            }
            double norm_p = std::pow(std::abs(M), q) + integral;
            num += norm_p * norm_p;
            den += phi_int;
        }
        cal.ratios[j] = den > 0.0 ? num / den : 0.0;
    });
    std::vector<double> sorted = cal.ratios;
    std::sort(sorted.begin(), sorted.end());
    std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size())));
    cal.constant = sorted[std::max<std::size_t>(rank, 1) - 1];
    return cal;
}

double c_tilde(double C_lip, double C, int p, double T) {
    double k = std::pow(2.0 * C_lip, 2.0 * p) * C * (T + 1.0);
    return k * std::exp(k * T);
}

std::string ModulusReport::csv() const {
    std::string s = "pair_id,dp_dist,dt,measured,bound,stderr,pass\n";
    for (const auto& r : rows)
        s += std::to_string(r.pair_id) + "," + fmt(r.dp_dist) + "," + fmt(r.dt) + "," + fmt(r.measured) + "," +
             fmt(r.bound) + "," + fmt(r.std_error) + "," + (r.pass ? "1" : "0") + "\n";
    return s;
}

namespace {

double burkholder_or_calibrate(const ControlProblem& P, const ModulusOptions& opt) {
    if (opt.C_burkholder > 0.0) return opt.C_burkholder;
    return calibrate_burkholder(P.p, P.grid, 100, 500, opt.value.seed, opt.value.jobs).constant;
}

double space_factor(const ControlProblem& P, double C) {
    return 1.0 + std::pow(c_tilde(P.C_lip, C, P.p, P.grid.horizon()), 1.0 / (2.0 * P.p));
}

double time_factor(const ControlProblem& P, double C, double C_hat) {
    return space_factor(P, C) * std::pow((P.grid.horizon() + 1.0) * C_hat, 1.0 / P.p);
}

void diff_row(const ControlProblem& P, const PointInTheta& a, const PointInTheta& b, const ValueOptions& vo,
              ModulusRow& row) {
    ValueResult ua = value(P, a, vo), ub = value(P, b, vo);
    row.measured = std::abs(ua.value - ub.value);
    row.std_error = std::sqrt(ua.std_error * ua.std_error + ub.std_error * ub.std_error);
}

}  // namespace

ModulusReport modulus_space(const ControlProblem& P, const std::vector<ThetaPair>& pairs, const ModulusOptions& opt) {
    ModulusReport rep;
    rep.C_burkholder = burkholder_or_calibrate(P, opt);
    rep.C_tilde = c_tilde(P.C_lip, rep.C_burkholder, P.p, P.grid.horizon());
    double f = space_factor(P, rep.C_burkholder);
    rep.rows.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [a, b] = pairs[i];
        if (std::abs(a.t - b.t) > 1e-12) throw DomainError("space pairs must share the time");
        ModulusRow& row = rep.rows[i];
        row.pair_id = static_cast<int>(i);
        row.dp_dist = distance(a, b, DistanceMode::order(P.p));
        diff_row(P, a, b, opt.value, row);
        row.bound = P.rho(f * row.dp_dist);
        row.pass = row.measured <= row.bound + 3.0 * row.std_error;
        if (!row.pass) ++rep.violations;
    }
    return rep;
}

double measure_c_hat(const ControlProblem& P, const std::vector<ThetaPair>& pairs, long paths, std::uint64_t seed,
                     int jobs) {
    double best = 0.0;
    const double q = P.p;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [a, b] = pairs[i];
        double dt = b.t - a.t;
        if (!(dt > 0.0)) continue;
        int k0 = a.index(), k1 = P.grid.index_of(b.t);
        for (double ctl : P.controls) {
            std::vector<double> s(paths);
            std::vector<double> base = a.path.values();
            parallel_for(static_cast<std::size_t>(paths), jobs, [&](std::size_t j) {
                Rng rng = make_rng(seed + i * 7919, j);
                std::normal_distribution<double> N01(0.0, 1.0);
                std::vector<double> path(base);
                double sq = std::sqrt(P.grid.step());
                for (int k = k0; k < k1; ++k) {
                    std::span<const double> hist(path.data(), static_cast<std::size_t>(k) + 1);
                    path[k + 1] = path[k] + P.sigma(P.grid.time(k), hist, ctl) * sq * N01(rng);
                }
                s[j] = std::pow(std::abs(path[k1] - path[k0]), q) / std::pow(dt, q / 2);
            });
            double m, se;
            mean_se(s, &m, &se);
            best = std::max(best, m + 3.0 * se);
        }
    }
    return best;
}

ModulusReport modulus_time(const ControlProblem& P, const std::vector<ThetaPair>& pairs, const ModulusOptions& opt) {
    ModulusReport rep;
    rep.C_burkholder = burkholder_or_calibrate(P, opt);
    rep.C_tilde = c_tilde(P.C_lip, rep.C_burkholder, P.p, P.grid.horizon());
    rep.C_hat = measure_c_hat(P, pairs, opt.moment_paths, opt.value.seed, opt.value.jobs);
    double f = time_factor(P, rep.C_burkholder, rep.C_hat);
    rep.rows.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [a, b] = pairs[i];
        if (b.t < a.t) throw DomainError("time pairs need t <= t′");
        ModulusRow& row = rep.rows[i];
        row.pair_id = static_cast<int>(i);
        row.dt = b.t - a.t;
        row.dp_dist = distance(a, b, DistanceMode::order(P.p));
        diff_row(P, a, b, opt.value, row);
        row.bound = P.rho(f * std::sqrt(row.dt));
        row.pass = row.measured <= row.bound + 3.0 * row.std_error;
        if (!row.pass) ++rep.violations;
    }
    return rep;
}

ModulusReport modulus_joint(const ControlProblem& P, const std::vector<ThetaPair>& pairs, const ModulusOptions& opt) {
    ModulusReport rep;
    rep.C_burkholder = burkholder_or_calibrate(P, opt);
    rep.C_tilde = c_tilde(P.C_lip, rep.C_burkholder, P.p, P.grid.horizon());
    std::vector<ThetaPair> legs;
    for (const auto& [a, b] : pairs) legs.emplace_back(a, frozen_at(a, b.t));
    rep.C_hat = measure_c_hat(P, legs, opt.moment_paths, opt.value.seed, opt.value.jobs);
    double fs = space_factor(P, rep.C_burkholder), ft = time_factor(P, rep.C_burkholder, rep.C_hat);
    rep.rows.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [a, b] = pairs[i];
        ModulusRow& row = rep.rows[i];
        row.pair_id = static_cast<int>(i);
        row.dt = b.t - a.t;
        row.dp_dist = distance(a, b, DistanceMode::order(P.p));
        diff_row(P, a, b, opt.value, row);
        double mid = distance(legs[i].second, b, DistanceMode::order(P.p));
        row.bound = P.rho(ft * std::sqrt(row.dt)) + P.rho(fs * mid);
        row.pass = row.measured <= row.bound + 3.0 * row.std_error;
        if (!row.pass) ++rep.violations;
    }
    return rep;
}

HolderFit holder_experiment(const ControlProblem& P, const std::vector<double>& dts, const ValueOptions& opt) {
    HolderFit fit;
    const double T = P.grid.horizon();
    DiscretePath zero = DiscretePath::zero(P.grid);
    double terminal = P.g(std::span<const double>(zero.values()));
    for (double dt : dts) {
        PointInTheta th(T - dt, zero);
        ValueResult r = value(P, th, opt);
        fit.dts.push_back(dt);
        fit.increments.push_back(std::abs(r.value - terminal));
        fit.std_errors.push_back(r.std_error);
    }
    double n = static_cast<double>(dts.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        double x = std::log(fit.dts[i]), y = std::log(fit.increments[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.exponent * sx) / n;
    return fit;
}

std::vector<ThetaPair> random_space_pairs(const ControlProblem& P, int count, std::uint64_t seed) {
    Rng rng = make_rng(seed, 91);
    std::uniform_int_distribution<int> K(1, P.grid.cells() - 1);
    std::uniform_real_distribution<double> E(0.0, 0.5);
    std::vector<ThetaPair> out;
    for (int i = 0; i < count; ++i) {
        int k = K(rng);
        std::vector<double> w = random_walk(rng, P.grid, 1.0), z = random_walk(rng, P.grid, 1.0);
        double e = E(rng);
        std::vector<double> w2(w);
        for (std::size_t j = 0; j < w.size(); ++j) w2[j] += e * z[j];
        out.emplace_back(PointInTheta(P.grid.time(k), DiscretePath(P.grid, 1, w, k)),
                         PointInTheta(P.grid.time(k), DiscretePath(P.grid, 1, w2, k)));
    }
    return out;
}

std::vector<ThetaPair> random_time_pairs(const ControlProblem& P, int count, std::uint64_t seed) {
    Rng rng = make_rng(seed, 92);
    const int N = P.grid.cells();
    std::uniform_int_distribution<int> K(0, N - 1);
    std::vector<ThetaPair> out;
    for (int i = 0; i < count; ++i) {
        int k = K(rng);
        int k2 = std::uniform_int_distribution<int>(k + 1, N)(rng);
        PointInTheta a(P.grid.time(k), DiscretePath(P.grid, 1, random_walk(rng, P.grid, 1.0), k));
        out.emplace_back(a, frozen_at(a, P.grid.time(k2)));
    }
    return out;
}

std::vector<ThetaPair> random_mixed_pairs(const ControlProblem& P, int count, std::uint64_t seed) {
    Rng rng = make_rng(seed, 93);
    const int N = P.grid.cells();
    std::uniform_int_distribution<int> K(0, N - 1);
    std::uniform_real_distribution<double> E(0.0, 0.5);
    std::vector<ThetaPair> out;
    for (int i = 0; i < count; ++i) {
        int k = K(rng);
        int k2 = std::uniform_int_distribution<int>(k, N)(rng);
        std::vector<double> w = random_walk(rng, P.grid, 1.0), z = random_walk(rng, P.grid, 1.0);
        double e = E(rng);
        std::vector<double> w2(w);
        for (std::size_t j = 0; j < w.size(); ++j) w2[j] += e * z[j];
        out.emplace_back(PointInTheta(P.grid.time(k), DiscretePath(P.grid, 1, w, k)),
                         PointInTheta(P.grid.time(k2), DiscretePath(P.grid, 1, w2, k2)));
    }
    return out;
}

}  // namespace ppde
