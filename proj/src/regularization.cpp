#include "ppde/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ppde/parallel.hpp"
#include "ppde/rng.hpp"

namespace ppde {

const char* to_string(Direction d) { return d == Direction::Sub ? "sub" : "super"; }

double penalty(double s, const PwlPath& eta, double t, const PwlPath& omega, const TimeChange& ell, int p) {
    double tol = 1e-12 * std::max(1.0, std::max(s, t));
    if (std::abs(ell.anchor() - t) > tol || std::abs(ell.target() - s) > tol)
        throw DomainError("time change does not map [0,t] onto [0,s]");
    double horizon = omega.horizon();
    PwlPath moved = compose(eta, ell, horizon);
    PwlPath mismatch = difference(moved, stopped(omega, t));
    double dev = ell.sup_deviation();
    double first = dev > 0.0 ? std::pow(dev, 2.0 / (3.0 * p + 3.0)) : 0.0;
    return first + pow_norm(mismatch, p + 1.0);
}

double penalty(double s, const DiscretePath& eta, const PointInTheta& theta, const TimeChange& ell, int p) {
    return penalty(s, to_pwl(eta), theta.t, to_pwl(theta.path), ell, p);
}

PruneBox prune_bounds(double n, double B, int p, double /*s*/, int i, double x_tuple_norm) {
    if (!(n >= 1.0)) throw DomainError("regularization index n must be >= 1");
    PruneBox box;
    box.C0 = 1.0 + 2.0 * B;
    double r = box.C0 / n;
    box.ell_bound = std::pow(r, (3.0 * p + 3.0) / 2.0);
    box.terminal_bound = std::pow(r, 1.0 / (p + 1.0));
    box.integral_bound = r;
    box.path_bound = box.C0 * (std::pow(n, -1.0 / (p + 1.0)) +
                               i * x_tuple_norm * std::pow(n, -(3.0 * p + 3.0) / (2.0 * p)));
    return box;
}

namespace {

// min over a of the integral of |(1-u) + a u|^q on [0,1].
double min_segment_mass(double q) {
    auto f = [q](double a) {
        double one = 1.0;
        return segment_pow_integral(&one, &a, 1, q);
    };
    double lo = -1.0, hi = 1.0;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    // Slightly under the minimum so the derived radii stay outer bounds.
    return 0.999 * std::min(f1, f2);
}

struct Candidate {
    double F = -std::numeric_limits<double>::infinity();
    double t_hat = 0.0;
    std::vector<double> v;
};

bool lex_less(const Candidate& a, const Candidate& b) {
    if (a.t_hat != b.t_hat) return a.t_hat < b.t_hat;
    return a.v < b.v;
}

bool better(const Candidate& a, const Candidate& b) {
    if (a.F != b.F) return a.F > b.F;
    return lex_less(a, b);
}

class Problem {
public:
    Problem(const Functional& u, double n, double s, const PwlPath& eta, Direction dir, const Grid& grid, int p,
            const SearchConfig& cfg, const PruneBox& box, double kq, double t_hat)
        : u_(u), n_(n), s_(s), eta_(eta), sign_(dir == Direction::Sub ? 1.0 : -1.0), grid_(grid), p_(p),
          q_(p + 1.0), t_(t_hat), d_(eta.dim) {
        k_hat_ = grid.index_of(t_hat);
        T_ = grid.horizon();
        eta_s_.assign(d_, 0.0);
        eta.value(s, eta_s_.data());
        use_time_knots_ = s > 0.0 && t_hat > 0.0 && cfg.time_knots > 0;
        K_ = use_time_knots_ ? cfg.time_knots : 0;
        for (int k = 1; k <= K_; ++k) {
            in_.push_back(t_hat * k / (K_ + 1.0));
            base_.push_back(s * k / (K_ + 1.0));
        }
        ell_bound_ = box.ell_bound;
        // Knots of the path perturbation: 0 and t̂ − {0, 1, 2, 4, ...}·h.
        if (t_hat > 0.0) {
            std::vector<int> idx{k_hat_};
            int step = 1;
            while (static_cast<int>(idx.size()) < cfg.path_knots && k_hat_ - step > 0) {
                idx.push_back(k_hat_ - step);
                step *= 2;
            }
            idx.push_back(0);
            std::sort(idx.begin(), idx.end());
            idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
            knot_idx_ = idx;
            for (int k : idx) knot_t_.push_back(grid.time(k));
        }
        int P = static_cast<int>(knot_idx_.size());
        for (int j = 1; j < P; ++j) {
            double r;
            if (j == P - 1) {
                r = box.terminal_bound;
            } else {
                double w = knot_t_[j + 1] - knot_t_[j - 1];
                r = std::min(box.terminal_bound * 4.0, std::pow(box.integral_bound / (kq * w), 1.0 / q_));
            }
            for (int a = 0; a < d_; ++a) radius_.push_back(r);
        }
        eta_nodes_.assign(static_cast<std::size_t>(grid.cells() + 1) * d_, 0.0);
        nodes_.assign(eta_nodes_.size(), 0.0);
        refresh_eta(std::vector<double>(K_, 0.0));
    }

    int size() const { return K_ + static_cast<int>(radius_.size()); }
    int time_vars() const { return K_; }

    // Feasible interval for variable i given the others.
    std::pair<double, double> range(const std::vector<double>& v, int i) const {
        if (i >= K_) {
            double r = radius_[i - K_];
            return {-r, r};
        }
        double margin = 1e-12 * std::max(1.0, s_);
        double prev = i == 0 ? 0.0 : base_[i - 1] + v[i - 1];
        double next = i + 1 == K_ ? s_ : base_[i + 1] + v[i + 1];
        double lo = std::max(in_[i] - ell_bound_, prev + margin);
        double hi = std::min(in_[i] + ell_bound_, next - margin);
        lo -= base_[i];
        hi -= base_[i];
        if (hi < lo) return {v[i], v[i]};
        return {lo, hi};
    }

    double sup_deviation(const std::vector<double>& v) const {
        double m = std::abs(s_ - t_);
        for (int k = 0; k < K_; ++k) m = std::max(m, std::abs(base_[k] + v[k] - in_[k]));
        return m;
    }

    double objective(const std::vector<double>& v) {
        if (K_ > 0 && !std::equal(v.begin(), v.begin() + K_, cached_time_.begin())) refresh_eta(v);
        ++evaluations;
        double dev = sup_deviation(v);
        double cost = dev > 0.0 ? std::pow(dev, 2.0 / (3.0 * p_ + 3.0)) : 0.0;
        int P = static_cast<int>(knot_idx_.size());
        const double* c = v.data() + K_;
        if (P > 0) {
            const double* last = c + static_cast<std::size_t>(P - 2) * d_;
            double nrm = 0.0;
            for (int a = 0; a < d_; ++a) nrm += last[a] * last[a];
            cost += (T_ + 1.0 - t_) * std::pow(nrm, 0.5 * q_);
            std::vector<double> zero(d_, 0.0);
            for (int j = 0; j + 1 < P; ++j) {
                const double* a = j == 0 ? zero.data() : c + static_cast<std::size_t>(j - 1) * d_;
                const double* b = c + static_cast<std::size_t>(j) * d_;
                cost += (knot_t_[j + 1] - knot_t_[j]) * segment_pow_integral(a, b, d_, q_);
            }
        }
        return sign_ * functional_value(v) - n_ * cost;
    }

    double functional_value(const std::vector<double>& v) {
        int P = static_cast<int>(knot_idx_.size());
        const double* c = v.data() + K_;
        if (u_.is_markov()) {
            std::vector<double> x(eta_s_);
            if (P > 0)
                for (int a = 0; a < d_; ++a) x[a] += c[static_cast<std::size_t>(P - 2) * d_ + a];
            return u_.markov(t_, x);
        }
        std::copy(eta_nodes_.begin(), eta_nodes_.end(), nodes_.begin());
        for (int j = 0; j + 1 < P; ++j) {
            int k0 = knot_idx_[j], k1 = knot_idx_[j + 1];
            const double* b = c + static_cast<std::size_t>(j) * d_;
            for (int k = k0 + 1; k <= k1; ++k) {
                double lam = static_cast<double>(k - k0) / (k1 - k0);
                for (int a = 0; a < d_; ++a) {
                    double av = j == 0 ? 0.0 : c[static_cast<std::size_t>(j - 1) * d_ + a];
                    nodes_[static_cast<std::size_t>(k) * d_ + a] += av + (b[a] - av) * lam;
                }
            }
        }
        for (int k = k_hat_ + 1; k <= grid_.cells(); ++k)
            for (int a = 0; a < d_; ++a)
                nodes_[static_cast<std::size_t>(k) * d_ + a] = nodes_[static_cast<std::size_t>(k_hat_) * d_ + a];
        bool origin = true;
        for (int a = 0; a < d_; ++a) origin = origin && nodes_[a] == 0.0;
        DiscretePath path = origin ? DiscretePath(grid_, d_, nodes_, k_hat_)
                                   : DiscretePath::with_initial_jump(grid_, d_, nodes_, k_hat_);
        return u_.eval(PointInTheta(t_, path));
    }

    TimeChange time_change(const std::vector<double>& v) const {
        if (s_ == 0.0) return TimeChange::make(t_, 0.0, {});
        std::vector<std::pair<double, double>> knots;
        for (int k = 0; k < K_; ++k) knots.emplace_back(in_[k], base_[k] + v[k]);
        return TimeChange::make(t_, s_, knots);
    }

    PwlPath perturbation(const std::vector<double>& v) const {
        std::vector<double> times{0.0}, vals(d_, 0.0);
        int P = static_cast<int>(knot_idx_.size());
        for (int j = 1; j < P; ++j) {
            times.push_back(knot_t_[j]);
            vals.insert(vals.end(), v.begin() + K_ + static_cast<long>(j - 1) * d_, v.begin() + K_ + static_cast<long>(j) * d_);
        }
        return pwl_from_knots(T_, d_, times, vals);
    }

    double terminal_mismatch(const std::vector<double>& v) const {
        int P = static_cast<int>(knot_idx_.size());
        if (P == 0) return 0.0;
        double s = 0.0;
        for (int a = 0; a < d_; ++a) {
            double c = v[K_ + static_cast<std::size_t>(P - 2) * d_ + a];
            s += c * c;
        }
        return std::sqrt(s);
    }

    long evaluations = 0;

private:
    void refresh_eta(const std::vector<double>& v) {
        cached_time_.assign(v.begin(), v.begin() + K_);
        if (u_.is_markov()) return;
        TimeChange ell = time_change(v);
        std::fill(eta_nodes_.begin(), eta_nodes_.end(), 0.0);
        for (int k = (k_hat_ == 0 ? 0 : 1); k <= k_hat_; ++k) {
            double r = grid_.time(k);
            eta_.value(s_ == 0.0 ? 0.0 : ell(r), eta_nodes_.data() + static_cast<std::size_t>(k) * d_);
        }
    }

    const Functional& u_;
    double n_, s_;
    const PwlPath& eta_;
    double sign_;
    Grid grid_;
    int p_;
    double q_, t_, T_ = 1.0;
    int d_;
    int k_hat_ = 0;
    std::vector<double> eta_s_;
    bool use_time_knots_ = false;
    int K_ = 0;
    std::vector<double> in_, base_;
    double ell_bound_ = 0.0;
    std::vector<int> knot_idx_;
    std::vector<double> knot_t_;
    std::vector<double> radius_;
    std::vector<double> eta_nodes_, nodes_;
    std::vector<double> cached_time_;
};

struct LocalResult {
    Candidate best;
    long evaluations = 0;
    bool exhausted = false;
};

// Coordinate ascent with a coarse scan and golden-section refinement per axis.
LocalResult coordinate_ascent(Problem& prob, std::vector<double> v, const SearchConfig& cfg, long budget) {
    LocalResult out;
    double F = prob.objective(v);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        double start = F;
        for (int i = 0; i < prob.size(); ++i) {
            if (prob.evaluations >= budget) {
                out.exhausted = true;
                break;
            }
            auto [lo, hi] = prob.range(v, i);
            if (!(hi - lo > 1e-15)) continue;
            double cur = v[i];
            double bestx = cur, bestF = F;
            auto eval_at = [&](double x) {
                v[i] = x;
                double f = prob.objective(v);
                if (f > bestF || (f == bestF && x < bestx)) {
                    bestF = f;
                    bestx = x;
                }
                return f;
            };
            int S = std::max(2, cfg.scan_points);
            double width = (hi - lo) / S;
            for (int j = 0; j <= S; ++j) eval_at(lo + j * width);
            double a = std::max(lo, bestx - width), b = std::min(hi, bestx + width);
            double x1 = b - g * (b - a), x2 = a + g * (b - a);
            double f1 = eval_at(x1), f2 = eval_at(x2);
            for (int it = 0; it < cfg.golden_iters && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
                if (f1 > f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = eval_at(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = eval_at(x2);
                }
            }
            v[i] = bestx;
            F = bestF;
        }
        // Joint shrink toward the identity time change and zero perturbation;
        // moves along this ray stay feasible and escape the flat directions
        // of the max in the sup deviation.
        for (int group = 0; group < 3 && !out.exhausted; ++group) {
            int first = group == 1 ? prob.time_vars() : 0;
            int last = group == 0 ? prob.time_vars() : prob.size();
            if (first >= last) continue;
            std::vector<double> base = v;
            double bests = 1.0, bestF = F;
            auto eval_scale = [&](double sc) {
                for (int i = first; i < last; ++i) v[i] = sc * base[i];
                double f = prob.objective(v);
                if (f > bestF) {
                    bestF = f;
                    bests = sc;
                }
                return f;
            };
            int S = std::max(2, cfg.scan_points);
            for (int j = 0; j < S; ++j) eval_scale(static_cast<double>(j) / S);
            double a = std::max(0.0, bests - 1.0 / S), b = std::min(1.0, bests + 1.0 / S);
            double x1 = b - g * (b - a), x2 = a + g * (b - a);
            double f1 = eval_scale(x1), f2 = eval_scale(x2);
            for (int it = 0; it < cfg.golden_iters && b - a > 1e-14; ++it) {
                if (f1 > f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = eval_scale(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = eval_scale(x2);
                }
            }
            for (int i = first; i < last; ++i) v[i] = bests * base[i];
            F = bestF;
            if (prob.evaluations >= budget) out.exhausted = true;
        }
        if (out.exhausted || F - start <= cfg.tolerance * std::max(1.0, std::abs(F))) break;
    }
    out.best.F = F;
    out.best.v = v;
    out.evaluations = prob.evaluations;
    return out;
}

}  // namespace

RegularizationResult regularize(const Functional& u, double n, double s, const PwlPath& eta, Direction dir,
                                const Grid& grid, int p, const SearchConfig& cfg) {
    if (!(n >= 1.0)) throw DomainError("regularization index n must be >= 1");
    MetricOrder order(p);
    int k_s = grid.index_of(s);
    s = grid.time(k_s);
    if (std::abs(eta.horizon() - grid.horizon()) > 1e-12) throw ConfigurationError("path and grid horizons differ");
    PruneBox box = prune_bounds(n, u.bound, p);
    double kq = min_segment_mass(p + 1.0);
    double expo = 2.0 / (3.0 * p + 3.0);

    std::vector<int> cands;
    for (int k = 0; k <= grid.cells(); ++k) {
        double t = grid.time(k);
        if (std::abs(t - s) > box.ell_bound && k != k_s) continue;
        if (s > 0.0 && k == 0) continue;
        cands.push_back(k);
    }
    std::stable_sort(cands.begin(), cands.end(), [&](int a, int b) {
        return std::abs(grid.time(a) - s) < std::abs(grid.time(b) - s);
    });

    RegularizationResult res;
    res.direction = dir;
    res.n = n;
    res.s = s;
    res.ramp_cells = u.ramp_cells;
    Candidate best;
    std::vector<double> best_restarts;
    long evals = 0;
    bool exhausted = false;
    int examined = 0;
    for (int k : cands) {
        double t_hat = grid.time(k);
        double dev = std::abs(t_hat - s);
        double upper = u.bound - n * (dev > 0 ? std::pow(dev, expo) : 0.0);
        if (std::isfinite(best.F) && upper < best.F) continue;
        if (evals >= cfg.budget) {
            exhausted = true;
            break;
        }
        ++examined;
        int starts = std::max(1, cfg.restarts);
        std::vector<Candidate> results(starts);
        std::vector<long> used(starts, 0);
        std::vector<char> ran_out(starts, 0);
        long share = std::max<long>(1000, (cfg.budget - evals) / starts);
        parallel_for(static_cast<std::size_t>(starts), cfg.jobs, [&](std::size_t r) {
            Problem prob(u, n, s, eta, dir, grid, p, cfg, box, kq, t_hat);
            std::vector<double> v0(prob.size(), 0.0);
            if (r > 0) {
                Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(k) * 1000 + r);
                std::uniform_real_distribution<double> U(-0.5, 0.5);
                for (int i = 0; i < prob.size(); ++i) {
                    auto [lo, hi] = prob.range(v0, i);
                    double mid = 0.5 * (lo + hi);
                    v0[i] = mid + U(rng) * (hi - lo);
                }
            }
            LocalResult lr = coordinate_ascent(prob, v0, cfg, share);
            lr.best.t_hat = t_hat;
            results[r] = lr.best;
            used[r] = lr.evaluations;
            ran_out[r] = lr.exhausted;
        });
        Candidate local = results[0];
        for (const auto& c : results)
            if (better(c, local)) local = c;
        for (int r = 0; r < starts; ++r) {
            evals += used[r];
            exhausted = exhausted || ran_out[r];
        }
        if (!std::isfinite(best.F) || better(local, best)) {
            best = local;
            best_restarts.clear();
            for (const auto& c : results) best_restarts.push_back(c.F);
        }
    }

    Problem prob(u, n, s, eta, dir, grid, p, cfg, box, kq, best.t_hat);
    double sign = dir == Direction::Sub ? 1.0 : -1.0;
    res.t_hat = best.t_hat;
    res.value = sign * best.F;
    res.ell_hat = prob.time_change(best.v);
    PwlPath moved = compose(eta, res.ell_hat, grid.horizon());
    res.omega_hat = sum(moved, prob.perturbation(best.v));
    int k_hat = grid.index_of(best.t_hat);
    res.omega_sampled = sample_on_grid(res.omega_hat, grid, k_hat);
    res.functional_value = prob.functional_value(best.v);
    res.penalty = (sign * res.functional_value - best.F) / n;
    res.penalty_check = penalty(s, eta, best.t_hat, res.omega_hat, res.ell_hat, p);
    res.sup_deviation = res.ell_hat.sup_deviation();
    res.terminal_mismatch = prob.terminal_mismatch(best.v);
    double total = pow_norm(stopped(prob.perturbation(best.v), best.t_hat), p + 1.0);
    res.integral_mismatch = std::max(0.0, total - (grid.horizon() + 1.0 - best.t_hat) *
                                                      std::pow(res.terminal_mismatch, p + 1.0));
    res.restart_values = best_restarts;
    double hi = *std::max_element(best_restarts.begin(), best_restarts.end());
    double lo = *std::min_element(best_restarts.begin(), best_restarts.end());
    res.gap = (hi - lo) + cfg.tolerance * std::max(1.0, std::abs(best.F)) +
              n * std::abs(res.penalty_check - res.penalty);
    res.evaluations = evals;
    res.restarts = std::max(1, cfg.restarts);
    res.candidates = examined;
    res.budget_exhausted = exhausted;
    res.certified = !exhausted && res.gap <= cfg.target_gap;
    return res;
}

RegularizationResult regularize(const Functional& u, double n, double s, const DiscretePath& eta, Direction dir,
                                int p, const SearchConfig& cfg) {
    return regularize(u, n, s, to_pwl(eta), dir, eta.grid(), p, cfg);
}

// ---------------------------------------------------------------- FiniteDimMap

FiniteDimMap::FiniteDimMap(Functional u, double n, StepSkeleton skel, Grid grid, int p, Direction dir,
                           SearchConfig cfg)
    : u_(std::move(u)), n_(n), skel_(std::move(skel)), grid_(grid), p_(p), dir_(dir), cfg_(cfg) {
    for (double s : skel_.times) {
        try {
            grid_.index_of(s);
        } catch (const PrecisionError& e) {
            throw ConfigurationError(std::string("skeleton time off grid: ") + e.what());
        }
    }
}

const RegularizationResult& FiniteDimMap::result(double s, std::span<const double> x) const {
    if (s < skel_.last_time() - grid_.on_grid_tolerance())
        throw DomainError("finite-dimensional map is defined for s >= last skeleton time");
    if (static_cast<int>(x.size()) != skel_.dim) throw ConfigurationError("point has wrong dimension");
    Key key{grid_.index_of(s), {}};
    for (double v : x) key.second.push_back(std::llround(v * 1e9));
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return *it->second;
    }
    PwlPath eta = step_pwl(skel_, x, grid_.horizon());
    auto fresh = std::make_unique<RegularizationResult>(regularize(u_, n_, s, eta, dir_, grid_, p_, cfg_));
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = cache_.emplace(std::move(key), std::move(fresh));
    return *it->second;
}

double FiniteDimMap::unregularized(double s, std::span<const double> x) const {
    int k = grid_.index_of(s);
    PwlPath eta = step_pwl(skel_, x, grid_.horizon());
    DiscretePath sampled = sample_on_grid(stopped(eta, grid_.time(k)), grid_, k);
    return u_(PointInTheta(grid_.time(k), sampled));
}

std::size_t FiniteDimMap::cache_size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.size();
}

double FiniteDimMap::max_gap() const {
    std::lock_guard<std::mutex> lock(mutex_);
    double g = 0.0;
    for (const auto& [k, r] : cache_) g = std::max(g, r->gap);
    return g;
}

// ---------------------------------------------------------------- partition and transforms

PartitionScheme partition(double n, double a, double horizon, int p) {
    MetricOrder order(p);
    if (!(a > 0.0) || !(a < 1.0 / (5.0 * p))) throw DomainError("partition exponent a must lie in (0, 1/(5p))");
    if (!(n >= 1.0)) throw DomainError("partition index n must be >= 1");
    PartitionScheme ps;
    ps.n = n;
    ps.a = a;
    ps.horizon = horizon;
    ps.m = static_cast<int>(std::floor(std::pow(n, 1.0 + a) + 1.0));
    for (int i = 0; i <= ps.m; ++i) ps.times.push_back(i == ps.m ? horizon : i * horizon / ps.m);
    return ps;
}

std::vector<double> PartitionScheme::snapped(const Grid& grid, double* max_shift) const {
    std::vector<double> out;
    double worst = 0.0;
    for (double s : times) {
        int k = grid.index_of(s, 0.5 * grid.step());
        worst = std::max(worst, std::abs(grid.time(k) - s));
        if (!out.empty() && grid.time(k) <= out.back())
            throw PrecisionError("grid too coarse to separate partition times");
        out.push_back(grid.time(k));
    }
    if (max_shift) *max_shift = worst;
    return out;
}

FieldMap kappa_transform(FieldMap f, double kappa, double n, double a, double s_i, double L0, Direction dir) {
    if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
    double sign = dir == Direction::Sub ? -1.0 : 1.0;
    return [f = std::move(f), kappa, n, a, s_i, L0, sign](double s, std::span<const double> x) {
        if (!(s > s_i)) throw DomainError("transform is singular at s = s_i");
        double x2 = 0.0;
        for (double v : x) x2 += v * v;
        return std::exp(2.0 * L0 * s) * f(s, x) + sign * (kappa * std::pow(n, -1.0 - a) / (s - s_i) + x2 / (2.0 * n));
    };
}

ErrorTerms error_terms(double n, double C, double s, double s_i, int i, std::span<const double> x_tuple, int dim,
                       const Modulus& rho_G, const Modulus& rho_u, double L0, double a, int p) {
    if (s < s_i) throw DomainError("error terms need s >= s_i");
    ErrorTerms e;
    e.C = C;
    double ns = n * (s - s_i);
    e.alpha = C * (ns + std::pow(ns, 1.0 / (p + 1.0)) + std::pow(n, -0.5));
    double xn = x_tuple.empty() ? 0.0 : tuple_norm(x_tuple, dim, p);
    double arg = C * (std::pow(n, -1.0 / (p + 1.0)) + i * xn * std::pow(n, -(3.0 * p + 3.0) / (2.0 * p)));
    e.beta = rho_G(arg) + L0 * rho_u(arg);
    e.R = C * std::pow(n, -a / (p + 1.0)) + e.beta;
    return e;
}

bool power_bound_check(std::span<const double> a, std::span<const double> b, int p, double C) {
    double na = 0.0, nb = 0.0, ab = 0.0, nab = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        na += a[k] * a[k];
        nb += b[k] * b[k];
        ab += a[k] * b[k];
        nab += (a[k] + b[k]) * (a[k] + b[k]);
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    nab = std::sqrt(nab);
    double lhs = std::pow(nab, p + 1);
    double rhs = std::pow(na, p + 1) + (p + 1) * ab * std::pow(na, p - 1) +
                 C * nb * nb * (std::pow(nb, p - 1) + std::pow(na, p - 1));
    // Rounding allowance relative to the largest term.
    double scale = std::pow(na + nb, p + 1);
    return lhs <= rhs + 1e-13 * scale;
}

}  // namespace ppde
