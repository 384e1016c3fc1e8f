#include "ppde/stopping_viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ppde/parallel.hpp"
#include "ppde/rng.hpp"

namespace ppde {

namespace {

double trace(std::span<const double> g, int d) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += g[a * d + a];
    return s;
}

int dim_of(std::span<const double> z) { return static_cast<int>(z.size()); }

double euclid_diff(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::vector<double> scaled(std::span<const double> x, double c) {
    std::vector<double> out(x.begin(), x.end());
    for (double& v : out) v *= c;
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::vector<double> by_magnitude(std::vector<double> v) {
    std::stable_sort(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    return v;
}

// Gaussian random walk stopped at a random grid time.
PointInTheta random_point(Rng& rng, const Grid& grid, int d, double scale) {
    std::normal_distribution<double> N01(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(grid.cells() + 1) * d, 0.0);
    double sd = scale * std::sqrt(grid.step());
    for (int k = 1; k <= grid.cells(); ++k)
        for (int a = 0; a < d; ++a) v[k * d + a] = v[(k - 1) * d + a] + sd * N01(rng);
    int k = std::uniform_int_distribution<int>(0, grid.cells())(rng);
    return PointInTheta(grid.time(k), DiscretePath(grid, d, std::move(v), k));
}

}  // namespace

// ------------------------------------------------------------------ paraboloid

Paraboloid::Paraboloid(double a, std::vector<double> b, std::vector<double> g)
    : alpha(a), beta(std::move(b)), gamma(std::move(g)) {
    int d = dim();
    if (d < 1) throw ConfigurationError("paraboloid needs d >= 1");
    if (gamma.size() != static_cast<std::size_t>(d) * d) throw ConfigurationError("paraboloid γ must be d×d");
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(gamma[i * d + j] - gamma[j * d + i]) > 1e-12)
                throw DomainError("paraboloid γ is not symmetric");
}

double Paraboloid::operator()(double s, std::span<const double> x) const {
    int d = dim();
    double v = alpha * s;
    for (int i = 0; i < d; ++i) {
        v += beta[i] * x[i];
        for (int j = 0; j < d; ++j) v += 0.5 * x[i] * gamma[i * d + j] * x[j];
    }
    return v;
}

std::string Paraboloid::describe() const {
    std::string s = "(" + fmt(alpha) + ", ";
    auto list = [](const std::vector<double>& v) {
        if (v.size() == 1) return fmt(v[0]);
        std::string o = "[";
        for (std::size_t i = 0; i < v.size(); ++i) o += (i ? " " : "") + fmt(v[i]);
        return o + "]";
    };
    return s + list(beta) + ", " + list(gamma) + ")";
}

// ------------------------------------------------------------------ nonlinearities

std::vector<std::string> nonlinearity_names() {
    return {"zero", "half-laplacian", "hjb-sup-vol", "lipschitz-sin", "linear-y", "minus-trace"};
}

Nonlinearity catalog_nonlinearity(const std::string& name, const CatalogOptions& opt) {
    Nonlinearity G;
    G.name = name;
    G.rho = Modulus::linear(0.0);
    G.monotone_y = true;
    if (name == "zero") {
        G.eval = [](const PointInTheta&, double, std::span<const double>, std::span<const double>) { return 0.0; };
        return G;
    }
    if (name == "half-laplacian") {
        G.eval = [](const PointInTheta&, double, std::span<const double> z, std::span<const double> g) {
            return 0.5 * trace(g, dim_of(z));
        };
        G.L0 = 0.5;
        G.vol_bound = 1.0;
        return G;
    }
    if (name == "hjb-sup-vol") {
        // sup over a in [-1, 1] of ½ σ(a)² tr γ with σ(a) = 1 + a (max_vol − 1).
        double hi = opt.max_vol, lo = std::max(0.0, 2.0 - opt.max_vol);
        G.eval = [hi, lo](const PointInTheta&, double, std::span<const double> z, std::span<const double> g) {
            double tr = trace(g, dim_of(z));
            return 0.5 * (tr >= 0.0 ? hi * hi : lo * lo) * tr;
        };
        G.L0 = 0.5 * hi * hi;
        G.vol_bound = hi;
        return G;
    }
    if (name == "lipschitz-sin") {
        double q = opt.p;
        G.eval = [q](const PointInTheta& th, double, std::span<const double>, std::span<const double>) {
            return std::sin(path_norm(th.path, q));
        };
        G.rho = Modulus::linear(1.0);
        return G;
    }
    if (name == "linear-y") {
        double c = 1.0;
        G.eval = [c](const PointInTheta&, double y, std::span<const double>, std::span<const double>) {
            return c * y;
        };
        G.L0 = c;
        return G;
    }
    if (name == "minus-trace") {
        G.eval = [](const PointInTheta&, double, std::span<const double> z, std::span<const double> g) {
            return -trace(g, dim_of(z));
        };
        G.L0 = 1.0;
        return G;
    }
    throw ConfigurationError("unknown nonlinearity '" + name + "'");
}

// ------------------------------------------------------------------ Snell

SnellResult snell_envelope(const LatticeModel& model, const PayoffOnTree& X, double delta, Mode mode, int jobs) {
    if (!(delta > 0.0)) throw DomainError("localization radius must be positive");
    TreeOptions opt;
    opt.mode = mode;
    opt.stopping = mode == Mode::Sup ? Stopping::Max : Stopping::Min;
    opt.delta = delta;
    opt.jobs = jobs;
    SnellResult r;
    r.tree = solve_tree(model, X, opt);
    r.value = r.tree.value;
    r.payoff0 = r.tree.layers[0][0].payoff;

    // Law of τ* under the optimal controls.
    const int N = model.steps(), Bn = model.branches();
    std::vector<double> prob{1.0};
    r.tau_min = std::numeric_limits<double>::infinity();
    r.tau_max = 0.0;
    for (int k = 0; k <= N; ++k) {
        const auto& layer = r.tree.layers[k];
        std::vector<double> next(k < N ? r.tree.layers[k + 1].size() : 0, 0.0);
        for (std::size_t i = 0; i < layer.size(); ++i) {
            if (prob[i] == 0.0) continue;
            const TreeNode& n = layer[i];
            if (n.stop || n.absorbed) {
                double t = model.time(k);
                r.tau_mean += prob[i] * t;
                r.tau_min = std::min(r.tau_min, t);
                r.tau_max = std::max(r.tau_max, t);
                continue;
            }
            for (int b = 0; b < Bn; ++b)
                next[n.children[static_cast<std::size_t>(n.best_control) * Bn + b]] += prob[i] / Bn;
        }
        prob = std::move(next);
    }

    // Value of the fixed rule τ* under the nonlinear expectation.
    std::vector<double> below;
    for (int k = N; k >= 0; --k) {
        const auto& layer = r.tree.layers[k];
        std::vector<double> here(layer.size());
        for (std::size_t i = 0; i < layer.size(); ++i) {
            const TreeNode& n = layer[i];
            if (n.stop || n.absorbed) {
                here[i] = n.payoff;
                continue;
            }
            double best = 0.0;
            for (int c = 0; c < model.controls(); ++c) {
                double e = 0.0;
                for (int b = 0; b < Bn; ++b) e += below[n.children[static_cast<std::size_t>(c) * Bn + b]];
                e /= Bn;
                if (c == 0 || (mode == Mode::Sup ? e > best : e < best)) best = e;
            }
            here[i] = best;
        }
        below = std::move(here);
    }
    r.rule_value = below[0];
    return r;
}

PayoffOnTree jet_payoff(const Functional& u, const PointInTheta& theta, const Paraboloid& phi,
                        const LatticeModel& model) {
    const int d = model.dim();
    if (phi.dim() != d || theta.path.dim() != d) throw ConfigurationError("jet dimension differs from the lattice");
    PayoffOnTree X;
    X.name = u.name + "-jet";
    Functional shifted = shift(u, theta);
    if (u.is_markov()) {
        X.dependence = Dependence::Markov;
        X.value = [shifted, phi](const NodeView& v) {
            return shifted.markov(v.t, v.current()) - phi(v.t, v.current());
        };
        return X;
    }
    const Grid& g = theta.path.grid();
    if (std::abs(g.step() - model.step()) > 1e-12 * std::max(1.0, g.step()))
        throw ConfigurationError("path functional jets need the lattice step to equal the path grid step");
    int k0 = theta.index(), cells = g.cells() - k0;
    if (model.steps() > cells) throw ConfigurationError("lattice extends beyond the path horizon");
    if (cells < 1) throw ConfigurationError("no room after the point's time");
    Grid tail_grid(g.horizon() - g.time(k0), cells);
    X.dependence = Dependence::Path;
    X.value = [shifted, phi, tail_grid, d](const NodeView& v) {
        std::vector<double> vals(static_cast<std::size_t>(tail_grid.cells() + 1) * d, 0.0);
        for (int j = 0; j <= v.k; ++j)
            for (int a = 0; a < d; ++a) vals[j * d + a] = v.at(j)[a];
        DiscretePath tail(tail_grid, d, std::move(vals), v.k);
        return shifted(PointInTheta(tail_grid.time(v.k), tail)) - phi(v.t, v.current());
    };
    return X;
}

ContactReport contact_point(const LatticeModel& model, const Functional& u, const Paraboloid& phi, double delta,
                            int jobs) {
    if (!(delta > 0.0)) throw DomainError("localization radius must be positive");
    ContactReport rep;
    PointInTheta origin = origin_point(Grid(model.horizon(), model.steps()), model.dim());
    PayoffOnTree X = jet_payoff(u, origin, phi, model);
    rep.u0 = u(origin);
    rep.terminal_expectation = sup_expectation(model, X, Mode::Sup, delta, jobs);
    rep.strict_gap = rep.u0 - rep.terminal_expectation > 1e-12 * (1.0 + std::abs(rep.u0));
    if (!rep.strict_gap) return rep;

    SnellResult s = snell_envelope(model, X, delta, Mode::Sup, jobs);
    const int N = model.steps(), Bn = model.branches(), d = model.dim();
    std::vector<char> reach{1};
    for (int k = 0; k <= N; ++k) {
        const auto& layer = s.tree.layers[k];
        for (std::size_t i = 0; i < layer.size(); ++i) {
            const TreeNode& n = layer[i];
            if (!reach[i] || n.absorbed || !n.stop) continue;
            ContactPoint cp;
            cp.k = k;
            cp.t = model.time(k);
            cp.path = n.path;
            cp.payoff = n.payoff;
            cp.envelope = n.value;
            cp.history = s.tree.history(k, static_cast<int>(i));
            std::span<const double> w(n.path.data() + static_cast<std::size_t>(k) * d, d);
            std::vector<double> beta = phi.beta;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) beta[a] += phi.gamma[a * d + b] * w[b];
            cp.jet = Paraboloid(phi.alpha, beta, phi.gamma);
            rep.point = cp;
            return rep;
        }
        if (k == N) break;
        std::vector<char> next(s.tree.layers[k + 1].size(), 0);
        for (std::size_t i = 0; i < layer.size(); ++i) {
            const TreeNode& n = layer[i];
            if (!reach[i] || n.absorbed || n.stop) continue;
            for (int b = 0; b < Bn; ++b) next[n.children[static_cast<std::size_t>(n.best_control) * Bn + b]] = 1;
        }
        reach = std::move(next);
    }
    return rep;
}

JetMembership jet_test_pl(const LatticeModel& model, const Functional& u, const PointInTheta& theta,
                          const Paraboloid& candidate, double delta, JetSide side, double floor) {
    if (!(delta > 0.0)) throw DomainError("localization radius must be positive");
    Mode mode = side == JetSide::Sub ? Mode::Sup : Mode::Inf;
    JetMembership m;
    m.u_value = u(theta);
    PayoffOnTree X = jet_payoff(u, theta, candidate, model);
    m.envelope = snell_envelope(model, X, delta, mode).value;
    m.excess = side == JetSide::Sub ? m.envelope - m.u_value : m.u_value - m.envelope;
    double base = floor * (1.0 + std::abs(m.u_value));
    m.coarse_envelope = m.envelope;
    m.tolerance = base;
    if (m.excess > base && model.steps() >= 2) {
        LatticeOptions o;
        o.drift_levels = model.drift_levels();
        o.vol_levels = model.vol_levels();
        o.depth_cap = model.depth_cap();
        int half = model.steps() / 2;
        if (u.is_markov()) {
            LatticeModel coarse = build_lattice(model.bound(), model.horizon(), half, model.dim(), o);
            m.coarse_envelope = snell_envelope(coarse, jet_payoff(u, theta, candidate, coarse), delta, mode).value;
            m.tolerance = 2.0 * std::abs(m.envelope - m.coarse_envelope) + base;
        }
    }
    m.member = m.excess <= m.tolerance;
    return m;
}

// ------------------------------------------------------------------ checkers

std::string ViscosityReport::summary() const {
    std::string side_name = side == JetSide::Sub ? "sub" : "super";
    if (violations == 0)
        return side_name + ": no violation found among " + std::to_string(candidates) + " candidates (" +
               std::to_string(jets_found) + " jets at " + std::to_string(samples) + " points)";
    std::string s = side_name + ": " + std::to_string(violations) + " violations among " +
                    std::to_string(jets_found) + " jets";
    if (witness) s += ", witness jet " + witness->jet.describe() + " residual " + fmt(witness->residual);
    return s;
}

Paraboloid derivative_estimate(const Functional& u, const PointInTheta& theta, double fd_step) {
    const int d = theta.path.dim();
    std::vector<double> beta(d), gamma(static_cast<std::size_t>(d) * d);
    double alpha;
    if (u.is_markov()) {
        std::vector<double> x(theta.current().begin(), theta.current().end());
        double t = theta.t, e = fd_step;
        auto f = [&](double s, const std::vector<double>& y) { return u.markov(s, y); };
        double f0 = f(t, x);
        alpha = t >= e ? (f(t + e, x) - f(t - e, x)) / (2 * e) : (f(t + e, x) - f0) / e;
        for (int a = 0; a < d; ++a) {
            std::vector<double> p = x, m = x;
            p[a] += e;
            m[a] -= e;
            double fp = f(t, p), fm = f(t, m);
            beta[a] = (fp - fm) / (2 * e);
            gamma[a * d + a] = (fp - 2 * f0 + fm) / (e * e);
            for (int b = 0; b < a; ++b) {
                std::vector<double> pp = x, pm = x, mp = x, mm = x;
                pp[a] += e, pp[b] += e;
                pm[a] += e, pm[b] -= e;
                mp[a] -= e, mp[b] += e;
                mm[a] -= e, mm[b] -= e;
                double v = (f(t, pp) - f(t, pm) - f(t, mp) + f(t, mm)) / (4 * e * e);
                gamma[a * d + b] = gamma[b * d + a] = v;
            }
        }
        return Paraboloid(alpha, beta, gamma);
    }
    // Path functionals: horizontal derivative by flat extension over one grid
    // step, vertical derivatives by bumping the current node.
    const DiscretePath& w = theta.path;
    int k = theta.index();
    if (k >= w.grid().cells()) throw DomainError("no horizontal derivative at the horizon");
    double h = w.grid().step(), e = fd_step;
    double f0 = u(theta);
    DiscretePath flat = k == 0 ? DiscretePath::with_initial_jump(w.grid(), d, w.values(), 1)
                               : DiscretePath(w.grid(), d, w.values(), k + 1);
    alpha = (u(PointInTheta(w.grid().time(k + 1), flat)) - f0) / h;
    auto bumped = [&](const std::vector<double>& shift) {
        std::vector<double> v = w.values();
        for (int a = 0; a < d; ++a) v[static_cast<std::size_t>(k) * d + a] += shift[a];
        DiscretePath p = k == 0 ? DiscretePath::with_initial_jump(w.grid(), d, v, k) : DiscretePath(w.grid(), d, v, k);
        return u(PointInTheta(theta.t, p));
    };
    for (int a = 0; a < d; ++a) {
        std::vector<double> sp(d, 0.0), sm(d, 0.0);
        sp[a] = e;
        sm[a] = -e;
        double fp = bumped(sp), fm = bumped(sm);
        beta[a] = (fp - fm) / (2 * e);
        gamma[a * d + a] = (fp - 2 * f0 + fm) / (e * e);
        for (int b = 0; b < a; ++b) {
            std::vector<double> pp(d, 0.0), pm(d, 0.0), mp(d, 0.0), mm(d, 0.0);
            pp[a] = e, pp[b] = e;
            pm[a] = e, pm[b] = -e;
            mp[a] = -e, mp[b] = e;
            mm[a] = -e, mm[b] = -e;
            double v = (bumped(pp) - bumped(pm) - bumped(mp) + bumped(mm)) / (4 * e * e);
            gamma[a * d + b] = gamma[b * d + a] = v;
        }
    }
    return Paraboloid(alpha, beta, gamma);
}

ViscosityReport visc_check(const Functional& u, const Nonlinearity& G, JetSide side,
                           const std::vector<PointInTheta>& samples, const ViscosityConfig& cfg) {
    ViscosityReport rep;
    rep.side = side;
    rep.samples = static_cast<int>(samples.size());
    if (cfg.steps < 1) throw ConfigurationError("viscosity lattice needs at least one step");
    std::vector<double> da = by_magnitude(cfg.grid.alpha_offsets), db = by_magnitude(cfg.grid.beta_offsets),
                        dg = by_magnitude(cfg.grid.gamma_offsets);

    struct PointResult {
        std::vector<ViscosityRow> rows;
        int candidates = 0;
    };
    std::vector<PointResult> results(samples.size());
    parallel_for(samples.size(), cfg.jobs, [&](std::size_t idx) {
        const PointInTheta& th = samples[idx];
        const int d = th.path.dim();
        const double T = th.path.grid().horizon();
        Paraboloid center = derivative_estimate(u, th, cfg.fd_step);
        std::vector<std::pair<double, LatticeModel>> models;
        for (double delta : cfg.deltas)
            if (th.t + delta <= T + 1e-12)
                models.emplace_back(delta, build_lattice(cfg.L, delta, cfg.steps, d));
        PointResult& out = results[idx];
        if (models.empty()) return;
        for (double oa : da)
            for (double ob : db)
                for (double og : dg) {
                    std::vector<double> beta = center.beta, gamma = center.gamma;
                    for (int a = 0; a < d; ++a) {
                        beta[a] += ob;
                        gamma[a * d + a] += og;
                    }
                    Paraboloid cand(center.alpha + oa, beta, gamma);
                    ++out.candidates;
                    for (const auto& [delta, model] : models) {
                        JetMembership m = jet_test_pl(model, u, th, cand, delta, side, cfg.floor);
                        if (!m.member) continue;
                        ViscosityRow row;
                        row.sample = static_cast<int>(idx);
                        row.t = th.t;
                        row.x.assign(th.current().begin(), th.current().end());
                        row.jet = cand;
                        row.delta = delta;
                        row.u_value = m.u_value;
                        row.residual = -cand.alpha - G(th, m.u_value, cand.beta, cand.gamma);
                        row.margin = m.tolerance / model.step() * (1.0 + G.L0);
                        row.pass = side == JetSide::Sub ? row.residual <= row.margin : row.residual >= -row.margin;
                        out.rows.push_back(std::move(row));
                        break;
                    }
                }
    });
    double worst = 0.0;
    for (auto& pr : results) {
        rep.candidates += pr.candidates;
        for (auto& row : pr.rows) {
            ++rep.jets_found;
            if (!row.pass) {
                ++rep.violations;
                double amount = side == JetSide::Sub ? row.residual - row.margin : -row.margin - row.residual;
                if (!rep.witness || amount > worst) {
                    worst = amount;
                    rep.witness = row;
                }
            }
            rep.rows.push_back(std::move(row));
        }
    }
    return rep;
}

StencilReport classical_jet_residual(const FieldMap& f, const PointNonlinearity& G,
                                     const std::vector<std::pair<double, double>>& points, const StencilConfig& cfg,
                                     const ErrorBound& bound) {
    const double hs = cfg.time_step, hx = cfg.space_step, g = cfg.gap, L0 = cfg.L0;
    if (!(hs > 0.0) || !(hx > 0.0)) throw ConfigurationError("stencil steps must be positive");
    const double tol = 2 * g / hs + L0 * (2 * g / hx + 4 * g / (hx * hx)) + (hs + hx * hx) * (1.0 + L0);
    const double time_slack = hs + 4 * g / hs;
    StencilReport rep;
    for (auto [s, x] : points) {
        ++rep.points;
        StencilRow row;
        row.s = s;
        row.x = x;
        double v[5][9];
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 9; ++j) {
                double y = x + (j - 4) * hx;
                v[i][j] = f(s + (i - 2) * hs, std::span<const double>(&y, 1));
            }
        double f0 = v[2][4];
        // α range from the y' = 0 column so that ψ stays above f in time, up to
        // the o(|s' − s|) slack at stencil scale.
        double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 5; ++i) {
            if (i == 2) continue;
            double sp = (i - 2) * hs, q = (v[i][4] - f0) / sp;
            if (sp > 0) lo = std::max(lo, q);
            else hi = std::min(hi, q);
        }
        row.time_misfit = std::max(0.0, lo - hi);
        if (row.time_misfit > time_slack) {
            ++rep.skipped;
            row.accepted = false;
            rep.rows.push_back(row);
            continue;
        }
        double ahat = (v[3][4] - v[1][4]) / (2 * hs);
        double alpha = lo <= hi ? std::clamp(ahat, lo, hi) : std::clamp(ahat, hi, lo);
        double beta = (v[2][5] - v[2][3]) / (2 * hx);
        double ghat = (v[2][5] - 2 * f0 + v[2][3]) / (hx * hx);
        double gmin = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 9; ++j) {
                if (j == 4) continue;
                double sp = (i - 2) * hs, yp = (j - 4) * hx;
                double base = std::max(f0 + alpha * sp, i == 2 ? f0 : v[i][4]);
                gmin = std::max(gmin, 2 * (v[i][j] - base - beta * yp) / (yp * yp));
            }
        double gamma = std::max(ghat, gmin);
        row.accepted = true;
        ++rep.accepted;
        row.alpha = alpha;
        row.beta = beta;
        row.gamma = gamma;
        row.residual = -alpha - G(s, x, f0, beta, gamma);
        row.tolerance = tol;
        row.bound = bound(s, x) + tol;
        row.pass = row.residual <= row.bound;
        if (row.pass) ++rep.passed;
        else rep.worst_overshoot = std::max(rep.worst_overshoot, row.residual - row.bound);
        rep.rows.push_back(row);
    }
    return rep;
}

// ------------------------------------------------------------------ transforms

Functional transform_discount(const Functional& u, double L) {
    Functional v = u;
    v.name = "discount(" + fmt(L) + ")·" + u.name;
    auto eval = u.eval;
    auto markov = u.markov;
    if (markov) v.markov = [markov, L](double t, std::span<const double> x) { return std::exp(-L * t) * markov(t, x); };
    if (eval) v.eval = [eval, L](const PointInTheta& th) { return std::exp(-L * th.t) * eval(th); };
    if (L < 0.0) {
        double grow = std::exp(-L);
        v.bound = u.bound * grow;
        v.bound_estimated = true;
        v.modulus.K = (u.modulus.K + std::abs(L) * u.bound) * grow;
    } else if (L > 0.0) {
        v.modulus.K = u.modulus.K + L * u.bound;
    }
    return v;
}

Nonlinearity transform_discount(const Nonlinearity& G, double L) {
    Nonlinearity H = G;
    H.name = "discount(" + fmt(L) + ")·" + G.name;
    auto inner = G.eval;
    H.eval = [inner, L](const PointInTheta& th, double y, std::span<const double> z, std::span<const double> g) {
        double e = std::exp(L * th.t);
        std::vector<double> zs = scaled(z, e), gs = scaled(g, e);
        return L * y + inner(th, e * y, zs, gs) / e;
    };
    H.L0 = G.L0 + std::abs(L);
    H.monotone_y = L >= G.L0 || (G.monotone_y && L >= 0.0);
    return H;
}

Nonlinearity transform_gbar(const Nonlinearity& G, double L0) {
    if (!(L0 >= 0.0)) throw DomainError("L0 must be >= 0");
    Nonlinearity H = G;
    H.name = "gbar(" + fmt(L0) + ")·" + G.name;
    auto inner = G.eval;
    H.eval = [inner, L0](const PointInTheta& th, double y, std::span<const double> z, std::span<const double> g) {
        double e = std::exp(2.0 * L0 * th.t);
        std::vector<double> zs = scaled(z, 1.0 / e), gs = scaled(g, 1.0 / e);
        return -2.0 * L0 * y + e * inner(th, y / e, zs, gs);
    };
    H.L0 = G.L0 + 2.0 * L0;
    H.monotone_y = L0 == 0.0 && G.monotone_y;
    return H;
}

ChainReport gbar_chain_check(const Nonlinearity& G, double L0, int samples, std::uint64_t seed, const Grid& grid) {
    Nonlinearity Gb = transform_gbar(G, L0);
    ChainReport rep;
    Rng rng = make_rng(seed, 61);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int i = 0; i < samples; ++i) {
        PointInTheta th = random_point(rng, grid, 1, 1.0);
        double y = U(rng), y2 = U(rng), z = U(rng), g = U(rng);
        if (y < y2) std::swap(y, y2);
        double diff = Gb.at(th, y2, z, g) - Gb.at(th, y, z, g);
        ChainSample s{th.t, y, y2, z, g, L0 * (y - y2), std::max(0.0, diff), std::abs(diff), true};
        double slack = 1e-12 * (1.0 + std::abs(diff) + std::abs(s.lower));
        s.pass = s.lower <= s.middle + slack && s.middle <= s.upper;
        ++rep.samples;
        if (!s.pass) {
            ++rep.violations;
            if (!rep.witness) rep.witness = s;
        }
    }
    return rep;
}

bool AuditReport::pass() const {
    return std::all_of(items.begin(), items.end(), [](const AuditItem& a) { return a.violations == 0; });
}

const AuditItem& AuditReport::item(const std::string& condition) const {
    for (const auto& a : items)
        if (a.condition == condition) return a;
    throw ConfigurationError("no audit item '" + condition + "'");
}

AuditReport assumption_audit(const Nonlinearity& G, const AuditSpec& spec) {
    const int d = G.dim;
    const double R = spec.value_range, eps = 1e-10;
    Rng rng = make_rng(spec.seed, 71);
    std::uniform_real_distribution<double> U(-R, R);
    auto vec = [&](int n) {
        std::vector<double> v(n);
        for (double& x : v) x = U(rng);
        return v;
    };
    auto sym = [&]() {
        std::vector<double> g(static_cast<std::size_t>(d) * d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b <= a; ++b) g[a * d + b] = g[b * d + a] = U(rng);
        return g;
    };
    auto record = [](AuditItem& it, double excess, const std::string& witness) {
        ++it.samples;
        if (excess > it.worst || it.samples == 1) it.worst = std::max(it.worst, excess);
        if (excess > 0.0) {
            if (it.violations == 0) it.witness = witness;
            ++it.violations;
        }
    };

    AuditItem ell, cont, lip, one;
    ell.condition = "ellipticity";
    cont.condition = "theta-continuity";
    lip.condition = "lipschitz";
    one.condition = "one-sided";
    for (int i = 0; i < spec.samples; ++i) {
        PointInTheta th = random_point(rng, spec.grid, d, 1.0);
        double y = U(rng);
        std::vector<double> z = vec(d), g = sym(), v = vec(d);
        // γ′ = γ + v vᵀ ⪰ γ.
        std::vector<double> g2 = g;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) g2[a * d + b] += v[a] * v[b];
        double lhs = G(th, y, z, g), rhs = G(th, y, z, g2);
        record(ell, lhs - rhs - eps,
               "t=" + fmt(th.t) + " y=" + fmt(y) + " γ=" + fmt(g[0]) + " γ′=" + fmt(g2[0]) + " G(γ)=" + fmt(lhs) +
                   " G(γ′)=" + fmt(rhs));

        PointInTheta th2 = random_point(rng, spec.grid, d, 1.0);
        double dist = distance(th, th2, DistanceMode::order(spec.p));
        double dg = std::abs(G(th, y, z, g) - G(th2, y, z, g));
        record(cont, dg - G.rho(dist) - eps,
               "t=" + fmt(th.t) + " t′=" + fmt(th2.t) + " d_p=" + fmt(dist) + " |ΔG|=" + fmt(dg));

        double y2 = U(rng);
        std::vector<double> z2 = vec(d), gg = sym();
        double dgf = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) dgf += (g[j] - gg[j]) * (g[j] - gg[j]);
        dgf = std::sqrt(dgf);
        double a = G(th, y, z, g), b = G(th, y2, z2, gg);
        double dz = euclid_diff(z, z2);
        record(lip, std::abs(a - b) - G.L0 * (std::abs(y - y2) + dz + dgf) - eps,
               "y=" + fmt(y) + " y′=" + fmt(y2) + " |ΔG|=" + fmt(std::abs(a - b)));
        if (G.monotone_y)
            record(one, a - b - G.L0 * (std::max(0.0, y - y2) + dz + dgf) - eps,
                   "y=" + fmt(y) + " y′=" + fmt(y2) + " ΔG=" + fmt(a - b));
    }
    AuditReport rep;
    rep.items = {ell, cont, lip};
    if (G.monotone_y) rep.items.push_back(one);
    return rep;
}

// ------------------------------------------------------------------ comparison

ComparisonReport comparison_experiment(const Functional& u, const Functional& v, const Nonlinearity& G,
                                       const ComparisonSpec& spec) {
    ComparisonReport rep;
    Rng rng = make_rng(spec.seed, 81);
    const Grid& grid = spec.grid;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < spec.points; ++i) {
        PointInTheta th = random_point(rng, grid, 1, 1.0);
        double m = v(th) - u(th);
        rep.min_margin = std::min(rep.min_margin, m);
        if (m < -spec.tolerance) rep.pointwise_ok = false;
        PointInTheta term(grid.horizon(), DiscretePath(grid, 1, th.path.values()));
        if (v(term) - u(term) < -spec.tolerance) rep.terminal_ok = false;
    }
    rep.points = spec.points;

    std::vector<double> zero(1, 0.0);
    PwlPath eta = constant_pwl(grid.horizon(), zero);
    double B = std::max(u.bound, v.bound);
    double prev = std::numeric_limits<double>::infinity();
    const double p = spec.p;
    for (double n : spec.n_schedule) {
        ComparisonRow row;
        row.n = n;
        RegularizationResult ru = regularize(u, n, 0.0, eta, Direction::Sub, grid, spec.p, spec.search);
        RegularizationResult rv = regularize(v, n, 0.0, eta, Direction::Super, grid, spec.p, spec.search);
        row.u_n = ru.value;
        row.v_n = rv.value;
        row.difference = ru.value - rv.value;
        row.gap = ru.gap + rv.gap;
        double C = prune_bounds(n, B, spec.p).C0;
        double dn = C * (std::pow(n, -(3 * p + 3) / 2) + std::pow(n, -1.0 / (p + 1)));
        double rho_n = u.modulus(dn) + v.modulus(dn);
        double arg = std::pow(n, -1.0 / (p + 1)) + C * std::pow(n, -1.0 / (10 * p));
        double rho_bar = G.rho(arg) + G.L0 * (u.modulus(arg) + v.modulus(arg));
        row.bound = std::max(2 * rho_n, C * std::pow(n, -spec.a / (p + 1)) + rho_bar);
        row.bound_ok = row.difference <= row.bound + row.gap;
        if (!row.bound_ok)
            rep.warnings.push_back("n=" + fmt(n) + ": difference " + fmt(row.difference) + " exceeds bound " +
                                   fmt(row.bound) + " (C=" + fmt(C) + ")");
        if (row.bound > prev) {
            rep.bounds_decrease = false;
            rep.warnings.push_back("n=" + fmt(n) + ": bound " + fmt(row.bound) + " above previous " + fmt(prev));
        }
        prev = row.bound;
        rep.rows.push_back(row);
    }
    return rep;
}

std::vector<CatalogCase> solution_catalog() {
    return {
        {"linear", "zero", true, true, std::nullopt, 1.0},
        {"heat", "half-laplacian", true, true, std::nullopt, 1.0},
        {"quadratic-drift", "hjb-sup-vol", true, true, std::nullopt, 1.5},
        {"drifting-minus-t", "zero", false, true, Paraboloid::scalar(-1.0, 0.0, 0.0), 1.0},
    };
}

}  // namespace ppde
