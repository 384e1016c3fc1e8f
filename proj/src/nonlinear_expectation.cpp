#include "ppde/nonlinear_expectation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <json.hpp>

#include "ppde/parallel.hpp"
#include "ppde/rng.hpp"

namespace ppde {

namespace {

std::vector<double> dedupe(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

constexpr double kKeyQuantum = 1e-10;

}  // namespace

LatticeModel::LatticeModel(double L, double T, int N, int d, std::vector<double> drift_levels,
                           std::vector<double> vol_levels, int depth_cap)
    : L_(L), T_(T), N_(N), d_(d), cap_(depth_cap), drift_(dedupe(std::move(drift_levels))),
      vol_(dedupe(std::move(vol_levels))) {
    if (N < 1) throw ConfigurationError("lattice needs N >= 1");
    if (!(L >= 0.0)) throw DomainError("lattice bound L must be >= 0");
    if (!(T > 0.0)) throw ConfigurationError("lattice horizon must be positive");
    if (d < 1 || d > 3) throw ConfigurationError("lattice dimension must be 1, 2 or 3");
    if (drift_.empty() || vol_.empty()) throw ConfigurationError("control grids must be nonempty");
    for (double a : drift_)
        if (std::abs(a) > L * (1 + 1e-12)) throw ConfigurationError("drift level outside [-L, L]");
    for (double b : vol_)
        if (b < 0.0 || b > L * (1 + 1e-12)) throw ConfigurationError("diffusion level outside [0, L]");
    int per_axis = static_cast<int>(drift_.size() * vol_.size());
    controls_ = 1;
    for (int a = 0; a < d; ++a) controls_ *= per_axis;
}

void LatticeModel::control(int c, double* alpha, double* beta) const {
    int per_axis = static_cast<int>(drift_.size() * vol_.size());
    for (int a = 0; a < d_; ++a) {
        int j = c % per_axis;
        c /= per_axis;
        alpha[a] = drift_[j / vol_.size()];
        beta[a] = vol_[j % vol_.size()];
    }
}

void LatticeModel::increment_parts(int c, int b, double* drift, double* martingale) const {
    std::vector<double> al(d_), be(d_);
    control(c, al.data(), be.data());
    double h = step(), sh = std::sqrt(h);
    for (int a = 0; a < d_; ++a) {
        double sign = (b >> a) & 1 ? -1.0 : 1.0;
        drift[a] = al[a] * h;
        martingale[a] = sign * be[a] * sh;
    }
}

void LatticeModel::increment(int c, int b, double* out) const {
    std::vector<double> dr(d_), ma(d_);
    increment_parts(c, b, dr.data(), ma.data());
    for (int a = 0; a < d_; ++a) out[a] = dr[a] + ma[a];
}

std::string LatticeModel::control_label(int c) const {
    std::vector<double> al(d_), be(d_);
    control(c, al.data(), be.data());
    std::string s;
    char buf[64];
    for (int a = 0; a < d_; ++a) {
        std::snprintf(buf, sizeof buf, "%s(%g,%g)", a ? "," : "", al[a], be[a]);
        s += buf;
    }
    return s;
}

LatticeModel build_lattice(double L, double T, int N, int d, const LatticeOptions& opt) {
    std::vector<double> drift = opt.drift_levels.empty() ? std::vector<double>{-L, 0.0, L} : opt.drift_levels;
    std::vector<double> vol = opt.vol_levels.empty() ? std::vector<double>{0.0, 0.5 * L, L} : opt.vol_levels;
    if (opt.exhaustive && N > opt.depth_cap)
        throw ConfigurationError("lattice depth " + std::to_string(N) + " exceeds the exhaustive cap " +
                                 std::to_string(opt.depth_cap));
    return LatticeModel(L, T, N, d, drift, vol, opt.depth_cap);
}

// ------------------------------------------------------------------ payoffs

PayoffOnTree tree_payoff(const std::string& name, double constant) {
    PayoffOnTree f;
    f.name = name;
    if (name == "constant") {
        f.dependence = Dependence::Markov;
        f.value = [constant](const NodeView&) { return constant; };
    } else if (name == "B_T") {
        f.dependence = Dependence::Markov;
        f.value = [](const NodeView& v) { return v.current()[0]; };
    } else if (name == "B_T^2") {
        f.dependence = Dependence::Markov;
        f.value = [](const NodeView& v) { return norm2(v.current()); };
    } else if (name == "abs-B_T") {
        f.dependence = Dependence::Markov;
        f.value = [](const NodeView& v) { return std::sqrt(norm2(v.current())); };
    } else if (name == "max-B") {
        f.value = [](const NodeView& v) {
            double m = 0.0;
            for (int j = 0; j <= v.k; ++j) m = std::max(m, v.at(j)[0]);
            return m;
        };
    } else if (name == "mean-B") {
        f.value = [](const NodeView& v) {
            if (v.k == 0) return 0.0;
            double s = 0.0;
            for (int j = 0; j < v.k; ++j) s += 0.5 * (v.at(j)[0] + v.at(j + 1)[0]);
            return s / v.k;
        };
    } else {
        throw ConfigurationError("unknown tree payoff: " + name);
    }
    return f;
}

PayoffOnTree payoff_sum(const PayoffOnTree& f, const PayoffOnTree& g) {
    PayoffOnTree h;
    h.name = f.name + "+" + g.name;
    h.dependence = f.dependence == Dependence::Markov && g.dependence == Dependence::Markov ? Dependence::Markov
                                                                                             : Dependence::Path;
    h.adapted = f.adapted && g.adapted;
    h.value = [a = f.value, b = g.value](const NodeView& v) { return a(v) + b(v); };
    return h;
}

PayoffOnTree payoff_scaled(const PayoffOnTree& f, double c) {
    PayoffOnTree h = f;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g*", c);
    h.name = buf + f.name;
    h.value = [a = f.value, c](const NodeView& v) { return c * a(v); };
    return h;
}

const char* to_string(Mode m) { return m == Mode::Sup ? "sup" : "inf"; }

// ------------------------------------------------------------------ engine

std::string TreeSolution::history(int layer, int index) const {
    std::vector<std::string> parts;
    while (layer > 0) {
        const TreeNode& n = layers[layer][index];
        const TreeNode& parent = layers[layer - 1][n.parent];
        int d = static_cast<int>(parent.path.size()) / layer;
        std::string s = "c" + std::to_string(n.via_control);
        for (int a = 0; a < d; ++a) s += (n.via_branch >> a) & 1 ? '-' : '+';
        parts.push_back(s);
        index = n.parent;
        --layer;
    }
    std::reverse(parts.begin(), parts.end());
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "." : "") + parts[i];
    return out.empty() ? "root" : out;
}

TreeSolution solve_tree(const LatticeModel& model, const PayoffOnTree& payoff, const TreeOptions& opt) {
    if (!payoff.adapted) throw ConfigurationError("payoff " + payoff.name + " is not adapted");
    if (!payoff.value) throw ConfigurationError("payoff " + payoff.name + " has no evaluator");
    const int N = model.steps(), d = model.dim();
    const bool markov = payoff.dependence == Dependence::Markov;
    if (!markov && N > model.depth_cap())
        throw ConfigurationError("path payoff on " + std::to_string(N) + " steps exceeds the depth cap " +
                                 std::to_string(model.depth_cap()));
    const int C = model.controls(), Bn = model.branches();
    std::vector<double> inc(static_cast<std::size_t>(C) * Bn * d);
    for (int c = 0; c < C; ++c)
        for (int b = 0; b < Bn; ++b) model.increment(c, b, inc.data() + (static_cast<std::size_t>(c) * Bn + b) * d);

    TreeSolution sol;
    sol.layers.resize(N + 1);
    TreeNode root;
    root.path.assign(d, 0.0);
    sol.layers[0].push_back(std::move(root));
    auto absorbed = [&](int k, std::span<const double> x) {
        if (k == N) return true;
        double t = model.time(k);
        return t >= opt.delta - 1e-12 * std::max(1.0, model.horizon()) || std::sqrt(norm2(x)) >= opt.delta;
    };
    long states = 1;
    for (int k = 0; k <= N; ++k) {
        auto& layer = sol.layers[k];
        for (auto& node : layer) node.absorbed = absorbed(k, std::span<const double>(node.path).subspan(
                                                                 static_cast<std::size_t>(k) * d, d));
        if (k == N) break;
        std::map<std::vector<long long>, int> index;
        auto& next = sol.layers[k + 1];
        for (std::size_t i = 0; i < layer.size(); ++i) {
            TreeNode& node = layer[i];
            if (node.absorbed) continue;
            node.children.assign(static_cast<std::size_t>(C) * Bn, -1);
            for (int c = 0; c < C; ++c)
                for (int b = 0; b < Bn; ++b) {
                    std::vector<double> path(node.path);
                    const double* dx = inc.data() + (static_cast<std::size_t>(c) * Bn + b) * d;
                    for (int a = 0; a < d; ++a) path.push_back(node.path[static_cast<std::size_t>(k) * d + a] + dx[a]);
                    std::vector<long long> key;
                    std::size_t from = markov ? static_cast<std::size_t>(k + 1) * d : 0;
                    for (std::size_t j = from; j < path.size(); ++j)
                        key.push_back(std::llround(path[j] / kKeyQuantum));
                    auto [it, inserted] = index.emplace(std::move(key), static_cast<int>(next.size()));
                    if (inserted) {
                        TreeNode child;
                        child.parent = static_cast<int>(i);
                        child.via_control = c;
                        child.via_branch = b;
                        child.path = std::move(path);
                        next.push_back(std::move(child));
                        if (++states > opt.max_states)
                            throw ConfigurationError("lattice state count exceeds " + std::to_string(opt.max_states));
                    }
                    node.children[static_cast<std::size_t>(c) * Bn + b] = it->second;
                }
        }
    }
    sol.states = states;

    for (int k = N; k >= 0; --k) {
        auto& layer = sol.layers[k];
        const auto* next = k < N ? &sol.layers[k + 1] : nullptr;
        parallel_for(layer.size(), opt.jobs, [&](std::size_t i) {
            TreeNode& node = layer[i];
            node.payoff = payoff.value(NodeView{k, model.time(k), d, node.path});
            if (node.absorbed) {
                node.value = node.continuation = node.payoff;
                node.stop = true;
                return;
            }
            double best = 0.0;
            for (int c = 0; c < C; ++c) {
                double e = 0.0;
                for (int b = 0; b < Bn; ++b) e += (*next)[node.children[static_cast<std::size_t>(c) * Bn + b]].value;
                e /= Bn;
                bool take = node.best_control < 0 || (opt.mode == Mode::Sup ? e > best : e < best);
                if (take) {
                    best = e;
                    node.best_control = c;
                }
            }
            node.continuation = best;
            switch (opt.stopping) {
            case Stopping::None:
                node.value = best;
                node.stop = false;
                break;
            case Stopping::Max:
                node.value = std::max(node.payoff, best);
                node.stop = node.payoff >= best;
                break;
            case Stopping::Min:
                node.value = std::min(node.payoff, best);
                node.stop = node.payoff <= best;
                break;
            }
        });
    }
    sol.value = sol.layers[0][0].value;
    return sol;
}

double sup_expectation(const LatticeModel& model, const PayoffOnTree& payoff, Mode mode, double delta, int jobs) {
    TreeOptions opt;
    opt.mode = mode;
    opt.delta = delta;
    opt.jobs = jobs;
    return solve_tree(model, payoff, opt).value;
}

double strategy_expectation(const LatticeModel& model, const TreeSolution& sol, const PayoffOnTree& f) {
    const int N = model.steps(), d = model.dim(), Bn = model.branches();
    std::vector<double> below;
    for (int k = N; k >= 0; --k) {
        const auto& layer = sol.layers[k];
        std::vector<double> here(layer.size());
        for (std::size_t i = 0; i < layer.size(); ++i) {
            const TreeNode& node = layer[i];
            if (node.absorbed) {
                here[i] = f.value(NodeView{k, model.time(k), d, node.path});
                continue;
            }
            double e = 0.0;
            for (int b = 0; b < Bn; ++b) e += below[node.children[static_cast<std::size_t>(node.best_control) * Bn + b]];
            here[i] = e / Bn;
        }
        below = std::move(here);
    }
    return below[0];
}

double hitting_time(double delta, std::span<const double> path, int d, double step, double horizon) {
    if (!(delta > 0.0)) throw DomainError("localization radius must be positive");
    int n = static_cast<int>(path.size()) / d;
    for (int k = 0; k < n; ++k)
        if (std::sqrt(norm2(path.subspan(static_cast<std::size_t>(k) * d, d))) >= delta)
            return std::min({delta, k * step, horizon});
    return std::min(delta, horizon);
}

double absorption_time(double delta, std::span<const double> path, int d, double step, double horizon) {
    int n = static_cast<int>(path.size()) / d;
    for (int k = 0; k < n; ++k) {
        double t = std::min(k * step, horizon);
        if (t >= delta - 1e-12 * std::max(1.0, horizon) ||
            std::sqrt(norm2(path.subspan(static_cast<std::size_t>(k) * d, d))) >= delta)
            return t;
    }
    return std::min((n - 1) * step, horizon);
}

MomentReport moment_check(const LatticeModel& model, double delta, int jobs) {
    MomentReport rep;
    rep.delta = delta;
    const double L = model.bound(), T = model.horizon();
    const int d = model.dim();
    rep.drift_constant = L;
    rep.second_constant = 2.0 * L * L * (T + 1.0);
    TreeOptions opt;
    opt.delta = delta;
    opt.jobs = jobs;

    // Directions for |E B_H|: the axes (exact for d = 1) and the diagonals.
    std::vector<std::vector<double>> dirs;
    for (int a = 0; a < d; ++a)
        for (double s : {1.0, -1.0}) {
            std::vector<double> e(d, 0.0);
            e[a] = s;
            dirs.push_back(e);
        }
    if (d > 1)
        for (int mask = 0; mask < (1 << d); ++mask) {
            std::vector<double> e(d);
            for (int a = 0; a < d; ++a) e[a] = ((mask >> a) & 1 ? -1.0 : 1.0) / std::sqrt(double(d));
            dirs.push_back(e);
        }
    PayoffOnTree H;
    H.name = "H";
    H.dependence = Dependence::Markov;
    H.value = [](const NodeView& v) { return v.t; };
    double scale = 1.0 + L * (T + 1.0) * (1.0 + L * (T + 1.0));
    double tol = 1e-12 * scale;
    rep.worst_drift_excess = -std::numeric_limits<double>::infinity();
    std::string drift_witness;
    for (const auto& e : dirs) {
        PayoffOnTree f;
        f.name = "drift-excess";
        f.dependence = Dependence::Markov;
        f.value = [e, L](const NodeView& v) {
            double s = 0.0;
            for (std::size_t a = 0; a < e.size(); ++a) s += e[a] * v.current()[a];
            return s - L * v.t;
        };
        TreeSolution sol = solve_tree(model, f, opt);
        if (sol.value > rep.worst_drift_excess) {
            rep.worst_drift_excess = sol.value;
            PayoffOnTree B = tree_payoff("B_T");
            rep.sup_mean_B = strategy_expectation(model, sol, B);
            rep.sup_mean_H = strategy_expectation(model, sol, H);
            drift_witness = strategy_dump(model, sol, 2);
        }
    }
    PayoffOnTree g;
    g.name = "second-excess";
    g.dependence = Dependence::Markov;
    double c2 = rep.second_constant;
    g.value = [c2](const NodeView& v) { return norm2(v.current()) - c2 * v.t; };
    TreeSolution sol2 = solve_tree(model, g, opt);
    rep.worst_second_excess = sol2.value;
    rep.sup_second = strategy_expectation(model, sol2, tree_payoff("B_T^2"));
    bool drift_ok = rep.worst_drift_excess <= tol;
    bool second_ok = rep.worst_second_excess <= tol;
    rep.pass = drift_ok && second_ok;
    if (!drift_ok) rep.witness = drift_witness;
    else if (!second_ok) rep.witness = strategy_dump(model, sol2, 2);
    return rep;
}

// ------------------------------------------------------------------ Monte Carlo

McEstimate sup_expectation_mc(const LatticeModel& model, const PayoffOnTree& payoff, Mode mode, int strategies,
                              long paths, std::uint64_t seed, int jobs) {
    const int N = model.steps(), d = model.dim(), C = model.controls(), Bn = model.branches();
    int buckets = 1;
    for (int a = 0; a < d; ++a) buckets *= 3;
    int S = std::max(strategies, C);
    // Strategy s: control table indexed by (step, sign bucket of the position).
    std::vector<std::vector<int>> table(S, std::vector<int>(static_cast<std::size_t>(N) * buckets));
    for (int s = 0; s < S; ++s) {
        if (s < C) {
            std::fill(table[s].begin(), table[s].end(), s);
            continue;
        }
        Rng rng = make_rng(seed, 1'000'000 + s);
        std::uniform_int_distribution<int> U(0, C - 1);
        for (auto& c : table[s]) c = U(rng);
    }
    auto bucket_of = [&](std::span<const double> x) {
        int b = 0, m = 1;
        for (int a = 0; a < d; ++a) {
            int s = x[a] > 1e-12 ? 2 : (x[a] < -1e-12 ? 0 : 1);
            b += s * m;
            m *= 3;
        }
        return b;
    };
    auto run = [&](int s, std::uint64_t stream, double* mean, double* se) {
        Rng rng = make_rng(seed, stream);
        std::uniform_int_distribution<int> branch(0, Bn - 1);
        std::vector<double> path, dx(d);
        double sum = 0.0, sq = 0.0;
        for (long i = 0; i < paths; ++i) {
            path.assign(d, 0.0);
            for (int k = 0; k < N; ++k) {
                std::span<const double> x(path.data() + static_cast<std::size_t>(k) * d, d);
                int c = table[s][static_cast<std::size_t>(k) * buckets + bucket_of(x)];
                model.increment(c, branch(rng), dx.data());
                for (int a = 0; a < d; ++a) path.push_back(path[static_cast<std::size_t>(k) * d + a] + dx[a]);
            }
            double v = payoff.value(NodeView{N, model.horizon(), d, path});
            sum += v;
            sq += v * v;
        }
        *mean = sum / paths;
        double var = std::max(0.0, sq / paths - *mean * *mean);
        *se = std::sqrt(var / std::max<long>(1, paths - 1));
    };
    std::vector<double> means(S), ses(S);
    parallel_for(static_cast<std::size_t>(S), jobs, [&](std::size_t s) { run(static_cast<int>(s), 7, &means[s], &ses[s]); });
    int best = 0;
    for (int s = 1; s < S; ++s)
        if (mode == Mode::Sup ? means[s] > means[best] : means[s] < means[best]) best = s;
    McEstimate est;
    run(best, 8, &est.value, &est.std_error);
    est.lower_bound = mode == Mode::Sup;
    est.strategies = S;
    est.paths = paths;
    return est;
}

// ------------------------------------------------------------------ dumps

std::string lattice_dump(const LatticeModel& model) {
    nlohmann::json j;
    j["L"] = model.bound();
    j["T"] = model.horizon();
    j["N"] = model.steps();
    j["d"] = model.dim();
    j["h"] = model.step();
    j["drift_levels"] = model.drift_levels();
    j["vol_levels"] = model.vol_levels();
    j["controls"] = model.controls();
    j["branches"] = model.branches();
    j["scenarios"] = model.scenarios();
    j["depth_cap"] = model.depth_cap();
    nlohmann::json inc = nlohmann::json::array();
    std::vector<double> dr(model.dim()), ma(model.dim());
    for (int c = 0; c < model.controls(); ++c)
        for (int b = 0; b < model.branches(); ++b) {
            model.increment_parts(c, b, dr.data(), ma.data());
            std::string br;
            for (int a = 0; a < model.dim(); ++a) br += (b >> a) & 1 ? '-' : '+';
            inc.push_back({{"control", c}, {"label", model.control_label(c)}, {"branch", br}, {"drift", dr},
                           {"martingale", ma}});
        }
    j["increments"] = inc;
    return j.dump(2);
}

std::string strategy_dump(const LatticeModel& model, const TreeSolution& sol, int max_depth) {
    nlohmann::json nodes = nlohmann::json::array();
    std::vector<int> frontier{0};
    const int Bn = model.branches();
    for (int k = 0; k <= std::min(max_depth, model.steps()) && !frontier.empty(); ++k) {
        std::vector<int> next;
        for (int i : frontier) {
            const TreeNode& n = sol.layers[k][i];
            nlohmann::json e{{"history", sol.history(k, i)}, {"k", k}, {"t", model.time(k)}, {"value", n.value},
                             {"payoff", n.payoff}, {"absorbed", n.absorbed}, {"stop", n.stop}};
            if (n.best_control >= 0) {
                e["control"] = n.best_control;
                e["label"] = model.control_label(n.best_control);
                for (int b = 0; b < Bn; ++b) {
                    int c = n.children[static_cast<std::size_t>(n.best_control) * Bn + b];
                    if (std::find(next.begin(), next.end(), c) == next.end()) next.push_back(c);
                }
            }
            nodes.push_back(e);
        }
        frontier = std::move(next);
    }
    nlohmann::json j{{"value", sol.value}, {"states", sol.states}, {"nodes", nodes}};
    return j.dump(2);
}

}  // namespace ppde
