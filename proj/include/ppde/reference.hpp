#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ppde/nonlinear_expectation.hpp"
#include "ppde/rng.hpp"

namespace ppde::reference {

using ppde::LatticeModel;
using ppde::NodeView;
using ppde::PayoffOnTree;

inline bool lattice_absorbed(const LatticeModel& m, int k, const std::vector<double>& path, double delta) {
    if (k == m.steps()) return true;
    double r = 0.0;
    for (int a = 0; a < m.dim(); ++a) r += path[k * m.dim() + a] * path[k * m.dim() + a];
    return m.time(k) >= delta - 1e-12 * std::max(1.0, m.horizon()) || std::sqrt(r) >= delta;
}

// Plain recursion over the full non-recombining tree.
inline double brute_force(const LatticeModel& m, const PayoffOnTree& f, bool sup, double delta,
                          std::vector<double>& path, int k) {
    NodeView v{k, m.time(k), m.dim(), path};
    if (lattice_absorbed(m, k, path, delta)) return f.value(v);
    double best = sup ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    std::vector<double> dx(m.dim());
    for (int c = 0; c < m.controls(); ++c) {
        double e = 0.0;
        for (int b = 0; b < m.branches(); ++b) {
            m.increment(c, b, dx.data());
            for (int a = 0; a < m.dim(); ++a) path.push_back(path[k * m.dim() + a] + dx[a]);
            e += brute_force(m, f, sup, delta, path, k + 1);
            path.resize(path.size() - m.dim());
        }
        e /= m.branches();
        best = sup ? std::max(best, e) : std::min(best, e);
    }
    return best;
}

inline double brute_force(const LatticeModel& m, const PayoffOnTree& f, bool sup,
                          double delta = std::numeric_limits<double>::infinity()) {
    std::vector<double> path(m.dim(), 0.0);
    return brute_force(m, f, sup, delta, path, 0);
}

// Literal enumeration: every assignment of (control, stop flag) to every
// non-absorbed node of the full tree is a strategy; each is evaluated by a
// linear expectation. Feasible only for tiny trees.
struct Enumeration {
    double best = -std::numeric_limits<double>::infinity();
    double worst = std::numeric_limits<double>::infinity();
    long strategies = 0;
};

inline Enumeration enumerate_strategies(const LatticeModel& m, const PayoffOnTree& f, bool with_stopping,
                                        double delta = std::numeric_limits<double>::infinity()) {
    // Collect internal nodes in preorder.
    struct Node {
        std::vector<double> path;
        int k;
        std::vector<int> child;   // controls*branches
        bool leaf;
        double payoff;
    };
    std::vector<Node> nodes;
    std::function<int(std::vector<double>, int)> build = [&](std::vector<double> path, int k) {
        int id = static_cast<int>(nodes.size());
        nodes.push_back({path, k, {}, lattice_absorbed(m, k, path, delta), 0.0});
        nodes[id].payoff = f.value(NodeView{k, m.time(k), m.dim(), nodes[id].path});
        if (nodes[id].leaf) return id;
        std::vector<int> ch;
        std::vector<double> dx(m.dim());
        for (int c = 0; c < m.controls(); ++c)
            for (int b = 0; b < m.branches(); ++b) {
                m.increment(c, b, dx.data());
                std::vector<double> p = path;
                for (int a = 0; a < m.dim(); ++a) p.push_back(path[k * m.dim() + a] + dx[a]);
                ch.push_back(build(p, k + 1));
            }
        nodes[id].child = ch;
        return id;
    };
    build(std::vector<double>(m.dim(), 0.0), 0);
    std::vector<int> internal;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
        if (!nodes[i].leaf) internal.push_back(i);
    int choices = m.controls() * (with_stopping ? 2 : 1);
    std::vector<int> pick(nodes.size(), 0);
    Enumeration out;
    std::function<double(int)> eval = [&](int i) -> double {
        const Node& n = nodes[i];
        if (n.leaf) return n.payoff;
        int c = pick[i] % m.controls();
        if (with_stopping && pick[i] / m.controls() == 1) return n.payoff;
        double e = 0.0;
        for (int b = 0; b < m.branches(); ++b) e += eval(n.child[c * m.branches() + b]);
        return e / m.branches();
    };
    for (;;) {
        double v = eval(0);
        out.best = std::max(out.best, v);
        out.worst = std::min(out.worst, v);
        ++out.strategies;
        std::size_t j = 0;
        for (; j < internal.size(); ++j) {
            int& p = pick[internal[j]];
            if (++p < choices) break;
            p = 0;
        }
        if (j == internal.size()) break;
    }
    return out;
}

// Every stopping rule (one stop flag per internal node of the full tree) is
// evaluated by exact recursion over controls; returns the best value over
// rules of the sup (or inf) expectation of the stopped payoff.
inline double best_stopping_rule(const LatticeModel& m, const PayoffOnTree& f, bool sup,
                                 double delta = std::numeric_limits<double>::infinity()) {
    struct Node {
        std::vector<int> child;
        bool leaf;
        double payoff;
        int slot;
    };
    std::vector<Node> nodes;
    int internal = 0;
    std::function<int(std::vector<double>, int)> build = [&](std::vector<double> path, int k) {
        int id = static_cast<int>(nodes.size());
        bool leaf = lattice_absorbed(m, k, path, delta);
        nodes.push_back({{}, leaf, f.value(NodeView{k, m.time(k), m.dim(), path}), leaf ? -1 : internal++});
        if (leaf) return id;
        std::vector<int> ch;
        std::vector<double> dx(m.dim());
        for (int c = 0; c < m.controls(); ++c)
            for (int b = 0; b < m.branches(); ++b) {
                m.increment(c, b, dx.data());
                std::vector<double> p = path;
                for (int a = 0; a < m.dim(); ++a) p.push_back(path[k * m.dim() + a] + dx[a]);
                ch.push_back(build(p, k + 1));
            }
        nodes[id].child = ch;
        return id;
    };
    build(std::vector<double>(m.dim(), 0.0), 0);
    if (internal > 24) throw std::runtime_error("too many stopping rules to enumerate");
    double best = sup ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < (1ULL << internal); ++mask) {
        std::function<double(int)> eval = [&](int i) -> double {
            const Node& n = nodes[i];
            if (n.leaf || ((mask >> n.slot) & 1)) return n.payoff;
            double v = sup ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
            for (int c = 0; c < m.controls(); ++c) {
                double e = 0.0;
                for (int b = 0; b < m.branches(); ++b) e += eval(n.child[c * m.branches() + b]);
                e /= m.branches();
                v = sup ? std::max(v, e) : std::min(v, e);
            }
            return v;
        };
        double v = eval(0);
        best = sup ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

// Payoff with independent uniform values per node history.
inline PayoffOnTree random_payoff(std::uint64_t seed, double scale = 1.0) {
    PayoffOnTree f;
    f.name = "random";
    f.dependence = ppde::Dependence::Path;
    f.value = [seed, scale](const NodeView& v) {
        std::uint64_t h = seed;
        for (int j = 0; j <= v.k * v.d + v.d - 1; ++j)
            h = ppde::splitmix64(h ^ static_cast<std::uint64_t>(std::llround(v.path[j] * 1e9)) ^ (j * 0x51ULL));
        return scale * (static_cast<double>(h >> 11) / 9007199254740992.0 - 0.5);
    };
    return f;
}

}  // namespace ppde::reference
