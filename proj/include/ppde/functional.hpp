#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ppde/path_space.hpp"

namespace ppde {

// Modulus of continuity: K*x (linear) or K*x^exponent (power).
struct Modulus {
    enum class Family { Linear, Power };
    Family family = Family::Linear;
    double K = 1.0;
    double exponent = 1.0;

    static Modulus linear(double k) { return {Family::Linear, k, 1.0}; }
    static Modulus power(double k, double e) { return {Family::Power, k, e}; }
    double operator()(double x) const;
    std::string describe() const;
};

// Map from Θ to the reals with a declared sup bound and modulus.
struct Functional {
    std::string name;
    std::function<double(const PointInTheta&)> eval;
    // Set when the value depends on (t, ω_t) only.
    std::function<double(double, std::span<const double>)> markov;
    double bound = 0.0;
    bool bound_estimated = false;
    Modulus modulus;
    // Width, in grid cells, of the ramp replacing each jump of a step path.
    double ramp_cells = 1.0;

    double operator()(const PointInTheta& theta) const {
        if (markov) return markov(theta.t, theta.current());
        return eval(theta);
    }
    double at(double t, std::span<const double> x) const;
    bool is_markov() const { return static_cast<bool>(markov); }
};

Functional make_markov(std::string name, std::function<double(double, std::span<const double>)> f,
                       double bound, Modulus modulus, bool estimated = false);
Functional make_path_functional(std::string name, std::function<double(const PointInTheta&)> f,
                                double bound, Modulus modulus, bool estimated = false);
Functional constant_functional(double c);

// θ' = (τ, ω') -> f(t + τ, ω ⊗_t ω').
Functional shift(const Functional& f, const PointInTheta& theta);

struct CatalogOptions {
    double horizon = 1.0;
    int p = 3;
    // Radius used for the bound of unbounded entries.
    double radius = 2.0;
    double constant = 0.5;
    double max_vol = 1.5;
};

// Names: constant, time, terminal-tanh, running-mean-tanh, norm-sin, time-cos,
// linear, heat, quadratic-drift, drifting-minus-t, minus-t-squared.
Functional catalog_functional(const std::string& name, const CatalogOptions& opt = {});
std::vector<std::string> catalog_names();

}  // namespace ppde
