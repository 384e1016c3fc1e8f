#include "ppde/functional.hpp"

#include <cmath>
#include <sstream>

namespace ppde {

double Modulus::operator()(double x) const {
    if (x <= 0.0) return 0.0;
    return family == Family::Linear ? K * x : K * std::pow(x, exponent);
}

std::string Modulus::describe() const {
    std::ostringstream os;
    if (family == Family::Linear)
        os << "linear(K=" << K << ")";
    else
        os << "power(K=" << K << ",exponent=" << exponent << ")";
    return os.str();
}

double Functional::at(double t, std::span<const double> x) const {
    if (!markov) throw ConfigurationError(name + " depends on the whole path");
    return markov(t, x);
}

Functional make_markov(std::string name, std::function<double(double, std::span<const double>)> f,
                       double bound, Modulus modulus, bool estimated) {
    Functional u;
    u.name = std::move(name);
    u.markov = f;
    u.eval = [f](const PointInTheta& th) { return f(th.t, th.current()); };
    u.bound = bound;
    u.bound_estimated = estimated;
    u.modulus = modulus;
    return u;
}

Functional make_path_functional(std::string name, std::function<double(const PointInTheta&)> f,
                                double bound, Modulus modulus, bool estimated) {
    Functional u;
    u.name = std::move(name);
    u.eval = std::move(f);
    u.bound = bound;
    u.bound_estimated = estimated;
    u.modulus = modulus;
    return u;
}

Functional constant_functional(double c) {
    return make_markov("constant", [c](double, std::span<const double>) { return c; }, std::abs(c),
                       Modulus::linear(0.0));
}

Functional shift(const Functional& f, const PointInTheta& theta) {
    Functional g = f;
    g.name = f.name + "@shift";
    PointInTheta base = theta;
    g.eval = [f, base](const PointInTheta& th) {
        DiscretePath joined = concat(base.path, base.t, th.path);
        return f(PointInTheta(base.t + th.t, joined));
    };
    if (f.markov) {
        std::vector<double> x0(theta.current().begin(), theta.current().end());
        double t0 = theta.t;
        auto inner = f.markov;
        g.markov = [inner, x0, t0](double t, std::span<const double> x) {
            std::vector<double> y(x0);
            for (std::size_t a = 0; a < y.size(); ++a) y[a] += x[a];
            return inner(t0 + t, y);
        };
    }
    return g;
}

namespace {

double sq(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

// (1/T) * integral of the stopped path over [0, T], first axis.
double running_mean(const PointInTheta& th) {
    const auto& p = th.path;
    double h = p.grid().step(), acc = 0.0;
    for (int k = 0; k < p.grid().cells(); ++k) acc += 0.5 * h * (p.at(k) + p.at(k + 1));
    return acc / p.grid().horizon();
}

}  // namespace

std::vector<std::string> catalog_names() {
    return {"constant", "time",   "terminal-tanh",   "running-mean-tanh", "norm-sin",        "time-cos",
            "linear",   "heat",   "quadratic-drift", "drifting-minus-t",  "minus-t-squared"};
}

Functional catalog_functional(const std::string& name, const CatalogOptions& opt) {
    double T = opt.horizon, R = opt.radius;
    if (name == "constant") return constant_functional(opt.constant);
    if (name == "time")
        return make_markov(name, [](double t, std::span<const double>) { return t; }, T, Modulus::linear(1.0));
    if (name == "terminal-tanh")
        return make_markov(name, [](double, std::span<const double> x) { return std::tanh(x[0]); }, 1.0,
                           Modulus::linear(1.0));
    if (name == "time-cos")
        return make_markov(
            name, [](double t, std::span<const double> x) { return 0.5 * std::cos(t) + 0.5 * std::tanh(x[0]); },
            1.0, Modulus::linear(1.0));
    if (name == "running-mean-tanh")
        return make_path_functional(
            name, [](const PointInTheta& th) { return std::tanh(running_mean(th)); }, 1.0,
            Modulus::linear(std::pow(T, -1.0 / opt.p)));
    if (name == "norm-sin") {
        double q = opt.p;
        return make_path_functional(
            name, [q](const PointInTheta& th) { return std::sin(path_norm(th.path, q)); }, 1.0, Modulus::linear(1.0));
    }
    if (name == "linear")
        return make_markov(name, [](double, std::span<const double> x) { return x[0]; }, R, Modulus::linear(1.0),
                           true);
    if (name == "heat")
        return make_markov(
            name, [](double t, std::span<const double> x) { return sq(x) - static_cast<double>(x.size()) * t; },
            R * R + T, Modulus::linear(2.0 * R + 1.0), true);
    if (name == "quadratic-drift") {
        double v2 = opt.max_vol * opt.max_vol;
        return make_markov(
            name,
            [v2, T](double t, std::span<const double> x) { return sq(x) + v2 * static_cast<double>(x.size()) * (T - t); },
            R * R + v2 * T, Modulus::linear(2.0 * R + v2), true);
    }
    if (name == "drifting-minus-t")
        return make_markov(name, [](double t, std::span<const double>) { return -t; }, T, Modulus::linear(1.0));
    if (name == "minus-t-squared")
        return make_markov(name, [](double t, std::span<const double>) { return -t * t; }, T * T,
                           Modulus::linear(2.0 * T));
    throw ConfigurationError("unknown functional '" + name + "'");
}

}  // namespace ppde
