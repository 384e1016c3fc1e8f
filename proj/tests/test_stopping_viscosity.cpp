#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ppde/stopping_viscosity.hpp"
#include "support.hpp"

using namespace ppde;

namespace {

LatticeModel reduced(int N, double T = 1.0) {
    LatticeOptions o;
    o.drift_levels = {-1.0, 1.0};
    o.vol_levels = {1.0};
    return build_lattice(1.0, T, N, 1, o);
}

PayoffOnTree markov_payoff(std::function<double(double, double)> f) {
    PayoffOnTree X;
    X.dependence = Dependence::Markov;
    X.value = [f](const NodeView& v) { return f(v.t, v.current()[0]); };
    return X;
}

PointInTheta ramp_point(const Grid& g, double t, double x) {
    int k = g.index_of(t);
    std::vector<double> v(g.cells() + 1, 0.0);
    for (int j = 0; j <= g.cells(); ++j) v[j] = k == 0 ? 0.0 : x * std::min(j, k) / k;
    return PointInTheta(t, DiscretePath(g, 1, v, k));
}

}  // namespace

TEST_CASE("paraboloid") {
    Paraboloid p = Paraboloid::scalar(2.0, -1.0, 4.0);
    double x = 0.5;
    CHECK(p(0.25, std::span<const double>(&x, 1)) == doctest::Approx(0.5 - 0.5 + 0.5));
    CHECK_THROWS_AS(Paraboloid(0.0, {0.0, 0.0}, {1.0, 0.5, 0.5 + 1e-9, 1.0}), DomainError);
    CHECK_NOTHROW(Paraboloid(0.0, {0.0, 0.0}, {1.0, 0.5, 0.5 + 1e-13, 1.0}));
    CHECK_THROWS_AS(Paraboloid(0.0, {0.0}, {1.0, 2.0}), ConfigurationError);
}

TEST_CASE("snell envelope examples") {
    LatticeModel m = build_lattice(1.0, 1.0, 4, 1);
    SnellResult dec = snell_envelope(m, markov_payoff([](double t, double) { return -t; }), 10.0);
    CHECK(dec.value == 0.0);
    CHECK(dec.tau_max == 0.0);

    LatticeModel flat = build_lattice(0.0, 1.0, 4, 1);
    SnellResult lin = snell_envelope(flat, markov_payoff([](double t, double) { return t; }), 0.5);
    CHECK(lin.value == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(lin.tau_min == doctest::Approx(0.5));
    CHECK(lin.tau_max == doctest::Approx(0.5));
    CHECK_THROWS_AS(snell_envelope(flat, markov_payoff([](double t, double) { return t; }), 0.0), DomainError);
}

TEST_CASE("snell envelope equals stopping-rule enumeration") {
    for (int N : {1, 2}) {
        LatticeModel small = reduced(N);
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            PayoffOnTree f = oracles::random_payoff(seed * 7 + N);
            auto e = oracles::enumerate_strategies(small, f, true);
            CHECK(std::abs(snell_envelope(small, f, 10.0).value - e.best) <= 1e-12);
            CHECK(std::abs(snell_envelope(small, f, 10.0, Mode::Inf).value - e.worst) <= 1e-12);
            auto loc = oracles::enumerate_strategies(small, f, true, 0.6);
            CHECK(std::abs(snell_envelope(small, f, 0.6).value - loc.best) <= 1e-12);
        }
    }
    for (int N : {1, 2, 3}) {
        LatticeModel small = reduced(N);
        PayoffOnTree f = oracles::random_payoff(100 + N);
        CHECK(std::abs(snell_envelope(small, f, 10.0).value - oracles::best_stopping_rule(small, f, true)) <= 1e-12);
        CHECK(std::abs(snell_envelope(small, f, 10.0, Mode::Inf).value -
                       oracles::best_stopping_rule(small, f, false)) <= 1e-12);
    }
    LatticeModel full = build_lattice(1.0, 1.0, 2, 1);
    PayoffOnTree g = oracles::random_payoff(77);
    CHECK(std::abs(snell_envelope(full, g, 10.0).value - oracles::best_stopping_rule(full, g, true)) <= 1e-12);
    // Envelope dominates the payoff and equals it on the stopping region.
    LatticeModel m = build_lattice(1.0, 1.0, 5, 1);
    PayoffOnTree f = oracles::random_payoff(42);
    SnellResult r = snell_envelope(m, f, 0.8);
    CHECK(std::abs(r.rule_value - r.value) <= 1e-12);
    for (const auto& layer : r.tree.layers)
        for (const auto& n : layer) {
            CHECK(n.value >= n.payoff);
            if (n.stop) CHECK(n.value == n.payoff);
        }
}

TEST_CASE("contact point examples") {
    const double delta = 0.5;
    LatticeModel flat = build_lattice(0.0, 1.0, 8, 1);
    Paraboloid phi = Paraboloid::scalar(0.3, 0.2, -1.0);
    Functional same = make_markov(
        "phi", [phi](double t, std::span<const double> x) { return phi(t, x); }, 1.0, Modulus::linear(1.0));
    LatticeModel m = build_lattice(1.0, 1.0, 8, 1);
    CHECK_FALSE(contact_point(m, same, phi, delta).point);

    Functional mts = catalog_functional("minus-t-squared");
    ContactReport none = contact_point(flat, mts, Paraboloid::scalar(-2 * delta, 0.0, 0.0), delta);
    CHECK_FALSE(none.strict_gap);
    CHECK(none.terminal_expectation == doctest::Approx(0.25));
    CHECK_FALSE(none.point);

    Functional mt = catalog_functional("drifting-minus-t");
    ContactReport c = contact_point(flat, mt, Paraboloid::scalar(0.0, 0.0, 0.0), delta);
    REQUIRE(c.point);
    CHECK(c.point->t == 0.0);
    CHECK(c.point->jet.alpha == 0.0);
    CHECK(c.point->jet.beta[0] == 0.0);
    CHECK(c.point->jet.gamma[0] == 0.0);

    // Contact precedes localization and the shifted jet carries γ ω*.
    Functional hump = make_markov(
        "hump", [](double t, std::span<const double> x) { return 0.2 * t - t * t + 0.5 * x[0] * x[0]; }, 1.0,
        Modulus::linear(3.0));
    ContactReport b = contact_point(m, hump, Paraboloid::scalar(0.0, 0.0, 1.0), delta);
    REQUIRE(b.point);
    CHECK(b.point->t == 0.125);
    CHECK(b.point->t < delta);
    CHECK(std::abs(b.point->path.back()) < delta);
    CHECK(b.point->payoff == b.point->envelope);
    CHECK(b.point->jet.beta[0] == b.point->path.back());
}

TEST_CASE("jet membership examples") {
    const double delta = 0.5;
    LatticeModel flat = build_lattice(0.0, 0.5, 8, 1);
    LatticeModel m = build_lattice(1.0, 0.5, 8, 1);
    Grid g(1.0, 16);
    PointInTheta origin = origin_point(g);

    Paraboloid phi = Paraboloid::scalar(0.4, -0.3, 1.5);
    Functional same = make_markov(
        "phi", [phi](double t, std::span<const double> x) { return phi(t, x); }, 1.0, Modulus::linear(1.0));
    CHECK(jet_test_pl(m, same, origin, phi, delta, JetSide::Sub).member);
    CHECK(jet_test_pl(m, same, origin, phi, delta, JetSide::Super).member);

    Functional time = catalog_functional("time");
    CHECK(jet_test_pl(flat, time, origin, Paraboloid::scalar(1.0, 0.0, 0.0), delta, JetSide::Sub).member);
    JetMembership out = jet_test_pl(flat, time, origin, Paraboloid::scalar(0.0, 0.0, 0.0), delta, JetSide::Sub);
    CHECK_FALSE(out.member);
    CHECK(out.envelope == doctest::Approx(delta));

    // α-increase keeps subjet membership while τ* stays at zero.
    Functional heat = catalog_functional("heat");
    PointInTheta th = ramp_point(g, 0.25, 0.3);
    Paraboloid base = derivative_estimate(heat, th, 1e-3);
    CHECK(base.alpha == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(base.beta[0] == doctest::Approx(0.6).epsilon(1e-8));
    CHECK(base.gamma[0] == doctest::Approx(2.0).epsilon(1e-6));
    for (double eps : {0.0, 0.1, 0.5, 2.0}) {
        Paraboloid p(base.alpha + eps, base.beta, base.gamma);
        CHECK(jet_test_pl(m, heat, th, p, 0.25, JetSide::Sub).member);
    }

    // Path functionals use the lattice as the continuation of the grid path.
    Functional mean = catalog_functional("running-mean-tanh");
    LatticeModel fine = build_lattice(1.0, 4.0 / 16, 4, 1);
    Paraboloid pm = derivative_estimate(mean, th, 1e-3);
    PayoffOnTree X = jet_payoff(mean, th, pm, fine);
    std::vector<double> path(5, 0.0);
    CHECK(X.value(NodeView{0, 0.0, 1, path}) == doctest::Approx(mean(th)).epsilon(1e-14));
    CHECK_THROWS_AS(jet_payoff(mean, th, pm, build_lattice(1.0, 0.5, 4, 1)), ConfigurationError);
}

TEST_CASE("viscosity checks on the solution catalog") {
    Grid g(1.0, 16);
    std::vector<PointInTheta> pts{origin_point(g), ramp_point(g, 0.25, 0.3), ramp_point(g, 0.5, -0.5)};
    CatalogOptions opt;
    for (const CatalogCase& cc : solution_catalog()) {
        Functional u = catalog_functional(cc.functional, opt);
        Nonlinearity G = catalog_nonlinearity(cc.nonlinearity, opt);
        ViscosityConfig cfg;
        cfg.L = cc.lattice_L;
        ViscosityReport sub = visc_check(u, G, JetSide::Sub, pts, cfg);
        ViscosityReport sup = visc_check(u, G, JetSide::Super, pts, cfg);
        INFO(cc.functional << " " << sub.summary() << " | " << sup.summary());
        CHECK(sub.jets_found > 0);
        CHECK(sup.jets_found > 0);
        CHECK(sub.pass() == cc.sub_passes);
        CHECK(sup.pass() == cc.super_passes);
        if (cc.sub_witness) {
            REQUIRE(sub.witness);
            CHECK(sub.witness->jet.alpha == doctest::Approx(cc.sub_witness->alpha).epsilon(1e-6));
            CHECK(std::abs(sub.witness->jet.beta[0] - cc.sub_witness->beta[0]) <= 1e-6);
            CHECK(std::abs(sub.witness->jet.gamma[0] - cc.sub_witness->gamma[0]) <= 1e-6);
            CHECK(sub.witness->residual == doctest::Approx(1.0).epsilon(1e-6));
        }
        for (const auto& row : sub.rows) CHECK(row.delta > 0.0);
    }
}

TEST_CASE("classical jet residual") {
    auto zero = [](double, double, double, double, double) { return 0.0; };
    auto half = [](double, double, double, double, double g) { return 0.5 * g; };
    std::vector<std::pair<double, double>> pts{{0.3, 0.0}, {0.5, 0.4}, {0.7, -0.8}};
    StencilConfig cfg;
    auto nobound = [](double, double) { return 0.0; };
    FieldMap lin = [](double, std::span<const double> x) { return x[0]; };
    StencilReport a = classical_jet_residual(lin, zero, pts, cfg, nobound);
    CHECK(a.accepted == 3);
    for (const auto& r : a.rows) CHECK(std::abs(r.residual) <= 1e-10);
    FieldMap heat = [](double s, std::span<const double> x) { return x[0] * x[0] - s; };
    StencilReport b = classical_jet_residual(heat, half, pts, cfg, nobound);
    CHECK(b.accepted == 3);
    for (const auto& r : b.rows) {
        CHECK(r.alpha == doctest::Approx(-1.0));
        CHECK(r.gamma == doctest::Approx(2.0));
        CHECK(std::abs(r.residual) <= 1e-9);
    }
    // A concave kink in time has no tangent paraboloid from above.
    FieldMap kink = [](double s, std::span<const double>) { return std::abs(s - 0.5); };
    StencilReport c = classical_jet_residual(kink, zero, {{0.5, 0.0}}, cfg, nobound);
    CHECK(c.skipped == 1);
    CHECK(c.accepted == 0);
    // Smooth convexity in time stays within the stencil-scale slack.
    FieldMap convex = [](double s, std::span<const double> x) { return x[0] + 0.2 * s * s; };
    StencilReport d = classical_jet_residual(convex, zero, pts, cfg, nobound);
    CHECK(d.accepted == 3);
    for (const auto& r : d.rows) {
        CHECK(r.time_misfit > 0.0);
        CHECK(r.alpha == doctest::Approx(0.4 * r.s).epsilon(1e-9));
        CHECK(std::abs(r.gamma) <= 1e-9);
    }
}

TEST_CASE("transforms") {
    Grid g(1.0, 16);
    Nonlinearity zero = catalog_nonlinearity("zero");
    PointInTheta origin = origin_point(g);
    Nonlinearity gb = transform_gbar(zero, 1.0);
    double diff = gb.at(origin, 0.0, 0.0, 0.0) - gb.at(origin, 1.0, 0.0, 0.0);
    CHECK(diff == doctest::Approx(2.0));
    for (const char* name : {"zero", "half-laplacian", "hjb-sup-vol", "lipschitz-sin", "linear-y"}) {
        Nonlinearity G = catalog_nonlinearity(name);
        ChainReport r = gbar_chain_check(G, G.L0, 10000, 5, g);
        CHECK(r.samples == 10000);
        CHECK(r.violations == 0);
    }

    // Discount: G ≡ 0 becomes y ↦ L y, nondecreasing, and constants decay.
    Nonlinearity gt = transform_discount(zero, 1.0);
    CHECK(gt.at(origin, 2.0, 0.0, 0.0) == doctest::Approx(2.0));
    CHECK(gt.monotone_y);
    Functional c = constant_functional(0.7);
    Functional ct = transform_discount(c, 1.0);
    PointInTheta th = ramp_point(g, 0.5, 0.2);
    CHECK(ct(th) == doctest::Approx(0.7 * std::exp(-0.5)).epsilon(1e-15));
    CHECK(transform_discount(c, 0.0)(th) == c(th));

    // ũ solves the transformed equation when u solves the original one.
    Functional heat = catalog_functional("heat");
    Nonlinearity half = catalog_nonlinearity("half-laplacian");
    for (double L : {0.5, 2.0}) {
        Functional uh = transform_discount(heat, L);
        Nonlinearity Gh = transform_discount(half, L);
        Paraboloid j = derivative_estimate(uh, th, 1e-4);
        double res = -j.alpha - Gh(th, uh(th), j.beta, j.gamma);
        CHECK(std::abs(res) <= 1e-5);
    }

    // Round trip with L then −L.
    std::mt19937_64 rng(9);
    Functional tc = catalog_functional("time-cos");
    for (int i = 0; i < 100; ++i) {
        PointInTheta p(g.time(i % 17), testsupport::random_path(rng, g, 1, 1.0).stopped(i % 17));
        CHECK(std::abs(transform_discount(transform_discount(tc, 1.3), -1.3)(p) - tc(p)) <= 1e-12);
    }
}

TEST_CASE("assumption audit") {
    AuditSpec spec;
    CHECK(assumption_audit(catalog_nonlinearity("half-laplacian"), spec).pass());
    AuditReport bad = assumption_audit(catalog_nonlinearity("minus-trace"), spec);
    CHECK_FALSE(bad.pass());
    CHECK(bad.item("ellipticity").violations > 0);
    CHECK_FALSE(bad.item("ellipticity").witness.empty());
    AuditReport sn = assumption_audit(catalog_nonlinearity("lipschitz-sin"), spec);
    CHECK(sn.item("theta-continuity").violations == 0);
    CHECK(sn.item("theta-continuity").samples == spec.samples);
    CHECK(sn.pass());
    // A declared modulus that is too small is caught.
    Nonlinearity tight = catalog_nonlinearity("lipschitz-sin");
    tight.rho = Modulus::linear(0.01);
    CHECK(assumption_audit(tight, spec).item("theta-continuity").violations > 0);
    CHECK(assumption_audit(catalog_nonlinearity("hjb-sup-vol"), spec).pass());
    CHECK(assumption_audit(catalog_nonlinearity("linear-y"), spec).pass());
}

TEST_CASE("comparison experiment") {
    Functional u = catalog_functional("quadratic-drift");
    Nonlinearity G = catalog_nonlinearity("hjb-sup-vol");
    ComparisonSpec spec;
    spec.n_schedule = {4, 8};
    spec.points = 100;
    ComparisonReport same = comparison_experiment(u, u, G, spec);
    CHECK(same.pointwise_ok);
    CHECK(same.terminal_ok);
    CHECK(same.min_margin == 0.0);

    Functional v = make_markov(
        "shifted", [u](double t, std::span<const double> x) { return u.markov(t, x) + 0.1; }, u.bound + 0.1,
        u.modulus, true);
    ComparisonReport r = comparison_experiment(u, v, G, spec);
    CHECK(r.pointwise_ok);
    CHECK(r.min_margin >= 0.1 - 1e-12);
    for (const auto& row : r.rows) {
        INFO("n=" << row.n << " diff=" << row.difference << " gap=" << row.gap);
        CHECK(row.difference <= -0.1 + 2 * row.gap + 1e-12);
    }

    ComparisonReport flip = comparison_experiment(v, u, G, spec);
    CHECK_FALSE(flip.pointwise_ok);
}
