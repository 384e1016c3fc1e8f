#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppde/functional.hpp"
#include "ppde/nonlinear_expectation.hpp"
#include "ppde/path_space.hpp"
#include "ppde/regularization.hpp"

namespace ppde {

// φ(s, x) = α s + β·x + ½ xᵀγx, γ stored row-major.
struct Paraboloid {
    double alpha = 0.0;
    std::vector<double> beta;
    std::vector<double> gamma;

    Paraboloid() = default;
    Paraboloid(double a, std::vector<double> b, std::vector<double> g);
    static Paraboloid scalar(double a, double b, double g) { return Paraboloid(a, {b}, {g}); }
    int dim() const { return static_cast<int>(beta.size()); }
    double operator()(double s, std::span<const double> x) const;
    std::string describe() const;
};

using GEval = std::function<double(const PointInTheta&, double, std::span<const double>, std::span<const double>)>;

struct Nonlinearity {
    std::string name;
    int dim = 1;
    GEval eval;
    double L0 = 0.0;
    Modulus rho;              // modulus in θ under d_p
    bool monotone_y = false;  // nondecreasing in y
    double vol_bound = 0.0;   // largest diffusion coefficient implied by G
    double operator()(const PointInTheta& th, double y, std::span<const double> z,
                      std::span<const double> g) const {
        return eval(th, y, z, g);
    }
    // Scalar shortcut for d = 1.
    double at(const PointInTheta& th, double y, double z, double g) const {
        return eval(th, y, std::span<const double>(&z, 1), std::span<const double>(&g, 1));
    }
};

// zero, half-laplacian, hjb-sup-vol, lipschitz-sin, linear-y, minus-trace.
Nonlinearity catalog_nonlinearity(const std::string& name, const CatalogOptions& opt = {});
std::vector<std::string> nonlinearity_names();

// ------------------------------------------------------------------ Snell

struct SnellResult {
    double value = 0.0;          // V_0
    double payoff0 = 0.0;        // X_0
    double tau_mean = 0.0;       // E[τ*] under the optimal strategy
    double tau_min = 0.0, tau_max = 0.0;
    double rule_value = 0.0;     // Ē[X_{τ*}] recomputed with τ* fixed
    TreeSolution tree;
};

// Backward induction with stopping, absorbed at H_δ; sup mode with max over
// stopping (or inf mode with min).
SnellResult snell_envelope(const LatticeModel& model, const PayoffOnTree& X, double delta, Mode mode = Mode::Sup,
                           int jobs = 1);

// X = u^θ − φ on the lattice rooted at θ.
PayoffOnTree jet_payoff(const Functional& u, const PointInTheta& theta, const Paraboloid& phi,
                        const LatticeModel& model);

struct ContactPoint {
    int k = 0;
    double t = 0.0;
    std::vector<double> path;    // lattice positions up to t*
    Paraboloid jet;              // (α, β + γ ω*_{t*}, γ)
    double payoff = 0.0, envelope = 0.0;
    std::string history;
};

struct ContactReport {
    bool strict_gap = false;
    double u0 = 0.0;
    double terminal_expectation = 0.0;   // Ē[(u − φ)(H_δ, B)]
    std::optional<ContactPoint> point;
};

ContactReport contact_point(const LatticeModel& model, const Functional& u, const Paraboloid& phi, double delta,
                            int jobs = 1);

enum class JetSide { Sub, Super };

struct JetMembership {
    bool member = false;
    double u_value = 0.0;
    double envelope = 0.0;
    double coarse_envelope = 0.0;  // same problem on N/2 steps
    double tolerance = 0.0;        // 2|V_N − V_{N/2}| + floor
    double excess = 0.0;           // envelope − u (sub) or u − envelope (super)
};

JetMembership jet_test_pl(const LatticeModel& model, const Functional& u, const PointInTheta& theta,
                          const Paraboloid& candidate, double delta, JetSide side, double floor = 1e-9);

// ------------------------------------------------------------------ checkers

struct JetGrid {
    std::vector<double> alpha_offsets{-0.5, -0.25, 0.0, 0.25, 0.5};
    std::vector<double> beta_offsets{-0.5, 0.0, 0.5};
    std::vector<double> gamma_offsets{-1.0, 0.0, 1.0};
};

struct ViscosityConfig {
    double L = 1.0;
    int steps = 8;                                  // lattice steps per δ window
    std::vector<double> deltas{0.5, 0.25, 0.125};
    JetGrid grid;
    double fd_step = 1e-3;
    double floor = 1e-9;
    int jobs = 1;
};

struct ViscosityRow {
    int sample = 0;
    double t = 0.0;
    std::vector<double> x;
    Paraboloid jet;
    double delta = 0.0;
    double u_value = 0.0;
    double residual = 0.0;
    double margin = 0.0;
    bool pass = true;
};

struct ViscosityReport {
    JetSide side = JetSide::Sub;
    int samples = 0;
    int candidates = 0;
    int jets_found = 0;
    int violations = 0;
    std::vector<ViscosityRow> rows;
    std::optional<ViscosityRow> witness;   // largest violation
    bool pass() const { return violations == 0; }
    std::string summary() const;
};

// Finite-difference (∂_t u, ∂_ω u, ∂²_ωω u) at θ with frozen path in time.
Paraboloid derivative_estimate(const Functional& u, const PointInTheta& theta, double fd_step);

ViscosityReport visc_check(const Functional& u, const Nonlinearity& G, JetSide side,
                           const std::vector<PointInTheta>& samples, const ViscosityConfig& cfg);

// ------------------------------------------------------------------ classical jets

using PointNonlinearity = std::function<double(double s, double x, double y, double z, double g)>;

struct StencilConfig {
    double time_step = 1.0 / 64;    // spacing of the 5-point time stencil
    double space_step = 0.05;       // spacing of the 9-point space stencil
    double gap = 0.0;               // certified search gap of f values
    double L0 = 0.0;
};

struct StencilRow {
    double s = 0.0, x = 0.0;
    bool accepted = false;
    double alpha = 0.0, beta = 0.0, gamma = 0.0;
    double residual = 0.0;
    double bound = 0.0;             // allowed right-hand side
    double tolerance = 0.0;         // stencil part of the bound
    double time_misfit = 0.0;       // excess of forward over backward time slopes
    bool pass = true;
};

struct StencilReport {
    int points = 0;
    int accepted = 0;
    int skipped = 0;
    int passed = 0;
    double worst_overshoot = 0.0;
    std::vector<StencilRow> rows;
    double pass_fraction() const { return accepted ? double(passed) / accepted : 1.0; }
};

using ErrorBound = std::function<double(double s, double x)>;

// Tangent paraboloids from above on 5×9 stencils, time tangency up to a slack
// of time_step + 4 gap / time_step; checks
// −α − G(s, x, f, β, γ) ≤ bound(s, x) + stencil tolerance.
StencilReport classical_jet_residual(const FieldMap& f, const PointNonlinearity& G,
                                     const std::vector<std::pair<double, double>>& points, const StencilConfig& cfg,
                                     const ErrorBound& bound);

// ------------------------------------------------------------------ transforms

// ũ = e^{−Lt} u.
Functional transform_discount(const Functional& u, double L);
// G̃(θ, y, z, γ) = L y + e^{−Lt} G(θ, e^{Lt}y, e^{Lt}z, e^{Lt}γ).
Nonlinearity transform_discount(const Nonlinearity& G, double L);

// Ḡ(θ, y, z, γ) = −2L0 y + e^{2L0 t} G(θ, e^{−2L0 t}y, e^{−2L0 t}z, e^{−2L0 t}γ).
Nonlinearity transform_gbar(const Nonlinearity& G, double L0);

struct ChainSample {
    double t, y, y2, z, g;
    double lower, middle, upper;
    bool pass;
};

struct ChainReport {
    int samples = 0;
    int violations = 0;
    std::optional<ChainSample> witness;
};

// L0(y − y′) ≤ (Ḡ(y′) − Ḡ(y))^+ ≤ |Ḡ(y′) − Ḡ(y)| for y ≥ y′.
ChainReport gbar_chain_check(const Nonlinearity& G, double L0, int samples, std::uint64_t seed, const Grid& grid);

struct AuditItem {
    std::string condition;
    int samples = 0;
    int violations = 0;
    double worst = 0.0;          // largest lhs − rhs
    std::string witness;
};

struct AuditReport {
    std::vector<AuditItem> items;
    bool pass() const;
    const AuditItem& item(const std::string& condition) const;
};

struct AuditSpec {
    int samples = 200;
    std::uint64_t seed = 1;
    Grid grid{1.0, 32};
    double value_range = 3.0;
    int p = 3;
};

AuditReport assumption_audit(const Nonlinearity& G, const AuditSpec& spec);

// ------------------------------------------------------------------ comparison

struct ComparisonSpec {
    std::vector<double> n_schedule{4, 8, 16};
    int points = 500;
    std::uint64_t seed = 1;
    Grid grid{1.0, 32};
    double tolerance = 1e-9;
    int p = 3;
    double a = 0.05;
    SearchConfig search;
};

struct ComparisonRow {
    double n = 0.0;
    double u_n = 0.0, v_n = 0.0;
    double difference = 0.0;
    double gap = 0.0;
    double bound = 0.0;
    bool bound_ok = true;
};

struct ComparisonReport {
    bool terminal_ok = true;
    bool pointwise_ok = true;
    double min_margin = 0.0;
    int points = 0;
    std::vector<ComparisonRow> rows;
    bool bounds_decrease = true;
    std::vector<std::string> warnings;
};

ComparisonReport comparison_experiment(const Functional& u, const Functional& v, const Nonlinearity& G,
                                       const ComparisonSpec& spec);

// Built-in solution catalog: functional, nonlinearity and expected verdicts.
struct CatalogCase {
    std::string functional;
    std::string nonlinearity;
    bool sub_passes = true;
    bool super_passes = true;
    std::optional<Paraboloid> sub_witness;
    double lattice_L = 1.0;
};

std::vector<CatalogCase> solution_catalog();

}  // namespace ppde
