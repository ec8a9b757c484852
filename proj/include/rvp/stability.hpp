#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rvp/dynamics.hpp"
#include "rvp/phase_geometry.hpp"
#include "rvp/steady_state.hpp"

namespace rvp {

// ---------------------------------------------------------------------------
// Discrete reference state

/// Marker version of a steady state. The lattice of init_markers is kept, but
/// the values are made self-consistent with the shell field of the markers
/// themselves: f_i = phi(E_ref(z_i) - shift), where E_ref uses the potential
/// of the ensemble and the cut-off shift keeps the mass of the profile. The
/// ensemble is then a critical point of the discrete energy-Casimir
/// functional up to lattice quadrature error, which removes the spurious
/// first-order term from distances to perturbed copies.
struct ReferenceState {
    SteadyStateProfile profile;
    MarkerEnsemble markers;
    RadialField field;
    AnsatzModel model = AnsatzModel::polytrope(1.0, 0.0);  // profile ansatz with the shifted cut-off
    double shift = 0.0;        // cut-off shift of the discrete ansatz
    double energy_sum = 0.0;   // sum mu_i E_ref(z_i)
    double casimir = 0.0;      // sum Phi(f_i) vol_i
    double H = 0.0;
    int iterations = 0;
    double residual = 0.0;     // max |f change| at the last iteration

    // marker lattice, for depositing phase functions
    MarkerResolution resolution;
    double r0 = 0.0, dr = 0.0, w0 = 0.0, dw = 0.0, ds = 0.0;
    std::vector<double> cell_mass;
    /// Lattice cell of a phase point, or -1 outside the lattice (guards included).
    long cell_index(double r, double w, double L) const;
    double cell_volume(long cell) const;

    /// E = sqrt(1 + w^2 + L/r^2) + U_ref(r).
    double energy(double r, double w, double L) const;
    /// Discrete steady distribution phi(E_ref - shift).
    double f0(double r, double w, double L) const;
};

struct ReferenceOptions {
    int max_iterations = 200;
    double tolerance = 1e-12;  // on max |f change| relative to max f
    int anderson_depth = 6;
};

ReferenceState make_reference(const SteadyStateProfile& p, const MarkerResolution& res = {},
                              const ReferenceOptions& opt = {});

/// Same reference with the markers replaced by an evolved copy of them, for
/// measuring perturbed runs against an unperturbed run advanced in lockstep.
ReferenceState rebase_reference(const ReferenceState& ref, const MarkerEnsemble& evolved);

// ---------------------------------------------------------------------------
// Distance and energy-Casimir

struct DistanceReport {
    double d = 0.0;
    double phase_part = 0.0;   // [C + sum mu E_ref] - reference value
    double field_part = 0.0;   // (1/8 pi) |grad U_f - grad U_ref|^2
    double l2_part = 0.0;      // |f - f0|^2 by pull-back to the markers
    double l2_grid = 0.0;      // |f - f0|^2 by nearest-cell deposition
    double control_ratio = 0.0;  // (l2 + |grad U_f - grad U_ref|^2) / d
    double delta_HC = 0.0;
    double identity_residual = 0.0;  // d - (delta_HC + 2 field_part)
};

DistanceReport distance_d(const MarkerEnsemble& e, const ReferenceState& ref);

struct EnergyCasimir {
    double H = 0.0;
    double C = 0.0;
    double HC = 0.0;
};

EnergyCasimir energy_casimir(const MarkerEnsemble& e, const AnsatzModel& model);

// ---------------------------------------------------------------------------
// Dynamically accessible perturbations

enum class GeneratorFamily { Breathing, Shear, Twist, InwardBoost };

std::string to_string(GeneratorFamily f);
GeneratorFamily generator_family_from_string(const std::string& s);

/// Generator chi(r, w, L) of a Hamiltonian flow in the (r, w) plane at fixed L.
/// beta(r) = r (1 - r^2/r_b^2)^3 vanishes at the centre and beyond r_b;
/// the twist factor is (1 - L/L_c)^3 below L_c.
struct PerturbationGenerator {
    GeneratorFamily family = GeneratorFamily::Breathing;
    double r_b = 1.0;
    double W = 1.0;    // shear momentum scale
    double L_c = 1.0;  // twist angular-momentum scale

    double chi(double r, double w, double L) const;
    /// (d chi/dw, -d chi/dr): the (rdot, wdot) of the flow.
    std::array<double, 2> velocity(double r, double w, double L) const;

    static PerturbationGenerator standard(GeneratorFamily family, const SteadyStateProfile& p);
};

struct PerturbationBox {
    double r_max = 0.0;
    double w_max = 0.0;
};

/// Flow every marker for pseudo-time eps with RK4 substeps at fixed L.
/// f, vol and L are untouched. Throws DomainError if a marker leaves the box
/// or reaches r <= 0.
MarkerEnsemble generate_perturbation(const MarkerEnsemble& e, const PerturbationGenerator& gen, double eps,
                                     const PerturbationBox& box, int substeps = 32);

PerturbationBox default_box(const SteadyStateProfile& p);

// ---------------------------------------------------------------------------
// Brackets, quadratic form, Kandrup bound

/// Test function h(r, w, L) with its r and w derivatives.
struct TestFunction {
    std::function<double(double, double, double)> h, h_r, h_w;
};

/// Poisson bracket {E, h} in reduced coordinates,
/// -(w/g) dh/dr - (L/(r^3 g) - U0') dh/dw with g = sqrt(1 + w^2 + L/r^2).
double bracket_with_E(const SteadyStateProfile& p, const TestFunction& h, const PhasePoint& z);
/// Transport derivative D h = (w/g) dh/dr + (L/(r^3 g) - U0') dh/dw = -{E, h}.
double transport_derivative(const SteadyStateProfile& p, const TestFunction& h, const PhasePoint& z);
/// {f0, h} = phi'(E) {E, h}.
double bracket_with_f0(const SteadyStateProfile& p, const TestFunction& h, const PhasePoint& z);

/// {f, h} = grad_x f . grad_v h - grad_v f . grad_x h in Cartesian coordinates,
/// derivatives by central differences; for cross-checking the reduced form.
double cartesian_bracket(const std::function<double(const std::array<double, 3>&, const std::array<double, 3>&)>& f,
                         const std::function<double(const std::array<double, 3>&, const std::array<double, 3>&)>& h,
                         const std::array<double, 3>& x, const std::array<double, 3>& v, double step = 1e-5);

struct QuadraticForm {
    double value = 0.0;
    double kinetic = 0.0;  // 1/2 int Phi''(f0) g^2
    double field = 0.0;    // (1/8 pi) int |grad U_g|^2
};

/// D^2 H_C(f0)[g] for g supported in {f0 > 0}, on the reduced grid. The
/// field term uses the density of the even part of g. Throws DomainError if g
/// is nonzero outside the steady support.
QuadraticForm quadratic_form(const SteadyStateProfile& p, const PhaseFunction& g, const PhaseGrid& grid = {});

struct KandrupResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double scale = 0.0;  // max(|lhs|, |rhs|)
};

/// Admissible test function h = r w P(r^2, w^2, L) B(E), odd in w by
/// construction. The energy taper B vanishes for E > E0 - delta, so h is
/// supported strictly inside the steady support. P is a polynomial with seeded
/// random coefficients.
struct KandrupTestFunction {
    std::vector<double> coeff;  // P = sum c_abc (r^2/R^2)^a (w^2/wm^2)^b (L/Lm)^c
    int degree = 2;
    double R = 1.0, w_max = 1.0, L_max = 1.0;
    double E0 = 0.0, delta = 0.0;
    double lambda = 1.0;  // overall scale

    /// mu = h / (r w) = lambda P B
    double mu(double r, double w, double L, double U) const;
    /// Transport derivative of mu along the steady flow.
    double mu_transport(double r, double w, double L, double U, double dU) const;
    double h(double r, double w, double L, double U) const;
    double h_transport(double r, double w, double L, double U, double dU) const;
    TestFunction bind(const SteadyStateProfile& p) const;

    static KandrupTestFunction random(const SteadyStateProfile& p, std::uint64_t seed, int degree = 2,
                                      double taper_fraction = 0.1);
};

KandrupResult kandrup_check(const SteadyStateProfile& p, const KandrupTestFunction& h, const PhaseGrid& grid = {});

// ---------------------------------------------------------------------------
// Transport solve and tangency

struct TransportSolution {
    std::vector<double> r, h;   // h on nodes of the outgoing branch (w > 0)
    double closure = 0.0;       // int_{r-}^{r+} g q dr
    double closure_scale = 0.0; // int |g| q dr
    double max_check_error = 0.0;  // max |D h - g| by differentiation along the orbit
    bool closed = false;
};

/// h(r) = sign(w) int_{r-}^r g(s, w(s), L) q(s) ds on the orbit (E, L), so
/// that D h = g along it. g must be even in w.
TransportSolution transport_solve_h(const SteadyStateProfile& p, const PhaseFunction& g, double E, double L,
                                    int nodes = 200, double closure_tol = 1e-8);

struct TangencyResidual {
    std::array<double, 4> value{};  // int dG/df(f0, L) g dv dx
    std::array<double, 4> error{};  // quadrature error estimate
    std::array<double, 4> scale{};  // int |dG/df(f0, L) g| dv dx
};

/// Residuals for G in {f^2, f^3, f^2 L, f^2 L^2}.
TangencyResidual tangency_residual(const SteadyStateProfile& p, const PhaseFunction& g, const PhaseGrid& grid = {});

}  // namespace rvp
