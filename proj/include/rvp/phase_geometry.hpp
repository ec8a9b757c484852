#pragma once

#include <array>
#include <functional>

#include "rvp/steady_state.hpp"

namespace rvp {

/// Reduced coordinates: radius, radial momentum, squared angular momentum.
struct PhasePoint {
    double r = 0.0;
    double w = 0.0;
    double L = 0.0;
};

struct TurningPointData {
    double r_minus = 0.0;
    double r_plus = 0.0;
    double r_L = 0.0;
    double psi_min = 0.0;
    double psi_second = 0.0;
};

PhasePoint reduce_coordinates(const std::array<double, 3>& x, const std::array<double, 3>& v);

/// E = sqrt(1 + w^2 + L/r^2) + U0(r).
double particle_energy(const SteadyStateProfile& p, const PhasePoint& z);
double particle_energy(const SteadyStateProfile& p, const std::array<double, 3>& x,
                       const std::array<double, 3>& v);

/// Psi_L(r) = U0(r) + sqrt(1 + L/r^2).
double effective_potential(const SteadyStateProfile& p, double L, double r);
double effective_potential_d(const SteadyStateProfile& p, double L, double r);

/// Escape energy 1 + U0(infinity); equals 1 for a normalized profile.
double escape_energy(const SteadyStateProfile& p);

/// r_L, Psi_L(r_L) and Psi_L''(r_L). The enclosed mass entering the root is
/// r^2 U0'(r) of the interpolated potential, so that r_L is the exact
/// minimizer of the interpolated Psi_L.
TurningPointData min_radius(const SteadyStateProfile& p, double L);

TurningPointData turning_points(const SteadyStateProfile& p, double E, double L);

struct WQ {
    double w = 0.0;
    double q = 0.0;
};
WQ w_and_q(const SteadyStateProfile& p, double r, double E, double L);

struct OrbitIntegral {
    double value = 0.0;
    double change = 0.0;  // relative change at the last panel doubling
    int panels = 0;
};

/// int_{r-}^{r+} F(r, w(r)) q(r) dr along the orbit (E, L). With
/// r = r- + (r+ - r-)(1 - cos theta)/2 the inverse-square-root endpoints
/// become regular; composite Gauss-Legendre panels double until the relative
/// change drops below rel_tol.
OrbitIntegral orbit_integral(const SteadyStateProfile& p, double E, double L,
                             const std::function<double(double r, double w)>& F, double rel_tol = 1e-10,
                             int max_panels = 4096);

/// int q dr over the orbit.
OrbitIntegral orbit_q_integral(const SteadyStateProfile& p, double E, double L, double rel_tol = 1e-10);

/// Small-oscillation limit of the q integral: pi sqrt(E - U0(r_L)) / sqrt(Psi''),
/// evaluated at E = psi_min.
double harmonic_q_limit(const SteadyStateProfile& p, double L);

/// max over the support of r^2 ((E0 - U0(r))^2 - 1); orbits with E < E0
/// exist exactly for L below this value.
double max_angular_momentum(const SteadyStateProfile& p);
/// Largest radial momentum in the support, sqrt((E0 - U0(0))^2 - 1).
double max_radial_momentum(const SteadyStateProfile& p);

using PhaseFunction = std::function<double(double r, double w, double L)>;

struct PhaseGrid {
    int nr = 128;
    int nw = 128;
    int nL = 32;
};

struct QuadratureEstimate {
    double value = 0.0;
    double error = 0.0;
};

/// Phase-space measure dv dx = 4 pi^2 dr dw dL with w over the full real line.
constexpr double kPhaseJacobian = 39.47841760435743;  // 4 pi^2

/// Midpoint rule for int A dv dx over a box in (r, w, L), all w in [w0, w1].
/// Cells are uniform in r, w and sqrt(L), each weighted by its exact volume,
/// which keeps the thin small-r part of the support resolved.
double box_quadrature(const PhaseFunction& A, std::array<double, 2> r, std::array<double, 2> w,
                      std::array<double, 2> L, const PhaseGrid& grid);

/// int A dv dx over the steady support for A even in w: midpoint grid over
/// [0,R] x [0,w_max] x [0,L_max], doubled for w < 0. The error estimate
/// compares with the grid of half resolution.
QuadratureEstimate reduced_quadrature(const SteadyStateProfile& p, const PhaseFunction& A,
                                      const PhaseGrid& grid = {});

/// Same integral in (r, E, L): 8 pi^2 int dL int dE int A(r, w(r,E,L), L) q dr,
/// Gauss-Legendre in L and E over the occupied region E < E0.
QuadratureEstimate reduced_quadrature_energy(const SteadyStateProfile& p, const PhaseFunction& A,
                                             int nE = 24, int nL = 24);

}  // namespace rvp
