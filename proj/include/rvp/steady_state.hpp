#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvp/ansatz.hpp"
#include "rvp/interpolation.hpp"

namespace rvp {

/// Potential value below which phase space is occupied. At gamma = 1 the
/// energy includes the rest mass and the threshold is E0 - 1; for gamma < 1
/// energies are measured from the rest mass and the threshold is E0.
double vacuum_threshold(const AnsatzModel& model, double gamma);

/// rho = g(gamma, u): spatial density produced by the ansatz at potential u.
double source_density(const AnsatzModel& model, double gamma, double u);
/// p = h(u): radial pressure kernel, defined at gamma = 1 only.
double source_pressure(const AnsatzModel& model, double gamma, double u);

/// The kernels as functions of the depth eta = threshold - u >= 0.
double density_kernel(const AnsatzModel& model, double gamma, double eta);
double pressure_kernel(const AnsatzModel& model, double eta);
/// d/d eta of the gamma = 1 kernels.
double density_kernel_d(const AnsatzModel& model, double eta);
double pressure_kernel_d(const AnsatzModel& model, double eta);

/// c_{k,m} = int_0^1 s^k (1-s)^m ds.
double c_km(double k, double m);

struct SolverOptions {
    double rtol = 1e-8;
    double r_max_factor = 1e4;    // non-compact beyond this many core radii
    double start_factor = 1e-5;   // series start radius in core radii
    double min_step_factor = 1e-14;
    int max_steps = 200000;
};

/// Radial tables of a spherically symmetric steady state. Node values are
/// exact solver output; between nodes U uses a monotone cubic with the exact
/// slopes m/r^2, and beyond R the Kepler exterior.
struct SteadyStateProfile {
    std::vector<double> r, U, rho, m, p;
    double E0 = 0.0;
    double u0 = 0.0;
    double R = 0.0;
    double M = 0.0;
    double gamma = 1.0;
    bool compact = false;
    bool trivial = false;
    bool normalized = false;
    AnsatzModel model = AnsatzModel::polytrope(1.0, 0.0);

    double threshold() const { return vacuum_threshold(model, gamma); }
    double potential(double radius) const;
    double potential_d(double radius) const;
    void potential_and_d(double radius, double& value, double& deriv) const;
    double enclosed_mass(double radius) const;
    /// rho0(r) from the kernel at the interpolated potential.
    double density(double radius) const;
    /// Limit of U at infinity, U(R) + M/R.
    double potential_at_infinity() const;
    /// sqrt(R^3/M).
    double dynamical_time() const;

    /// Rebuild interpolants after editing the tables.
    void finalize();

    nlohmann::json header_json() const;
    void write(const std::string& csv_path, const std::string& json_path) const;

private:
    std::shared_ptr<const MonotoneCubic> U_interp_, m_interp_;
};

SteadyStateProfile solve_profile(const AnsatzModel& model, double u0, double gamma,
                                 const SolverOptions& opt = {});

/// Shift U and E0 so that U vanishes at infinity.
SteadyStateProfile normalize_profile(const SteadyStateProfile& p);

struct MakinoValues {
    double x = 0.0, y = 0.0, alpha = 0.0, beta = 0.0;
};

MakinoValues makino_diagnostics(const SteadyStateProfile& p, double radius);

/// alpha and beta extrapolated to r -> R- by a quadratic least-squares fit in
/// the depth eta over radii approaching R.
struct MakinoLimits {
    double alpha = 0.0, beta = 0.0;
    double alpha_spread = 0.0, beta_spread = 0.0;  // change between fit degrees
};
MakinoLimits makino_limits(const SteadyStateProfile& p);

/// gamma-ansatz profile mapped onto the gamma = 1 system by
/// r -> gamma^{1/2} r, U -> gamma U, m -> gamma^{3/2} m.
SteadyStateProfile rescale_to_unit_gamma(const SteadyStateProfile& p);

/// sup_r |U_a(r) - U_b(r)| over [0, max(R_a, R_b)] (nodes of both plus a
/// uniform sample), including the exteriors.
double sup_potential_distance(const SteadyStateProfile& a, const SteadyStateProfile& b);

/// Residual of the gamma=1 (or own-gamma) radial equation on the nodes:
/// max over nodes of |rho - g(U)| / rho(0) and the relative defect of
/// m against the trapezoid-free cubic integral of 4 pi r^2 rho.
double equation_residual(const SteadyStateProfile& p);

}  // namespace rvp
