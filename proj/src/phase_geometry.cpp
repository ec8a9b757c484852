#include "rvp/phase_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rvp/errors.hpp"
#include "rvp/parallel.hpp"
#include "rvp/quadrature.hpp"

namespace rvp {

namespace {

void require_unit_gamma(const SteadyStateProfile& p)
{
    if (p.gamma != 1.0) throw DomainError("phase geometry needs a gamma = 1 profile");
    if (p.trivial) throw DomainError("phase geometry needs a nontrivial profile");
}

// r^2 U0'(r) - L / sqrt(L + r^2); increasing in r
double mass_balance(const SteadyStateProfile& p, double L, double r)
{
    return r * r * p.potential_d(r) - L / std::sqrt(L + r * r);
}

}  // namespace

PhasePoint reduce_coordinates(const std::array<double, 3>& x, const std::array<double, 3>& v)
{
    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    const std::array<double, 3> c{x[1] * v[2] - x[2] * v[1], x[2] * v[0] - x[0] * v[2], x[0] * v[1] - x[1] * v[0]};
    PhasePoint z;
    z.r = r;
    z.w = r > 0.0 ? (x[0] * v[0] + x[1] * v[1] + x[2] * v[2]) / r : 0.0;
    z.L = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
    return z;
}

double particle_energy(const SteadyStateProfile& p, const PhasePoint& z)
{
    if (z.r < 0.0) throw DomainError("particle_energy: negative radius");
    if (z.r == 0.0) {
        if (z.L > 0.0) throw DomainError("particle_energy: r = 0 with L > 0");
        return std::sqrt(1.0 + z.w * z.w) + p.potential(0.0);
    }
    return std::sqrt(1.0 + z.w * z.w + z.L / (z.r * z.r)) + p.potential(z.r);
}

double particle_energy(const SteadyStateProfile& p, const std::array<double, 3>& x, const std::array<double, 3>& v)
{
    // |v|^2 = w^2 + L/r^2 holds identically; use it directly at the origin
    const double v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    return std::sqrt(1.0 + v2) + p.potential(r);
}

double effective_potential(const SteadyStateProfile& p, double L, double r)
{
    return p.potential(r) + std::sqrt(1.0 + L / (r * r));
}

double effective_potential_d(const SteadyStateProfile& p, double L, double r)
{
    return p.potential_d(r) - L / (r * r * std::sqrt(r * r + L));
}

double escape_energy(const SteadyStateProfile& p)
{
    return 1.0 + p.potential_at_infinity();
}

TurningPointData min_radius(const SteadyStateProfile& p, double L)
{
    require_unit_gamma(p);
    if (!(L > 0.0)) throw DomainError("min_radius: L must be positive");
    double lo = std::min(p.R, std::sqrt(L)) * 1e-3;
    while (mass_balance(p, L, lo) >= 0.0) lo *= 0.5;
    double hi = std::max(p.R, std::sqrt(L));
    while (mass_balance(p, L, hi) <= 0.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mass_balance(p, L, mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    TurningPointData t;
    t.r_L = 0.5 * (lo + hi);
    t.psi_min = effective_potential(p, L, t.r_L);
    const double rL = t.r_L;
    t.psi_second = 4.0 * std::numbers::pi * p.density(rL) + L / (rL * std::pow(L + rL * rL, 1.5));
    t.r_minus = t.r_plus = rL;
    return t;
}

TurningPointData turning_points(const SteadyStateProfile& p, double E, double L)
{
    TurningPointData t = min_radius(p, L);
    if (!(E > t.psi_min)) throw NoOrbitError("turning_points: E does not exceed min Psi_L");
    if (!(E < escape_energy(p))) throw UnboundOrbitError("turning_points: orbit is not bound");
    auto above = [&](double r) { return effective_potential(p, L, r) >= E; };
    double lo = t.r_L * 0.5;
    while (!above(lo)) lo *= 0.5;
    double hi = t.r_L;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (above(mid))
            lo = mid;
        else
            hi = mid;
    }
    t.r_minus = 0.5 * (lo + hi);
    lo = t.r_L;
    hi = t.r_L * 2.0;
    while (!above(hi)) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (above(mid))
            hi = mid;
        else
            lo = mid;
    }
    t.r_plus = 0.5 * (lo + hi);
    return t;
}

WQ w_and_q(const SteadyStateProfile& p, double r, double E, double L)
{
    const double U = p.potential(r);
    const double root = std::sqrt(1.0 + L / (r * r));
    const double gap = E - U - root;  // E - Psi_L(r)
    if (!(gap > 0.0)) throw DomainError("w_and_q: radius outside the orbit (negative radicand)");
    WQ out;
    out.w = std::sqrt(gap * (E - U + root));
    out.q = (E - U) / out.w;
    return out;
}

OrbitIntegral orbit_integral(const SteadyStateProfile& p, double E, double L,
                             const std::function<double(double, double)>& F, double rel_tol, int max_panels)
{
    const TurningPointData t = turning_points(p, E, L);
    const double rm = t.r_minus, delta = t.r_plus - t.r_minus;
    auto integrand = [&](double theta) {
        const double r = rm + 0.5 * delta * (1.0 - std::cos(theta));
        const double U = p.potential(r);
        const double root = std::sqrt(1.0 + L / (r * r));
        double gap = E - U - root;
        if (!(gap > 0.0)) {
            // rounding at the turning points; the linear model of Psi_L is exact to first order
            const double dist = std::min(r - rm, t.r_plus - r);
            gap = std::abs(effective_potential_d(p, L, r)) * std::max(dist, 0.0) + 1e-300;
        }
        const double w = std::sqrt(gap * (E - U + root));
        return F(r, w) * (E - U) / w * 0.5 * delta * std::sin(theta);
    };
    OrbitIntegral res;
    int panels = 4;
    double prev = quad::composite_gl(integrand, 0.0, std::numbers::pi, panels);
    for (;;) {
        panels *= 2;
        const double cur = quad::composite_gl(integrand, 0.0, std::numbers::pi, panels);
        res.change = std::abs(cur - prev) / std::max(std::abs(cur), 1e-300);
        res.value = cur;
        res.panels = panels;
        if (res.change <= rel_tol || panels >= max_panels) break;
        prev = cur;
    }
    return res;
}

OrbitIntegral orbit_q_integral(const SteadyStateProfile& p, double E, double L, double rel_tol)
{
    return orbit_integral(p, E, L, [](double, double) { return 1.0; }, rel_tol);
}

double harmonic_q_limit(const SteadyStateProfile& p, double L)
{
    const TurningPointData t = min_radius(p, L);
    return std::numbers::pi * std::sqrt(t.psi_min - p.potential(t.r_L)) / std::sqrt(t.psi_second);
}

double max_angular_momentum(const SteadyStateProfile& p)
{
    require_unit_gamma(p);
    const double E0 = p.E0;
    auto Lof = [&](double r) {
        const double a = E0 - p.potential(r);
        return r * r * (a * a - 1.0);
    };
    std::size_t best = 0;
    for (std::size_t i = 0; i < p.r.size(); ++i)
        if (Lof(p.r[i]) > Lof(p.r[best])) best = i;
    // golden-section refinement between the neighbouring nodes
    double a = p.r[best > 0 ? best - 1 : 0], b = p.r[std::min(best + 1, p.r.size() - 1)];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    for (int it = 0; it < 120 && b - a > 1e-15 * b; ++it) {
        if (Lof(c) > Lof(d))
            b = d;
        else
            a = c;
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    return std::max(Lof(0.5 * (a + b)), Lof(p.r[best]));
}

double max_radial_momentum(const SteadyStateProfile& p)
{
    const double a = p.E0 - p.potential(0.0);
    return std::sqrt(std::max(a * a - 1.0, 0.0));
}

double box_quadrature(const PhaseFunction& A, std::array<double, 2> r, std::array<double, 2> w,
                      std::array<double, 2> L, const PhaseGrid& grid)
{
    if (grid.nr <= 0 || grid.nw <= 0 || grid.nL <= 0) throw ConfigError("quadrature grid sizes must be positive");
    const double dr = (r[1] - r[0]) / grid.nr, dw = (w[1] - w[0]) / grid.nw;
    const double s0 = std::sqrt(L[0]), ds = (std::sqrt(L[1]) - s0) / grid.nL;
    const std::size_t n = static_cast<std::size_t>(grid.nr) * grid.nw * grid.nL;
    const double sum = deterministic_sum(n, [&](std::size_t idx) {
        const std::size_t iL = idx % grid.nL;
        const std::size_t iw = (idx / grid.nL) % grid.nw;
        const std::size_t ir = idx / (static_cast<std::size_t>(grid.nL) * grid.nw);
        const double s = s0 + (iL + 0.5) * ds;
        // exact L-extent of the cell [s - ds/2, s + ds/2]^2
        return 2.0 * s * ds * A(r[0] + (ir + 0.5) * dr, w[0] + (iw + 0.5) * dw, s * s);
    });
    return kPhaseJacobian * dr * dw * sum;
}

QuadratureEstimate reduced_quadrature(const SteadyStateProfile& p, const PhaseFunction& A, const PhaseGrid& grid)
{
    require_unit_gamma(p);
    const std::array<double, 2> rb{0.0, p.R}, wb{0.0, max_radial_momentum(p)}, Lb{0.0, max_angular_momentum(p)};
    QuadratureEstimate est;
    est.value = 2.0 * box_quadrature(A, rb, wb, Lb, grid);
    const PhaseGrid coarse{std::max(1, grid.nr / 2), std::max(1, grid.nw / 2), std::max(1, grid.nL / 2)};
    est.error = std::abs(est.value - 2.0 * box_quadrature(A, rb, wb, Lb, coarse)) / 3.0;
    return est;
}

namespace {

double energy_route(const SteadyStateProfile& p, const PhaseFunction& A, int nE, int nL)
{
    const double Lmax = max_angular_momentum(p);
    const quad::Rule gL = quad::gauss_legendre(nL), gE = quad::gauss_legendre(nE);
    const double E0 = p.E0;
    std::vector<double> per_L(nL, 0.0);
    parallel_for(static_cast<std::size_t>(nL), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double L = 0.5 * Lmax * (1.0 + gL.nodes[i]);
            const double psi_min = min_radius(p, L).psi_min;
            if (!(psi_min < E0)) continue;
            quad::KahanSum inner;
            for (int j = 0; j < nE; ++j) {
                const double E = psi_min + 0.5 * (E0 - psi_min) * (1.0 + gE.nodes[j]);
                const auto oi = orbit_integral(
                    p, E, L, [&](double r, double w) { return A(r, w, L); }, 1e-9, 1024);
                inner.add(gE.weights[j] * 0.5 * (E0 - psi_min) * oi.value);
            }
            per_L[i] = gL.weights[i] * 0.5 * Lmax * inner.value();
        }
    });
    return 2.0 * kPhaseJacobian * quad::kahan_sum(per_L);
}

}  // namespace

QuadratureEstimate reduced_quadrature_energy(const SteadyStateProfile& p, const PhaseFunction& A, int nE, int nL)
{
    require_unit_gamma(p);
    QuadratureEstimate est;
    est.value = energy_route(p, A, nE, nL);
    est.error = std::abs(est.value - energy_route(p, A, std::max(2, nE / 2), std::max(2, nL / 2)));
    return est;
}

}  // namespace rvp
