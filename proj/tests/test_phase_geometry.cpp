#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rvp/errors.hpp"
#include "rvp/phase_geometry.hpp"

using namespace rvp;

namespace {

const SteadyStateProfile& state()
{
    static const auto p = normalize_profile(solve_profile(AnsatzModel::polytrope(1.0, 1.0), -0.1, 1.0));
    return p;
}

}  // namespace

TEST_CASE("reduced coordinates")
{
    const auto z = reduce_coordinates({2.0, 0.0, 0.0}, {0.3, 0.4, 0.0});
    CHECK(z.r == doctest::Approx(2.0));
    CHECK(z.w == doctest::Approx(0.3));
    CHECK(z.L == doctest::Approx(0.64));  // |x x v|^2 = (2 * 0.4)^2
    const auto& p = state();
    const std::array<double, 3> x{0.3, -0.2, 0.5}, v{0.1, 0.05, -0.2};
    const auto y = reduce_coordinates(x, v);
    CHECK(particle_energy(p, x, v) == doctest::Approx(particle_energy(p, y)).epsilon(1e-14));
}

TEST_CASE("support extent")
{
    const auto& p = state();
    CHECK(escape_energy(p) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(max_radial_momentum(p) == doctest::Approx(0.458258).epsilon(1e-5));
    CHECK(max_angular_momentum(p) == doctest::Approx(0.286812).epsilon(1e-5));
}

TEST_CASE("turning points and circular orbits")
{
    const auto& p = state();
    const double Lmax = max_angular_momentum(p);
    for (double frac : {0.1, 0.4, 0.9}) {
        const double L = frac * Lmax;
        const auto c = min_radius(p, L);
        CHECK(std::abs(effective_potential_d(p, L, c.r_L)) < 1e-10);
        CHECK(c.psi_min == doctest::Approx(effective_potential(p, L, c.r_L)));
        CHECK(c.psi_second > 0.0);
        const double E = 0.5 * (c.psi_min + p.E0);
        const auto t = turning_points(p, E, L);
        CHECK(t.r_minus < c.r_L);
        CHECK(t.r_plus > c.r_L);
        CHECK(effective_potential(p, L, t.r_minus) == doctest::Approx(E).epsilon(1e-12));
        CHECK(effective_potential(p, L, t.r_plus) == doctest::Approx(E).epsilon(1e-12));
        const auto wq = w_and_q(p, c.r_L, E, L);
        const double U = p.potential(c.r_L);
        CHECK(wq.w * wq.w == doctest::Approx((E - U) * (E - U) - 1.0 - L / (c.r_L * c.r_L)));
        CHECK(wq.q == doctest::Approx((E - U) / wq.w));
        CHECK_THROWS_AS(turning_points(p, c.psi_min - 1e-3, L), NoOrbitError);
    }
    CHECK_THROWS_AS(turning_points(p, 1.01, 0.1), UnboundOrbitError);
}

TEST_CASE("orbit q-integral approaches the harmonic limit")
{
    const auto& p = state();
    const double L = 0.5 * max_angular_momentum(p);
    const auto c = min_radius(p, L);
    const double lim = harmonic_q_limit(p, L);
    const double dE = 1e-6 * (p.E0 - c.psi_min);
    const auto q = orbit_q_integral(p, c.psi_min + dE, L);
    CHECK(q.value == doctest::Approx(lim).epsilon(1e-3));
    const auto q2 = orbit_q_integral(p, 0.5 * (c.psi_min + p.E0), L);
    CHECK(q2.change < 1e-8);
    CHECK(std::isfinite(q2.value));
}

TEST_CASE("Jacobian: both quadrature routes give the mass")
{
    const auto& p = state();
    auto f0 = [&](double r, double w, double L) { return p.model.phi(particle_energy(p, {r, w, L})); };
    const auto a = reduced_quadrature(p, f0);
    const auto b = reduced_quadrature_energy(p, f0);
    CHECK(a.value == doctest::Approx(p.M).epsilon(5e-3));
    CHECK(b.value == doctest::Approx(p.M).epsilon(5e-3));
    CHECK(a.value == doctest::Approx(b.value).epsilon(5e-3));
    CHECK(a.error < 1e-2 * a.value);
}

TEST_CASE("box quadrature integrates constants exactly")
{
    const double v = box_quadrature([](double, double, double) { return 1.0; }, {0.5, 1.5}, {-1.0, 2.0}, {0.0, 0.25},
                                    {8, 8, 8});
    CHECK(v == doctest::Approx(kPhaseJacobian * 1.0 * 3.0 * 0.25).epsilon(1e-13));
    CHECK(kPhaseJacobian == doctest::Approx(4.0 * std::numbers::pi * std::numbers::pi));
}

TEST_CASE("property: w is the radial momentum on random orbits")
{
    const auto& p = state();
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    const double Lmax = max_angular_momentum(p);
    for (int trial = 0; trial < 50; ++trial) {
        const double L = u(gen) * Lmax;
        const double psi = min_radius(p, L).psi_min;
        const double E = psi + u(gen) * (p.E0 - psi);
        const auto t = turning_points(p, E, L);
        const double r = t.r_minus + u(gen) * (t.r_plus - t.r_minus);
        const auto wq = w_and_q(p, r, E, L);
        CHECK(particle_energy(p, {r, wq.w, L}) == doctest::Approx(E).epsilon(1e-13));
        CHECK(particle_energy(p, {r, -wq.w, L}) == doctest::Approx(E).epsilon(1e-13));
    }
}
