#include <doctest.h>

#include <cmath>
#include <random>

#include "rvp/errors.hpp"
#include "rvp/stability.hpp"

using namespace rvp;

namespace {

const SteadyStateProfile& king()
{
    static const auto p = normalize_profile(solve_profile(AnsatzModel::king(1.0), -0.3, 1.0));
    return p;
}

const SteadyStateProfile& poly()
{
    static const auto p = normalize_profile(solve_profile(AnsatzModel::polytrope(1.0, 1.0), -0.1, 1.0));
    return p;
}

const ReferenceState& reference()
{
    static const auto ref = make_reference(poly(), {24, 24, 8});
    return ref;
}

const PhaseGrid kSmall{32, 32, 8};

double f0(const SteadyStateProfile& p, double r, double w, double L)
{
    return p.model.phi(particle_energy(p, {r, w, L}));
}

}  // namespace

TEST_CASE("self-consistent reference")
{
    const auto& ref = reference();
    CHECK(ref.residual < 1e-10);
    CHECK(ref.markers.total_mass() == doctest::Approx(poly().M).epsilon(1e-10));
    const auto d = distance_d(ref.markers, ref);
    CHECK(std::abs(d.d) < 1e-14 * std::abs(ref.H));
    CHECK(d.field_part == 0.0);
    // every marker carries phi(E_ref - shift)
    for (std::size_t i = 0; i < ref.markers.size(); i += 97)
        CHECK(ref.markers.f[i] == doctest::Approx(ref.f0(ref.markers.r[i], ref.markers.w[i], ref.markers.L[i])).epsilon(1e-9));
    CHECK(ref.cell_index(-1.0, 0.0, 0.0) == -1);
}

TEST_CASE("generators are Hamiltonian")
{
    for (auto fam : {GeneratorFamily::Breathing, GeneratorFamily::Shear, GeneratorFamily::Twist, GeneratorFamily::InwardBoost}) {
        const auto g = PerturbationGenerator::standard(fam, poly());
        CHECK(generator_family_from_string(to_string(fam)) == fam);
        if (fam == GeneratorFamily::InwardBoost) continue;  // defined by its flow
        const double r = 0.7 * poly().R, w = 0.1, L = 0.05, h = 1e-6;
        const auto v = g.velocity(r, w, L);
        CHECK(v[0] == doctest::Approx((g.chi(r, w + h, L) - g.chi(r, w - h, L)) / (2 * h)).epsilon(1e-7));
        CHECK(v[1] == doctest::Approx(-(g.chi(r + h, w, L) - g.chi(r - h, w, L)) / (2 * h)).epsilon(1e-7));
    }
    CHECK_THROWS(generator_family_from_string("spiral"));
}

TEST_CASE("perturbations preserve f and vol")
{
    const auto& ref = reference();
    const auto box = default_box(poly());
    const auto same = generate_perturbation(ref.markers, PerturbationGenerator::standard(GeneratorFamily::Breathing, poly()), 0.0, box);
    CHECK(same.r == ref.markers.r);
    CHECK(same.w == ref.markers.w);
    for (auto fam : {GeneratorFamily::Breathing, GeneratorFamily::Shear, GeneratorFamily::Twist, GeneratorFamily::InwardBoost}) {
        INFO(to_string(fam));
        const auto e = generate_perturbation(ref.markers, PerturbationGenerator::standard(fam, poly()), 1e-2, box);
        CHECK(e.total_mass() == ref.markers.total_mass());
        CHECK(e.casimir(ref.model) == ref.markers.casimir(ref.model));
        CHECK(e.L == ref.markers.L);
        const auto d = distance_d(e, ref);
        CHECK(d.d > 0.0);
        CHECK(d.field_part >= 0.0);
        CHECK(std::abs(d.identity_residual) < 1e-8 * std::abs(ref.H));
        CHECK(d.control_ratio > 0.0);
    }
    PerturbationBox tiny{0.1, 0.1};
    CHECK_THROWS_AS(generate_perturbation(ref.markers, PerturbationGenerator::standard(GeneratorFamily::Breathing, poly()),
                                          1e-2, tiny),
                    DomainError);
}

TEST_CASE("flow map preserves area")
{
    // Jacobian determinant of the eps-flow by finite differences on single markers
    const auto g = PerturbationGenerator::standard(GeneratorFamily::Shear, poly());
    const PerturbationBox box = default_box(poly());
    const double r = 0.8, w = 0.2, L = 0.03, h = 1e-5, eps = 0.3;
    auto map = [&](double r0, double w0) {
        MarkerEnsemble e;
        e.push(r0, w0, L, 1.0, 1.0);
        const auto out = generate_perturbation(e, g, eps, box, 256);
        return std::array<double, 2>{out.r[0], out.w[0]};
    };
    const auto rp = map(r + h, w), rm = map(r - h, w), wp = map(r, w + h), wm = map(r, w - h);
    const double a = (rp[0] - rm[0]) / (2 * h), b = (wp[0] - wm[0]) / (2 * h);
    const double c = (rp[1] - rm[1]) / (2 * h), d = (wp[1] - wm[1]) / (2 * h);
    CHECK(a * d - b * c == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("bracket with E")
{
    const auto& p = poly();
    TestFunction constant{[](double, double, double L) { return L; }, [](double, double, double) { return 0.0; },
                          [](double, double, double) { return 0.0; }};
    CHECK(bracket_with_E(p, constant, {1.0, 0.2, 0.1}) == 0.0);

    auto a = [](double r) { return std::exp(-r); };
    TestFunction lin{[&](double r, double w, double) { return w * a(r); },
                     [&](double r, double w, double) { return -w * a(r); },
                     [&](double r, double, double) { return a(r); }};
    const double r = 1.3, L = 0.05;
    const double expected = a(r) * (L / (r * r * r * std::sqrt(1.0 + L / (r * r))) - p.potential_d(r));
    CHECK(bracket_with_E(p, lin, {r, 0.0, L}) == doctest::Approx(-expected));
    CHECK(transport_derivative(p, lin, {r, 0.0, L}) == doctest::Approx(expected));
    const double E = particle_energy(p, {r, 0.1, L});
    CHECK(bracket_with_f0(p, lin, {r, 0.1, L}) == doctest::Approx(p.model.dphi(E) * bracket_with_E(p, lin, {r, 0.1, L})));
}

TEST_CASE("reduced bracket matches the Cartesian definition")
{
    const auto& p = poly();
    auto hr = [](double r, double w, double L) { return r * w * std::exp(-r * r) * (1.0 + L); };
    TestFunction h{hr,
                   [](double r, double w, double L) { return w * std::exp(-r * r) * (1.0 - 2.0 * r * r) * (1.0 + L); },
                   [](double r, double, double L) { return r * std::exp(-r * r) * (1.0 + L); }};
    auto cart = [&](const std::array<double, 3>& x, const std::array<double, 3>& v) {
        const auto z = reduce_coordinates(x, v);
        return hr(z.r, z.w, z.L);
    };
    auto energy = [&](const std::array<double, 3>& x, const std::array<double, 3>& v) { return particle_energy(p, x, v); };
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-0.6, 0.6), s(-0.2, 0.2);
    for (int i = 0; i < 25; ++i) {
        const std::array<double, 3> x{u(gen) + 1.0, u(gen), u(gen)}, v{s(gen), s(gen), s(gen)};
        const double reduced = bracket_with_E(p, h, reduce_coordinates(x, v));
        const double full = cartesian_bracket(energy, cart, x, v);
        CHECK(std::abs(reduced - full) < 1e-8);
    }
}

TEST_CASE("quadratic form")
{
    const auto& p = king();
    CHECK(quadratic_form(p, [](double, double, double) { return 0.0; }, kSmall).value == 0.0);
    auto g = [&](double r, double w, double L) { return f0(p, r, w, L); };
    const auto q1 = quadratic_form(p, g, kSmall);
    CHECK(std::isfinite(q1.value));
    CHECK(q1.kinetic > 0.0);
    CHECK(q1.field > 0.0);
    const auto q3 = quadratic_form(p, [&](double r, double w, double L) { return 3.0 * g(r, w, L); }, kSmall);
    CHECK(q3.value == doctest::Approx(9.0 * q1.value).epsilon(1e-12));
    CHECK_THROWS_AS(quadratic_form(p, [](double, double, double) { return 1.0; }, kSmall), DomainError);
}

TEST_CASE("Kandrup bound on random test functions")
{
    const auto& p = king();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto h = KandrupTestFunction::random(p, seed);
        const auto k = kandrup_check(p, h, kSmall);
        CHECK(k.rhs > 0.0);
        CHECK(k.margin >= -1e-6 * k.scale);
        auto h2 = h;
        h2.lambda *= 3.0;
        const auto k2 = kandrup_check(p, h2, kSmall);
        CHECK(k2.lhs == doctest::Approx(9.0 * k.lhs).epsilon(1e-11));
        CHECK(k2.rhs == doctest::Approx(9.0 * k.rhs).epsilon(1e-11));
    }
    // analytic transport derivative against the bound partials
    const auto h = KandrupTestFunction::random(p, 9, 3);
    const auto t = h.bind(p);
    double U, dU;
    for (double r : {0.2, 0.7, 1.1}) {
        p.potential_and_d(r, U, dU);
        CHECK(h.h(r, 0.1, 0.02, U) == -h.h(r, -0.1, 0.02, U));
        CHECK(h.h_transport(r, 0.1, 0.02, U, dU) == doctest::Approx(transport_derivative(p, t, {r, 0.1, 0.02})).epsilon(1e-12));
    }
}

TEST_CASE("transport solve")
{
    const auto& p = poly();
    const double L = 0.3 * max_angular_momentum(p);
    const double psi = min_radius(p, L).psi_min;
    const double E = psi + 0.5 * (p.E0 - psi);
    const auto zero = transport_solve_h(p, [](double, double, double) { return 0.0; }, E, L);
    for (double v : zero.h) CHECK(v == 0.0);

    // g = D h0 for h0 = w a(r); the solve must return h0 on the outgoing branch
    auto a = [](double r) { return std::exp(-r); };
    TestFunction h0{[&](double r, double w, double) { return w * a(r); },
                    [&](double r, double w, double) { return -w * a(r); },
                    [&](double r, double, double) { return a(r); }};
    const auto sol = transport_solve_h(p, [&](double r, double w, double LL) { return transport_derivative(p, h0, {r, w, LL}); }, E, L);
    CHECK(sol.closed);
    CHECK(sol.max_check_error < 1e-3);
    for (std::size_t k = 1; k + 1 < sol.r.size(); k += 7) {
        const double w = w_and_q(p, sol.r[k], E, L).w;
        CHECK(std::abs(sol.h[k] - w * a(sol.r[k])) < 1e-6);
    }
    // an even positive g is never tangent
    const auto open = transport_solve_h(p, [](double, double, double) { return 1.0; }, E, L);
    CHECK_FALSE(open.closed);
    CHECK(open.closure == doctest::Approx(orbit_q_integral(p, E, L).value).epsilon(1e-6));
}

TEST_CASE("tangency residuals")
{
    const auto& p = king();
    const auto t = KandrupTestFunction::random(p, 4).bind(p);
    auto g = [&](double r, double w, double L) { return bracket_with_f0(p, t, {r, w, L}); };
    const auto res = tangency_residual(p, g, kSmall);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(res.value[k]) <= 4.0 * res.error[k] + 1e-13 * res.scale[k]);
    const auto twice = tangency_residual(p, [&](double r, double w, double L) { return 2.0 * g(r, w, L); }, kSmall);
    for (int k = 0; k < 4; ++k) CHECK(twice.value[k] == doctest::Approx(2.0 * res.value[k]).epsilon(1e-12));
    auto f = [&](double r, double w, double L) { return f0(p, r, w, L); };
    const auto neg = tangency_residual(p, f, kSmall);
    const auto direct = reduced_quadrature(p, [&](double r, double w, double L) { return 2.0 * f(r, w, L) * f(r, w, L); }, kSmall);
    CHECK(neg.value[0] == doctest::Approx(direct.value).epsilon(1e-2));
    CHECK(std::abs(neg.value[0]) > 10.0 * neg.error[0]);
}

TEST_CASE("energy-Casimir functional")
{
    const auto& ref = reference();
    const auto ec = energy_casimir(ref.markers, ref.model);
    CHECK(ec.HC == doctest::Approx(ec.H + ec.C));
    CHECK(ec.H == doctest::Approx(total_energy(ref.markers)));
}
