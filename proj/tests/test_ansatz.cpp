#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "rvp/ansatz.hpp"
#include "rvp/errors.hpp"
#include "rvp/quadrature.hpp"

using namespace rvp;

TEST_CASE("polytrope evaluators")
{
    auto p2 = AnsatzModel::polytrope(2, 0);
    CHECK(p2.phi(-0.5) == doctest::Approx(0.25));
    auto p1 = AnsatzModel::polytrope(1, 0);
    CHECK(p1.phi(0.1) == 0.0);
    CHECK(p1.dphi(-0.3) == doctest::Approx(-1.0));
    CHECK(p2.phi_inverse(0.25) == doctest::Approx(-0.5));
    CHECK(p2.phi_inverse(0.0) == 0.0);
    CHECK(std::isinf(p2.asymptotics().delta));
    CHECK(p2.asymptotics().c == 1.0);
    CHECK_THROWS_AS(AnsatzModel::polytrope(-0.5, 0), DomainError);
    CHECK_THROWS_AS(AnsatzModel::polytrope(-0.7, 0), DomainError);
    CHECK_THROWS_AS(p2.phi_inverse(-1.0), DomainError);
    // non-integer exponent never produces NaN above the cut-off
    auto p = AnsatzModel::polytrope(1.4, 0.3);
    CHECK(p.phi(0.5) == 0.0);
    CHECK(p.phi(0.2) == doctest::Approx(std::pow(0.1, 1.4)));
}

TEST_CASE("King evaluators")
{
    const double E0 = 0.37;
    auto k = AnsatzModel::king(E0);
    CHECK(k.phi(E0) == 0.0);
    CHECK(k.phi(E0 - std::log(2.0)) == doctest::Approx(1.0));
    CHECK(k.dphi(E0 - 1.0) == doctest::Approx(-std::exp(1.0)));
    CHECK(k.phi_inverse(1.0) == doctest::Approx(E0 - std::log(2.0)));
    CHECK(k.phi_inverse(0.0) == E0);
    CHECK(k.asymptotics().delta == 1.0);
    CHECK(k.psi_over_power(0.0) == doctest::Approx(1.0));
    CHECK(k.psi_over_power(1e-9) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Casimir kernel")
{
    auto p1 = AnsatzModel::polytrope(1, 0);
    CHECK(p1.casimir(0.0) == 0.0);
    for (double f : {0.01, 0.3, 2.0}) {
        CHECK(p1.casimir(f) == doctest::Approx(0.5 * f * f));
        // quadrature of -phi^{-1}
        auto q = quad::adaptive([&](double z) { return -p1.phi_inverse(z); }, 0.0, f, 1e-12);
        CHECK(p1.casimir(f) == doctest::Approx(q.value).epsilon(1e-10));
    }
    CHECK_THROWS_AS(p1.casimir(-0.1), DomainError);
}

TEST_CASE("property: Casimir lower bound and derivatives for all families")
{
    std::vector<AnsatzModel> models{AnsatzModel::polytrope(1, 0.2), AnsatzModel::polytrope(2.5, -0.1),
                                    AnsatzModel::polytrope(0.5, 0.0), AnsatzModel::king(0.4)};
    {
        std::vector<double> E, phi;
        for (int i = 0; i <= 40; ++i) {
            const double e = -2.0 + 0.05 * i;  // cut-off at E = 0
            E.push_back(e);
            phi.push_back(std::max(0.0, -e + 0.3 * e * e));
        }
        E.push_back(0.5);
        phi.push_back(0.0);
        models.push_back(AnsatzModel::tabulated(E, phi));
    }
    std::mt19937_64 rng(11);
    for (const auto& m : models) {
        const double fmax = m.phi(m.cutoff() - 1.5);
        std::uniform_real_distribution<double> U(0.02 * fmax, fmax);
        for (int t = 0; t < 25; ++t) {
            const double f = U(rng);
            CHECK(m.casimir(f) >= -m.cutoff() * f - 1e-14);
            // phi o phi^{-1} = id
            CHECK(m.phi(m.phi_inverse(f)) == doctest::Approx(f).epsilon(1e-10));
            const double h = 1e-5 * f;
            const double d1 = (m.casimir(f + h) - m.casimir(f - h)) / (2 * h);
            CHECK(d1 == doctest::Approx(m.casimir_d1(f)).epsilon(1e-6));
            const double hh = 1e-3 * f;
            const double d2 = (m.casimir(f + hh) - 2 * m.casimir(f) + m.casimir(f - hh)) / (hh * hh);
            CHECK(m.casimir_d2(f) > 0.0);
            CHECK(d2 == doctest::Approx(m.casimir_d2(f)).epsilon(2e-4));
            // phi^{-1} decreasing
            CHECK(m.phi_inverse(1.01 * f) < m.phi_inverse(f));
        }
    }
}

TEST_CASE("tabulated model validation and CSV loading")
{
    CHECK_THROWS_AS(AnsatzModel::tabulated({0, 1, 2}, {1, 2, 0}), ConfigError);
    CHECK_THROWS_AS(AnsatzModel::tabulated({0, 1, 2}, {2, 1, 0.5}), ConfigError);
    CHECK_THROWS_AS(AnsatzModel::tabulated({0, 0, 2}, {2, 1, 0}), ConfigError);
    const auto path = std::filesystem::temp_directory_path() / "rvp_ansatz_table.csv";
    {
        std::ofstream out(path);
        out << "E,phi\n";
        for (int i = 0; i <= 20; ++i) {
            const double e = -1.0 + 0.05 * i;
            out << e << "," << std::max(0.0, std::expm1(-e)) << "\n";
        }
    }
    auto t = AnsatzModel::from_csv(path.string());
    auto king = AnsatzModel::king(0.0);
    CHECK(t.cutoff() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t.phi(-0.5) == doctest::Approx(king.phi(-0.5)).epsilon(1e-3));
    CHECK(t.phi(0.1) == 0.0);
    CHECK(t.asymptotics().k == 1.0);
    std::filesystem::remove(path);
}

TEST_CASE("shift and gamma rescaling")
{
    auto p = AnsatzModel::polytrope(1.5, 0.2);
    auto s = p.shifted(-0.3);
    CHECK(s.cutoff() == doctest::Approx(-0.1));
    CHECK(s.phi(-0.6) == doctest::Approx(p.phi(-0.3)));
    const double g = 0.25;
    auto r = p.rescaled_to_unit_gamma(g);
    CHECK(r.cutoff() == doctest::Approx(1.0 + g * 0.2));
    for (double E : {0.5, 0.9, 1.04})
        CHECK(r.phi(E) == doctest::Approx(std::pow(g, -1.5) * p.phi((E - 1.0) / g)));
    CHECK(r.asymptotics().c == doctest::Approx(std::pow(g, -1.5 - 1.5)));
    CHECK(p.rescaled_to_unit_gamma(1.0).cutoff() == doctest::Approx(1.2));
}

TEST_CASE("JSON round trip")
{
    auto k = AnsatzModel::king(0.1).rescaled_to_unit_gamma(0.5);
    auto j = k.to_json();
    auto k2 = AnsatzModel::from_json(j);
    for (double E : {0.3, 0.8, 1.04}) CHECK(k2.phi(E) == doctest::Approx(k.phi(E)));
    CHECK(k2.asymptotics().c == doctest::Approx(k.asymptotics().c));
    CHECK_THROWS_AS(AnsatzModel::from_json(nlohmann::json{{"family", "plummer"}}), ConfigError);
}
