#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "rvp/errors.hpp"
#include "rvp/steady_state.hpp"

using namespace rvp;

namespace {

SteadyStateProfile k1() { return solve_profile(AnsatzModel::polytrope(1.0, 1.0), -0.1, 1.0); }

}  // namespace

TEST_CASE("golden k=1 polytrope at gamma=1")
{
    const auto p = k1();
    REQUIRE(p.compact);
    CHECK_FALSE(p.trivial);
    CHECK(p.R == doctest::Approx(3.86211070190402).epsilon(1e-7));
    CHECK(p.M == doctest::Approx(0.154835519159432).epsilon(1e-7));
    CHECK(p.enclosed_mass(p.R) == doctest::Approx(p.M).epsilon(1e-10));
    CHECK(p.density(p.R * 1.001) == 0.0);
    CHECK(equation_residual(p) < 1e-6);

    const auto n = normalize_profile(p);
    CHECK(n.normalized);
    CHECK(n.E0 == doctest::Approx(0.959909093469771).epsilon(1e-8));
    CHECK(std::abs(n.potential_at_infinity()) < 1e-12);
    // the shift leaves E0 - U unchanged
    CHECK(n.E0 - n.potential(1.0) == doctest::Approx(p.E0 - p.potential(1.0)).epsilon(1e-12));
    CHECK(n.dynamical_time() == doctest::Approx(std::sqrt(n.R * n.R * n.R / n.M)));
}

TEST_CASE("golden King model")
{
    const auto p = solve_profile(AnsatzModel::king(1.0), -0.3, 1.0);
    REQUIRE(p.compact);
    CHECK(p.R == doctest::Approx(1.63515).epsilon(1e-5));
    CHECK(p.M == doctest::Approx(0.184125).epsilon(1e-5));
}

TEST_CASE("beta constants")
{
    for (double k : {0.0, 0.5, 1.0, 2.0, 3.5})
        for (double m : {-0.5, 0.5, 1.5, 2.0}) CHECK(c_km(k, m) == doctest::Approx(std::beta(k + 1.0, m + 1.0)).epsilon(1e-11));
    for (double k : {0.5, 1.0, 2.0})
        for (double m : {0.5, 1.5}) CHECK(c_km(k, m - 1.0) / c_km(k, m) == doctest::Approx((k + m + 1.0) / m).epsilon(1e-10));
    CHECK_THROWS_AS(c_km(-1.0, 0.5), DomainError);
}

TEST_CASE("vacuum kernels vanish at and above the threshold")
{
    const auto m = AnsatzModel::polytrope(1.0, 1.0);
    CHECK(vacuum_threshold(m, 1.0) == doctest::Approx(0.0));
    CHECK(vacuum_threshold(m, 0.5) == doctest::Approx(1.0));
    CHECK(source_density(m, 1.0, 0.0) == 0.0);
    CHECK(source_density(m, 1.0, 0.2) == 0.0);
    CHECK(source_density(m, 1.0, -0.1) > 0.0);
    CHECK(source_pressure(m, 1.0, 0.1) == 0.0);
    CHECK_THROWS_AS(source_pressure(m, 0.5, -0.1), UnsupportedError);
    CHECK_THROWS_AS(source_density(m, 1.5, -0.1), DomainError);
}

TEST_CASE("Makino limits of the k=1 polytrope")
{
    const auto lim = makino_limits(k1());
    CHECK(lim.alpha == doctest::Approx(2.0 / 7.0).epsilon(0.02));
    CHECK(lim.beta == doctest::Approx(1.5).epsilon(0.02));
    const auto g = solve_profile(AnsatzModel::polytrope(1.0, 0.0), -0.1, 0.5);
    CHECK_THROWS_AS(makino_limits(g), UnsupportedError);
}

TEST_CASE("k=7/2 loses compact support at gamma=0")
{
    const auto p = solve_profile(AnsatzModel::polytrope(3.5, 0.0), -1.0, 0.0);
    CHECK_FALSE(p.compact);
    const auto q = solve_profile(AnsatzModel::polytrope(2.0, 0.0), -1.0, 0.0);
    CHECK(q.compact);
}

TEST_CASE("gamma rescaling produces a gamma=1 steady state")
{
    const auto p = solve_profile(AnsatzModel::polytrope(1.0, 0.0), -0.2, 0.5);
    REQUIRE(p.compact);
    const auto q = rescale_to_unit_gamma(p);
    CHECK(q.gamma == 1.0);
    const auto direct = solve_profile(q.model, q.u0, 1.0);
    CHECK(direct.R == doctest::Approx(q.R).epsilon(1e-6));
    CHECK(direct.M == doctest::Approx(q.M).epsilon(1e-6));
    CHECK(sup_potential_distance(direct, q) < 1e-6 * std::abs(q.u0));
    CHECK_THROWS_AS(rescale_to_unit_gamma(solve_profile(AnsatzModel::polytrope(1.0, 0.0), -0.2, 0.0)), DomainError);
}

TEST_CASE("potential distance is a metric on profiles")
{
    const auto m = AnsatzModel::polytrope(2.0, 0.0);
    const auto a = solve_profile(m, -1.0, 0.0), b = solve_profile(m, -1.0, 1e-2);
    CHECK(sup_potential_distance(a, a) == 0.0);
    CHECK(sup_potential_distance(a, b) == doctest::Approx(sup_potential_distance(b, a)));
    CHECK(sup_potential_distance(a, b) > 0.0);
}

TEST_CASE("property: random central potentials give consistent compact states")
{
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> depth(0.02, 0.4), kdist(0.2, 1.4);
    for (int trial = 0; trial < 12; ++trial) {
        const double k = kdist(gen), u0 = -depth(gen);
        const auto p = solve_profile(AnsatzModel::polytrope(k, 1.0), u0, 1.0);
        INFO("k = " << k << ", u0 = " << u0);
        REQUIRE(p.compact);
        CHECK(p.R > 0.0);
        CHECK(p.M > 0.0);
        CHECK(equation_residual(p) < 1e-5);
        CHECK(p.potential(p.R) == doctest::Approx(p.threshold()).epsilon(1e-8));
        // m increases and U is monotone
        for (std::size_t i = 1; i < p.r.size(); ++i) {
            CHECK(p.m[i] >= p.m[i - 1]);
            CHECK(p.U[i] >= p.U[i - 1]);
        }
        // Kepler exterior
        CHECK(p.potential(3.0 * p.R) == doctest::Approx(p.potential_at_infinity() - p.M / (3.0 * p.R)).epsilon(1e-10));
    }
}

TEST_CASE("profile files carry the header")
{
    const auto p = k1();
    const auto dir = std::filesystem::temp_directory_path() / "rvp_test_profile";
    std::filesystem::create_directories(dir);
    p.write((dir / "p.csv").string(), (dir / "p.json").string());
    std::ifstream csv(dir / "p.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "r,U,rho,m,p");
    const auto j = nlohmann::json::parse(std::ifstream(dir / "p.json"));
    CHECK(j.at("R").get<double>() == p.R);
    CHECK(j.at("model").at("family").get<std::string>() == "polytrope");
    std::filesystem::remove_all(dir);
}
