#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "rvp/dynamics.hpp"
#include "rvp/errors.hpp"
#include "rvp/parallel.hpp"

using namespace rvp;

namespace {

const SteadyStateProfile& state()
{
    static const auto p = normalize_profile(solve_profile(AnsatzModel::polytrope(1.0, 1.0), -0.1, 1.0));
    return p;
}

const MarkerResolution kCoarse{24, 24, 8};

}  // namespace

TEST_CASE("markers sample the steady state")
{
    const auto& p = state();
    const auto e = init_markers(p, kCoarse);
    REQUIRE(!e.empty());
    CHECK(e.total_mass() == doctest::Approx(p.M).epsilon(2e-2));
    const auto fine = init_markers(p, {48, 48, 16});
    CHECK(std::abs(fine.total_mass() - p.M) < std::abs(e.total_mass() - p.M));
    std::set<std::size_t> ids(e.id.begin(), e.id.end());
    CHECK(ids.size() == e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        CHECK(e.f[i] > 0.0);
        CHECK(e.vol[i] > 0.0);
        CHECK(e.r[i] > 0.0);
    }
    CHECK_THROWS_AS(init_markers(p, {0, 8, 8}), ConfigError);
}

TEST_CASE("sums do not depend on marker order")
{
    auto e = init_markers(state(), kCoarse);
    const double m = e.total_mass(), c = e.casimir(state().model), k = e.kinetic_energy();
    std::vector<std::size_t> perm(e.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
    e.permute(perm);
    CHECK(e.total_mass() == m);
    CHECK(e.casimir(state().model) == c);
    CHECK(e.kinetic_energy() == k);
}

TEST_CASE("shell field")
{
    const RadialField F({2.0, 1.0}, {0.5, 0.25});
    CHECK(F.total_mass() == 0.75);
    CHECK(F.enclosed_mass(0.5) == 0.0);
    CHECK(F.enclosed_mass(1.5) == 0.25);
    CHECK(F.enclosed_mass(3.0) == 0.75);
    CHECK(F.potential(0.5) == doctest::Approx(-0.25 / 1.0 - 0.5 / 2.0));
    CHECK(F.potential(1.5) == doctest::Approx(-0.25 / 1.5 - 0.5 / 2.0));
    CHECK(F.potential(4.0) == doctest::Approx(-0.75 / 4.0));
    CHECK(F.potential_d(1.5) == doctest::Approx(0.25 / 2.25));
    // -1/2 int m^2/r^2: 0.25^2 (1 - 1/2) + 0.75^2 / 2
    CHECK(F.field_energy() == doctest::Approx(-0.5 * (0.0625 * 0.5 + 0.5625 * 0.5)));
    const RadialField G({1.0}, {0.25});
    CHECK(field_difference(F, F) == 0.0);
    CHECK(field_difference(F, G) == doctest::Approx(field_difference(G, F)));
    CHECK(field_difference(F, G) == doctest::Approx(0.5 * 0.25 / 2.0));
}

TEST_CASE("shell field of the markers approaches the profile")
{
    const auto& p = state();
    const auto a = init_markers(p, kCoarse), b = init_markers(p, {48, 48, 16});
    CHECK(field_difference(compute_field(b), p) < field_difference(compute_field(a), p));
}

TEST_CASE("circular orbit in a point-mass field")
{
    const double M = 1.0, r0 = 2.0;
    // L/(r^3 g) = M/r^2 with x = L/r^2: x^2 = a^2 (1 + x), a = M/r
    const double a = M / r0;
    const double x = 0.5 * (a * a + std::sqrt(a * a * a * a + 4.0 * a * a));
    MarkerEnsemble e;
    e.push(r0, 0.0, x * r0 * r0, 1.0, 1.0);
    advance_in_field(e, [&](double r) { return M / (r * r); }, 0.01, 1000);
    CHECK(e.r[0] == doctest::Approx(r0).epsilon(1e-9));
    CHECK(std::abs(e.w[0]) < 1e-9);
}

TEST_CASE("steady ensemble conserves H, Casimir and mass")
{
    const auto& p = state();
    auto e = init_markers(p, kCoarse);
    const auto e0 = e;
    EvolveOptions o;
    o.t_final = p.dynamical_time();
    o.cadence = 0.25 * o.t_final;
    o.dt_floor = 1e-9 * o.t_final;
    const auto res = evolve(e, &p.model, o);
    REQUIRE(res.status == EvolveStatus::Completed);
    REQUIRE(res.series.size() >= 5);
    const double H0 = res.series.front().H;
    CHECK(H0 == doctest::Approx(total_energy(e0)));
    for (const auto& rec : res.series) {
        CHECK(std::abs(rec.H - H0) < 1e-4 * std::abs(H0));
        CHECK(rec.casimir == res.series.front().casimir);
        CHECK(rec.mass == res.series.front().mass);
    }
    CHECK(e.casimir(p.model) == e0.casimir(p.model));
    CHECK(e.total_mass() == e0.total_mass());
    CHECK(res.series.back().time == doctest::Approx(o.t_final));
}

TEST_CASE("lockstep runs match single runs and thread counts agree")
{
    const auto& p = state();
    const auto e0 = init_markers(p, {16, 16, 6});
    EvolveOptions o;
    o.t_final = 0.3 * p.dynamical_time();
    o.dt_floor = 1e-12;
    auto a = e0;
    set_thread_count(1);
    const auto ra = evolve(a, &p.model, o);
    auto b = e0, c = e0;
    set_thread_count(4);
    const auto rs = evolve_lockstep({&b, &c}, &p.model, o);
    set_thread_count(1);
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].steps == ra.steps);
    CHECK(b.r == a.r);
    CHECK(c.w == a.w);
    CHECK(rs[1].series.back().H == ra.series.back().H);
}

TEST_CASE("cold collapsing shell with H < 0 is flagged")
{
    auto e = cold_shell(4.0, 1.0, 0.1, 0.5, 1.0, 20, 20);
    CHECK(total_energy(e) < 0.0);
    EvolveOptions o;
    o.t_final = 10.0 * std::sqrt(1.0 / 4.0);
    o.dt_floor = 1e-9 * std::sqrt(1.0 / 4.0);
    const auto res = evolve(e, nullptr, o);
    CHECK(res.status == EvolveStatus::BlowUp);
    CHECK(std::isfinite(res.blowup_time));
    CHECK(res.blowup_time < o.t_final);
}

TEST_CASE("blow-up scan of a diagnostics series")
{
    std::vector<DiagnosticsRecord> s(3);
    for (int i = 0; i < 3; ++i) {
        s[i].time = i;
        s[i].dt = 1.0;
        s[i].max_density = 1.0;
    }
    CHECK_FALSE(detect_blowup(s, 1e-6).flagged);
    s[2].max_density = 2e4;
    CHECK_FALSE(detect_blowup(s, 1e-6).flagged);  // dense but dt above floor
    s[2].dt = 1e-7;
    const auto f = detect_blowup(s, 1e-6);
    CHECK(f.flagged);
    CHECK(f.time == 2.0);
}

TEST_CASE("diagnostics and snapshot files")
{
    const std::string header = diagnostics_header();
    CHECK(header == "time,dt,E_kin,E_pot,H,casimir,mass,P,max_density,d,field_part");
    DiagnosticsRecord rec;
    const std::string row = diagnostics_row(rec);
    CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
    const auto dir = std::filesystem::temp_directory_path() / "rvp_test_snapshot";
    std::filesystem::create_directories(dir);
    const auto e = init_markers(state(), {8, 8, 4});
    e.write_snapshot((dir / "s.csv").string(), (dir / "s.json").string(), 1.5, "abc");
    const auto j = nlohmann::json::parse(std::ifstream(dir / "s.json"));
    CHECK(j.at("config_hash") == "abc");
    CHECK(j.at("markers").get<std::size_t>() == e.size());
    std::filesystem::remove_all(dir);
}

TEST_CASE("frozen field: energy conserved and time reversal retraces")
{
    const auto& p = state();
    auto e = init_markers(p, {12, 12, 4});
    const auto e0 = e;
    auto dU = [&](double r) { return p.potential_d(r); };
    const double td = p.dynamical_time();
    const int steps = 2000;
    advance_in_field(e, dU, td / steps, steps);
    double worst = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double E0 = particle_energy(p, {e0.r[i], e0.w[i], e0.L[i]});
        worst = std::max(worst, std::abs(particle_energy(p, {e.r[i], e.w[i], e.L[i]}) - E0));
    }
    CHECK(worst < 1e-10);
    for (auto& w : e.w) w = -w;
    advance_in_field(e, dU, td / steps, steps);
    for (std::size_t i = 0; i < e.size(); ++i) {
        CHECK(e.r[i] == doctest::Approx(e0.r[i]).epsilon(1e-8));
        CHECK(-e.w[i] == doctest::Approx(e0.w[i]).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("default-resolution ensemble reproduces the profile")
{
    const auto& p = state();
    const auto e = init_markers(p);
    const auto F = compute_field(e);
    double sup = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double r = 1e-6 + 1.2 * p.R * i / 400.0;
        sup = std::max(sup, std::abs(F.potential(r) - p.potential(r)));
    }
    CHECK(sup < 1e-2 * std::abs(p.potential(0.0)));
    CHECK(F.potential_d(2.0 * p.R) == doctest::Approx(e.total_mass() / (4.0 * p.R * p.R)));
    const auto ekin = reduced_quadrature(p, [&](double r, double w, double L) {
        return std::sqrt(1.0 + w * w + L / (r * r)) * p.model.phi(particle_energy(p, {r, w, L}));
    });
    CHECK(e.kinetic_energy() == doctest::Approx(ekin.value).epsilon(5e-3));
    CHECK(e.total_mass() == doctest::Approx(p.M).epsilon(5e-3));
    const MarkerEnsemble empty;
    CHECK(empty.total_mass() == 0.0);
    CHECK(empty.kinetic_energy() == 0.0);
}
