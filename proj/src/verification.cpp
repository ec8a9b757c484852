#include "rvp/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

#include "rvp/dynamics.hpp"
#include "rvp/errors.hpp"
#include "rvp/experiment.hpp"
#include "rvp/phase_geometry.hpp"
#include "rvp/stability.hpp"
#include "rvp/steady_state.hpp"

namespace rvp {

namespace {

// Pinned tolerances; every one is multiplied by VerifyOptions::tolerance_scale.
namespace tol {
constexpr double beta_ratio = 1e-8;
constexpr double makino_rel = 0.02;
constexpr double compact_refine_rel = 1e-6;
constexpr double vacuum_density_rel = 1e-12;
constexpr double gamma_slope = 0.1;
constexpr double jacobian_rel = 0.005;
constexpr double orbit_change = 1e-6;
constexpr double kandrup_margin = 1e-6;
constexpr double tangency_error_factor = 4.0;  // |residual| <= factor x quadrature error estimate
constexpr double energy_drift = 1e-3;
constexpr double min_order = 3.5;  // RK4 under one dt halving; not scaled
constexpr double d_growth = 10.0;
constexpr double d_slope = 0.1;
constexpr double control_refine_rel = 0.25;
}  // namespace tol

std::string num(double x, int digits = 4)
{
    std::ostringstream s;
    s << std::setprecision(digits) << x;
    return s.str();
}

SteadyStateProfile polytrope_k1()
{
    return normalize_profile(solve_profile(AnsatzModel::polytrope(1.0, 1.0), -0.1, 1.0));
}

SteadyStateProfile king_state() { return normalize_profile(solve_profile(AnsatzModel::king(1.0), -0.3, 1.0)); }

// Shared by 11, 12 and 14: the breathing family evolved for 10 dynamical times.
struct Shared {
    std::optional<SteadyStateProfile> k1;
    std::optional<StabilityExperiment> family;

    const SteadyStateProfile& profile()
    {
        if (!k1) k1 = polytrope_k1();
        return *k1;
    }
    const StabilityExperiment& stability()
    {
        if (!family) {
            StabilityOptions so;
            so.family = GeneratorFamily::Breathing;
            so.eps = {1e-3, 3e-3, 1e-2};
            so.t_final = 10.0;
            family = run_stability_experiment(profile(), so);
        }
        return *family;
    }
};

using Check = std::function<void(CriterionResult&, double, Shared&)>;

void c1(CriterionResult& r, double s, Shared&)
{
    double worst = 0.0;
    for (double k : {0.5, 1.0, 2.0})
        for (double m : {0.5, 1.5}) {
            const double err = std::abs(c_km(k, m - 1.0) / c_km(k, m) - (k + m + 1.0) / m);
            worst = std::max(worst, err);
        }
    r.passed = worst < tol::beta_ratio * s;
    r.measured = {{"max_error", worst}, {"tolerance", tol::beta_ratio * s}};
    r.summary = "max |ratio - (k+m+1)/m| = " + num(worst);
}

void c2(CriterionResult& r, double s, Shared& sh)
{
    const auto lim = makino_limits(sh.profile());
    const double ea = std::abs(lim.alpha - 2.0 / 7.0) / (2.0 / 7.0);
    const double eb = std::abs(lim.beta - 1.5) / 1.5;
    r.passed = ea < tol::makino_rel * s && eb < tol::makino_rel * s;
    r.measured = {{"alpha", lim.alpha}, {"beta", lim.beta}, {"alpha_rel_error", ea},
                  {"beta_rel_error", eb}, {"tolerance", tol::makino_rel * s}};
    r.summary = "alpha = " + num(lim.alpha, 6) + ", beta = " + num(lim.beta, 6);
}

void c3(CriterionResult& r, double s, Shared&)
{
    struct Case {
        std::string name;
        AnsatzModel model;
        double u0;
    };
    const std::vector<Case> cases{{"king", AnsatzModel::king(1.0), -0.3},
                                  {"k=1", AnsatzModel::polytrope(1.0, 1.0), -0.1},
                                  {"k=1.4", AnsatzModel::polytrope(1.4, 1.0), -0.1}};
    bool ok = true;
    double worst = 0.0;
    r.measured["states"] = nlohmann::json::array();
    for (const auto& c : cases) {
        SolverOptions fine;
        fine.rtol = 0.5e-8;
        const auto a = solve_profile(c.model, c.u0, 1.0);
        const auto b = solve_profile(c.model, c.u0, 1.0, fine);
        const double dR = std::abs(a.R - b.R) / b.R, dM = std::abs(a.M - b.M) / b.M;
        const bool good = a.compact && b.compact && std::isfinite(a.R) && std::isfinite(a.M);
        ok = ok && good;
        worst = std::max({worst, dR, dM});
        r.measured["states"].push_back({{"state", c.name}, {"R", a.R}, {"M", a.M}, {"dR", dR}, {"dM", dM}});
    }
    const auto nc = solve_profile(AnsatzModel::polytrope(3.5, 0.0), -1.0, 0.0);
    r.passed = ok && worst < tol::compact_refine_rel * s && !nc.compact;
    r.measured["max_refine_change"] = worst;
    r.measured["k3.5_gamma0_compact"] = nc.compact;
    r.measured["tolerance"] = tol::compact_refine_rel * s;
    r.summary = "max R/M change under rtol halving " + num(worst) + ", k=7/2 gamma=0 compact=" +
                (nc.compact ? "true" : "false");
}

void c4(CriterionResult& r, double s, Shared&)
{
    const ExperimentConfig atlas;
    double worst = 0.0;
    int count = 0;
    for (double gamma : atlas.sweep_gamma) {
        const double E0 = gamma == 1.0 ? 1.0 : 0.0;
        for (double u0 : atlas.sweep_u0) {
            std::vector<AnsatzModel> models;
            for (double k : atlas.sweep_k) models.push_back(AnsatzModel::polytrope(k, E0));
            if (atlas.sweep_king) models.push_back(AnsatzModel::king(E0));
            for (const auto& m : models) {
                const auto p = solve_profile(m, u0, gamma);
                if (!p.compact || p.trivial) continue;
                const double ratio = source_density(m, gamma, p.potential_at_infinity()) / source_density(m, gamma, p.U.front());
                worst = std::max(worst, ratio);
                ++count;
            }
        }
    }
    r.passed = count > 0 && worst < tol::vacuum_density_rel * s;
    r.measured = {{"compact_profiles", count}, {"max_ratio", worst}, {"tolerance", tol::vacuum_density_rel * s}};
    r.summary = std::to_string(count) + " compact profiles, max g(U_inf)/g(U(0)) = " + num(worst);
}

void c5(CriterionResult& r, double s, Shared&)
{
    const auto model = AnsatzModel::polytrope(2.0, 0.0);
    const auto base = solve_profile(model, -1.0, 0.0);
    std::vector<double> gs{1e-1, 1e-2, 1e-3, 1e-4}, ds;
    for (double g : gs) ds.push_back(sup_potential_distance(solve_profile(model, -1.0, g), base));
    const double slope = loglog_slope(gs, ds);
    r.passed = std::abs(slope - 1.0) <= tol::gamma_slope * s;
    r.measured = {{"gammas", gs}, {"distances", ds}, {"slope", slope}, {"tolerance", tol::gamma_slope * s}};
    r.summary = "slope " + num(slope, 6);
}

void c6(CriterionResult& r, double s, Shared& sh)
{
    const auto& p = sh.profile();
    auto f0 = [&](double x, double w, double L) { return p.model.phi(particle_energy(p, {x, w, L})); };
    const auto a = reduced_quadrature(p, f0);
    const auto e = reduced_quadrature_energy(p, f0);
    const double rel = std::abs(a.value - e.value) / std::abs(e.value);
    r.passed = rel < tol::jacobian_rel * s;
    r.measured = {{"mass_rwL", a.value}, {"mass_rEL", e.value}, {"profile_M", p.M}, {"rel_diff", rel},
                  {"tolerance", tol::jacobian_rel * s}};
    r.summary = "M(r,w,L) = " + num(a.value, 8) + ", M(r,E,L) = " + num(e.value, 8) + ", rel diff " + num(rel);
}

void c7(CriterionResult& r, double s, Shared& sh)
{
    const auto& p = sh.profile();
    const double Lmax = max_angular_momentum(p);
    double worst = 0.0;
    bool finite = true;
    for (int i = 0; i < 20; ++i) {
        const double L = Lmax * (0.1 + 0.9 * (i + 0.5) / 20.0);
        const double psi = min_radius(p, L).psi_min;
        for (int j = 0; j < 20; ++j) {
            const double E = psi + (p.E0 - psi) * (j + 0.5) / 20.0;
            const auto q = orbit_q_integral(p, E, L);
            finite = finite && std::isfinite(q.value) && q.value > 0.0;
            worst = std::max(worst, q.change);
        }
    }
    r.passed = finite && worst < tol::orbit_change * s;
    r.measured = {{"samples", 400}, {"all_finite", finite}, {"max_change", worst}, {"tolerance", tol::orbit_change * s}};
    r.summary = "400 orbits, max relative change under doubling " + num(worst);
}

const PhaseGrid kSuiteGrid{64, 64, 16};
constexpr int kSuiteSize = 20;
constexpr std::uint64_t kSuiteSeed = 1000;

void c8(CriterionResult& r, double s, Shared&)
{
    const auto p = king_state();
    double worst = std::numeric_limits<double>::infinity();
    bool rhs_positive = true;
    for (int i = 0; i < kSuiteSize; ++i) {
        const auto h = KandrupTestFunction::random(p, kSuiteSeed + i);
        const auto k = kandrup_check(p, h, kSuiteGrid);
        worst = std::min(worst, k.margin / k.scale);
        rhs_positive = rhs_positive && k.rhs > 0.0;
    }
    r.passed = worst >= -tol::kandrup_margin * s && rhs_positive;
    r.measured = {{"count", kSuiteSize}, {"min_margin_over_scale", worst}, {"rhs_positive", rhs_positive},
                  {"tolerance", tol::kandrup_margin * s}};
    r.summary = std::to_string(kSuiteSize) + " test functions, min margin/scale " + num(worst);
}

void c9(CriterionResult& r, double s, Shared&)
{
    const auto p = king_state();
    double worst = 0.0;  // max |residual| / (factor x error)
    double worst_rel = 0.0;
    for (int i = 0; i < kSuiteSize; ++i) {
        const auto tf = KandrupTestFunction::random(p, kSuiteSeed + i).bind(p);
        const auto t = tangency_residual(p, [&](double x, double w, double L) { return bracket_with_f0(p, tf, {x, w, L}); },
                                         kSuiteGrid);
        for (int g = 0; g < 4; ++g) {
            const double allowed = tol::tangency_error_factor * s * t.error[g] + 1e-13 * t.scale[g];
            worst = std::max(worst, std::abs(t.value[g]) / allowed);
            worst_rel = std::max(worst_rel, std::abs(t.value[g]) / t.scale[g]);
        }
    }
    // negative control: g = f0 is not tangent; the f^2 residual is 2 int f0^2
    auto f0 = [&](double x, double w, double L) { return p.model.phi(particle_energy(p, {x, w, L})); };
    const auto neg = tangency_residual(p, f0, kSuiteGrid);
    const double expected = reduced_quadrature(p, [&](double x, double w, double L) {
                                const double f = f0(x, w, L);
                                return 2.0 * f * f;
                            }, kSuiteGrid).value;
    const bool control = std::abs(neg.value[0]) > 100.0 * neg.error[0] &&
                         std::abs(neg.value[0] - expected) <= 0.01 * std::abs(expected);
    r.passed = worst <= 1.0 && control;
    r.measured = {{"max_residual_over_allowed", worst}, {"max_residual_over_scale", worst_rel},
                  {"control_residual", neg.value[0]}, {"control_expected", expected}, {"control_ok", control}};
    r.summary = "max |residual|/allowed " + num(worst) + " (max relative " + num(worst_rel) +
                "); control f0 residual " + num(neg.value[0]);
}

void c10(CriterionResult& r, double s, Shared& sh)
{
    const auto& p = sh.profile();
    const auto e0 = init_markers(p);
    const double td = p.dynamical_time();
    double drift[2];
    bool exact = true;
    int i = 0;
    for (double kappa : {0.05, 0.025}) {
        auto e = e0;
        EvolveOptions o;
        o.t_final = 10.0 * td;
        o.cadence = 0.5 * td;
        o.dt_floor = 1e-9 * td;
        o.kappa = kappa;
        const auto res = evolve(e, &p.model, o);
        if (res.status != EvolveStatus::Completed) throw NumericalError("conservation run stopped: " + res.message);
        const double H0 = res.series.front().H;
        double d = 0.0;
        for (const auto& rec : res.series) d = std::max(d, std::abs(rec.H - H0) / std::abs(H0));
        drift[i++] = d;
        exact = exact && e.casimir(p.model) == e0.casimir(p.model) && e.total_mass() == e0.total_mass();
    }
    const double order = std::log2(drift[0] / drift[1]);
    r.passed = drift[0] < tol::energy_drift * s && exact && order >= tol::min_order;
    r.measured = {{"drift_kappa_0.05", drift[0]}, {"drift_kappa_0.025", drift[1]}, {"order", order},
                  {"casimir_and_mass_exact", exact}, {"markers", e0.size()}};
    r.summary = "H drift " + num(drift[0]) + " -> " + num(drift[1]) + " (order " + num(order, 3) +
                "), Casimir/mass exact " + (exact ? "yes" : "no");
}

void c11(CriterionResult& r, double s, Shared& sh)
{
    const auto& ex = sh.stability();
    double worstC = 0.0;
    bool completed = ex.reference_run.status == EvolveStatus::Completed;
    r.measured["members"] = nlohmann::json::array();
    for (const auto& m : ex.members) {
        worstC = std::max(worstC, m.C);
        completed = completed && m.run.status == EvolveStatus::Completed;
        r.measured["members"].push_back({{"eps", m.eps}, {"d0", m.d0}, {"max_d", m.max_d}, {"C", m.C}});
    }
    r.measured["d0_slope"] = ex.d0_slope;
    r.measured["max_C"] = worstC;
    r.passed = completed && worstC <= tol::d_growth * s && std::abs(ex.d0_slope - 2.0) <= tol::d_slope * s;
    r.summary = "max_t d(t)/d(0) = " + num(worstC) + ", d(0) slope " + num(ex.d0_slope, 5);
}

void c12(CriterionResult& r, double, Shared& sh)
{
    const auto& ex = sh.stability();
    bool nonneg = true;
    double C0 = std::numeric_limits<double>::infinity();
    r.measured["members"] = nlohmann::json::array();
    for (const auto& m : ex.members) {
        nonneg = nonneg && m.initial.delta_HC >= 0.0;
        C0 = std::min(C0, m.C0);
        r.measured["members"].push_back(
            {{"eps", m.eps}, {"HC_gap", m.initial.delta_HC}, {"field_part", m.initial.field_part}, {"ratio", m.C0}});
    }
    r.measured["C0"] = C0;
    r.passed = nonneg && C0 > 0.0;
    r.summary = "H_C gap >= 0: " + std::string(nonneg ? "yes" : "no") + ", fitted C0 = " + num(C0);
}

void c13(CriterionResult& r, double, Shared& sh)
{
    auto run_shell = [](double M) {
        auto e = cold_shell(M, 1.0, 0.1, 0.5, 1.0, 40, 40);
        const double H = total_energy(e);
        const double td = std::sqrt(1.0 / M);
        EvolveOptions o;
        o.t_final = 10.0 * td;
        o.cadence = 0.5 * td;
        o.dt_floor = 1e-9 * td;
        return std::make_pair(H, evolve(e, nullptr, o));
    };
    const auto [H_neg, neg] = run_shell(4.0);
    const auto [H_pos, pos] = run_shell(0.2);

    // steady state with a small inward kick: H > 0 and d small
    const auto& p = sh.profile();
    const auto ref = make_reference(p);
    auto e = generate_perturbation(ref.markers, PerturbationGenerator::standard(GeneratorFamily::InwardBoost, p), 1e-2,
                                   default_box(p));
    const double H_kick = total_energy(e);
    const double d_kick = distance_d(e, ref).d;
    const double td = p.dynamical_time();
    EvolveOptions o;
    o.t_final = 10.0 * td;
    o.cadence = 0.5 * td;
    o.dt_floor = 1e-9 * td;
    const auto kick = evolve(e, &ref.model, o);

    const bool blew = H_neg < 0.0 && neg.status == EvolveStatus::BlowUp && std::isfinite(neg.blowup_time);
    const bool shell_ok = H_pos > 0.0 && pos.status == EvolveStatus::Completed;
    const bool kick_ok = H_kick > 0.0 && kick.status == EvolveStatus::Completed;
    r.passed = blew && shell_ok && kick_ok;
    r.measured = {{"H_negative_preset", H_neg},  {"blowup_time", neg.blowup_time},
                  {"H_positive_preset", H_pos},  {"positive_completed", pos.status == EvolveStatus::Completed},
                  {"H_kicked_steady", H_kick},   {"d_kicked_steady", d_kick},
                  {"kicked_completed", kick.status == EvolveStatus::Completed}};
    r.summary = "H = " + num(H_neg) + " blow-up at t = " + num(neg.blowup_time) + "; H = " + num(H_pos) +
                " and kicked steady state (H = " + num(H_kick) + ", d = " + num(d_kick) + ") complete 10 t_dyn";
}

void c14(CriterionResult& r, double s, Shared& sh)
{
    const auto& ex = sh.stability();
    double coarse = 0.0;
    for (const auto& m : ex.members) coarse = std::max(coarse, m.initial.control_ratio);
    StabilityOptions so;
    so.eps = {1e-3, 3e-3, 1e-2};
    so.resolution = {128, 128, 32};
    so.t_final = 0.0;
    const auto fine_ex = run_stability_experiment(sh.profile(), so);
    double fine = 0.0;
    bool positive = true;
    for (const auto& m : fine_ex.members) {
        fine = std::max(fine, m.initial.control_ratio);
        positive = positive && m.initial.d > 0.0;
    }
    const double change = std::abs(fine - coarse) / coarse;
    r.passed = positive && std::isfinite(coarse) && std::isfinite(fine) && change <= tol::control_refine_rel * s;
    r.measured = {{"max_ratio_64x64x32", coarse}, {"max_ratio_128x128x32", fine}, {"rel_change", change},
                  {"tolerance", tol::control_refine_rel * s}};
    r.summary = "max control ratio " + num(coarse) + " (64,64,32) vs " + num(fine) + " (128,128,32)";
}

const std::vector<std::pair<std::string, Check>>& table()
{
    static const std::vector<std::pair<std::string, Check>> t{
        {"beta-ratio identity", c1},      {"Makino limits", c2},         {"compact support", c3},
        {"vacuum density", c4},           {"gamma convergence", c5},     {"Jacobian consistency", c6},
        {"orbit q-integral", c7},         {"Kandrup suite", c8},         {"tangency", c9},
        {"conservation", c10},            {"d(t) boundedness", c11},     {"energy-Casimir gap", c12},
        {"blow-up dichotomy", c13},       {"control inequality", c14}};
    return t;
}

}  // namespace

std::string criterion_name(int id)
{
    if (id < 1 || id > kCriterionCount) throw ConfigError("criterion id out of range");
    return table()[id - 1].first;
}

std::vector<CriterionResult> run_verification(const VerifyOptions& opt)
{
    std::vector<int> ids = opt.criteria;
    if (ids.empty())
        for (int i = 1; i <= kCriterionCount; ++i) ids.push_back(i);
    Shared shared;
    std::vector<CriterionResult> out;
    for (int id : ids) {
        CriterionResult r;
        r.id = id;
        r.name = criterion_name(id);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            table()[id - 1].second(r, opt.tolerance_scale, shared);
        } catch (const std::exception& e) {
            r.passed = false;
            r.summary = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (opt.on_result) opt.on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_result(const CriterionResult& r)
{
    std::ostringstream s;
    s << (r.passed ? "[PASS] " : "[FAIL] ") << std::setw(2) << r.id << ' ' << r.name << ": " << r.summary << " ("
      << std::fixed << std::setprecision(1) << r.seconds << " s)";
    return s.str();
}

}  // namespace rvp
