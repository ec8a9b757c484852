#include "rvp/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "rvp/errors.hpp"
#include "rvp/verification.hpp"

namespace rvp {

namespace {

namespace fs = std::filesystem;

const std::set<std::string> kKeys = {
    "model",   "gamma",     "u0",        "resolution",     "initial",        "cold_shell",  "family",
    "eps",     "t_final",   "kappa",     "dt_floor",       "cadence",        "snapshot_every",
    "sweep_k", "sweep_king", "sweep_u0", "sweep_gamma",    "gammas",         "kandrup_count",
    "kandrup_degree",       "taper_fraction",              "kandrup_grid",   "criteria",    "tolerance_scale",
    "seed",    "threads",   "out_dir"};

template <class T>
void read(const nlohmann::json& j, const char* key, T& out)
{
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

std::string fmt(double x)
{
    if (std::isnan(x)) return "nan";
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

std::string timestamp()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

fs::path prepare_out(const ExperimentConfig& cfg)
{
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + cfg.out_dir + ": " + ec.message());
    return dir;
}

// Timestamped provenance lives in the manifest so the data files stay
// byte-identical across runs of one config.
void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const std::string& command,
                    const nlohmann::json& extra = {})
{
    nlohmann::json j{{"command", command},   {"config", cfg.to_json()}, {"config_hash", cfg.hash()},
                     {"version", kVersion},  {"timestamp", timestamp()}};
    if (!extra.is_null()) j["result"] = extra;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw ConfigError("cannot write " + (dir / "manifest.json").string());
    out << j.dump(2) << '\n';
}

std::ofstream open_csv(const fs::path& path, const ExperimentConfig& cfg)
{
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "# rvp " << kVersion << " config " << cfg.hash() << '\n';
    return out;
}

void write_series(const fs::path& path, const ExperimentConfig& cfg, const std::vector<DiagnosticsRecord>& series)
{
    auto out = open_csv(path, cfg);
    out << diagnostics_header() << '\n';
    for (const auto& rec : series) out << diagnostics_row(rec) << '\n';
}

int status_code(const std::vector<const EvolveResult*>& runs)
{
    int code = kExitOk;
    for (const auto* r : runs) {
        if (r->status == EvolveStatus::NumericalFailure) return kExitNumerical;
        if (r->status == EvolveStatus::BlowUp) code = kExitBlowUp;
    }
    return code;
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& item : j.items())
        if (!kKeys.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
    ExperimentConfig c;
    if (j.contains("model")) c.model = j.at("model");
    read(j, "gamma", c.gamma);
    read(j, "u0", c.u0);
    if (j.contains("resolution")) {
        const auto& r = j.at("resolution");
        read(r, "nr", c.resolution.nr);
        read(r, "nw", c.resolution.nw);
        read(r, "nL", c.resolution.nL);
    }
    read(j, "initial", c.initial);
    if (j.contains("cold_shell")) {
        const auto& s = j.at("cold_shell");
        read(s, "M", c.cold_shell.M);
        read(s, "R0", c.cold_shell.R0);
        read(s, "thickness", c.cold_shell.thickness);
        read(s, "w0", c.cold_shell.w0);
        read(s, "L_scale", c.cold_shell.L_scale);
        read(s, "n_shells", c.cold_shell.n_shells);
        read(s, "n_per_shell", c.cold_shell.n_per_shell);
    }
    if (j.contains("family") && !j.at("family").is_null()) {
        std::string f;
        read(j, "family", f);
        try {
            c.family = generator_family_from_string(f);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    read(j, "eps", c.eps);
    read(j, "t_final", c.t_final);
    read(j, "kappa", c.kappa);
    read(j, "dt_floor", c.dt_floor);
    read(j, "cadence", c.cadence);
    read(j, "snapshot_every", c.snapshot_every);
    read(j, "sweep_k", c.sweep_k);
    read(j, "sweep_king", c.sweep_king);
    read(j, "sweep_u0", c.sweep_u0);
    read(j, "sweep_gamma", c.sweep_gamma);
    read(j, "gammas", c.gammas);
    read(j, "kandrup_count", c.kandrup_count);
    read(j, "kandrup_degree", c.kandrup_degree);
    read(j, "taper_fraction", c.taper_fraction);
    if (j.contains("kandrup_grid")) {
        const auto& g = j.at("kandrup_grid");
        read(g, "nr", c.kandrup_grid.nr);
        read(g, "nw", c.kandrup_grid.nw);
        read(g, "nL", c.kandrup_grid.nL);
    }
    read(j, "criteria", c.criteria);
    read(j, "tolerance_scale", c.tolerance_scale);
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
    read(j, "out_dir", c.out_dir);
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const
{
    nlohmann::json j;
    j["model"] = model;
    j["gamma"] = gamma;
    j["u0"] = u0;
    j["resolution"] = {{"nr", resolution.nr}, {"nw", resolution.nw}, {"nL", resolution.nL}};
    j["initial"] = initial;
    j["cold_shell"] = {{"M", cold_shell.M},           {"R0", cold_shell.R0},
                       {"thickness", cold_shell.thickness}, {"w0", cold_shell.w0},
                       {"L_scale", cold_shell.L_scale}, {"n_shells", cold_shell.n_shells},
                       {"n_per_shell", cold_shell.n_per_shell}};
    j["family"] = family ? nlohmann::json(to_string(*family)) : nlohmann::json(nullptr);
    j["eps"] = eps;
    j["t_final"] = t_final;
    j["kappa"] = kappa;
    j["dt_floor"] = dt_floor;
    j["cadence"] = cadence;
    j["snapshot_every"] = snapshot_every;
    j["sweep_k"] = sweep_k;
    j["sweep_king"] = sweep_king;
    j["sweep_u0"] = sweep_u0;
    j["sweep_gamma"] = sweep_gamma;
    j["gammas"] = gammas;
    j["kandrup_count"] = kandrup_count;
    j["kandrup_degree"] = kandrup_degree;
    j["taper_fraction"] = taper_fraction;
    j["kandrup_grid"] = {{"nr", kandrup_grid.nr}, {"nw", kandrup_grid.nw}, {"nL", kandrup_grid.nL}};
    j["criteria"] = criteria;
    j["tolerance_scale"] = tolerance_scale;
    j["seed"] = seed;
    j["threads"] = threads;
    j["out_dir"] = out_dir;
    return j;
}

void ExperimentConfig::validate() const
{
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(model.is_object() && model.contains("family"), "model must be an object with a 'family' key");
    try {
        (void)AnsatzModel::from_json(model);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
    require(std::isfinite(u0), "u0 must be finite");
    require(resolution.nr > 0 && resolution.nw > 0 && resolution.nL > 0, "resolution entries must be positive");
    require(initial == "steady" || initial == "cold-shell", "initial must be 'steady' or 'cold-shell'");
    require(cold_shell.M > 0.0 && cold_shell.R0 > 0.0 && cold_shell.thickness > 0.0 && cold_shell.L_scale >= 0.0 &&
                cold_shell.n_shells > 0 && cold_shell.n_per_shell > 0,
            "cold_shell entries must be positive");
    for (double e : eps) require(e > 0.0 && std::isfinite(e), "eps entries must be positive");
    require(t_final >= 0.0 && std::isfinite(t_final), "t_final must be nonnegative");
    require(kappa > 0.0 && kappa <= 0.5, "kappa must lie in (0, 0.5]");
    require(dt_floor > 0.0, "dt_floor must be positive");
    require(cadence >= 0.0, "cadence must be nonnegative");
    require(snapshot_every >= 0, "snapshot_every must be nonnegative");
    for (double k : sweep_k) require(k > -0.5, "sweep_k entries must exceed -1/2");
    for (double u : sweep_u0) require(u < 0.0, "sweep_u0 entries must be negative");
    for (double g : sweep_gamma) require(g >= 0.0 && g <= 1.0, "sweep_gamma entries must lie in [0, 1]");
    for (double g : gammas) require(g > 0.0 && g <= 1.0, "gammas entries must lie in (0, 1]");
    require(kandrup_count > 0, "kandrup_count must be positive");
    require(kandrup_degree >= 0, "kandrup_degree must be nonnegative");
    require(taper_fraction > 0.0 && taper_fraction < 1.0, "taper_fraction must lie in (0, 1)");
    require(kandrup_grid.nr > 0 && kandrup_grid.nw > 0 && kandrup_grid.nL > 0, "kandrup_grid entries must be positive");
    for (int c : criteria) require(c >= 1 && c <= kCriterionCount, "criteria entries must lie in 1..14");
    require(tolerance_scale > 0.0, "tolerance_scale must be positive");
    require(threads > 0, "threads must be positive");
    require(!out_dir.empty(), "out_dir must not be empty");
}

std::string ExperimentConfig::hash() const
{
    nlohmann::json j = to_json();
    j.erase("out_dir");
    j.erase("threads");
    const std::string s = j.dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

AnsatzModel ExperimentConfig::ansatz() const { return AnsatzModel::from_json(model); }

SteadyStateProfile ExperimentConfig::profile() const
{
    auto p = solve_profile(ansatz(), u0, gamma);
    return p.compact && !p.trivial ? normalize_profile(p) : p;
}

// ---------------------------------------------------------------------------

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope: need two or more matching points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_slope: values must be positive");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

StabilityExperiment run_stability_experiment(const SteadyStateProfile& p, const StabilityOptions& opt)
{
    StabilityExperiment out;
    out.reference = make_reference(p, opt.resolution);
    const ReferenceState& ref = out.reference;
    const auto gen = PerturbationGenerator::standard(opt.family, p);
    const auto box = default_box(p);

    std::vector<MarkerEnsemble> ens;
    ens.push_back(ref.markers);
    for (double eps : opt.eps) {
        StabilityMember m;
        m.eps = eps;
        ens.push_back(generate_perturbation(ref.markers, gen, eps, box));
        m.initial = distance_d(ens.back(), ref);
        m.d0 = m.initial.d;
        m.max_d = m.d0;
        m.C0 = m.initial.field_part > 0.0 ? m.initial.delta_HC / m.initial.field_part
                                          : std::numeric_limits<double>::quiet_NaN();
        out.members.push_back(std::move(m));
    }
    if (out.members.size() >= 2) {
        std::vector<double> x, y;
        for (const auto& m : out.members)
            if (m.d0 > 0.0) {
                x.push_back(m.eps);
                y.push_back(m.d0);
            }
        out.d0_slope = x.size() >= 2 ? loglog_slope(x, y) : std::numeric_limits<double>::quiet_NaN();
    }
    if (!(opt.t_final > 0.0)) return out;

    const double td = p.dynamical_time();
    EvolveOptions eo;
    eo.t_final = opt.t_final * td;
    eo.kappa = opt.kappa;
    eo.cadence = opt.cadence * td;
    eo.dt_floor = opt.dt_floor * td;
    std::vector<MarkerEnsemble*> ptrs;
    for (auto& e : ens) ptrs.push_back(&e);

    ReferenceState current = ref;
    auto hook = [&](std::size_t index, const MarkerEnsemble& e, DiagnosticsRecord& rec) {
        if (index == 0) {
            // drift of the unperturbed run away from its initial state
            const auto rep = distance_d(e, ref);
            rec.d = rep.d;
            rec.field_part = rep.field_part;
            current = rebase_reference(ref, e);
        } else {
            const auto rep = distance_d(e, current);
            rec.d = rep.d;
            rec.field_part = rep.field_part;
        }
        if (opt.on_record) opt.on_record(index, e, rec);
    };
    auto runs = evolve_lockstep(ptrs, &ref.model, eo, hook);
    out.reference_run = std::move(runs[0]);
    for (std::size_t i = 0; i < out.members.size(); ++i) {
        auto& m = out.members[i];
        m.run = std::move(runs[i + 1]);
        for (const auto& rec : m.run.series)
            if (std::isfinite(rec.d)) m.max_d = std::max(m.max_d, rec.d);
        m.C = m.d0 > 0.0 ? m.max_d / m.d0 : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_steady(const ExperimentConfig& cfg)
{
    const auto dir = prepare_out(cfg);
    auto out = open_csv(dir / "atlas.csv", cfg);
    out << "family,k,gamma,u0,E0,R,M,alpha,beta,compact,status\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto row = [&](const std::string& family, double k, const AnsatzModel& model, double gamma, double u0) {
        double R = nan, M = nan, a = nan, b = nan;
        bool compact = false;
        std::string status = "ok";
        try {
            const auto p = solve_profile(model, u0, gamma);
            compact = p.compact;
            if (compact) {
                R = p.R;
                M = p.M;
                if (gamma == 1.0 && !p.trivial) {
                    const auto lim = makino_limits(p);
                    a = lim.alpha;
                    b = lim.beta;
                }
            }
        } catch (const std::exception& e) {
            status = "failed";
            std::cerr << "steady: " << family << " k=" << k << " gamma=" << gamma << " u0=" << u0 << ": " << e.what()
                      << '\n';
        }
        out << family << ',' << fmt(k) << ',' << fmt(gamma) << ',' << fmt(u0) << ',' << fmt(model.cutoff()) << ','
            << fmt(R) << ',' << fmt(M) << ',' << fmt(a) << ',' << fmt(b) << ',' << (compact ? "true" : "false") << ','
            << status << '\n';
    };
    for (double gamma : cfg.sweep_gamma) {
        // cut-off placed so that the vacuum threshold is 0 for every gamma
        const double E0 = gamma == 1.0 ? 1.0 : 0.0;
        for (double u0 : cfg.sweep_u0) {
            for (double k : cfg.sweep_k) row("polytrope", k, AnsatzModel::polytrope(k, E0), gamma, u0);
            if (cfg.sweep_king) row("king", nan, AnsatzModel::king(E0), gamma, u0);
        }
    }
    write_manifest(dir, cfg, "steady");
    return kExitOk;
}

int cmd_evolve(const ExperimentConfig& cfg)
{
    const auto dir = prepare_out(cfg);
    auto snapshot = [&](const std::string& tag, std::size_t count, const MarkerEnsemble& e, double time) {
        if (cfg.snapshot_every <= 0 || count % static_cast<std::size_t>(cfg.snapshot_every) != 0) return;
        const std::string stem = "snapshot_" + tag + "_" + std::to_string(count / cfg.snapshot_every);
        e.write_snapshot((dir / (stem + ".csv")).string(), (dir / (stem + ".json")).string(), time, cfg.hash());
    };

    if (cfg.initial == "cold-shell") {
        const auto& s = cfg.cold_shell;
        auto e = cold_shell(s.M, s.R0, s.thickness, s.w0, s.L_scale, s.n_shells, s.n_per_shell);
        const double td = std::sqrt(s.R0 * s.R0 * s.R0 / s.M);
        EvolveOptions eo;
        eo.t_final = cfg.t_final * td;
        eo.kappa = cfg.kappa;
        eo.cadence = cfg.cadence * td;
        eo.dt_floor = cfg.dt_floor * td;
        std::size_t count = 0;
        const double H0 = total_energy(e);
        auto res = evolve(e, nullptr, eo, [&](const MarkerEnsemble& m, DiagnosticsRecord& rec) {
            snapshot("shell", count++, m, rec.time);
        });
        write_series(dir / "diagnostics.csv", cfg, res.series);
        nlohmann::json summary{{"initial_H", H0},
                               {"status", res.status == EvolveStatus::Completed ? "completed"
                                          : res.status == EvolveStatus::BlowUp  ? "blow-up"
                                                                                : "numerical-failure"},
                               {"steps", res.steps},
                               {"message", res.message}};
        if (res.status == EvolveStatus::BlowUp) summary["blowup_time"] = res.blowup_time;
        write_manifest(dir, cfg, "evolve", summary);
        std::cout << "evolve: H(0) = " << H0 << ", " << summary["status"].get<std::string>() << " after " << res.steps
                  << " steps\n";
        return status_code({&res});
    }

    const auto p = cfg.profile();
    if (!p.compact || p.trivial || p.gamma != 1.0)
        throw ConfigError("evolve needs a compact nontrivial gamma = 1 steady state");
    StabilityOptions so;
    if (cfg.family) {
        so.family = *cfg.family;
        so.eps = cfg.eps;
    } else {
        so.eps.clear();
    }
    so.resolution = cfg.resolution;
    so.t_final = cfg.t_final;
    so.kappa = cfg.kappa;
    so.cadence = cfg.cadence;
    so.dt_floor = cfg.dt_floor;
    std::vector<std::size_t> counts(so.eps.size() + 1, 0);
    so.on_record = [&](std::size_t index, const MarkerEnsemble& e, DiagnosticsRecord& rec) {
        snapshot(index == 0 ? "reference" : "eps" + std::to_string(index - 1), counts[index]++, e, rec.time);
    };
    const auto ex = run_stability_experiment(p, so);

    write_series(dir / "diagnostics_reference.csv", cfg, ex.reference_run.series);
    nlohmann::json report;
    report["family"] = cfg.family ? to_string(*cfg.family) : "none";
    report["reference"] = {{"iterations", ex.reference.iterations},
                           {"residual", ex.reference.residual},
                           {"markers", ex.reference.markers.size()}};
    report["members"] = nlohmann::json::array();
    std::vector<const EvolveResult*> runs{&ex.reference_run};
    for (std::size_t i = 0; i < ex.members.size(); ++i) {
        const auto& m = ex.members[i];
        write_series(dir / ("diagnostics_eps" + std::to_string(i) + ".csv"), cfg, m.run.series);
        report["members"].push_back({{"eps", m.eps},
                                     {"d0", m.d0},
                                     {"max_d", m.max_d},
                                     {"C", m.C},
                                     {"HC_gap", m.initial.delta_HC},
                                     {"field_part", m.initial.field_part},
                                     {"C0", m.C0},
                                     {"l2", m.initial.l2_part},
                                     {"control_ratio", m.initial.control_ratio}});
        runs.push_back(&m.run);
    }
    if (ex.members.size() >= 2) report["d0_slope"] = ex.d0_slope;
    {
        std::ofstream js(dir / "stability.json");
        if (!js) throw ConfigError("cannot write stability.json");
        nlohmann::json j = report;
        j["config_hash"] = cfg.hash();
        j["version"] = kVersion;
        js << j.dump(2) << '\n';
    }
    write_manifest(dir, cfg, "evolve", report);
    const int code = status_code(runs);
    std::cout << "evolve: " << ex.members.size() << " perturbed run(s), status " << code << '\n';
    return code;
}

int cmd_gamma_study(const ExperimentConfig& cfg)
{
    const auto dir = prepare_out(cfg);
    const auto model = cfg.ansatz();
    const auto base = solve_profile(model, cfg.u0, 0.0);
    if (!base.compact) throw ConfigError("gamma-study needs a compact gamma = 0 steady state");
    auto out = open_csv(dir / "gamma_study.csv", cfg);
    out << "gamma,sup_distance\n";
    out << fmt(0.0) << ',' << fmt(0.0) << '\n';
    std::vector<double> gs, ds;
    for (double g : cfg.gammas) {
        const auto p = solve_profile(model, cfg.u0, g);
        const double d = sup_potential_distance(p, base);
        out << fmt(g) << ',' << fmt(d) << '\n';
        gs.push_back(g);
        ds.push_back(d);
    }
    const double slope = gs.size() >= 2 ? loglog_slope(gs, ds) : std::numeric_limits<double>::quiet_NaN();
    out << "slope," << fmt(slope) << '\n';
    write_manifest(dir, cfg, "gamma-study", {{"slope", slope}});
    std::cout << "gamma-study: slope " << slope << '\n';
    return kExitOk;
}

int cmd_kandrup(const ExperimentConfig& cfg)
{
    const auto dir = prepare_out(cfg);
    const auto p = cfg.profile();
    auto out = open_csv(dir / "kandrup.csv", cfg);
    out << "id,seed,lhs,rhs,margin,scale,passed\n";
    bool all = true;
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg.kandrup_count; ++i) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
        const auto h = KandrupTestFunction::random(p, seed, cfg.kandrup_degree, cfg.taper_fraction);
        const auto k = kandrup_check(p, h, cfg.kandrup_grid);
        const bool ok = k.margin >= -1e-6 * k.scale;
        all = all && ok;
        worst = std::min(worst, k.scale > 0.0 ? k.margin / k.scale : 0.0);
        out << i << ',' << seed << ',' << fmt(k.lhs) << ',' << fmt(k.rhs) << ',' << fmt(k.margin) << ','
            << fmt(k.scale) << ',' << (ok ? "true" : "false") << '\n';
    }
    write_manifest(dir, cfg, "kandrup", {{"all_passed", all}, {"min_relative_margin", worst}});
    std::cout << "kandrup: " << cfg.kandrup_count << " test functions, min margin/scale " << worst << '\n';
    return all ? kExitOk : kExitVerification;
}

int cmd_verify(const ExperimentConfig& cfg)
{
    const auto dir = prepare_out(cfg);
    VerifyOptions vo;
    vo.criteria = cfg.criteria;
    vo.tolerance_scale = cfg.tolerance_scale;
    vo.on_result = [](const CriterionResult& r) { std::cout << format_result(r) << std::endl; };
    const auto results = run_verification(vo);
    nlohmann::json report;
    report["config_hash"] = cfg.hash();
    report["version"] = kVersion;
    report["timestamp"] = timestamp();
    report["criteria"] = nlohmann::json::array();
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
        report["criteria"].push_back({{"id", r.id},
                                      {"name", r.name},
                                      {"passed", r.passed},
                                      {"measured", r.measured},
                                      {"summary", r.summary},
                                      {"seconds", r.seconds}});
    }
    report["all_passed"] = all;
    std::ofstream js(dir / "verify.json");
    if (!js) throw ConfigError("cannot write verify.json");
    js << report.dump(2) << '\n';
    write_manifest(dir, cfg, "verify", {{"all_passed", all}});
    return all ? kExitOk : kExitVerification;
}

}  // namespace rvp
