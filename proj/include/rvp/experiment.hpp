#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvp/dynamics.hpp"
#include "rvp/phase_geometry.hpp"
#include "rvp/stability.hpp"
#include "rvp/steady_state.hpp"

namespace rvp {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitBlowUp = 2, kExitNumerical = 3, kExitVerification = 4 };

struct ColdShellSpec {
    double M = 4.0;
    double R0 = 1.0;
    double thickness = 0.1;
    double w0 = 0.5;
    double L_scale = 1.0;
    int n_shells = 40;
    int n_per_shell = 40;
};

/// One experiment, read from a JSON file. Every key is optional; missing keys
/// take the defaults below. Times are in dynamical times of the initial state.
struct ExperimentConfig {
    nlohmann::json model = {{"family", "polytrope"}, {"k", 1.0}, {"E0", 1.0}};
    double gamma = 1.0;
    double u0 = -0.1;
    MarkerResolution resolution;

    // evolve
    std::string initial = "steady";  // steady | cold-shell
    ColdShellSpec cold_shell;
    std::optional<GeneratorFamily> family;  // perturb the steady state
    std::vector<double> eps{1e-3, 3e-3, 1e-2};
    double t_final = 10.0;
    double kappa = 0.05;
    double dt_floor = 1e-9;
    double cadence = 0.5;
    int snapshot_every = 0;  // records between snapshots; 0: none

    // steady atlas: polytropes k x u0 x gamma, plus King rows
    std::vector<double> sweep_k{0.5, 1.0, 1.4, 2.0, 3.5};
    bool sweep_king = true;
    std::vector<double> sweep_u0{-0.05, -0.1, -0.3};
    std::vector<double> sweep_gamma{1.0, 0.5, 0.0};

    // gamma study
    std::vector<double> gammas{1e-1, 1e-2, 1e-3, 1e-4};

    // kandrup
    int kandrup_count = 20;
    int kandrup_degree = 2;
    double taper_fraction = 0.1;
    PhaseGrid kandrup_grid{64, 64, 16};

    // verify
    std::vector<int> criteria;  // empty: all
    double tolerance_scale = 1.0;

    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir = "out";

    /// Throws ConfigError for unknown keys or out-of-range values.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json to_json() const;
    void validate() const;
    /// 16 hex digits of FNV-1a over the canonical JSON of every field that
    /// affects results (output directory and thread count excluded).
    std::string hash() const;

    AnsatzModel ansatz() const;
    SteadyStateProfile profile() const;
};

/// Stability experiment: an unperturbed reference and perturbed copies,
/// evolved in lockstep; d(t) is measured against the evolved reference.
struct StabilityMember {
    double eps = 0.0;
    DistanceReport initial;
    double d0 = 0.0;
    double max_d = 0.0;
    double C = 0.0;   // max_t d(t) / d(0)
    double C0 = 0.0;  // (H_C gap) / field_part at t = 0
    EvolveResult run;
};

struct StabilityExperiment {
    ReferenceState reference;
    std::vector<StabilityMember> members;
    EvolveResult reference_run;
    double d0_slope = 0.0;  // log-log fit of d(0) against eps
};

struct StabilityOptions {
    GeneratorFamily family = GeneratorFamily::Breathing;
    std::vector<double> eps{1e-3, 3e-3, 1e-2};
    MarkerResolution resolution;
    double t_final = 10.0;  // dynamical times; 0: initial data only
    double kappa = 0.05;
    double cadence = 0.5;
    double dt_floor = 1e-9;
    /// Called for every record of every run (index 0 is the reference).
    LockstepHook on_record;
};

StabilityExperiment run_stability_experiment(const SteadyStateProfile& p, const StabilityOptions& opt);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

int cmd_steady(const ExperimentConfig& cfg);
int cmd_evolve(const ExperimentConfig& cfg);
int cmd_gamma_study(const ExperimentConfig& cfg);
int cmd_kandrup(const ExperimentConfig& cfg);
int cmd_verify(const ExperimentConfig& cfg);

}  // namespace rvp
