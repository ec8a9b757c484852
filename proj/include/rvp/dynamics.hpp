#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rvp/phase_geometry.hpp"
#include "rvp/steady_state.hpp"

namespace rvp {

/// Phase-space markers. Each marker carries a constant value f and a
/// constant phase volume, so it is a spherical shell of mass f * vol.
struct MarkerEnsemble {
    std::vector<double> r, w, L;  // L never changes after construction
    std::vector<double> f, vol;
    std::vector<std::size_t> id;  // creation index; survives reordering

    std::size_t size() const noexcept { return r.size(); }
    bool empty() const noexcept { return r.empty(); }
    double mass_of(std::size_t i) const { return f[i] * vol[i]; }
    void reserve(std::size_t n);
    void push(double ri, double wi, double Li, double fi, double vi);
    /// Reorder all markers so that perm[k] becomes marker k.
    void permute(const std::vector<std::size_t>& perm);

    double total_mass() const;
    /// sum Phi(f_i) vol_i
    double casimir(const AnsatzModel& model) const;
    /// max |v| = sqrt(w^2 + L/r^2)
    double momentum_support() const;
    double kinetic_energy() const;

    void write_snapshot(const std::string& csv_path, const std::string& json_path, double time,
                        const std::string& config_hash) const;
};

struct MarkerResolution {
    int nr = 64;
    int nw = 64;
    int nL = 32;
};

/// Lattice over [0,R] x [-w_max, w_max] x [0, L_max] of the steady support,
/// cells uniform in r, w and sqrt(L), with one guard cell in every direction;
/// cells where f vanishes are dropped and vol is the exact cell volume. Radii are shifted inside their cell by an offset that depends only
/// on the (w, L) column, so no two columns share a shell radius.
MarkerEnsemble init_markers(const SteadyStateProfile& p, const MarkerResolution& res = {});

/// Same lattice construction for arbitrary initial data f(r, w, L) >= 0 on a box.
MarkerEnsemble init_markers(const PhaseFunction& f, std::array<double, 2> r_box, std::array<double, 2> w_box,
                            std::array<double, 2> L_box, const MarkerResolution& res);

/// Enclosed mass and potential of a shell ensemble. m(r) counts every shell
/// with radius <= r; U is the exact shell potential with U(infinity) = 0.
class RadialField {
public:
    RadialField() = default;
    explicit RadialField(const MarkerEnsemble& e);
    RadialField(std::vector<double> radii, std::vector<double> masses);  // any order

    double total_mass() const { return total_; }
    double enclosed_mass(double r) const;
    double potential(double r) const;
    double potential_d(double r) const;
    /// -1/(8 pi) int |grad U|^2 dx = -1/2 int m^2 / r^2 dr, exact for shells.
    double field_energy() const;
    const std::vector<double>& radii() const { return rs_; }
    const std::vector<double>& cumulative_mass() const { return cum_; }

private:
    void build(std::vector<double> radii, std::vector<double> masses);
    std::size_t count_le(double r) const;

    std::vector<double> rs_, cum_, outer_;  // outer_[j] = sum_{k >= j} mu_k / r_k
    double total_ = 0.0;
};

RadialField compute_field(const MarkerEnsemble& e);

/// 1/2 int (m_a - m_b)^2 / r^2 dr, the (1/8pi)|grad U_a - grad U_b|^2 norm,
/// exact for two step functions.
double field_difference(const RadialField& a, const RadialField& b);

/// Same norm between a shell field and a smooth profile; the profile's m is
/// integrated with Gauss-Legendre between consecutive shell radii.
double field_difference(const RadialField& a, const SteadyStateProfile& p);

/// Max of the cloud-in-cell radial density on nb uniform shells over [0, r_max].
double max_binned_density(const MarkerEnsemble& e, double r_max, int nb = 200);

struct DiagnosticsRecord {
    double time = 0.0;
    double dt = 0.0;
    double E_kin = 0.0;
    double E_pot = 0.0;
    double H = 0.0;
    double casimir = 0.0;
    double mass = 0.0;
    double P = 0.0;
    double max_density = 0.0;
    double d = std::numeric_limits<double>::quiet_NaN();
    double field_part = std::numeric_limits<double>::quiet_NaN();
};

/// Fixed CSV column order of DiagnosticsRecord.
std::string diagnostics_header();
std::string diagnostics_row(const DiagnosticsRecord& rec);

/// Self-consistent shell dynamics. The coupled system is advanced with the
/// classical RK4 scheme and the field re-evaluated at every stage; shell i
/// feels (m_inside + mu_i/2 + half the mass sharing its radius) / r^2, which is
/// the exact gradient of the shell field energy, so H is conserved up to the
/// integrator error.
class ShellIntegrator {
public:
    explicit ShellIntegrator(const MarkerEnsemble& e);

    /// One RK4 step; returns false (state untouched) if a stage reaches r <= 0.
    /// Markers are kept physically sorted by radius, so e is reordered.
    bool step(MarkerEnsemble& e, double dt);
    /// kappa * 2 pi * min over markers of min(sqrt(r^3/m), r/|rdot|).
    double suggested_dt(const MarkerEnsemble& e, double kappa);
    double field_energy(const MarkerEnsemble& e);

private:
    void accelerations(const std::vector<double>& r, const std::vector<double>& w, const MarkerEnsemble& e,
                       std::vector<double>& dr, std::vector<double>& dw);
    void sort_order(const std::vector<double>& r);
    void reorder(MarkerEnsemble& e);

    std::vector<std::size_t> order_;
    std::vector<std::pair<double, std::size_t>> keyed_;
    std::vector<std::size_t> start_, fill_;
    bool k0_fresh_ = false;  // kr_[0], kw_[0] hold the rates at the current state
    std::vector<double> m_eff_;
    std::vector<double> r1_, w1_, kr_[4], kw_[4];
};

/// RK4 push of every marker in a fixed external field U'(r).
void advance_in_field(MarkerEnsemble& e, const std::function<double(double)>& dU, double dt, int steps);

struct EvolveOptions {
    double t_final = 1.0;
    double kappa = 0.05;
    double dt_floor = 1e-9;          // absolute; callers scale with t_dyn
    double dt_max = 0.0;             // 0: no cap
    double cadence = 0.0;            // time between records; 0: every step
    double blowup_density_factor = 1e4;
    double density_r_max = 0.0;      // 0: twice the initial outermost radius
    long max_steps = 50'000'000;
};

enum class EvolveStatus { Completed, BlowUp, NumericalFailure };

struct EvolveResult {
    std::vector<DiagnosticsRecord> series;
    EvolveStatus status = EvolveStatus::Completed;
    double blowup_time = std::numeric_limits<double>::quiet_NaN();
    long steps = 0;
    std::string message;
};

/// Optional hook that fills d and field_part of a record.
using RecordHook = std::function<void(const MarkerEnsemble&, DiagnosticsRecord&)>;

struct BlowupMonitor {
    double initial_density = 0.0;
    double factor = 1e4;
    /// Fires when the binned density exceeds factor x initial and the
    /// suggested step fell below the floor.
    bool fires(double density, bool dt_below_floor) const
    {
        return dt_below_floor && density > factor * initial_density;
    }
};

EvolveResult evolve(MarkerEnsemble& e, const AnsatzModel* casimir_model, const EvolveOptions& opt,
                    const RecordHook& hook = {});

/// Hook of a lockstep run; called for ensembles 0, 1, ... in order at every record.
using LockstepHook = std::function<void(std::size_t index, const MarkerEnsemble&, DiagnosticsRecord&)>;

/// Advance several ensembles with one shared step sequence (the smallest
/// suggested step of all), so that their integration errors stay correlated.
/// Stops all runs when any of them blows up or fails.
std::vector<EvolveResult> evolve_lockstep(const std::vector<MarkerEnsemble*>& ensembles,
                                          const AnsatzModel* casimir_model, const EvolveOptions& opt,
                                          const LockstepHook& hook = {});

/// Scan a diagnostics series: first record at which the density criterion
/// held with dt at the floor.
struct BlowupFlag {
    bool flagged = false;
    double time = std::numeric_limits<double>::quiet_NaN();
};
BlowupFlag detect_blowup(const std::vector<DiagnosticsRecord>& series, double dt_floor, double factor = 1e4);

/// Thin cold shell of total mass M between R0 and R0 (1 + thickness) falling
/// inward with radial momentum w0, angular momenta of order L_scale.
MarkerEnsemble cold_shell(double M, double R0, double thickness, double w0, double L_scale, int n_shells,
                          int n_per_shell);

/// H = E_kin + E_pot of an ensemble.
double total_energy(const MarkerEnsemble& e);

}  // namespace rvp
