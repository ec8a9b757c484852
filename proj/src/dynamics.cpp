#include "rvp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rvp/errors.hpp"
#include "rvp/parallel.hpp"
#include "rvp/quadrature.hpp"

namespace rvp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGolden = 0.6180339887498949;

// Sum in creation order, so the result does not depend on how the
// integrator has permuted the markers.
template <class Term>
double creation_order_sum(const MarkerEnsemble& e, Term term)
{
    const std::size_t n = e.size();
    if (e.id.size() != n) return deterministic_sum(n, term);
    std::vector<double> v(n);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) v[e.id[i]] = term(i);
    });
    return deterministic_sum(n, [&](std::size_t k) { return v[k]; });
}

}  // namespace

void MarkerEnsemble::reserve(std::size_t n)
{
    r.reserve(n);
    w.reserve(n);
    L.reserve(n);
    f.reserve(n);
    vol.reserve(n);
    id.reserve(n);
}

void MarkerEnsemble::push(double ri, double wi, double Li, double fi, double vi)
{
    r.push_back(ri);
    w.push_back(wi);
    L.push_back(Li);
    f.push_back(fi);
    vol.push_back(vi);
    id.push_back(id.size());
}

void MarkerEnsemble::permute(const std::vector<std::size_t>& perm)
{
    auto apply = [&](auto& v) {
        std::remove_reference_t<decltype(v)> out(v.size());
        for (std::size_t k = 0; k < perm.size(); ++k) out[k] = v[perm[k]];
        v.swap(out);
    };
    apply(r);
    apply(w);
    apply(L);
    apply(f);
    apply(vol);
    apply(id);
}

double MarkerEnsemble::total_mass() const
{
    return creation_order_sum(*this, [&](std::size_t i) { return f[i] * vol[i]; });
}

double MarkerEnsemble::casimir(const AnsatzModel& model) const
{
    return creation_order_sum(*this, [&](std::size_t i) { return model.casimir(f[i]) * vol[i]; });
}

double MarkerEnsemble::momentum_support() const
{
    double P = 0.0;
    for (std::size_t i = 0; i < size(); ++i) P = std::max(P, std::sqrt(w[i] * w[i] + L[i] / (r[i] * r[i])));
    return P;
}

double MarkerEnsemble::kinetic_energy() const
{
    return creation_order_sum(*this, [&](std::size_t i) {
        return f[i] * vol[i] * std::sqrt(1.0 + w[i] * w[i] + L[i] / (r[i] * r[i]));
    });
}

void MarkerEnsemble::write_snapshot(const std::string& csv_path, const std::string& json_path, double time,
                                    const std::string& config_hash) const
{
    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot write " + csv_path);
    csv << "r,w,L,f,vol\n" << std::setprecision(17);
    for (std::size_t i = 0; i < size(); ++i)
        csv << r[i] << ',' << w[i] << ',' << L[i] << ',' << f[i] << ',' << vol[i] << '\n';
    std::ofstream js(json_path);
    if (!js) throw ConfigError("cannot write " + json_path);
    nlohmann::json j{{"time", time}, {"config_hash", config_hash}, {"markers", size()}};
    js << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

MarkerEnsemble init_markers(const PhaseFunction& fun, std::array<double, 2> r_box, std::array<double, 2> w_box,
                            std::array<double, 2> L_box, const MarkerResolution& res)
{
    if (res.nr <= 0 || res.nw <= 0 || res.nL <= 0) throw ConfigError("marker resolution must be positive");
    const double dr = (r_box[1] - r_box[0]) / res.nr;
    const double dw = (w_box[1] - w_box[0]) / res.nw;
    // L cells are uniform in sqrt(L); each cell's exact L-extent is its weight
    const double s0 = std::sqrt(L_box[0]), ds = (std::sqrt(L_box[1]) - s0) / res.nL;
    // one guard cell outside the box (radius and L stay non-negative)
    const int r_lo = r_box[0] > 0.0 ? -1 : 0, L_lo = L_box[0] > 0.0 ? -1 : 0;
    MarkerEnsemble e;
    for (int ir = r_lo; ir <= res.nr; ++ir)
        for (int iw = -1; iw <= res.nw; ++iw)
            for (int iL = L_lo; iL <= res.nL; ++iL) {
                const long col = static_cast<long>(iw + 1) * (res.nL + 2) + (iL + 1);
                const double shift = std::fmod(0.5 + col * kGolden, 1.0);
                const double r = r_box[0] + (ir + shift) * dr;
                const double w = w_box[0] + (iw + 0.5) * dw;
                const double s = s0 + (iL + 0.5) * ds;
                const double L = s * s;
                if (!(r > 0.0) || !(s > 0.0)) continue;
                const double fv = fun(r, w, L);
                if (fv > 0.0) e.push(r, w, L, fv, kPhaseJacobian * dr * dw * 2.0 * s * ds);
            }
    return e;
}

MarkerEnsemble init_markers(const SteadyStateProfile& p, const MarkerResolution& res)
{
    if (res.nr <= 0 || res.nw <= 0 || res.nL <= 0) throw ConfigError("marker resolution must be positive");
    if (p.trivial) return {};
    if (!p.compact) throw DomainError("init_markers: state must have compact support");
    const double wmax = max_radial_momentum(p), Lmax = max_angular_momentum(p);
    auto f0 = [&](double r, double w, double L) { return p.model.phi(particle_energy(p, {r, w, L})); };
    return init_markers(f0, {0.0, p.R}, {-wmax, wmax}, {0.0, Lmax}, res);
}

// ---------------------------------------------------------------------------

RadialField::RadialField(const MarkerEnsemble& e)
{
    std::vector<double> mu(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) mu[i] = e.mass_of(i);
    build(e.r, std::move(mu));
}

RadialField::RadialField(std::vector<double> radii, std::vector<double> masses)
{
    build(std::move(radii), std::move(masses));
}

void RadialField::build(std::vector<double> radii, std::vector<double> masses)
{
    const std::size_t n = radii.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return radii[a] < radii[b] || (radii[a] == radii[b] && a < b);
    });
    rs_.resize(n);
    cum_.resize(n);
    outer_.assign(n + 1, 0.0);
    quad::KahanSum m;
    for (std::size_t j = 0; j < n; ++j) {
        rs_[j] = radii[idx[j]];
        m.add(masses[idx[j]]);
        cum_[j] = m.value();
    }
    total_ = n ? cum_.back() : 0.0;
    quad::KahanSum o;
    for (std::size_t j = n; j-- > 0;) {
        o.add(masses[idx[j]] / rs_[j]);
        outer_[j] = o.value();
    }
}

std::size_t RadialField::count_le(double r) const
{
    return static_cast<std::size_t>(std::upper_bound(rs_.begin(), rs_.end(), r) - rs_.begin());
}

double RadialField::enclosed_mass(double r) const
{
    const std::size_t c = count_le(r);
    return c ? cum_[c - 1] : 0.0;
}

double RadialField::potential(double r) const
{
    const std::size_t c = count_le(r);
    const double m = c ? cum_[c - 1] : 0.0;
    return (m > 0.0 ? -m / r : 0.0) - outer_[c];
}

double RadialField::potential_d(double r) const
{
    return enclosed_mass(r) / (r * r);
}

double RadialField::field_energy() const
{
    quad::KahanSum s;
    for (std::size_t j = 0; j < rs_.size(); ++j) {
        const double inv_next = j + 1 < rs_.size() ? 1.0 / rs_[j + 1] : 0.0;
        s.add(cum_[j] * cum_[j] * (1.0 / rs_[j] - inv_next));
    }
    return -0.5 * s.value();
}

RadialField compute_field(const MarkerEnsemble& e)
{
    return RadialField(e);
}

double field_difference(const RadialField& a, const RadialField& b)
{
    const auto& ra = a.radii();
    const auto& rb = b.radii();
    const auto& ca = a.cumulative_mass();
    const auto& cb = b.cumulative_mass();
    std::size_t i = 0, j = 0;
    double ma = 0.0, mb = 0.0, prev = 0.0;
    quad::KahanSum s;
    while (i < ra.size() || j < rb.size()) {
        const double next = j >= rb.size() || (i < ra.size() && ra[i] <= rb[j]) ? ra[i] : rb[j];
        if (prev > 0.0 && next > prev) {
            const double dm = ma - mb;
            s.add(dm * dm * (1.0 / prev - 1.0 / next));
        }
        while (i < ra.size() && ra[i] == next) ma = ca[i++];
        while (j < rb.size() && rb[j] == next) mb = cb[j++];
        prev = next;
    }
    if (prev > 0.0) {
        const double dm = ma - mb;
        s.add(dm * dm / prev);
    }
    return 0.5 * s.value();
}

double field_difference(const RadialField& a, const SteadyStateProfile& p)
{
    static const quad::Rule gl = quad::gauss_legendre(4);
    // breakpoints: shell radii plus profile nodes
    std::vector<double> pts(a.radii());
    pts.insert(pts.end(), p.r.begin(), p.r.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    quad::KahanSum s;
    double lo = 0.0;
    for (double hi : pts) {
        if (hi > lo) {
            const double ma = a.enclosed_mass(lo);  // constant on (lo, hi)
            for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.nodes[k];
                const double dm = ma - p.enclosed_mass(x);
                s.add(0.5 * (hi - lo) * gl.weights[k] * dm * dm / (x * x));
            }
        }
        lo = hi;
    }
    if (lo > 0.0) {
        const double dm = a.total_mass() - p.M;
        s.add(dm * dm / lo);
    }
    return 0.5 * s.value();
}

double max_binned_density(const MarkerEnsemble& e, double r_max, int nb)
{
    if (e.empty() || !(r_max > 0.0)) return 0.0;
    std::vector<double> mass(nb, 0.0);
    const double h = r_max / nb;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double s = e.r[i] / h - 0.5;
        if (s >= nb) continue;
        const double fl = std::floor(s);
        const double frac = s - fl;
        const int j0 = static_cast<int>(fl);
        const double mu = e.mass_of(i);
        if (j0 >= 0) mass[j0] += (1.0 - frac) * mu;
        else mass[0] += (1.0 - frac) * mu;
        if (j0 + 1 < nb) mass[j0 + 1] += frac * mu;
    }
    double best = 0.0;
    for (int j = 0; j < nb; ++j) {
        const double shell = 4.0 * kPi / 3.0 * (std::pow(j + 1.0, 3) - std::pow(double(j), 3)) * h * h * h;
        best = std::max(best, mass[j] / shell);
    }
    return best;
}

std::string diagnostics_header()
{
    return "time,dt,E_kin,E_pot,H,casimir,mass,P,max_density,d,field_part";
}

std::string diagnostics_row(const DiagnosticsRecord& rec)
{
    std::ostringstream os;
    os << std::setprecision(17) << rec.time << ',' << rec.dt << ',' << rec.E_kin << ',' << rec.E_pot << ',' << rec.H
       << ',' << rec.casimir << ',' << rec.mass << ',' << rec.P << ',' << rec.max_density << ',' << rec.d << ','
       << rec.field_part;
    return os.str();
}

// ---------------------------------------------------------------------------

ShellIntegrator::ShellIntegrator(const MarkerEnsemble& e)
{
    const std::size_t n = e.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
        return e.r[a] < e.r[b] || (e.r[a] == e.r[b] && a < b);
    });
    m_eff_.resize(n);
    r1_.resize(n);
    w1_.resize(n);
    for (int s = 0; s < 4; ++s) {
        kr_[s].resize(n);
        kw_[s].resize(n);
    }
}

void ShellIntegrator::sort_order(const std::vector<double>& r)
{
    // bucket sort on uniform radius bins, insertion sort inside each bucket
    const std::size_t n = r.size();
    if (n < 2) return;
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    const double r0 = *lo, span = *hi - *lo;
    const std::size_t nb = n;
    const double scale = span > 0.0 ? static_cast<double>(nb) * (1.0 - 1e-12) / span : 0.0;
    start_.assign(nb + 1, 0);
    auto bucket = [&](double x) { return std::min(nb - 1, static_cast<std::size_t>((x - r0) * scale)); };
    for (std::size_t i = 0; i < n; ++i) ++start_[bucket(r[i]) + 1];
    for (std::size_t b = 0; b < nb; ++b) start_[b + 1] += start_[b];
    keyed_.resize(n);
    fill_.assign(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) keyed_[fill_[bucket(r[i])]++] = {r[i], i};
    for (std::size_t b = 0; b < nb; ++b) {
        const auto first = keyed_.begin() + static_cast<std::ptrdiff_t>(start_[b]);
        const auto last = keyed_.begin() + static_cast<std::ptrdiff_t>(start_[b + 1]);
        if (last - first > 1) std::sort(first, last);
    }
    for (std::size_t k = 0; k < n; ++k) order_[k] = keyed_[k].second;
}

void ShellIntegrator::accelerations(const std::vector<double>& r, const std::vector<double>& w,
                                    const MarkerEnsemble& e, std::vector<double>& dr, std::vector<double>& dw)
{
    sort_order(r);
    const std::size_t n = order_.size();
    double inside = 0.0;
    for (std::size_t a = 0; a < n;) {
        std::size_t b = a;
        double group = 0.0;
        while (b < n && r[order_[b]] == r[order_[a]]) group += e.mass_of(order_[b++]);
        for (std::size_t c = a; c < b; ++c) m_eff_[order_[c]] = inside + 0.5 * group;
        inside += group;
        a = b;
    }
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double ri = r[i], wi = w[i];
            const double g = std::sqrt(1.0 + wi * wi + e.L[i] / (ri * ri));
            dr[i] = wi / g;
            dw[i] = e.L[i] / (ri * ri * ri * g) - m_eff_[i] / (ri * ri);
        }
    });
}

void ShellIntegrator::reorder(MarkerEnsemble& e)
{
    bool identity = true;
    for (std::size_t k = 0; k < order_.size() && identity; ++k) identity = order_[k] == k;
    if (identity) return;
    e.permute(order_);
    std::iota(order_.begin(), order_.end(), 0);
    k0_fresh_ = false;
}

bool ShellIntegrator::step(MarkerEnsemble& e, double dt)
{
    const std::size_t n = e.size();
    static constexpr double c[3] = {0.5, 0.5, 1.0};
    reorder(e);
    if (!k0_fresh_) accelerations(e.r, e.w, e, kr_[0], kw_[0]);
    k0_fresh_ = true;
    for (int s = 1; s < 4; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            r1_[i] = e.r[i] + c[s - 1] * dt * kr_[s - 1][i];
            w1_[i] = e.w[i] + c[s - 1] * dt * kw_[s - 1][i];
            if (!(r1_[i] > 0.0)) return false;
        }
        accelerations(r1_, w1_, e, kr_[s], kw_[s]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        r1_[i] = e.r[i] + dt / 6.0 * (kr_[0][i] + 2.0 * kr_[1][i] + 2.0 * kr_[2][i] + kr_[3][i]);
        if (!(r1_[i] > 0.0)) return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        e.r[i] = r1_[i];
        e.w[i] += dt / 6.0 * (kw_[0][i] + 2.0 * kw_[1][i] + 2.0 * kw_[2][i] + kw_[3][i]);
    }
    k0_fresh_ = false;
    sort_order(e.r);
    reorder(e);
    return true;
}

double ShellIntegrator::suggested_dt(const MarkerEnsemble& e, double kappa)
{
    accelerations(e.r, e.w, e, kr_[0], kw_[0]);
    k0_fresh_ = true;
    double t = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double ri = e.r[i];
        if (m_eff_[i] > 0.0) t = std::min(t, std::sqrt(ri * ri * ri / m_eff_[i]));
        if (kr_[0][i] != 0.0) t = std::min(t, ri / std::abs(kr_[0][i]));
    }
    return kappa * 2.0 * kPi * t;
}

double ShellIntegrator::field_energy(const MarkerEnsemble& e)
{
    return RadialField(e).field_energy();
}

void advance_in_field(MarkerEnsemble& e, const std::function<double(double)>& dU, double dt, int steps)
{
    parallel_for(e.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double L = e.L[i];
            auto rhs = [&](double r, double w, double& fr, double& fw) {
                const double g = std::sqrt(1.0 + w * w + L / (r * r));
                fr = w / g;
                fw = L / (r * r * r * g) - dU(r);
            };
            double r = e.r[i], w = e.w[i];
            for (int s = 0; s < steps; ++s) {
                double r1, w1, r2, w2, r3, w3, r4, w4;
                rhs(r, w, r1, w1);
                rhs(r + 0.5 * dt * r1, w + 0.5 * dt * w1, r2, w2);
                rhs(r + 0.5 * dt * r2, w + 0.5 * dt * w2, r3, w3);
                rhs(r + dt * r3, w + dt * w3, r4, w4);
                r += dt / 6.0 * (r1 + 2 * r2 + 2 * r3 + r4);
                w += dt / 6.0 * (w1 + 2 * w2 + 2 * w3 + w4);
            }
            e.r[i] = r;
            e.w[i] = w;
        }
    });
}

double total_energy(const MarkerEnsemble& e)
{
    return e.kinetic_energy() + RadialField(e).field_energy();
}

// ---------------------------------------------------------------------------

EvolveResult evolve(MarkerEnsemble& e, const AnsatzModel* casimir_model, const EvolveOptions& opt,
                    const RecordHook& hook)
{
    LockstepHook h;
    if (hook) h = [&](std::size_t, const MarkerEnsemble& m, DiagnosticsRecord& rec) { hook(m, rec); };
    return std::move(evolve_lockstep({&e}, casimir_model, opt, h).front());
}

std::vector<EvolveResult> evolve_lockstep(const std::vector<MarkerEnsemble*>& ensembles,
                                          const AnsatzModel* casimir_model, const EvolveOptions& opt,
                                          const LockstepHook& hook)
{
    const std::size_t ne = ensembles.size();
    std::vector<EvolveResult> res(ne);
    if (ne == 0) return res;

    struct Run {
        MarkerEnsemble* e;
        std::unique_ptr<ShellIntegrator> integ;
        double r_dens = 1.0, casimir = 0.0, mass = 0.0;
        BlowupMonitor monitor;
    };
    std::vector<Run> runs(ne);
    for (std::size_t k = 0; k < ne; ++k) {
        Run& run = runs[k];
        MarkerEnsemble& e = *ensembles[k];
        run.e = &e;
        run.r_dens = opt.density_r_max;
        if (!(run.r_dens > 0.0)) run.r_dens = e.empty() ? 1.0 : 2.0 * *std::max_element(e.r.begin(), e.r.end());
        run.casimir = casimir_model && !e.empty() ? e.casimir(*casimir_model) : 0.0;
        run.mass = e.total_mass();
        run.integ = std::make_unique<ShellIntegrator>(e);
    }

    auto make_record = [&](std::size_t k, double t, double dt) {
        const Run& run = runs[k];
        const MarkerEnsemble& e = *run.e;
        DiagnosticsRecord rec;
        rec.time = t;
        rec.dt = dt;
        if (!e.empty()) {
            rec.E_kin = e.kinetic_energy();
            rec.E_pot = RadialField(e).field_energy();
            rec.H = rec.E_kin + rec.E_pot;
            rec.casimir = run.casimir;
            rec.mass = run.mass;
            rec.P = e.momentum_support();
            rec.max_density = max_binned_density(e, run.r_dens);
        }
        if (hook) hook(k, e, rec);
        return rec;
    };
    auto record_all = [&](double t, const std::vector<double>& dts) {
        for (std::size_t k = 0; k < ne; ++k) res[k].series.push_back(make_record(k, t, dts[k]));
    };
    auto fail_all = [&](EvolveStatus status, const std::string& msg, double t) {
        for (auto& r : res) {
            r.status = status;
            r.message = msg;
            if (status == EvolveStatus::BlowUp) r.blowup_time = t;
        }
        return res;
    };

    std::vector<double> suggested(ne, 0.0);
    auto suggest = [&] {
        double dt = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < ne; ++k) {
            suggested[k] = runs[k].e->empty() ? std::numeric_limits<double>::infinity()
                                              : runs[k].integ->suggested_dt(*runs[k].e, opt.kappa);
            dt = std::min(dt, suggested[k]);
        }
        return dt;
    };

    double t = 0.0;
    double dt = suggest();
    record_all(0.0, suggested);
    for (std::size_t k = 0; k < ne; ++k) runs[k].monitor = {res[k].series.front().max_density, opt.blowup_density_factor};
    if (!std::isfinite(dt)) return res;  // nothing to move
    double next_tick = opt.cadence > 0.0 ? opt.cadence : 0.0;
    long steps = 0;

    while (t < opt.t_final * (1.0 - 1e-14)) {
        if (steps >= opt.max_steps) return fail_all(EvolveStatus::NumericalFailure, "step limit reached", t);
        const double sug = suggest();
        if (sug < opt.dt_floor) {
            for (std::size_t k = 0; k < ne; ++k) {
                if (!(suggested[k] < opt.dt_floor)) continue;
                const double dens = max_binned_density(*runs[k].e, runs[k].r_dens);
                if (runs[k].monitor.fires(dens, true)) {
                    record_all(t, suggested);
                    return fail_all(EvolveStatus::BlowUp, "density growth with step size at the floor", t);
                }
            }
        }
        dt = std::max(sug, opt.dt_floor);
        if (opt.dt_max > 0.0) dt = std::min(dt, opt.dt_max);
        dt = std::min(dt, opt.t_final - t);
        if (opt.cadence > 0.0) dt = std::min(dt, next_tick - t);
        // every ensemble must accept the same step
        for (int halvings = 0;; ++halvings) {
            if (halvings > 60) return fail_all(EvolveStatus::NumericalFailure, "marker reached the origin", t);
            std::vector<MarkerEnsemble> saved;
            bool ok = true;
            for (std::size_t k = 0; k < ne && ok; ++k) {
                if (runs[k].e->empty()) continue;
                if (ne > 1) saved.push_back(*runs[k].e);
                ok = runs[k].integ->step(*runs[k].e, dt);
                if (!ok && ne > 1) {
                    // undo the ensembles already advanced
                    for (std::size_t j = 0; j < k; ++j) {
                        if (runs[j].e->empty()) continue;
                        *runs[j].e = saved[j];
                        runs[j].integ = std::make_unique<ShellIntegrator>(*runs[j].e);
                    }
                }
            }
            if (ok) break;
            dt *= 0.5;
        }
        t += dt;
        ++steps;
        for (auto& r : res) r.steps = steps;
        for (const Run& run : runs)
            for (std::size_t i = 0; i < run.e->size(); ++i)
                if (!std::isfinite(run.e->r[i]) || !std::isfinite(run.e->w[i]))
                    return fail_all(EvolveStatus::NumericalFailure, "non-finite marker state", t);
        const bool tick = opt.cadence <= 0.0 || t >= next_tick * (1.0 - 1e-12);
        if (tick || t >= opt.t_final * (1.0 - 1e-14)) {
            record_all(t, suggested);
            if (opt.cadence > 0.0)
                while (next_tick <= t * (1.0 + 1e-12)) next_tick += opt.cadence;
        }
    }
    return res;
}

BlowupFlag detect_blowup(const std::vector<DiagnosticsRecord>& series, double dt_floor, double factor)
{
    BlowupFlag flag;
    if (series.empty()) return flag;
    const BlowupMonitor monitor{series.front().max_density, factor};
    for (const auto& rec : series)
        if (monitor.fires(rec.max_density, rec.dt < dt_floor)) {
            flag.flagged = true;
            flag.time = rec.time;
            break;
        }
    return flag;
}

MarkerEnsemble cold_shell(double M, double R0, double thickness, double w0, double L_scale, int n_shells,
                          int n_per_shell)
{
    if (n_shells <= 0 || n_per_shell <= 0 || !(M > 0.0) || !(R0 > 0.0)) throw ConfigError("invalid cold-shell parameters");
    MarkerEnsemble e;
    const double mu = M / (static_cast<double>(n_shells) * n_per_shell);
    for (int s = 0; s < n_shells; ++s) {
        const double r = R0 * (1.0 + thickness * (s + 0.5) / n_shells);
        for (int k = 0; k < n_per_shell; ++k) {
            const double L = L_scale * (k + 0.5) / n_per_shell;
            e.push(r, -w0, L, 1.0, mu);
        }
    }
    return e;
}

}  // namespace rvp
