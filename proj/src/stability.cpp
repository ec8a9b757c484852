#include "rvp/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "rvp/errors.hpp"
#include "rvp/parallel.hpp"
#include "rvp/quadrature.hpp"

namespace rvp {

namespace {

constexpr double kPi = std::numbers::pi;

double kinetic(double r, double w, double L) { return std::sqrt(1.0 + w * w + L / (r * r)); }

// Shift c with sum phi(E_i - c) vol_i = target; the sum is increasing in c.
double mass_shift(const AnsatzModel& model, const std::vector<double>& E, const std::vector<double>& vol,
                  double target)
{
    auto mass = [&](double c) {
        return deterministic_sum(E.size(), [&](std::size_t i) { return model.phi(E[i] - c) * vol[i]; });
    };
    double lo = -0.01, hi = 0.01;
    while (mass(lo) > target) lo *= 2.0;
    while (mass(hi) < target) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) > target ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

// ---------------------------------------------------------------------------

double ReferenceState::energy(double r, double w, double L) const { return kinetic(r, w, L) + field.potential(r); }

double ReferenceState::f0(double r, double w, double L) const { return model.phi(energy(r, w, L)); }

long ReferenceState::cell_index(double r, double w, double L) const
{
    const double xr = (r - r0) / dr, xw = (w - w0) / dw, xs = std::sqrt(L) / ds;
    if (!(xr >= 0.0) || !(xr < resolution.nr + 1.0) || !(xw >= -1.0) || !(xw < resolution.nw + 1.0) ||
        !(xs >= 0.0) || !(xs < resolution.nL + 1.0))
        return -1;
    const long ir = static_cast<long>(xr);
    const long iw = static_cast<long>(std::floor(xw)) + 1;
    const long iL = static_cast<long>(xs);
    return (ir * (resolution.nw + 2) + iw) * (resolution.nL + 1) + iL;
}

double ReferenceState::cell_volume(long cell) const
{
    const long iL = cell % (resolution.nL + 1);
    const double s = (iL + 0.5) * ds;
    return kPhaseJacobian * dr * dw * 2.0 * s * ds;
}

ReferenceState make_reference(const SteadyStateProfile& p, const MarkerResolution& res, const ReferenceOptions& opt)
{
    if (p.gamma != 1.0) throw DomainError("make_reference: the dynamics runs at gamma = 1");
    ReferenceState ref;
    ref.profile = p;
    ref.resolution = res;
    ref.markers = init_markers(p, res);
    ref.model = p.model;
    MarkerEnsemble& e = ref.markers;
    const std::size_t n = e.size();
    if (n == 0) return ref;

    const double wmax = max_radial_momentum(p), Lmax = max_angular_momentum(p);
    ref.r0 = 0.0;
    ref.dr = p.R / res.nr;
    ref.w0 = -wmax;
    ref.dw = 2.0 * wmax / res.nw;
    ref.ds = std::sqrt(Lmax) / res.nL;

    std::vector<double> K(n), E(n);
    for (std::size_t i = 0; i < n; ++i) K[i] = kinetic(e.r[i], e.w[i], e.L[i]);

    // fixed-point map f -> phi(E[f] - c[f]) with Anderson mixing
    auto map = [&](const Eigen::VectorXd& f, double& c) {
        std::vector<double> mu(n);
        for (std::size_t i = 0; i < n; ++i) mu[i] = std::max(f[i], 0.0) * e.vol[i];
        const RadialField F(e.r, mu);
        for (std::size_t i = 0; i < n; ++i) E[i] = K[i] + F.potential(e.r[i]);
        c = mass_shift(p.model, E, e.vol, p.M);
        Eigen::VectorXd g(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = p.model.phi(E[i] - c);
        return g;
    };

    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(e.f.data(), static_cast<Eigen::Index>(n));
    const double fmax = x.maxCoeff();
    const int depth = std::max(0, opt.anderson_depth);
    std::vector<Eigen::VectorXd> Gs, Rs;
    double c = 0.0;
    Eigen::VectorXd g = map(x, c);
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const Eigen::VectorXd rres = g - x;
        ref.iterations = it;
        ref.residual = rres.cwiseAbs().maxCoeff();
        if (ref.residual <= opt.tolerance * fmax) break;
        Gs.push_back(g);
        Rs.push_back(rres);
        if (static_cast<int>(Gs.size()) > depth + 1) {
            Gs.erase(Gs.begin());
            Rs.erase(Rs.begin());
        }
        const int m = static_cast<int>(Rs.size()) - 1;
        if (m > 0) {
            Eigen::MatrixXd dR(n, m), dG(n, m);
            for (int j = 0; j < m; ++j) {
                dR.col(j) = Rs[j + 1] - Rs[j];
                dG.col(j) = Gs[j + 1] - Gs[j];
            }
            const Eigen::VectorXd gamma = dR.colPivHouseholderQr().solve(rres);
            x = g - dG * gamma;
        } else {
            x = g;
        }
        g = map(x, c);
    }
    // the stored values are exactly the image of the last iterate
    for (std::size_t i = 0; i < n; ++i) e.f[i] = g[i];
    ref.shift = c;
    ref.model = p.model.shifted(c);
    return rebase_reference(ref, e);
}

ReferenceState rebase_reference(const ReferenceState& ref, const MarkerEnsemble& evolved)
{
    ReferenceState out;
    out.profile = ref.profile;
    out.model = ref.model;
    out.shift = ref.shift;
    out.iterations = ref.iterations;
    out.residual = ref.residual;
    out.resolution = ref.resolution;
    out.r0 = ref.r0;
    out.dr = ref.dr;
    out.w0 = ref.w0;
    out.dw = ref.dw;
    out.ds = ref.ds;
    out.markers = evolved;
    const MarkerEnsemble& e = out.markers;
    const std::size_t n = e.size();
    out.field = RadialField(e);
    out.energy_sum = deterministic_sum(n, [&](std::size_t i) {
        return e.mass_of(i) * out.energy(e.r[i], e.w[i], e.L[i]);
    });
    out.casimir = e.casimir(out.model);
    out.H = e.kinetic_energy() + out.field.field_energy();
    const long cells = static_cast<long>(out.resolution.nr + 1) * (out.resolution.nw + 2) * (out.resolution.nL + 1);
    out.cell_mass.assign(static_cast<std::size_t>(cells), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const long cell = out.cell_index(e.r[i], e.w[i], e.L[i]);
        if (cell >= 0) out.cell_mass[static_cast<std::size_t>(cell)] += e.mass_of(i);
    }
    return out;
}

// ---------------------------------------------------------------------------

EnergyCasimir energy_casimir(const MarkerEnsemble& e, const AnsatzModel& model)
{
    EnergyCasimir out;
    if (e.empty()) return out;
    out.H = e.kinetic_energy() + RadialField(e).field_energy();
    out.C = e.casimir(model);
    out.HC = out.H + out.C;
    return out;
}

DistanceReport distance_d(const MarkerEnsemble& e, const ReferenceState& ref)
{
    if (ref.profile.gamma != 1.0) throw DomainError("distance_d: reference must be a gamma = 1 state");
    DistanceReport out;
    if (e.empty() && ref.markers.empty()) return out;
    const std::size_t n = e.size();
    const RadialField F(e);
    const double C = e.casimir(ref.model);
    const double S = deterministic_sum(n, [&](std::size_t i) {
        return e.mass_of(i) * ref.energy(e.r[i], e.w[i], e.L[i]);
    });
    out.phase_part = (C + S) - (ref.casimir + ref.energy_sum);
    out.field_part = field_difference(F, ref.field);
    out.d = out.phase_part + out.field_part;
    const double H = e.kinetic_energy() + F.field_energy();
    out.delta_HC = (H + C) - (ref.H + ref.casimir);
    out.identity_residual = out.d - (out.delta_HC + 2.0 * out.field_part);

    out.l2_part = deterministic_sum(n, [&](std::size_t i) {
        const double df = e.f[i] - ref.f0(e.r[i], e.w[i], e.L[i]);
        return df * df * e.vol[i];
    });

    std::vector<double> cell(ref.cell_mass.size(), 0.0);
    quad::KahanSum outside;
    for (std::size_t i = 0; i < n; ++i) {
        const long c = ref.cell_index(e.r[i], e.w[i], e.L[i]);
        if (c >= 0)
            cell[static_cast<std::size_t>(c)] += e.mass_of(i);
        else
            outside.add(e.f[i] * e.f[i] * e.vol[i]);
    }
    out.l2_grid = outside.value() + deterministic_sum(cell.size(), [&](std::size_t c) {
        const double dm = cell[c] - ref.cell_mass[c];
        return dm == 0.0 ? 0.0 : dm * dm / ref.cell_volume(static_cast<long>(c));
    });
    out.control_ratio = out.d > 0.0 ? (out.l2_part + 8.0 * kPi * out.field_part) / out.d
                                    : std::numeric_limits<double>::quiet_NaN();
    return out;
}

// ---------------------------------------------------------------------------

std::string to_string(GeneratorFamily f)
{
    switch (f) {
    case GeneratorFamily::Breathing: return "breathing";
    case GeneratorFamily::Shear: return "shear";
    case GeneratorFamily::Twist: return "twist";
    case GeneratorFamily::InwardBoost: return "inward-boost";
    }
    return "breathing";
}

GeneratorFamily generator_family_from_string(const std::string& s)
{
    for (auto f : {GeneratorFamily::Breathing, GeneratorFamily::Shear, GeneratorFamily::Twist,
                   GeneratorFamily::InwardBoost})
        if (to_string(f) == s) return f;
    throw ConfigError("unknown perturbation family '" + s + "'");
}

double PerturbationGenerator::chi(double r, double w, double L) const
{
    const double x = r / r_b;
    const double u = x < 1.0 ? 1.0 - x * x : 0.0;
    const double beta = r * u * u * u;
    switch (family) {
    case GeneratorFamily::Breathing: return w * beta;
    case GeneratorFamily::Shear: return beta * std::sin(kPi * w / W);
    case GeneratorFamily::Twist: {
        const double v = L < L_c ? 1.0 - L / L_c : 0.0;
        return beta * v * v * v * w;
    }
    case GeneratorFamily::InwardBoost: {
        // int_0^r (1 - s^2/r_b^2)^3 ds
        const double y = std::min(x, 1.0);
        return r_b * (y - y * y * y + 0.6 * std::pow(y, 5) - std::pow(y, 7) / 7.0);
    }
    }
    return 0.0;
}

std::array<double, 2> PerturbationGenerator::velocity(double r, double w, double L) const
{
    const double x = r / r_b;
    const double u = x < 1.0 ? 1.0 - x * x : 0.0;
    const double beta = r * u * u * u;
    const double dbeta = u * u * u - 6.0 * x * x * u * u;
    switch (family) {
    case GeneratorFamily::Breathing: return {beta, -w * dbeta};
    case GeneratorFamily::Shear:
        return {beta * kPi / W * std::cos(kPi * w / W), -dbeta * std::sin(kPi * w / W)};
    case GeneratorFamily::Twist: {
        const double v = L < L_c ? 1.0 - L / L_c : 0.0;
        const double g = v * v * v;
        return {beta * g, -w * dbeta * g};
    }
    case GeneratorFamily::InwardBoost: return {0.0, -u * u * u};
    }
    return {0.0, 0.0};
}

PerturbationGenerator PerturbationGenerator::standard(GeneratorFamily family, const SteadyStateProfile& p)
{
    PerturbationGenerator g;
    g.family = family;
    g.r_b = p.R;
    g.W = max_radial_momentum(p);
    g.L_c = max_angular_momentum(p);
    return g;
}

PerturbationBox default_box(const SteadyStateProfile& p) { return {2.0 * p.R, 2.0 * max_radial_momentum(p) + 1.0}; }

MarkerEnsemble generate_perturbation(const MarkerEnsemble& e, const PerturbationGenerator& gen, double eps,
                                     const PerturbationBox& box, int substeps)
{
    MarkerEnsemble out = e;
    if (eps == 0.0) return out;
    substeps = std::max(1, substeps);
    const double h = eps / substeps;
    std::atomic<bool> escaped{false};
    parallel_for(out.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double r = out.r[i], w = out.w[i];
            const double L = out.L[i];
            for (int s = 0; s < substeps; ++s) {
                const auto k1 = gen.velocity(r, w, L);
                const auto k2 = gen.velocity(r + 0.5 * h * k1[0], w + 0.5 * h * k1[1], L);
                const auto k3 = gen.velocity(r + 0.5 * h * k2[0], w + 0.5 * h * k2[1], L);
                const auto k4 = gen.velocity(r + h * k3[0], w + h * k3[1], L);
                r += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
                w += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            }
            if (!(r > 0.0) || r > box.r_max || std::abs(w) > box.w_max) escaped = true;
            out.r[i] = r;
            out.w[i] = w;
        }
    });
    if (escaped) throw DomainError("generate_perturbation: a marker left the configured box");
    return out;
}

}  // namespace rvp

// ---------------------------------------------------------------------------

namespace rvp {

namespace {

struct Lattice {
    double dr, w0, dw, ds;
    int nr, nw, nL;
};

Lattice support_lattice(const SteadyStateProfile& p, const PhaseGrid& grid, bool full_w)
{
    if (grid.nr <= 0 || grid.nw <= 0 || grid.nL <= 0) throw ConfigError("quadrature grid sizes must be positive");
    const double wmax = max_radial_momentum(p), Lmax = max_angular_momentum(p);
    Lattice lat;
    lat.nr = grid.nr;
    lat.nw = full_w ? 2 * grid.nw : grid.nw;
    lat.nL = grid.nL;
    lat.dr = p.R / grid.nr;
    lat.w0 = full_w ? -wmax : 0.0;
    lat.dw = wmax / grid.nw;
    lat.ds = std::sqrt(Lmax) / grid.nL;
    return lat;
}

// Per radial cell, sums of a(r, w, L) * cell volume over the (w, L) cells.
template <class Fn>
std::vector<double> radial_sums(const Lattice& lat, Fn a)
{
    std::vector<double> out(static_cast<std::size_t>(lat.nr), 0.0);
    parallel_for(out.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t ir = lo; ir < hi; ++ir) {
            const double r = (ir + 0.5) * lat.dr;
            quad::KahanSum s;
            for (int iw = 0; iw < lat.nw; ++iw) {
                const double w = lat.w0 + (iw + 0.5) * lat.dw;
                for (int iL = 0; iL < lat.nL; ++iL) {
                    const double sg = (iL + 0.5) * lat.ds;
                    s.add(a(r, w, sg * sg) * 2.0 * sg * lat.ds);
                }
            }
            out[ir] = kPhaseJacobian * lat.dr * lat.dw * s.value();
        }
    });
    return out;
}

// 1/2 int m^2 / r^2 dr for m piecewise linear between the cell edges, where
// the increments are the per-cell masses.
double field_norm_from_cells(const std::vector<double>& cell_mass, double dr)
{
    static const quad::Rule gl = quad::gauss_legendre(4);
    quad::KahanSum s;
    double m0 = 0.0;
    for (std::size_t i = 0; i < cell_mass.size(); ++i) {
        const double m1 = m0 + cell_mass[i];
        const double a = i * dr;
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
            const double t = 0.5 * (1.0 + gl.nodes[k]);
            const double r = a + t * dr;
            const double m = m0 + t * (m1 - m0);
            s.add(0.5 * dr * gl.weights[k] * m * m / (r * r));
        }
        m0 = m1;
    }
    // Kepler tail beyond the support
    if (!cell_mass.empty()) s.add(m0 * m0 / (cell_mass.size() * dr));
    return 0.5 * s.value();
}

struct FormParts {
    double kinetic = 0.0, field = 0.0;
};

FormParts form_parts(const SteadyStateProfile& p, const PhaseFunction& g, const PhaseGrid& grid)
{
    const Lattice lat = support_lattice(p, grid, true);
    std::atomic<bool> leak{false};
    const double E0 = p.E0;
    const auto kin = radial_sums(lat, [&](double r, double w, double L) {
        const double gv = g(r, w, L);
        if (gv == 0.0) return 0.0;
        const double E = particle_energy(p, {r, w, L});
        if (!(E < E0)) {
            leak = true;
            return 0.0;
        }
        return -0.5 * gv * gv / p.model.dphi(E);
    });
    if (leak) throw DomainError("quadratic_form: g is nonzero outside the steady support");
    const auto dens = radial_sums(lat, [&](double r, double w, double L) { return g(r, w, L); });
    FormParts out;
    out.kinetic = quad::kahan_sum(kin);
    out.field = field_norm_from_cells(dens, lat.dr);
    return out;
}

double taper(double E, double E_cut) { return E < E_cut ? std::pow(E_cut - E, 4) : 0.0; }
double taper_d(double E, double E_cut) { return E < E_cut ? -4.0 * std::pow(E_cut - E, 3) : 0.0; }

}  // namespace

double transport_derivative(const SteadyStateProfile& p, const TestFunction& h, const PhasePoint& z)
{
    const double g = std::sqrt(1.0 + z.w * z.w + z.L / (z.r * z.r));
    const double rdot = z.w / g;
    const double wdot = z.L / (z.r * z.r * z.r * g) - p.potential_d(z.r);
    return rdot * h.h_r(z.r, z.w, z.L) + wdot * h.h_w(z.r, z.w, z.L);
}

double bracket_with_E(const SteadyStateProfile& p, const TestFunction& h, const PhasePoint& z)
{
    return -transport_derivative(p, h, z);
}

double bracket_with_f0(const SteadyStateProfile& p, const TestFunction& h, const PhasePoint& z)
{
    return p.model.dphi(particle_energy(p, z)) * bracket_with_E(p, h, z);
}

double cartesian_bracket(const std::function<double(const std::array<double, 3>&, const std::array<double, 3>&)>& f,
                         const std::function<double(const std::array<double, 3>&, const std::array<double, 3>&)>& h,
                         const std::array<double, 3>& x, const std::array<double, 3>& v, double step)
{
    auto grad = [&](const auto& F, bool in_x, int k) {
        auto xp = x, xm = x, vp = v, vm = v;
        if (in_x) {
            xp[k] += step;
            xm[k] -= step;
        } else {
            vp[k] += step;
            vm[k] -= step;
        }
        return (F(xp, vp) - F(xm, vm)) / (2.0 * step);
    };
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += grad(f, true, k) * grad(h, false, k) - grad(f, false, k) * grad(h, true, k);
    return s;
}

QuadraticForm quadratic_form(const SteadyStateProfile& p, const PhaseFunction& g, const PhaseGrid& grid)
{
    if (p.gamma != 1.0 || p.trivial) throw DomainError("quadratic_form: needs a nontrivial gamma = 1 profile");
    const FormParts parts = form_parts(p, g, grid);
    QuadraticForm q;
    q.kinetic = parts.kinetic;
    q.field = parts.field;
    q.value = q.kinetic - q.field;
    return q;
}

// ---------------------------------------------------------------------------

double KandrupTestFunction::mu(double r, double w, double L, double U) const
{
    const double E = std::sqrt(1.0 + w * w + L / (r * r)) + U;
    const double B = taper(E, E0 - delta);
    if (B == 0.0) return 0.0;
    const double X = r * r / (R * R), Y = w * w / (w_max * w_max), Z = L / L_max;
    double P = 0.0;
    std::size_t idx = 0;
    for (int a = 0; a <= degree; ++a)
        for (int b = 0; a + b <= degree; ++b)
            for (int c = 0; a + b + c <= degree; ++c) P += coeff[idx++] * std::pow(X, a) * std::pow(Y, b) * std::pow(Z, c);
    return lambda * P * B;
}

double KandrupTestFunction::mu_transport(double r, double w, double L, double U, double dU) const
{
    const double g = std::sqrt(1.0 + w * w + L / (r * r));
    const double E = g + U;
    const double B = taper(E, E0 - delta);
    if (B == 0.0) return 0.0;
    const double X = r * r / (R * R), Y = w * w / (w_max * w_max), Z = L / L_max;
    double PX = 0.0, PY = 0.0;
    std::size_t idx = 0;
    for (int a = 0; a <= degree; ++a)
        for (int b = 0; a + b <= degree; ++b)
            for (int c = 0; a + b + c <= degree; ++c) {
                const double cz = coeff[idx++] * std::pow(Z, c);
                if (a > 0) PX += cz * a * std::pow(X, a - 1) * std::pow(Y, b);
                if (b > 0) PY += cz * b * std::pow(X, a) * std::pow(Y, b - 1);
            }
    const double rdot = w / g, wdot = L / (r * r * r * g) - dU;
    const double DP = rdot * PX * 2.0 * r / (R * R) + wdot * PY * 2.0 * w / (w_max * w_max);
    return lambda * B * DP;
}

double KandrupTestFunction::h(double r, double w, double L, double U) const { return r * w * mu(r, w, L, U); }

double KandrupTestFunction::h_transport(double r, double w, double L, double U, double dU) const
{
    const double g = std::sqrt(1.0 + w * w + L / (r * r));
    const double D_rw = w * w / g + L / (r * r * g) - r * dU;
    return mu(r, w, L, U) * D_rw + r * w * mu_transport(r, w, L, U, dU);
}

TestFunction KandrupTestFunction::bind(const SteadyStateProfile& p) const
{
    const KandrupTestFunction self = *this;
    TestFunction t;
    t.h = [self, &p](double r, double w, double L) { return self.h(r, w, L, p.potential(r)); };
    // partial derivatives of h = r w P B(E)
    auto parts = [self, &p](double r, double w, double L, double& dr, double& dw) {
        double U, dU;
        p.potential_and_d(r, U, dU);
        const double g = std::sqrt(1.0 + w * w + L / (r * r));
        const double E = g + U;
        const double Ec = self.E0 - self.delta;
        const double B = taper(E, Ec), dB = taper_d(E, Ec);
        const double X = r * r / (self.R * self.R), Y = w * w / (self.w_max * self.w_max), Z = L / self.L_max;
        double P = 0.0, PX = 0.0, PY = 0.0;
        std::size_t idx = 0;
        for (int a = 0; a <= self.degree; ++a)
            for (int b = 0; a + b <= self.degree; ++b)
                for (int c = 0; a + b + c <= self.degree; ++c) {
                    const double cz = self.coeff[idx++] * std::pow(Z, c);
                    P += cz * std::pow(X, a) * std::pow(Y, b);
                    if (a > 0) PX += cz * a * std::pow(X, a - 1) * std::pow(Y, b);
                    if (b > 0) PY += cz * b * std::pow(X, a) * std::pow(Y, b - 1);
                }
        const double Pr = PX * 2.0 * r / (self.R * self.R), Pw = PY * 2.0 * w / (self.w_max * self.w_max);
        const double Er = -L / (r * r * r * g) + dU, Ew = w / g;
        dr = self.lambda * (w * P * B + r * w * (Pr * B + P * dB * Er));
        dw = self.lambda * (r * P * B + r * w * (Pw * B + P * dB * Ew));
    };
    t.h_r = [parts](double r, double w, double L) {
        double a, b;
        parts(r, w, L, a, b);
        return a;
    };
    t.h_w = [parts](double r, double w, double L) {
        double a, b;
        parts(r, w, L, a, b);
        return b;
    };
    return t;
}

KandrupTestFunction KandrupTestFunction::random(const SteadyStateProfile& p, std::uint64_t seed, int degree,
                                                double taper_fraction)
{
    if (p.gamma != 1.0 || p.trivial) throw DomainError("Kandrup test functions need a nontrivial gamma = 1 profile");
    KandrupTestFunction t;
    t.degree = degree;
    t.R = p.R;
    t.w_max = max_radial_momentum(p);
    t.L_max = max_angular_momentum(p);
    t.E0 = p.E0;
    const double psi0 = 1.0 + p.potential(0.0);
    t.delta = taper_fraction * (p.E0 - psi0);
    std::mt19937_64 gen(seed);
    std::size_t count = 0;
    for (int a = 0; a <= degree; ++a)
        for (int b = 0; a + b <= degree; ++b)
            for (int c = 0; a + b + c <= degree; ++c) ++count;
    t.coeff.resize(count);
    for (auto& c : t.coeff) c = 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0;
    // order-one amplitude: scale by the taper depth
    t.lambda = 1.0 / std::pow(p.E0 - t.delta - psi0, 4);
    return t;
}

KandrupResult kandrup_check(const SteadyStateProfile& p, const KandrupTestFunction& h, const PhaseGrid& grid)
{
    if (p.gamma != 1.0 || p.trivial) throw DomainError("kandrup_check: needs a nontrivial gamma = 1 profile");
    auto Dh = [&](double r, double w, double L) {
        double U, dU;
        p.potential_and_d(r, U, dU);
        return h.h_transport(r, w, L, U, dU);
    };
    KandrupResult res;
    // {E, h} = -D h; the sign drops out of the quadratic form
    res.lhs = quadratic_form(p, [&](double r, double w, double L) { return -Dh(r, w, L); }, grid).value;
    const Lattice lat = support_lattice(p, grid, true);
    const double E0 = p.E0;
    const auto parts = radial_sums(lat, [&](double r, double w, double L) {
        double U, dU;
        p.potential_and_d(r, U, dU);
        const double g = std::sqrt(1.0 + w * w + L / (r * r));
        const double E = g + U;
        if (!(E < E0)) return 0.0;
        const double Dmu = h.mu_transport(r, w, L, U, dU);
        const double hv = h.h(r, w, L, U);
        const double rw = r * w;
        return -0.5 / p.model.dphi(E) * (rw * rw * Dmu * Dmu + dU * hv * hv / (r * g * g * g));
    });
    res.rhs = quad::kahan_sum(parts);
    res.margin = res.lhs - res.rhs;
    res.scale = std::max(std::abs(res.lhs), std::abs(res.rhs));
    return res;
}

// ---------------------------------------------------------------------------

TransportSolution transport_solve_h(const SteadyStateProfile& p, const PhaseFunction& g, double E, double L, int nodes,
                                    double closure_tol)
{
    const TurningPointData t = turning_points(p, E, L);
    const double rm = t.r_minus, delta = t.r_plus - t.r_minus;
    nodes = std::max(nodes, 8);
    const double dth = std::numbers::pi / nodes;
    static const quad::Rule gl = quad::gauss_legendre(8);
    auto radius = [&](double th) { return rm + 0.5 * delta * (1.0 - std::cos(th)); };
    // g q dr/dtheta, and |g| q dr/dtheta
    auto rate = [&](double th, bool absolute) {
        const double r = radius(th);
        const double U = p.potential(r);
        const double root = std::sqrt(1.0 + L / (r * r));
        double gap = E - U - root;
        if (!(gap > 0.0)) {
            const double dist = std::min(r - rm, t.r_plus - r);
            gap = std::abs(effective_potential_d(p, L, r)) * std::max(dist, 0.0) + 1e-300;
        }
        const double w = std::sqrt(gap * (E - U + root));
        const double gv = g(r, w, L);
        return (absolute ? std::abs(gv) : gv) * (E - U) / w * 0.5 * delta * std::sin(th);
    };
    TransportSolution sol;
    sol.r.resize(static_cast<std::size_t>(nodes) + 1);
    sol.h.resize(sol.r.size());
    quad::KahanSum acc, acc_abs;
    sol.r[0] = rm;
    sol.h[0] = 0.0;
    for (int k = 0; k < nodes; ++k) {
        const double a = k * dth;
        for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
            const double th = a + 0.5 * dth * (1.0 + gl.nodes[j]);
            acc.add(0.5 * dth * gl.weights[j] * rate(th, false));
            acc_abs.add(0.5 * dth * gl.weights[j] * rate(th, true));
        }
        sol.r[k + 1] = radius((k + 1) * dth);
        sol.h[k + 1] = acc.value();
    }
    sol.closure = acc.value();
    sol.closure_scale = acc_abs.value();
    sol.closed = std::abs(sol.closure) <= closure_tol * std::max(sol.closure_scale, 1e-300);

    // D h = g: dh/dtheta against g q dr/dtheta at interior nodes
    double gmax = 0.0, err = 0.0;
    for (int k = 1; k < nodes; ++k) {
        const double dh = (sol.h[k + 1] - sol.h[k - 1]) / (2.0 * dth);
        const double ref = rate(k * dth, false);
        err = std::max(err, std::abs(dh - ref));
        gmax = std::max(gmax, std::abs(ref));
    }
    sol.max_check_error = gmax > 0.0 ? err / gmax : err;
    return sol;
}

TangencyResidual tangency_residual(const SteadyStateProfile& p, const PhaseFunction& g, const PhaseGrid& grid)
{
    if (p.gamma != 1.0 || p.trivial) throw DomainError("tangency_residual: needs a nontrivial gamma = 1 profile");
    TangencyResidual out;
    for (int k = 0; k < 4; ++k) {
        auto dG = [&, k](double r, double w, double L) {
            const double f = p.model.phi(particle_energy(p, {r, w, L}));
            switch (k) {
            case 0: return 2.0 * f;
            case 1: return 3.0 * f * f;
            case 2: return 2.0 * f * L;
            default: return 2.0 * f * L * L;
            }
        };
        // full w range: g need not be even
        const std::array<double, 2> rb{0.0, p.R}, wb{-max_radial_momentum(p), max_radial_momentum(p)},
            Lb{0.0, max_angular_momentum(p)};
        const PhaseGrid full{grid.nr, 2 * grid.nw, grid.nL};
        const PhaseGrid coarse{std::max(1, grid.nr / 2), std::max(1, grid.nw), std::max(1, grid.nL / 2)};
        auto A = [&](double r, double w, double L) { return dG(r, w, L) * g(r, w, L); };
        out.value[k] = box_quadrature(A, rb, wb, Lb, full);
        out.error[k] = std::abs(out.value[k] - box_quadrature(A, rb, wb, Lb, coarse)) / 3.0;
        out.scale[k] = box_quadrature([&](double r, double w, double L) { return std::abs(A(r, w, L)); }, rb, wb, Lb,
                                      full);
    }
    return out;
}

}  // namespace rvp
