#include "rvp/steady_state.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "rvp/errors.hpp"
#include "rvp/quadrature.hpp"

namespace rvp {

namespace {

constexpr double kPi = std::numbers::pi;

void check_gamma(double gamma)
{
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("relativity parameter must lie in [0, 1]");
}

// int_0^eta (eta-t)^k t^beta F(t) dt with F smooth; the rule size doubles
// until two consecutive estimates agree.
template <class F>
double jacobi_converged(F&& smooth, double eta, double k, double beta)
{
    double prev = quad::jacobi_weighted(smooth, eta, k, beta, 16);
    for (int n = 32; n <= 512; n *= 2) {
        const double cur = quad::jacobi_weighted(smooth, eta, k, beta, n);
        if (std::abs(cur - prev) <= 1e-13 * std::abs(cur)) return cur;
        prev = cur;
    }
    return prev;
}

// Generic route for tabulated profiles: psi(eta - t) * weight(t) with the
// square-root endpoint handled by the sin^2 map.
template <class W>
double singular_kernel(const AnsatzModel& model, double eta, W&& weight)
{
    auto res = quad::endpoint_singular(
        [&](double, double t, double rest) { return model.psi(rest) * weight(t); }, 0.0, eta, 1e-11,
        1e-300);
    return res.value;
}

}  // namespace

double vacuum_threshold(const AnsatzModel& model, double gamma)
{
    check_gamma(gamma);
    return gamma == 1.0 ? model.cutoff() - 1.0 : model.cutoff();
}

double density_kernel(const AnsatzModel& model, double gamma, double eta)
{
    check_gamma(gamma);
    if (!(eta > 0.0)) return 0.0;
    if (model.smooth_remainder()) {
        const double k = model.exponent();
        auto F = [&](double t) {
            return model.psi_over_power(eta - t) * (1.0 + gamma * t) * std::sqrt(2.0 + gamma * t);
        };
        return 4.0 * kPi * jacobi_converged(F, eta, k, 0.5);
    }
    return 4.0 * kPi *
           singular_kernel(model, eta, [&](double t) { return (1.0 + gamma * t) * std::sqrt(t * (2.0 + gamma * t)); });
}

double pressure_kernel(const AnsatzModel& model, double eta)
{
    if (!(eta > 0.0)) return 0.0;
    if (model.smooth_remainder()) {
        const double k = model.exponent();
        auto F = [&](double t) { return model.psi_over_power(eta - t) * (1.0 + t) * std::pow(2.0 + t, 1.5); };
        return 4.0 * kPi / 3.0 * jacobi_converged(F, eta, k, 1.5);
    }
    return 4.0 * kPi / 3.0 *
           singular_kernel(model, eta, [](double t) { return (1.0 + t) * std::pow(t * (2.0 + t), 1.5); });
}

double density_kernel_d(const AnsatzModel& model, double eta)
{
    if (!(eta > 0.0)) return 0.0;
    // d/dt [(1+t) sqrt(t(2+t))] = t^{-1/2} [(2+t)^{-1/2} + 2t (2+t)^{1/2}]
    if (model.smooth_remainder()) {
        const double k = model.exponent();
        auto F = [&](double t) {
            const double s = std::sqrt(2.0 + t);
            return model.psi_over_power(eta - t) * (1.0 / s + 2.0 * t * s);
        };
        return 4.0 * kPi * jacobi_converged(F, eta, k, -0.5);
    }
    return 4.0 * kPi * singular_kernel(model, eta, [](double t) {
               const double s = std::sqrt(2.0 + t);
               return (1.0 / s + 2.0 * t * s) / std::sqrt(t);
           });
}

double pressure_kernel_d(const AnsatzModel& model, double eta)
{
    if (!(eta > 0.0)) return 0.0;
    if (model.smooth_remainder()) {
        const double k = model.exponent();
        auto F = [&](double t) {
            const double s = std::sqrt(2.0 + t);
            return model.psi_over_power(eta - t) * (s + 4.0 / 3.0 * t * s * s * s);
        };
        return 4.0 * kPi * jacobi_converged(F, eta, k, 0.5);
    }
    return 4.0 * kPi * singular_kernel(model, eta, [](double t) {
               const double s = std::sqrt(2.0 + t);
               return std::sqrt(t) * (s + 4.0 / 3.0 * t * s * s * s);
           });
}

double source_density(const AnsatzModel& model, double gamma, double u)
{
    return density_kernel(model, gamma, vacuum_threshold(model, gamma) - u);
}

double source_pressure(const AnsatzModel& model, double gamma, double u)
{
    if (gamma != 1.0) throw UnsupportedError("pressure kernel is only defined at gamma = 1");
    return pressure_kernel(model, model.cutoff() - 1.0 - u);
}

double c_km(double k, double m)
{
    if (!(k > -1.0) || !(m > -1.0)) throw DomainError("c_km: exponents must exceed -1");
    auto res = quad::endpoint_singular(
        [&](double, double s, double rest) { return std::pow(s, k) * std::pow(rest, m); }, 0.0, 1.0, 1e-13,
        1e-300);
    return res.value;
}

// ---------------------------------------------------------------------------

void SteadyStateProfile::finalize()
{
    if (r.size() < 2) {
        U_interp_.reset();
        m_interp_.reset();
        return;
    }
    std::vector<double> dU(r.size()), dm(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        dU[i] = r[i] > 0.0 ? m[i] / (r[i] * r[i]) : 0.0;
        dm[i] = 4.0 * kPi * r[i] * r[i] * rho[i];
    }
    U_interp_ = std::make_shared<MonotoneCubic>(r, U, std::move(dU));
    m_interp_ = std::make_shared<MonotoneCubic>(r, m, std::move(dm));
}

void SteadyStateProfile::potential_and_d(double radius, double& value, double& deriv) const
{
    if (trivial || !U_interp_) {
        value = U.empty() ? 0.0 : U.front();
        deriv = 0.0;
        return;
    }
    const double rend = r.back();
    if (radius >= rend) {
        value = U.back() + M * (1.0 / rend - 1.0 / radius);
        deriv = M / (radius * radius);
        return;
    }
    U_interp_->evaluate(std::max(radius, 0.0), value, deriv);
}

double SteadyStateProfile::potential(double radius) const
{
    double v, d;
    potential_and_d(radius, v, d);
    return v;
}

double SteadyStateProfile::potential_d(double radius) const
{
    double v, d;
    potential_and_d(radius, v, d);
    return d;
}

double SteadyStateProfile::enclosed_mass(double radius) const
{
    if (trivial || !m_interp_ || radius <= 0.0) return 0.0;
    if (radius >= r.back()) return M;
    return std::clamp((*m_interp_)(radius), 0.0, M);
}

double SteadyStateProfile::density(double radius) const
{
    if (trivial || radius >= R) return 0.0;
    return density_kernel(model, gamma, threshold() - potential(radius));
}

double SteadyStateProfile::potential_at_infinity() const
{
    if (trivial) return U.empty() ? 0.0 : U.front();
    return U.back() + M / r.back();
}

double SteadyStateProfile::dynamical_time() const
{
    if (trivial || !(M > 0.0)) return 0.0;
    return std::sqrt(R * R * R / M);
}

nlohmann::json SteadyStateProfile::header_json() const
{
    nlohmann::json j;
    j["E0"] = E0;
    j["u0"] = u0;
    j["R"] = R;
    j["M"] = M;
    j["gamma"] = gamma;
    j["compact"] = compact;
    j["trivial"] = trivial;
    j["normalized"] = normalized;
    j["nodes"] = r.size();
    j["model"] = model.to_json();
    return j;
}

void SteadyStateProfile::write(const std::string& csv_path, const std::string& json_path) const
{
    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot write " + csv_path);
    csv << "r,U,rho,m,p\n" << std::setprecision(17);
    for (std::size_t i = 0; i < r.size(); ++i)
        csv << r[i] << ',' << U[i] << ',' << rho[i] << ',' << m[i] << ',' << p[i] << '\n';
    std::ofstream js(json_path);
    if (!js) throw ConfigError("cannot write " + json_path);
    js << header_json().dump(2) << '\n';
}

// ---------------------------------------------------------------------------

namespace {

struct State {
    double U, m;
};

class RadialSystem {
public:
    RadialSystem(const AnsatzModel& model, double gamma) : model_(model), gamma_(gamma), thr_(vacuum_threshold(model, gamma)) {}

    double rho(double U) const { return density_kernel(model_, gamma_, thr_ - U); }

    State rhs(double r, const State& y) const
    {
        return {y.m / (r * r), 4.0 * kPi * r * r * rho(y.U)};
    }

    State rk4(double r, const State& y, double h) const
    {
        const State k1 = rhs(r, y);
        const State k2 = rhs(r + 0.5 * h, {y.U + 0.5 * h * k1.U, y.m + 0.5 * h * k1.m});
        const State k3 = rhs(r + 0.5 * h, {y.U + 0.5 * h * k2.U, y.m + 0.5 * h * k2.m});
        const State k4 = rhs(r + h, {y.U + h * k3.U, y.m + h * k3.m});
        return {y.U + h / 6.0 * (k1.U + 2 * k2.U + 2 * k3.U + k4.U),
                y.m + h / 6.0 * (k1.m + 2 * k2.m + 2 * k3.m + k4.m)};
    }

    // two half steps with local extrapolation; also returns the error norm
    State doubled(double r, const State& y, double h, double& err, double rtol, double eta0) const
    {
        const State full = rk4(r, y, h);
        const State half = rk4(r + 0.5 * h, rk4(r, y, 0.5 * h), 0.5 * h);
        const double eU = std::abs(half.U - full.U) / 15.0 / (rtol * std::max(std::abs(half.U), eta0));
        const double em = std::abs(half.m - full.m) / 15.0 / (rtol * std::abs(half.m) + 1e-300);
        err = std::max(eU, em);
        return {half.U + (half.U - full.U) / 15.0, half.m + (half.m - full.m) / 15.0};
    }

    double threshold() const { return thr_; }

private:
    const AnsatzModel& model_;
    double gamma_;
    double thr_;
};

}  // namespace

SteadyStateProfile solve_profile(const AnsatzModel& model, double u0, double gamma, const SolverOptions& opt)
{
    check_gamma(gamma);
    SteadyStateProfile p;
    p.model = model;
    p.gamma = gamma;
    p.E0 = model.cutoff();
    p.u0 = u0;
    const RadialSystem sys(model, gamma);
    const double thr = sys.threshold();
    const double eta0 = thr - u0;
    const bool with_pressure = gamma == 1.0;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto push = [&](double r, double U, double m) {
        const double rho = sys.rho(U);
        p.r.push_back(r);
        p.U.push_back(U);
        p.m.push_back(m);
        p.rho.push_back(rho);
        p.p.push_back(with_pressure ? pressure_kernel(model, thr - U) : nan);
    };

    if (!(eta0 > 0.0)) {
        p.trivial = true;
        p.compact = true;
        p.r = {0.0};
        p.U = {u0};
        p.m = {0.0};
        p.rho = {0.0};
        p.p = {with_pressure ? 0.0 : nan};
        return p;
    }

    const double rho0 = sys.rho(u0);
    const double rc = std::sqrt(3.0 * eta0 / (2.0 * kPi * rho0));
    push(0.0, u0, 0.0);
    double r = opt.start_factor * rc;
    State y{u0 + 2.0 * kPi / 3.0 * rho0 * r * r, 4.0 * kPi / 3.0 * rho0 * r * r * r};
    push(r, y.U, y.m);

    const double r_max = opt.r_max_factor * rc;
    double h = 1e-3 * rc;
    const double h_min = opt.min_step_factor * rc;
    for (int step = 0; step < opt.max_steps; ++step) {
        const double h_cap = std::max(r, rc) / 64.0;
        h = std::min(h, h_cap);
        double err;
        State next = sys.doubled(r, y, h, err, opt.rtol, eta0);
        if (!std::isfinite(next.U) || !std::isfinite(next.m)) throw NumericalError("steady-state integration produced NaN");
        if (err > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            if (h < h_min) throw StiffnessError("step-size control failed below the minimum step");
            continue;
        }
        if (next.U >= thr) {
            // locate the crossing by bisection on the step length
            double lo = 0.0, hi = h;
            State at_hi = next;
            while (hi - lo > 1e-13 * (r + hi)) {
                const double mid = 0.5 * (lo + hi);
                double e2;
                const State s = sys.doubled(r, y, mid, e2, opt.rtol, eta0);
                if (s.U >= thr) {
                    hi = mid;
                    at_hi = s;
                } else {
                    lo = mid;
                }
            }
            p.R = r + hi;
            p.M = at_hi.m;
            p.compact = true;
            p.r.push_back(p.R);
            p.U.push_back(thr);
            p.m.push_back(p.M);
            p.rho.push_back(0.0);
            p.p.push_back(with_pressure ? 0.0 : nan);
            p.finalize();
            return p;
        }
        r += h;
        y = next;
        push(r, y.U, y.m);
        if (r >= r_max) break;
        h *= std::min(4.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
    }
    // no crossing: the state does not have compact support within r_max
    p.compact = false;
    p.R = std::numeric_limits<double>::infinity();
    p.M = y.m;
    p.finalize();
    return p;
}

SteadyStateProfile normalize_profile(const SteadyStateProfile& p)
{
    if (!p.compact || p.trivial) throw DomainError("normalize_profile: profile must have compact, nontrivial support");
    const double Uinf = p.potential_at_infinity();
    SteadyStateProfile q = p;
    for (double& u : q.U) u -= Uinf;
    q.u0 -= Uinf;
    q.model = p.model.shifted(-Uinf);
    q.E0 = q.model.cutoff();
    q.normalized = true;
    if (!(q.E0 < 1.0)) throw NumericalError("normalized cut-off energy is not below 1");
    q.finalize();
    return q;
}

MakinoValues makino_diagnostics(const SteadyStateProfile& p, double radius)
{
    if (p.gamma != 1.0) throw UnsupportedError("Makino diagnostics require gamma = 1");
    if (p.trivial || !(radius > 0.0 && radius < p.R)) throw DomainError("Makino diagnostics need 0 < r < R");
    const double eta = p.threshold() - p.potential(radius);
    if (!(eta > 0.0)) throw DomainError("Makino diagnostics: point outside the occupied region");
    const double g = density_kernel(p.model, 1.0, eta);
    const double h = pressure_kernel(p.model, eta);
    const double dg = density_kernel_d(p.model, eta);
    const double dh = pressure_kernel_d(p.model, eta);
    MakinoValues v;
    v.x = p.enclosed_mass(radius) / (radius * eta);
    v.y = 4.0 * kPi * radius * radius * g * g / h;
    v.alpha = h / (g * eta);
    v.beta = 2.0 * eta * dg / g - eta * dh / h;
    return v;
}

MakinoLimits makino_limits(const SteadyStateProfile& p)
{
    std::vector<double> eta, a, b;
    for (int j = 0; j < 10; ++j) {
        const double rj = p.R * (1.0 - 0.05 * std::pow(2.0, -j));
        const auto v = makino_diagnostics(p, rj);
        eta.push_back(p.threshold() - p.potential(rj));
        a.push_back(v.alpha);
        b.push_back(v.beta);
    }
    auto fit0 = [&](const std::vector<double>& ys, int degree) {
        Eigen::MatrixXd A(eta.size(), degree + 1);
        Eigen::VectorXd rhs(eta.size());
        for (std::size_t i = 0; i < eta.size(); ++i) {
            double e = 1.0;
            for (int d = 0; d <= degree; ++d) {
                A(i, d) = e;
                e *= eta[i] / eta[0];
            }
            rhs(i) = ys[i];
        }
        return Eigen::VectorXd(A.colPivHouseholderQr().solve(rhs))(0);
    };
    MakinoLimits lim;
    lim.alpha = fit0(a, 2);
    lim.beta = fit0(b, 2);
    lim.alpha_spread = std::abs(lim.alpha - fit0(a, 3));
    lim.beta_spread = std::abs(lim.beta - fit0(b, 3));
    return lim;
}

SteadyStateProfile rescale_to_unit_gamma(const SteadyStateProfile& p)
{
    if (!(p.gamma > 0.0)) throw DomainError("rescale_to_unit_gamma: gamma = 0 has no relativistic counterpart");
    if (p.gamma == 1.0) return p;
    const double g = p.gamma;
    const double sr = std::sqrt(g), sm = g * sr;
    SteadyStateProfile q = p;
    q.gamma = 1.0;
    q.model = p.model.rescaled_to_unit_gamma(g);
    q.E0 = q.model.cutoff();
    q.u0 = g * p.u0;
    for (std::size_t i = 0; i < q.r.size(); ++i) {
        q.r[i] *= sr;
        q.U[i] *= g;
        q.m[i] *= sm;
        q.p[i] = q.trivial ? 0.0 : pressure_kernel(q.model, q.threshold() - q.U[i]);
    }
    q.R = p.R * sr;
    q.M = p.M * sm;
    q.normalized = false;
    q.finalize();
    return q;
}

double sup_potential_distance(const SteadyStateProfile& a, const SteadyStateProfile& b)
{
    const double Ra = a.r.back(), Rb = b.r.back();
    const double rmax = std::max(Ra, Rb);
    std::vector<double> pts(a.r);
    pts.insert(pts.end(), b.r.begin(), b.r.end());
    for (int i = 0; i <= 4000; ++i) pts.push_back(rmax * i / 4000.0);
    double sup = 0.0;
    for (double x : pts) sup = std::max(sup, std::abs(a.potential(x) - b.potential(x)));
    return std::max(sup, std::abs(a.potential_at_infinity() - b.potential_at_infinity()));
}

double equation_residual(const SteadyStateProfile& p)
{
    if (p.trivial) return 0.0;
    const double rho_ref = p.rho.front();
    double res = 0.0;
    const double thr = p.threshold();
    for (std::size_t i = 0; i < p.r.size(); ++i)
        res = std::max(res, std::abs(p.rho[i] - density_kernel(p.model, p.gamma, thr - p.U[i])) / rho_ref);
    // mass against an independent integral of 4 pi r^2 rho(U(r))
    static const quad::Rule gl = quad::gauss_legendre(6);
    quad::KahanSum mass;
    for (std::size_t i = 0; i + 1 < p.r.size(); ++i) {
        const double a = p.r[i], b = p.r[i + 1];
        for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[j];
            mass.add(0.5 * (b - a) * gl.weights[j] * 4.0 * kPi * x * x *
                     density_kernel(p.model, p.gamma, thr - p.potential(x)));
        }
        res = std::max(res, std::abs(mass.value() - p.m[i + 1]) / p.M);
    }
    return res;
}

}  // namespace rvp
