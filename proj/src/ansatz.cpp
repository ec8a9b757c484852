#include "rvp/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rvp/errors.hpp"
#include "rvp/quadrature.hpp"

namespace rvp {

std::string to_string(Family f)
{
    switch (f) {
    case Family::Polytrope: return "polytrope";
    case Family::King: return "king";
    case Family::Tabulated: return "tabulated";
    }
    return "unknown";
}

AnsatzModel AnsatzModel::polytrope(double k, double E0)
{
    if (!(k > -0.5)) throw DomainError("polytrope: exponent k must exceed -1/2");
    if (!std::isfinite(E0)) throw DomainError("polytrope: cut-off energy must be finite");
    AnsatzModel m;
    m.family_ = Family::Polytrope;
    m.k_ = k;
    m.E0_ = E0;
    m.asym_ = {1.0, k, std::numeric_limits<double>::infinity()};
    return m;
}

AnsatzModel AnsatzModel::king(double E0)
{
    if (!std::isfinite(E0)) throw DomainError("king: cut-off energy must be finite");
    AnsatzModel m;
    m.family_ = Family::King;
    m.k_ = 1.0;
    m.E0_ = E0;
    m.asym_ = {1.0, 1.0, 1.0};
    return m;
}

AnsatzModel AnsatzModel::tabulated(std::vector<double> energy, std::vector<double> phi)
{
    const std::size_t n = energy.size();
    if (n < 3 || phi.size() != n) throw ConfigError("tabulated ansatz: need at least 3 (E, phi) rows");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(energy[i + 1] > energy[i])) throw ConfigError("tabulated ansatz: energies must increase");
    std::size_t cut = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(phi[i] >= 0.0)) throw ConfigError("tabulated ansatz: phi must be non-negative");
        if (phi[i] == 0.0 && cut == n) cut = i;
    }
    if (cut == n) throw ConfigError("tabulated ansatz: table must reach phi = 0 (cut-off energy)");
    if (cut < 2) throw ConfigError("tabulated ansatz: need at least two rows below the cut-off");
    for (std::size_t i = cut; i < n; ++i)
        if (phi[i] != 0.0) throw ConfigError("tabulated ansatz: phi must vanish above the cut-off");
    for (std::size_t i = 0; i + 1 <= cut; ++i)
        if (!(phi[i] > phi[i + 1])) throw ConfigError("tabulated ansatz: phi must strictly decrease below the cut-off");

    AnsatzModel m;
    m.family_ = Family::Tabulated;
    m.E0_ = energy[cut];
    std::vector<double> eps, b;
    for (std::size_t i = cut + 1; i-- > 0;) {
        eps.push_back(m.E0_ - energy[i]);
        b.push_back(phi[i]);
    }
    m.table_ = std::make_shared<MonotoneCubic>(std::move(eps), std::move(b));
    m.table_E_ = std::move(energy);
    m.table_phi_ = std::move(phi);
    // the interpolant leaves the cut-off linearly
    m.k_ = 1.0;
    m.asym_ = {m.table_->derivative(0.0), 1.0, 1.0};
    if (!(m.asym_.c > 0.0)) throw ConfigError("tabulated ansatz: zero slope at the cut-off");
    return m;
}

AnsatzModel AnsatzModel::from_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open ansatz table " + path);
    std::vector<double> E, phi;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double e, p;
        if (!(ls >> e >> p)) {
            if (E.empty()) continue;  // header
            throw ConfigError("malformed row in " + path + ": " + line);
        }
        E.push_back(e);
        phi.push_back(p);
    }
    return tabulated(std::move(E), std::move(phi));
}

double AnsatzModel::base(double x) const
{
    if (!(x > 0.0)) return 0.0;
    switch (family_) {
    case Family::Polytrope: return std::pow(x, k_);
    case Family::King: return std::expm1(x);
    case Family::Tabulated: return (*table_)(x);
    }
    return 0.0;
}

double AnsatzModel::base_d1(double x) const
{
    switch (family_) {
    case Family::Polytrope:
        if (x <= 0.0) return k_ == 1.0 ? 1.0 : (k_ < 1.0 ? std::numeric_limits<double>::infinity() : 0.0);
        return k_ * std::pow(x, k_ - 1.0);
    case Family::King: return std::exp(std::max(x, 0.0));
    case Family::Tabulated: return table_->derivative(std::max(x, 0.0));
    }
    return 0.0;
}

double AnsatzModel::base_inverse(double y) const
{
    if (y <= 0.0) return 0.0;
    switch (family_) {
    case Family::Polytrope: return std::pow(y, 1.0 / k_);
    case Family::King: return std::log1p(y);
    case Family::Tabulated: break;
    }
    // bracketed bisection refined by Newton steps
    double lo = 0.0, hi = std::max(table_->xmax(), 1e-3);
    while ((*table_)(hi) < y) hi *= 2.0;
    double x = 0.5 * (lo + hi);
    const double tol = 1e-12 / scale_;
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        double v, d;
        table_->evaluate(x, v, d);
        if (v < y)
            lo = x;
        else
            hi = x;
        double xn = d > 0.0 ? x - (v - y) / d : 0.5 * (lo + hi);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) < 0.25 * tol) return xn;
        x = xn;
    }
    return x;
}

double AnsatzModel::base_casimir(double y) const
{
    if (y <= 0.0) return 0.0;
    switch (family_) {
    case Family::Polytrope: return k_ / (k_ + 1.0) * std::pow(y, (k_ + 1.0) / k_);
    case Family::King: return (1.0 + y) * std::log1p(y) - y;
    case Family::Tabulated: break;
    }
    auto res = quad::adaptive([this](double z) { return base_inverse(z); }, 0.0, y, 1e-12, 1e-300);
    return res.value;
}

double AnsatzModel::phi(double E) const
{
    return amplitude_ * base((E0_ - E) / scale_);
}

double AnsatzModel::dphi(double E) const
{
    if (E >= E0_) return 0.0;
    return -amplitude_ / scale_ * base_d1((E0_ - E) / scale_);
}

double AnsatzModel::psi(double eps) const
{
    return amplitude_ * base(eps / scale_);
}

double AnsatzModel::psi_over_power(double eps) const
{
    switch (family_) {
    case Family::Polytrope: return amplitude_ * std::pow(scale_, -k_);
    case Family::King:
        if (eps <= 0.0) return amplitude_ / scale_;
        return amplitude_ * std::expm1(eps / scale_) / eps;
    case Family::Tabulated:
        if (eps <= 0.0) return asym_.c;
        return psi(eps) / eps;
    }
    return 0.0;
}

double AnsatzModel::phi_inverse(double f) const
{
    if (f < 0.0 || std::isnan(f)) throw DomainError("phi_inverse: density value must be non-negative");
    if (f == 0.0) return E0_;
    return E0_ - scale_ * base_inverse(f / amplitude_);
}

double AnsatzModel::casimir(double f) const
{
    if (f < 0.0 || std::isnan(f)) throw DomainError("casimir: density value must be non-negative");
    if (f == 0.0) return 0.0;
    return -E0_ * f + scale_ * amplitude_ * base_casimir(f / amplitude_);
}

double AnsatzModel::casimir_d2(double f) const
{
    if (!(f > 0.0)) throw DomainError("casimir_d2: density value must be positive");
    return scale_ / (amplitude_ * base_d1(base_inverse(f / amplitude_)));
}

AnsatzModel AnsatzModel::shifted(double dE) const
{
    AnsatzModel m = *this;
    m.E0_ += dE;
    return m;
}

AnsatzModel AnsatzModel::rescaled_to_unit_gamma(double gamma) const
{
    if (!(gamma > 0.0)) throw DomainError("rescaled_to_unit_gamma: gamma must be positive");
    AnsatzModel m = *this;
    m.amplitude_ = amplitude_ * std::pow(gamma, -1.5);
    m.scale_ = scale_ * gamma;
    m.E0_ = 1.0 + gamma * E0_;
    m.asym_.c = asym_.c * std::pow(gamma, -1.5) * std::pow(gamma, -asym_.k);
    return m;
}

nlohmann::json AnsatzModel::to_json() const
{
    nlohmann::json j;
    j["family"] = to_string(family_);
    j["E0"] = E0_;
    if (family_ == Family::Polytrope) j["k"] = k_;
    if (amplitude_ != 1.0) j["amplitude"] = amplitude_;
    if (scale_ != 1.0) j["scale"] = scale_;
    if (family_ == Family::Tabulated) {
        j["table_E"] = table_E_;
        j["table_phi"] = table_phi_;
    }
    return j;
}

AnsatzModel AnsatzModel::from_json(const nlohmann::json& j)
{
    const std::string fam = j.at("family").get<std::string>();
    AnsatzModel m = [&] {
        if (fam == "polytrope") return polytrope(j.at("k").get<double>(), j.value("E0", 0.0));
        if (fam == "king") return king(j.value("E0", 0.0));
        if (fam == "tabulated") {
            if (j.contains("path")) return from_csv(j.at("path").get<std::string>());
            return tabulated(j.at("table_E").get<std::vector<double>>(),
                             j.at("table_phi").get<std::vector<double>>());
        }
        throw ConfigError("unknown ansatz family '" + fam + "'");
    }();
    // a tabulated model derives its own cut-off; a given E0 then shifts it
    if (fam == "tabulated" && j.contains("E0")) m = m.shifted(j.at("E0").get<double>() - m.cutoff());
    const double A = j.value("amplitude", 1.0), s = j.value("scale", 1.0);
    if (!(A > 0.0) || !(s > 0.0)) throw ConfigError("ansatz amplitude and scale must be positive");
    m.amplitude_ = A;
    m.scale_ = s;
    m.asym_.c *= A * std::pow(s, -m.asym_.k);
    return m;
}

}  // namespace rvp
