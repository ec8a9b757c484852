#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvp/interpolation.hpp"

namespace rvp {

enum class Family { Polytrope, King, Tabulated };

std::string to_string(Family f);

/// Leading behaviour phi(E) = c (E0-E)^k + O((E0-E)^(k+delta)) at the cut-off.
struct AsymptoticData {
    double c = 1.0;
    double k = 1.0;
    double delta = std::numeric_limits<double>::infinity();  // infinity: expansion is exact
};

/// Isotropic ansatz function phi(E) with cut-off energy E0.
///
/// Every family is stored as phi(E) = A * b((E0 - E) / s), where b is a
/// profile in the depth variable eps >= 0 with b(0) = 0 and b' > 0. The
/// amplitude A and energy scale s make the cut-off shift of normalization and
/// the gamma -> 1 rescaling exact operations on the model rather than wrappers.
/// Models are immutable values.
class AnsatzModel {
public:
    /// phi(E) = (E0 - E)_+^k; k must exceed -1/2.
    static AnsatzModel polytrope(double k, double E0);
    /// phi(E) = (exp(E0 - E) - 1)_+
    static AnsatzModel king(double E0);
    /// Tabulated (E, phi) pairs sorted by E. phi must be strictly decreasing
    /// up to the first zero, which defines E0, and vanish afterwards.
    static AnsatzModel tabulated(std::vector<double> energy, std::vector<double> phi);
    /// Two-column CSV (E, phi) with an optional header line.
    static AnsatzModel from_csv(const std::string& path);

    Family family() const noexcept { return family_; }
    double cutoff() const noexcept { return E0_; }
    const AsymptoticData& asymptotics() const noexcept { return asym_; }
    /// Polytropic exponent, or the exponent of the leading behaviour otherwise.
    double exponent() const noexcept { return asym_.k; }

    double phi(double E) const;
    /// phi'(E); valid for E < E0, zero above.
    double dphi(double E) const;
    /// psi(eps) = phi(E0 - eps), evaluated without forming E.
    double psi(double eps) const;
    /// psi(eps) / eps^k. Smooth on [0, inf) for the closed-form families.
    double psi_over_power(double eps) const;
    /// True when psi_over_power is analytic, so Jacobi-weighted rules converge fast.
    bool smooth_remainder() const noexcept { return family_ != Family::Tabulated; }

    /// phi^{-1}(f) on [0, inf); returns E0 at f = 0.
    double phi_inverse(double f) const;
    /// Casimir kernel Phi(f) = -int_0^f phi^{-1}(z) dz.
    double casimir(double f) const;
    /// Phi'(f) = -phi^{-1}(f).
    double casimir_d1(double f) const { return -phi_inverse(f); }
    /// Phi''(f) = -1/phi'(phi^{-1}(f)) for f > 0.
    double casimir_d2(double f) const;

    /// Same model with the cut-off moved by dE: phi_new(E) = phi(E - dE).
    AnsatzModel shifted(double dE) const;
    /// Ansatz of the gamma=1 state obtained from a gamma-ansatz steady state
    /// by the mass/length rescaling: gamma^{-3/2} phi((E - 1) / gamma).
    AnsatzModel rescaled_to_unit_gamma(double gamma) const;

    nlohmann::json to_json() const;
    static AnsatzModel from_json(const nlohmann::json& j);

private:
    AnsatzModel() = default;

    double base(double x) const;        // b(x)
    double base_d1(double x) const;     // b'(x)
    double base_inverse(double y) const;
    double base_casimir(double y) const;  // int_0^y b^{-1}(z) dz

    Family family_ = Family::Polytrope;
    double k_ = 1.0;
    double E0_ = 0.0;
    double amplitude_ = 1.0;
    double scale_ = 1.0;
    AsymptoticData asym_;
    std::shared_ptr<const MonotoneCubic> table_;  // b(eps) for tabulated models
    std::vector<double> table_E_, table_phi_;     // original table for serialization
};

}  // namespace rvp
