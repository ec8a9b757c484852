#include "rvp/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rvp {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y))
{
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("MonotoneCubic: need >= 2 matching nodes");
    d_.assign(n, 0.0);
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = x_[i + 1] - x_[i];
        if (!(h > 0.0)) throw std::invalid_argument("MonotoneCubic: nodes must be strictly increasing");
        delta[i] = (y_[i + 1] - y_[i]) / h;
    }
    d_[0] = delta[0];
    d_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d_[i] = 0.0;
        } else {
            // weighted harmonic mean (Fritsch-Butland)
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            const double w1 = 2.0 * h1 + h0, w2 = h1 + 2.0 * h0;
            d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    limit_slopes();
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y, std::vector<double> slopes)
    : x_(std::move(x)), y_(std::move(y)), d_(std::move(slopes))
{
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n || d_.size() != n)
        throw std::invalid_argument("MonotoneCubic: need >= 2 matching nodes");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(x_[i + 1] > x_[i])) throw std::invalid_argument("MonotoneCubic: nodes must be strictly increasing");
    limit_slopes();
}

void MonotoneCubic::limit_slopes()
{
    const std::size_t n = x_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double delta = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        if (delta == 0.0) {
            d_[i] = 0.0;
            d_[i + 1] = 0.0;
            continue;
        }
        if (d_[i] * delta < 0.0) d_[i] = 0.0;
        if (d_[i + 1] * delta < 0.0) d_[i + 1] = 0.0;
        const double a = d_[i] / delta, b = d_[i + 1] / delta;
        const double s = a * a + b * b;
        if (s > 9.0) {
            const double tau = 3.0 / std::sqrt(s);
            d_[i] = tau * a * delta;
            d_[i + 1] = tau * b * delta;
        }
    }
}

std::size_t MonotoneCubic::segment(double x) const
{
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(i, x_.size() - 2);
}

void MonotoneCubic::evaluate(double x, double& value, double& deriv) const
{
    // linear continuation outside the table
    if (x <= x_.front()) {
        value = y_.front() + d_.front() * (x - x_.front());
        deriv = d_.front();
        return;
    }
    if (x >= x_.back()) {
        value = y_.back() + d_.back() * (x - x_.back());
        deriv = d_.back();
        return;
    }
    const std::size_t i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    value = h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
    const double g00 = (6 * t2 - 6 * t) / h, g10 = 3 * t2 - 4 * t + 1;
    const double g01 = (-6 * t2 + 6 * t) / h, g11 = 3 * t2 - 2 * t;
    deriv = g00 * y_[i] + g10 * d_[i] + g01 * y_[i + 1] + g11 * d_[i + 1];
}

double MonotoneCubic::operator()(double x) const
{
    double v, d;
    evaluate(x, v, d);
    return v;
}

double MonotoneCubic::derivative(double x) const
{
    double v, d;
    evaluate(x, v, d);
    return d;
}

}  // namespace rvp
