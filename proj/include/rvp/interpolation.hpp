#pragma once

#include <span>
#include <vector>

namespace rvp {

/// Piecewise cubic Hermite interpolant with the Fritsch-Carlson limiter.
/// Node slopes are either supplied (exact derivatives) or estimated from the
/// data; in both cases they are limited so that monotone data stay monotone.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y);
    MonotoneCubic(std::vector<double> x, std::vector<double> y, std::vector<double> slopes);

    double operator()(double x) const;
    double derivative(double x) const;
    /// Value and derivative in one lookup.
    void evaluate(double x, double& value, double& deriv) const;

    bool empty() const noexcept { return x_.empty(); }
    double xmin() const { return x_.front(); }
    double xmax() const { return x_.back(); }
    std::span<const double> nodes() const noexcept { return x_; }
    std::span<const double> values() const noexcept { return y_; }

private:
    void limit_slopes();
    std::size_t segment(double x) const;

    std::vector<double> x_, y_, d_;
};

}  // namespace rvp
