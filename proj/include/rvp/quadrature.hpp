#pragma once

#include <functional>
#include <span>
#include <vector>

namespace rvp::quad {

/// Nodes and weights of a fixed rule on a reference interval.
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1,1].
Rule gauss_legendre(int n);

/// n-point Gauss-Jacobi rule on [-1,1] for the weight (1-x)^alpha (1+x)^beta,
/// alpha,beta > -1. Nodes come from the Golub-Welsch eigenvalue problem of the
/// Jacobi matrix, so non-integer exponents are supported.
Rule gauss_jacobi(int n, double alpha, double beta);

/// Cached Gauss-Jacobi rule; rules are shared between threads once built.
const Rule& gauss_jacobi_cached(int n, double alpha, double beta);

/// Integral over [0,eta] of (eta-t)^alpha t^beta F(t) using an n-point
/// Gauss-Jacobi rule mapped onto the interval.
double jacobi_weighted(const std::function<double(double)>& F, double eta, double alpha,
                       double beta, int n);

struct Result {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Globally adaptive Gauss-Kronrod (7/15) integration. Stops when the summed
/// error estimate is below max(abs_tol, rel_tol*|I|) or max_intervals is hit.
Result adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                double abs_tol = 0.0, int max_intervals = 2000);

/// Integral over [a,b] of a function with integrable algebraic endpoint
/// singularities: x = a + (b-a) sin^2(theta), theta in [0, pi/2], followed by
/// adaptive Gauss-Kronrod. The callback receives (x, x-a, b-x) so that the
/// distances to both endpoints are free of cancellation.
Result endpoint_singular(const std::function<double(double, double, double)>& f, double a,
                         double b, double rel_tol, double abs_tol = 0.0);

/// Composite Gauss-Legendre over `panels` equal panels of [a,b].
double composite_gl(const std::function<double(double)>& f, double a, double b, int panels,
                    int order = 8);

/// Compensated (Neumaier) summation.
class KahanSum {
public:
    void add(double x) noexcept;
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double kahan_sum(std::span<const double> xs) noexcept;

}  // namespace rvp::quad
