#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "rvp/interpolation.hpp"
#include "rvp/quadrature.hpp"

using namespace rvp;

namespace {

// Beta function through lgamma, independent of the Golub-Welsch code path.
double beta_fn(double a, double b)
{
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

}  // namespace

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1 exactly")
{
    for (int n : {1, 2, 5, 12, 40}) {
        const auto rule = quad::gauss_legendre(n);
        for (int p = 0; p <= 2 * n - 1; ++p) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], p);
            const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
            CHECK(s == doctest::Approx(exact).epsilon(1e-13));
        }
    }
}

TEST_CASE("Gauss-Jacobi moments match Beta functions")
{
    for (double a : {-0.5, 0.0, 0.5, 1.0, 1.5})
        for (double b : {-0.5, 0.5, 1.5, 2.3}) {
            const int n = 8;
            const auto rule = quad::gauss_jacobi(n, a, b);
            for (int p = 0; p < 2 * n; p += 3) {
                // int (1-x)^a (1+x)^b ((1+x)/2)^p dx
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += rule.weights[i] * std::pow(0.5 * (1 + rule.nodes[i]), p);
                const double exact = std::pow(2.0, a + b + 1) * beta_fn(a + 1, b + p + 1);
                CHECK(s == doctest::Approx(exact).epsilon(1e-12));
            }
        }
}

TEST_CASE("jacobi_weighted maps the weight onto [0, eta]")
{
    const double eta = 0.7;
    // int_0^eta (eta-t)^1.5 t^0.5 dt = eta^3 B(2.5, 1.5)
    const double v = quad::jacobi_weighted([](double) { return 1.0; }, eta, 1.5, 0.5, 6);
    CHECK(v == doctest::Approx(std::pow(eta, 3.0) * beta_fn(2.5, 1.5)).epsilon(1e-13));
}

TEST_CASE("adaptive Gauss-Kronrod")
{
    auto r = quad::adaptive([](double x) { return std::exp(-x) * std::sin(5 * x); }, 0.0, 3.0, 1e-12);
    const double exact = (5.0 - std::exp(-3.0) * (std::sin(15.0) + 5 * std::cos(15.0))) / 26.0;
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(exact).epsilon(1e-12));

    SUBCASE("empty interval")
    {
        auto z = quad::adaptive([](double) { return 1.0; }, 1.0, 1.0, 1e-10);
        CHECK(z.value == 0.0);
    }
}

TEST_CASE("endpoint_singular handles inverse square roots at both ends")
{
    // int_0^2 dx / sqrt(x (2-x)) = pi
    auto r = quad::endpoint_singular([](double, double da, double db) { return 1.0 / std::sqrt(da * db); },
                                     0.0, 2.0, 1e-12);
    CHECK(r.value == doctest::Approx(std::numbers::pi).epsilon(1e-12));
    // int_0^1 x^-0.7 (1-x)^0.3 = B(0.3, 1.3)
    auto s = quad::endpoint_singular([](double, double da, double db) { return std::pow(da, -0.7) * std::pow(db, 0.3); },
                                     0.0, 1.0, 1e-10);
    CHECK(s.value == doctest::Approx(beta_fn(0.3, 1.3)).epsilon(1e-8));
}

TEST_CASE("composite Gauss-Legendre converges")
{
    auto f = [](double x) { return 1.0 / (1.0 + 25 * x * x); };
    const double exact = 2.0 * std::atan(5.0) / 5.0;
    CHECK(quad::composite_gl(f, -1, 1, 32) == doctest::Approx(exact).epsilon(1e-13));
}

TEST_CASE("Kahan summation recovers cancelled terms")
{
    std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
    CHECK(quad::kahan_sum(xs) == 2.0);
}

TEST_CASE("monotone cubic interpolation")
{
    std::vector<double> x{0, 1, 2, 3, 4}, y{0, 0.1, 0.2, 2.0, 2.1};
    MonotoneCubic mc(x, y);
    for (int i = 0; i < 5; ++i) CHECK(mc(x[i]) == doctest::Approx(y[i]));
    double prev = -1;
    for (double t = 0; t <= 4; t += 0.01) {
        const double v = mc(t);
        CHECK(v >= prev - 1e-15);
        CHECK(mc.derivative(t) >= -1e-14);
        prev = v;
    }
    SUBCASE("exact slopes reproduce a cubic-friendly function closely")
    {
        std::vector<double> xs, ys, ds;
        for (int i = 0; i <= 40; ++i) {
            const double t = 0.05 * i;
            xs.push_back(t);
            ys.push_back(t * t);
            ds.push_back(2 * t);
        }
        MonotoneCubic q(xs, ys, ds);
        CHECK(q(0.333) == doctest::Approx(0.333 * 0.333).epsilon(1e-12));
        CHECK(q.derivative(0.777) == doctest::Approx(2 * 0.777).epsilon(1e-12));
    }
}

TEST_CASE("property: Gauss-Legendre on random polynomials")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int trial = 0; trial < 50; ++trial) {
        double c[6];
        for (double& ci : c) ci = U(rng);
        double exact = 0;
        for (int p = 0; p < 6; ++p) exact += c[p] * (p % 2 ? 0.0 : 2.0 / (p + 1));
        auto f = [&](double x) {
            double s = 0, xp = 1;
            for (double ci : c) { s += ci * xp; xp *= x; }
            return s;
        };
        CHECK(quad::composite_gl(f, -1, 1, 1, 3) == doctest::Approx(exact).epsilon(1e-13));
    }
}
