#include "rvp/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace rvp::quad {

Rule gauss_legendre(int n)
{
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    if (n == 1) return Rule{{0.0}, {2.0}};
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged root
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

Rule gauss_jacobi(int n, double alpha, double beta)
{
    if (n < 1) throw std::invalid_argument("gauss_jacobi: n must be positive");
    if (!(alpha > -1.0) || !(beta > -1.0))
        throw std::domain_error("gauss_jacobi: exponents must exceed -1");
    const double ab = alpha + beta;
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(std::max(n - 1, 1));
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + ab;
        if (k == 0)
            diag(k) = (beta - alpha) / (ab + 2.0);
        else
            diag(k) = (beta * beta - alpha * alpha) / (s * (s + 2.0));
    }
    for (int k = 1; k < n; ++k) {
        const double s = 2.0 * k + ab;
        double b2;
        if (k == 1)
            b2 = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
        else
            b2 = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
        sub(k - 1) = std::sqrt(b2);
    }
    const double log_mu0 = (ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                           std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0);
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    if (n == 1) {
        rule.nodes[0] = diag(0);
        rule.weights[0] = std::exp(log_mu0);
        return rule;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("gauss_jacobi: eigenvalue solver failed");
    const double mu0 = std::exp(log_mu0);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = solver.eigenvalues()(i);
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

const Rule& gauss_jacobi_cached(int n, double alpha, double beta)
{
    static std::mutex mutex;
    static std::map<std::tuple<int, double, double>, Rule> cache;
    std::lock_guard lock(mutex);
    auto key = std::make_tuple(n, alpha, beta);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, gauss_jacobi(n, alpha, beta)).first;
    return it->second;
}

double jacobi_weighted(const std::function<double(double)>& F, double eta, double alpha,
                       double beta, int n)
{
    if (!(eta > 0.0)) return 0.0;
    const Rule& rule = gauss_jacobi_cached(n, alpha, beta);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        // (1+x) eta/2 measured from t=0 keeps small t exact
        const double t = 0.5 * eta * (1.0 + rule.nodes[i]);
        sum += rule.weights[i] * F(t);
    }
    return std::pow(0.5 * eta, alpha + beta + 1.0) * sum;
}

namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kron = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double s = f(c - dx) + f(c + dx);
        kron += kWgk[j] * s;
        if (j % 2 == 1) gauss += kWg[j / 2] * s;
    }
    kron *= h;
    gauss *= h;
    return {a, b, kron, std::abs(kron - gauss)};
}

}  // namespace

Result adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                double abs_tol, int max_intervals)
{
    Result res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    std::priority_queue<Segment> heap;
    Segment first = gk15(f, a, b);
    heap.push(first);
    double total = first.value;
    double err = first.error;
    res.evaluations = 15;
    int intervals = 1;
    while (err > std::max(abs_tol, rel_tol * std::abs(total)) && intervals < max_intervals) {
        Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            heap.push(worst);
            break;
        }
        Segment left = gk15(f, worst.a, mid);
        Segment right = gk15(f, mid, worst.b);
        res.evaluations += 30;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
    }
    // resum from the leaves to shed the accumulated update rounding
    double value = 0.0, error = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    res.value = value;
    res.error = error;
    res.converged = error <= std::max(abs_tol, rel_tol * std::abs(value));
    return res;
}

Result endpoint_singular(const std::function<double(double, double, double)>& f, double a,
                         double b, double rel_tol, double abs_tol)
{
    const double len = b - a;
    auto g = [&](double theta) {
        const double s = std::sin(theta);
        const double c = std::cos(theta);
        const double da = len * s * s;
        const double db = len * c * c;
        return f(a + da, da, db) * 2.0 * len * s * c;
    };
    return adaptive(g, 0.0, 0.5 * std::numbers::pi, rel_tol, abs_tol);
}

double composite_gl(const std::function<double(double)>& f, double a, double b, int panels,
                    int order)
{
    static const Rule rule8 = gauss_legendre(8);
    const Rule rule = order == 8 ? rule8 : gauss_legendre(order);
    const double h = (b - a) / panels;
    KahanSum sum;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            sum.add(rule.weights[i] * 0.5 * h * f(c + 0.5 * h * rule.nodes[i]));
    }
    return sum.value();
}

void KahanSum::add(double x) noexcept
{
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

double kahan_sum(std::span<const double> xs) noexcept
{
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

}  // namespace rvp::quad
