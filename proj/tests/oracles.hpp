#pragma once

// Test-only reference computations.  Nothing here calls into the library's
// implementation paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <Eigen/Dense>

namespace oracle {

inline double chi2_density(double t, int d)
{
    const double k = 0.5 * d;
    return std::exp((k - 1.0) * std::log(t) - 0.5 * t - k * std::log(2.0) - std::lgamma(k));
}

/// P(chi2_d > x) by numerically integrating the density over [x, inf).
inline double chi2_sf_by_quadrature(double x, int d)
{
    boost::math::quadrature::exp_sinh<double> integrator;
    double error = 0.0;
    return integrator.integrate([d](double t) { return chi2_density(t, d); }, x,
                                std::numeric_limits<double>::infinity(), 1e-15, &error);
}

/// Bisection for q with sf(q) = alpha on a monotone decreasing sf.
inline double bisect_upper_quantile(const std::function<double(double)>& sf, double alpha)
{
    double lo = 1e-12;
    double hi = 1.0;
    while (sf(hi) > alpha) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (sf(mid) > alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Golden-section minimization of a unimodal function on [lo, hi], carried
/// out in extended precision so flat minima still resolve to ~1e-11.
inline long double golden_section_min(const std::function<long double(long double)>& f,
                                      long double lo, long double hi, long double tol = 1e-13L)
{
    const long double ratio = (std::sqrt(5.0L) - 1.0L) / 2.0L;
    long double x1 = hi - ratio * (hi - lo);
    long double x2 = lo + ratio * (hi - lo);
    long double f1 = f(x1);
    long double f2 = f(x2);
    while (hi - lo > tol) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    return 0.5L * (lo + hi);
}

/// Nelder-Mead on R^k.  Derivative free; returns the best vertex.
inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                   Eigen::VectorXd start, double step, int max_iter = 20000,
                                   double ftol = 1e-15)
{
    const Eigen::Index k = start.size();
    std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(k + 1), start);
    std::vector<double> values(static_cast<std::size_t>(k + 1));
    for (Eigen::Index i = 0; i < k; ++i) simplex[static_cast<std::size_t>(i + 1)](i) += step;
    for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = f(simplex[i]);

    for (int it = 0; it < max_iter; ++it) {
        std::vector<std::size_t> order(simplex.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[order.size() - 2];
        if (std::abs(values[worst] - values[best]) <= ftol * (1.0 + std::abs(values[best]))) break;
        double spread = 0.0;
        for (const auto& vertex : simplex) spread = std::max(spread, (vertex - simplex[best]).norm());
        if (spread <= 1e-11 * (1.0 + simplex[best].norm())) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
        for (std::size_t i = 0; i < simplex.size(); ++i)
            if (i != worst) centroid += simplex[i];
        centroid /= static_cast<double>(k);

        const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
        const double fr = f(reflected);
        if (fr < values[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = f(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            const Eigen::VectorXd contracted = centroid + 0.5 * (simplex[worst] - centroid);
            const double fc = f(contracted);
            if (fc < values[worst]) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                for (std::size_t i = 0; i < simplex.size(); ++i) {
                    if (i == best) continue;
                    simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return simplex[best];
}

/// Q(X) written directly from the row loss definition with explicit inverse.
inline double loss_direct(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const Eigen::MatrixXd& x)
{
    const Eigen::Index d = x.cols();
    const Eigen::MatrixXd k_inv = (Eigen::MatrixXd::Identity(d, d) + x.transpose() * x).inverse();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const Eigen::VectorXd r = x.transpose() * a.row(i).transpose() - b.row(i).transpose();
        sum += r.dot(k_inv * r);
    }
    return sum;
}

/// Analytic gradient of Q from differentiating the row loss:
/// dq/dX = 2 a (K r)^T - 2 X (K r)(K r)^T with K = (I + X^T X)^{-1}, r = X^T a - b.
inline Eigen::MatrixXd loss_gradient(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                     const Eigen::MatrixXd& x)
{
    const Eigen::Index d = x.cols();
    const Eigen::MatrixXd k_inv = (Eigen::MatrixXd::Identity(d, d) + x.transpose() * x).inverse();
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const Eigen::VectorXd ai = a.row(i).transpose();
        const Eigen::VectorXd kr = k_inv * (x.transpose() * ai - b.row(i).transpose());
        grad += 2.0 * ai * kr.transpose() - 2.0 * x * kr * kr.transpose();
    }
    return grad;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                     double scale = 1.0)
{
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

inline Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, Eigen::Index size)
{
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(rng, size, size));
    return qr.householderQ();
}

}  // namespace oracle
