#include "eivgof/linalg_stats.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "eivgof/errors.hpp"

namespace eivgof {

namespace {

constexpr double kGammaEps = 1e-16;
constexpr int kGammaMaxIter = 100000;
constexpr double kTiny = 1e-300;
constexpr double kPoissonCutoff = 1e-17;

double gamma_prefactor(double a, double x)
{
    return std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Series for P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x)
{
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < kGammaMaxIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kGammaEps) {
            break;
        }
    }
    return sum * gamma_prefactor(a, x);
}

// Modified Lentz continued fraction for Q(a, x); used for x >= a + 1.
double gamma_q_continued_fraction(double a, double x)
{
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kGammaMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kGammaEps) {
            break;
        }
    }
    return h * gamma_prefactor(a, x);
}

void check_gamma_args(double a, double x)
{
    if (!(a > 0.0) || std::isnan(x) || x < 0.0) {
        throw DomainError("incomplete gamma: requires a > 0 and x >= 0");
    }
}

void check_chi2_args(double x, int d)
{
    if (d < 1) {
        throw DomainError("chi-squared: degrees of freedom must be >= 1");
    }
    if (std::isnan(x) || x < 0.0) {
        throw DomainError("chi-squared: argument must be >= 0");
    }
}

}  // namespace

// ---------------------------------------------------------------------------

SymMatrix::SymMatrix(const Matrix& m)
{
    if (m.rows() != m.cols()) {
        throw DomainError("SymMatrix: matrix must be square");
    }
    m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index size)
{
    return SymMatrix(Matrix::Identity(size, size));
}

SymMatrix SymMatrix::zero(Eigen::Index size)
{
    return SymMatrix(Matrix::Zero(size, size));
}

double SymMatrix::min_eigenvalue() const
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m_, Eigen::EigenvaluesOnly);
    return eig.eigenvalues()(0);
}

double SymMatrix::max_eigenvalue() const
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m_, Eigen::EigenvaluesOnly);
    return eig.eigenvalues()(eig.eigenvalues().size() - 1);
}

bool SymMatrix::is_positive_definite(double rel_tol) const
{
    if (size() == 0 || !m_.allFinite()) {
        return false;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m_, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(size() - 1);
    return hi > 0.0 && lo > rel_tol * hi;
}

// ---------------------------------------------------------------------------

double regularized_gamma_p(double a, double x)
{
    check_gamma_args(a, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x)
{
    check_gamma_args(a, x);
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_continued_fraction(a, x);
}

double chi2_sf(double x, int d)
{
    check_chi2_args(x, d);
    return regularized_gamma_q(0.5 * d, 0.5 * x);
}

double chi2_pdf(double x, int d)
{
    if (d < 1) {
        throw DomainError("chi-squared: degrees of freedom must be >= 1");
    }
    if (x < 0.0) return 0.0;
    const double k = 0.5 * d;
    if (x == 0.0) {
        if (d == 1) return std::numeric_limits<double>::infinity();
        return d == 2 ? 0.5 : 0.0;
    }
    return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::log(2.0) - std::lgamma(k));
}

double chi2_upper_quantile(double alpha, int d)
{
    if (!(alpha > 0.0 && alpha < 0.5)) {
        std::ostringstream msg;
        msg << "chi2_upper_quantile: alpha must lie in (0, 0.5), got " << alpha;
        throw DomainError(msg.str());
    }
    if (d < 1) {
        throw DomainError("chi2_upper_quantile: degrees of freedom must be >= 1");
    }

    double lo = 0.0;
    double hi = static_cast<double>(d);
    while (chi2_sf(hi, d) > alpha) {
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_sf(mid, d) > alpha) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Newton polish on sf(q) - alpha, kept inside the bracket.
    double q = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        const double pdf = chi2_pdf(q, d);
        if (!(pdf > 0.0)) break;
        const double next = q + (chi2_sf(q, d) - alpha) / pdf;
        if (!(next >= lo && next <= hi)) break;
        q = next;
    }
    return q;
}

double noncentral_chi2_sf(double x, int d, double tau)
{
    check_chi2_args(x, d);
    if (std::isnan(tau) || tau < 0.0) {
        throw DomainError("noncentral_chi2_sf: tau must be >= 0");
    }
    if (tau == 0.0) {
        return chi2_sf(x, d);
    }

    const double half_lambda = 0.5 * tau * tau;
    const double log_half_lambda = std::log(half_lambda);
    const auto weight = [&](long k) {
        return std::exp(-half_lambda + k * log_half_lambda - std::lgamma(k + 1.0));
    };
    const auto term = [&](long k) {
        return regularized_gamma_q(0.5 * d + k, 0.5 * x);
    };

    // Sum outward from the Poisson mode so the dominant weights come first.
    const long mode = static_cast<long>(std::floor(half_lambda));
    double sum = 0.0;
    for (long k = mode; k < mode + 1000000; ++k) {
        const double w = weight(k);
        sum += w * term(k);
        if (k > mode && w < kPoissonCutoff) break;
    }
    for (long k = mode - 1; k >= 0; --k) {
        const double w = weight(k);
        sum += w * term(k);
        if (w < kPoissonCutoff) break;
    }
    return std::min(1.0, std::max(0.0, sum));
}

double normal_cdf(double z)
{
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// ---------------------------------------------------------------------------

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> checked_eigen(const SymMatrix& m, double rel_tol,
                                                    const char* who)
{
    if (m.size() == 0 || !m.matrix().allFinite()) {
        throw NotPositiveDefinite(std::string(who) + ": matrix is empty or non-finite");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m.matrix());
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(m.size() - 1);
    if (!(hi > 0.0) || !(lo > rel_tol * hi)) {
        std::ostringstream msg;
        msg << who << ": matrix is not positive definite (lambda_min = " << lo
            << ", lambda_max = " << hi << ")";
        throw NotPositiveDefinite(msg.str());
    }
    return eig;
}

}  // namespace

SymMatrix sym_inv_sqrt(const SymMatrix& m, double rel_tol)
{
    const auto eig = checked_eigen(m, rel_tol, "sym_inv_sqrt");
    const Vector inv_sqrt = eig.eigenvalues().cwiseSqrt().cwiseInverse();
    const Matrix& v = eig.eigenvectors();
    return SymMatrix(v * inv_sqrt.asDiagonal() * v.transpose());
}

SymMatrix sym_sqrt(const SymMatrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m.matrix());
    const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Matrix& v = eig.eigenvectors();
    return SymMatrix(v * root.asDiagonal() * v.transpose());
}

Matrix spd_solve(const SymMatrix& m, const Matrix& rhs, double rel_tol)
{
    checked_eigen(m, rel_tol, "spd_solve");
    Eigen::LLT<Matrix> llt(m.matrix());
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("spd_solve: Cholesky factorization failed");
    }
    return llt.solve(rhs);
}

Vector spd_solve(const SymMatrix& m, const Vector& rhs, double rel_tol)
{
    return spd_solve(m, Matrix(rhs), rel_tol).col(0);
}

}  // namespace eivgof
