#pragma once

#include <Eigen/Dense>

namespace eivgof {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default relative eigenvalue threshold for positive-definiteness checks.
inline constexpr double kDefaultPdRelTol = 1e-12;

/// A real symmetric matrix.  Construction symmetrizes the input as
/// (M + M^T) / 2, so the stored entries are exactly symmetric.
class SymMatrix
{
public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& m);

    static SymMatrix identity(Eigen::Index size);
    static SymMatrix zero(Eigen::Index size);

    const Matrix& matrix() const noexcept { return m_; }
    Eigen::Index size() const noexcept { return m_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    double min_eigenvalue() const;
    double max_eigenvalue() const;

    /// True iff lambda_min > rel_tol * lambda_max and lambda_max > 0.
    bool is_positive_definite(double rel_tol = kDefaultPdRelTol) const;

private:
    Matrix m_;
};

// ---------------------------------------------------------------------------
// Chi-squared family.
//
// Noncentral laws are parameterized by tau, the Euclidean norm of the mean
// vector:  chi2_d(tau) ~ || N(tau * e, I_d) ||^2  with ||e|| = 1.
// The conventional noncentrality parameter is lambda = tau^2.  Passing
// lambda where tau is expected squares the effect size; be careful.
// ---------------------------------------------------------------------------

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

/// P(chi2_d > x).  Throws DomainError for x < 0 or d < 1.
double chi2_sf(double x, int d);

/// Density of chi2_d at x (0 for x < 0).
double chi2_pdf(double x, int d);

/// Upper alpha-quantile q with P(chi2_d > q) = alpha, for 0 < alpha < 1/2.
double chi2_upper_quantile(double alpha, int d);

/// P(chi2_d(tau) > x) via the Poisson mixture of central terms with
/// lambda = tau^2.  tau = 0 returns chi2_sf(x, d) exactly.
double noncentral_chi2_sf(double x, int d, double tau);

/// Standard normal CDF.
double normal_cdf(double z);

// ---------------------------------------------------------------------------
// Symmetric matrix utilities.
// ---------------------------------------------------------------------------

/// Y = M^{-1/2} from the symmetric eigendecomposition of M.  Throws
/// NotPositiveDefinite if lambda_min(M) <= rel_tol * lambda_max(M).
SymMatrix sym_inv_sqrt(const SymMatrix& m, double rel_tol = kDefaultPdRelTol);

/// Y = M^{1/2} for positive semidefinite M (negative eigenvalues clipped).
SymMatrix sym_sqrt(const SymMatrix& m);

/// Solves M X = rhs for symmetric positive definite M, after the same
/// relative eigenvalue test as sym_inv_sqrt.
Matrix spd_solve(const SymMatrix& m, const Matrix& rhs, double rel_tol = kDefaultPdRelTol);
Vector spd_solve(const SymMatrix& m, const Vector& rhs, double rel_tol = kDefaultPdRelTol);

}  // namespace eivgof
