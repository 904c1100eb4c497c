#pragma once

#include "eivgof/dataset.hpp"

namespace eivgof {

/// Relative tolerance on the score-equation residual of a TLS fit.
inline constexpr double kScoreRelTol = 1e-8;
/// Fits whose singular gap sigma_n - sigma_{n+1} falls below this fraction of
/// sigma_1 are treated as non-unique.
inline constexpr double kSingularGapRelTol = 1e-10;
/// Condition-number limit on the bottom d x d block of the null-space basis.
inline constexpr double kMaxBlockCondition = 1e12;

struct TlsFit
{
    Matrix x_hat;            ///< n x d estimate of X0
    double singular_gap{};   ///< sigma_n(C) - sigma_{n+1}(C)
    double loss_at_solution{};
    Vector singular_values;  ///< all n + d singular values of [A B], descending, zero padded
    double score_residual{}; ///< || sum_i s(a_i, b_i; x_hat) ||_F
};

/// Total least squares estimate from the SVD of C = [A B].
///
/// Throws DegenerateInput when the minimizer is not unique, and
/// NoFiniteSolution when no finite minimizer exists (the estimate is
/// "infinite" in that case).
TlsFit tls_estimate(const EivDataset& data);

/// q(a, b; X) = (a^T X - b^T)(I + X^T X)^{-1}(X^T a - b).
double row_loss(const Vector& a, const Vector& b, const Matrix& x);

/// Q(X) = sum_i q(a_i, b_i; X).  The TLS estimate minimizes this.
double total_loss(const EivDataset& data, const Matrix& x);

/// Estimating function
///   s(a, b; X) = a (a^T X - b^T) - X (I + X^T X)^{-1} (X^T a - b)(a^T X - b^T),
/// an n x d matrix.  The gradient of q with respect to X is 2 s (I + X^T X)^{-1}.
Matrix row_score(const Vector& a, const Vector& b, const Matrix& x);

/// sum_i s(a_i, b_i; X).  Vanishes at the TLS estimate.
Matrix score_sum(const EivDataset& data, const Matrix& x);

/// Right-hand side of the score-root check: kScoreRelTol * (1 + ||sum a_i b_i^T||_F).
double score_residual_bound(const EivDataset& data);

}  // namespace eivgof
