#pragma once

#include "eivgof/tls.hpp"

namespace eivgof {

struct NuisanceEstimates
{
    double sigma2_hat{};  ///< error variance, clamped at 0
    SymMatrix va_hat;     ///< mean(a a^T) - sigma2_hat * I_n
    Vector mu_a_hat;      ///< column mean of A
    /// lambda_min(va_hat - mu_a_hat mu_a_hat^T).  Diagnostic for a
    /// nonsingular centered design covariance; not enforced.
    double sa_min_eigenvalue{};
};

struct TestCovariance
{
    SymMatrix sigma_t_hat;    ///< d x d
    SymMatrix sandwich_part;  ///< S_hat(mu_a_hat)
    /// lambda_min > rel_tol * lambda_max, and lambda_max above rel_tol times
    /// the mean squared row norm of [A B].
    bool pd_ok{};
};

/// Error variance from the trace form
///   (1/d) tr[(mean bb^T - 2 X^T mean ab^T + X^T mean aa^T X)(I + X^T X)^{-1}],
/// clamped at zero.  Algebraically equal to total_loss(data, x_hat) / (m d).
double estimate_sigma2(const EivDataset& data, const Matrix& x_hat);

/// mean(a a^T) - sigma2_hat * I_n.  May be indefinite for small m.
SymMatrix estimate_va(const EivDataset& data, double sigma2_hat);

/// Column mean of A.
Vector estimate_mu_a(const EivDataset& data);

NuisanceEstimates estimate_nuisance(const EivDataset& data, const Matrix& x_hat);

/// Sandwich estimator
///   S_hat(f) = (1/m) sum_i s_i^T V^{-1} f f^T V^{-1} s_i,  s_i = s(a_i, b_i; x_hat).
/// Throws NotPositiveDefinite if va_hat fails the relative eigenvalue test.
SymMatrix sandwich(const EivDataset& data, const Matrix& x_hat, const SymMatrix& va_hat,
                   const Vector& f_hat, double rel_tol = kDefaultPdRelTol);

/// Sigma_T_hat = sigma2 (1 - 2 mu^T V^{-1} mu)(I + X^T X) + S_hat(mu).
/// Never throws on an indefinite result; pd_ok records the outcome.
TestCovariance estimate_sigma_t(const EivDataset& data, const TlsFit& fit,
                                const NuisanceEstimates& nuis,
                                double rel_tol = kDefaultPdRelTol);

}  // namespace eivgof
