#include "eivgof/nuisance.hpp"

#include <algorithm>

#include "eivgof/errors.hpp"

namespace eivgof {

double estimate_sigma2(const EivDataset& data, const Matrix& x_hat)
{
    const auto m = static_cast<double>(data.rows());
    const Eigen::Index d = data.d();
    const Matrix& a = data.a();
    const Matrix& b = data.b();

    const Matrix bb = b.transpose() * b / m;
    const Matrix ab = a.transpose() * b / m;
    const Matrix aa = a.transpose() * a / m;
    const Matrix inner = bb - 2.0 * x_hat.transpose() * ab + x_hat.transpose() * aa * x_hat;

    const Matrix k = Matrix::Identity(d, d) + x_hat.transpose() * x_hat;
    const Matrix weighted = Eigen::LLT<Matrix>(k).solve(inner.transpose()).transpose();
    return std::max(0.0, weighted.trace() / static_cast<double>(d));
}

SymMatrix estimate_va(const EivDataset& data, double sigma2_hat)
{
    const auto m = static_cast<double>(data.rows());
    const Eigen::Index n = data.n();
    return SymMatrix(data.a().transpose() * data.a() / m - sigma2_hat * Matrix::Identity(n, n));
}

Vector estimate_mu_a(const EivDataset& data)
{
    return data.a().colwise().mean().transpose();
}

NuisanceEstimates estimate_nuisance(const EivDataset& data, const Matrix& x_hat)
{
    NuisanceEstimates est;
    est.sigma2_hat = estimate_sigma2(data, x_hat);
    est.va_hat = estimate_va(data, est.sigma2_hat);
    est.mu_a_hat = estimate_mu_a(data);
    est.sa_min_eigenvalue =
        SymMatrix(est.va_hat.matrix() - est.mu_a_hat * est.mu_a_hat.transpose()).min_eigenvalue();
    return est;
}

SymMatrix sandwich(const EivDataset& data, const Matrix& x_hat, const SymMatrix& va_hat,
                   const Vector& f_hat, double rel_tol)
{
    const Eigen::Index d = data.d();
    const Vector w = spd_solve(va_hat, f_hat, rel_tol);

    // s_i^T w = r_i (a_i^T w - r_i^T K X^T w),  r_i = X^T a_i - b_i,  K = (I + X^T X)^{-1}
    const Eigen::LLT<Matrix> llt(Matrix::Identity(d, d) + x_hat.transpose() * x_hat);
    const Vector kxw = llt.solve(x_hat.transpose() * w);
    const Matrix r = data.a() * x_hat - data.b();  // rows r_i^T
    const Vector scale = data.a() * w - r * kxw;
    const Matrix g = r.array().colwise() * scale.array();  // rows (s_i^T w)^T
    return SymMatrix(g.transpose() * g / static_cast<double>(data.rows()));
}

TestCovariance estimate_sigma_t(const EivDataset& data, const TlsFit& fit,
                                const NuisanceEstimates& nuis, double rel_tol)
{
    const Eigen::Index d = data.d();
    const Matrix& x = fit.x_hat;

    const Vector v_inv_mu = spd_solve(nuis.va_hat, nuis.mu_a_hat, rel_tol);
    const double leading = nuis.sigma2_hat * (1.0 - 2.0 * nuis.mu_a_hat.dot(v_inv_mu));

    TestCovariance cov;
    cov.sandwich_part = sandwich(data, x, nuis.va_hat, nuis.mu_a_hat, rel_tol);
    cov.sigma_t_hat = SymMatrix(leading * (Matrix::Identity(d, d) + x.transpose() * x) +
                                cov.sandwich_part.matrix());
    // Relative test plus an absolute floor against the data scale, so a
    // covariance made only of roundoff (exact data) is not accepted.
    const double data_scale = data.augmented().squaredNorm() / static_cast<double>(data.rows());
    cov.pd_ok = cov.sigma_t_hat.is_positive_definite(rel_tol) &&
                cov.sigma_t_hat.max_eigenvalue() > rel_tol * data_scale;
    return cov;
}

}  // namespace eivgof
