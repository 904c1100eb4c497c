#include "eivgof/tls.hpp"

#include <limits>
#include <sstream>

#include "eivgof/errors.hpp"

namespace eivgof {

namespace {

// Holds the Cholesky factor of I_d + X^T X for repeated row evaluations.
class ResidualMetric
{
public:
    explicit ResidualMetric(const Matrix& x)
        : x_(x), llt_(Matrix::Identity(x.cols(), x.cols()) + x.transpose() * x)
    {
    }

    double loss(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const
    {
        const Vector r = x_.transpose() * a - b;
        return r.dot(llt_.solve(r));
    }

    Matrix score(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const
    {
        const Vector r = x_.transpose() * a - b;
        const Vector kr = llt_.solve(r);
        return a * r.transpose() - x_ * kr * r.transpose();
    }

private:
    const Matrix& x_;
    Eigen::LLT<Matrix> llt_;
};

void check_shapes(Eigen::Index n, Eigen::Index d, const Matrix& x)
{
    if (x.rows() != n || x.cols() != d) {
        std::ostringstream msg;
        msg << "parameter matrix must be " << n << " x " << d << ", got " << x.rows() << " x "
            << x.cols();
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

TlsFit tls_estimate(const EivDataset& data)
{
    const Eigen::Index n = data.n();
    const Eigen::Index d = data.d();
    const Eigen::Index p = n + d;

    const Matrix c = data.augmented();
    Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeFullV);

    Vector sv = Vector::Zero(p);
    sv.head(svd.singularValues().size()) = svd.singularValues();

    TlsFit fit;
    fit.singular_values = sv;
    fit.singular_gap = sv(n - 1) - sv(n);

    if (!(sv(0) > 0.0) || fit.singular_gap <= kSingularGapRelTol * sv(0)) {
        std::ostringstream msg;
        msg << "TLS minimizer is not unique: sigma_n = " << sv(n - 1)
            << ", sigma_{n+1} = " << sv(n);
        throw DegenerateInput(msg.str());
    }

    const Matrix& v = svd.matrixV();
    const Matrix v21 = v.block(0, n, n, d);
    const Matrix v22 = v.block(n, n, d, d);

    Eigen::JacobiSVD<Matrix> block_svd(v22);
    const Vector& bsv = block_svd.singularValues();
    const double smin = bsv(d - 1);
    if (!(smin > 0.0) || bsv(0) / smin > kMaxBlockCondition) {
        std::ostringstream msg;
        msg << "TLS problem has no finite solution (cond(V22) = "
            << (smin > 0.0 ? bsv(0) / smin : std::numeric_limits<double>::infinity()) << ")";
        throw NoFiniteSolution(msg.str());
    }

    // X V22 = -V21  <=>  V22^T X^T = -V21^T
    fit.x_hat = v22.transpose().fullPivLu().solve(-v21.transpose()).transpose();
    fit.loss_at_solution = total_loss(data, fit.x_hat);
    fit.score_residual = score_sum(data, fit.x_hat).norm();
    return fit;
}

double row_loss(const Vector& a, const Vector& b, const Matrix& x)
{
    check_shapes(a.size(), b.size(), x);
    return ResidualMetric(x).loss(a, b);
}

double total_loss(const EivDataset& data, const Matrix& x)
{
    check_shapes(data.n(), data.d(), x);
    const ResidualMetric metric(x);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        sum += metric.loss(data.a().row(i).transpose(), data.b().row(i).transpose());
    }
    return sum;
}

Matrix row_score(const Vector& a, const Vector& b, const Matrix& x)
{
    check_shapes(a.size(), b.size(), x);
    return ResidualMetric(x).score(a, b);
}

Matrix score_sum(const EivDataset& data, const Matrix& x)
{
    check_shapes(data.n(), data.d(), x);
    // sum_i a_i r_i^T - X K sum_i r_i r_i^T, with r_i = X^T a_i - b_i
    const Matrix r = data.a() * x - data.b();  // rows r_i^T
    const Eigen::LLT<Matrix> llt(Matrix::Identity(x.cols(), x.cols()) + x.transpose() * x);
    const Matrix rtr = r.transpose() * r;
    return data.a().transpose() * r - x * llt.solve(rtr);
}

double score_residual_bound(const EivDataset& data)
{
    return kScoreRelTol * (1.0 + (data.a().transpose() * data.b()).norm());
}

}  // namespace eivgof
