#pragma once

#include "eivgof/linalg_stats.hpp"

namespace eivgof {

/// Observed row pairs (a_i, b_i) of the model A X ~ B: A is m x n, B is m x d.
/// Both matrices share the row count m >= 1, have at least one column, and
/// contain only finite entries.  Construction throws std::invalid_argument
/// otherwise.
class EivDataset
{
public:
    EivDataset(Matrix a, Matrix b);

    const Matrix& a() const noexcept { return a_; }
    const Matrix& b() const noexcept { return b_; }

    Eigen::Index rows() const noexcept { return a_.rows(); }
    Eigen::Index n() const noexcept { return a_.cols(); }
    Eigen::Index d() const noexcept { return b_.cols(); }

    /// C = [A B], m x (n + d).
    Matrix augmented() const;

private:
    Matrix a_;
    Matrix b_;
};

}  // namespace eivgof
