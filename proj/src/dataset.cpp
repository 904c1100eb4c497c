#include "eivgof/dataset.hpp"

#include <stdexcept>

namespace eivgof {

EivDataset::EivDataset(Matrix a, Matrix b) : a_(std::move(a)), b_(std::move(b))
{
    if (a_.rows() < 1) {
        throw std::invalid_argument("EivDataset: need at least one observation");
    }
    if (a_.rows() != b_.rows()) {
        throw std::invalid_argument("EivDataset: A and B must have the same number of rows");
    }
    if (a_.cols() < 1 || b_.cols() < 1) {
        throw std::invalid_argument("EivDataset: A and B need at least one column each");
    }
    if (!a_.allFinite() || !b_.allFinite()) {
        throw std::invalid_argument("EivDataset: all entries must be finite");
    }
}

Matrix EivDataset::augmented() const
{
    Matrix c(rows(), n() + d());
    c << a_, b_;
    return c;
}

}  // namespace eivgof
