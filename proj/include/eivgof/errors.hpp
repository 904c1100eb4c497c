#pragma once

#include <stdexcept>
#include <string>

namespace eivgof {

/// Base for every failure raised by the library.  `stage()` names the
/// pipeline step that failed ("estimate", "nuisance", "covariance",
/// "statistic") and is empty when the error was raised outside a pipeline.
class Error : public std::runtime_error
{
public:
    explicit Error(const std::string& what, std::string stage = {})
        : std::runtime_error(what), stage_(std::move(stage))
    {
    }

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error
{
public:
    using Error::Error;
};

/// A symmetric matrix failed the relative positive-definiteness test.
class NotPositiveDefinite : public Error
{
public:
    using Error::Error;
};

/// The TLS problem has no finite minimizer (the bottom block of the
/// right singular vectors is numerically singular).
class NoFiniteSolution : public Error
{
public:
    using Error::Error;
};

/// The TLS minimizer is not unique (sigma_n(C) == sigma_{n+1}(C)).
class DegenerateInput : public Error
{
public:
    using Error::Error;
};

/// The estimated test covariance is not positive definite, so the
/// statistic is undefined for this sample.
class CovarianceNotPD : public Error
{
public:
    using Error::Error;
};

}  // namespace eivgof
