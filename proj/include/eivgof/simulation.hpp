#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "eivgof/gof_test.hpp"

namespace eivgof {

/// Default design size used to approximate limits of averages M(.) when no
/// closed form is available.
inline constexpr Eigen::Index kDefaultMLimit = 1000000;

enum class DesignKind { FrozenGaussian, Lattice };

/// Nonrandom true inputs a_i^0.  The same (spec, m) always yields the same
/// matrix, so the design stays fixed across error replicates.
struct DesignSpec
{
    DesignKind kind{DesignKind::FrozenGaussian};
    Vector mu_a;
    SymMatrix s_a;  ///< limiting centered covariance, must be positive definite
    std::uint64_t design_seed{};

    Eigen::Index n() const noexcept { return mu_a.size(); }
    /// V_A = S_a + mu_a mu_a^T.
    SymMatrix va() const;
    void validate() const;
};

enum class ErrorLaw { Normal, UniformSymmetric };

/// i.i.d. coordinates, mean 0, variance sigma^2, symmetric.  sigma = 0 is
/// accepted as the noise-free limit.
struct ErrorSpec
{
    ErrorLaw law{ErrorLaw::Normal};
    double sigma{};

    /// E[e^4] of one coordinate.
    double fourth_moment() const noexcept;
    void validate() const;
};

/// g(a) = c.
struct ConstantPerturbation
{
    Vector c;
};

/// g(a) = v * (a^T Q a).
struct QuadraticPerturbation
{
    Vector v;
    SymMatrix q;
};

struct LocalAlternativeSpec
{
    std::variant<ConstantPerturbation, QuadraticPerturbation> g;

    Eigen::Index d() const;
    /// Rows g(a_i^0)^T for the rows of a0 (the matrix G^0).
    Matrix evaluate(const Matrix& a0) const;
    /// Same perturbation multiplied by a scalar.
    LocalAlternativeSpec scaled(double factor) const;
    void validate(Eigen::Index n, Eigen::Index d) const;
};

struct SimConfig
{
    DesignSpec design;
    ErrorSpec errors;
    Matrix x0;  ///< n x d
    Eigen::Index m{};
    int reps{1};
    double alpha{0.05};
    std::uint64_t master_seed{};
    std::optional<LocalAlternativeSpec> alternative;

    Eigen::Index n() const noexcept { return x0.rows(); }
    Eigen::Index d() const noexcept { return x0.cols(); }
    /// Throws std::invalid_argument on inconsistent dimensions or values.
    void validate() const;
};

// --- data generation -------------------------------------------------------

Matrix generate_design(const DesignSpec& spec, Eigen::Index m);

/// H0 replicate: A = A0 + A~, B = A0 X0 + B~.  Errors come from a stream
/// seeded by (master_seed, rep_index) only.
EivDataset generate_h0(const SimConfig& config, std::uint64_t rep_index);
EivDataset generate_h0(const SimConfig& config, const Matrix& design, std::uint64_t rep_index);

/// Local-alternative replicate: as generate_h0 with G^0 / sqrt(m) added to
/// the noiseless responses.  Throws std::invalid_argument without an
/// alternative in the config.
EivDataset generate_h1m(const SimConfig& config, std::uint64_t rep_index);
EivDataset generate_h1m(const SimConfig& config, const Matrix& design, std::uint64_t rep_index);

// --- asymptotic quantities -------------------------------------------------

/// S(X0, f): limiting covariance of sqrt(m) (X_hat - X0)^T f.  Closed form
/// valid for i.i.d. symmetric error coordinates:
///   f^T V^{-1} f * sigma^2 (I + X0^T X0)
///     + P [sigma^4 (|h|^2 I + 2 h h^T) + (mu4 - 3 sigma^4) diag(h o h)] P^T,
/// with P = [X0^T, -I], w = V^{-1} f, h = [w; 0] - P^T (I + X0^T X0)^{-1} X0^T w.
SymMatrix asymptotic_sandwich(const DesignSpec& design, const ErrorSpec& errors,
                              const Matrix& x0, const Vector& f);

/// Sigma_T = sigma^2 (1 - 2 mu^T V^{-1} mu)(I + X0^T X0) + S(X0, mu).
SymMatrix asymptotic_sigma_t(const DesignSpec& design, const ErrorSpec& errors,
                             const Matrix& x0);

/// C_T = M(g) - M(g a^T) V_A^{-1} mu_a.  Constant perturbations use the
/// closed form c (1 - mu^T V^{-1} mu); otherwise the limits of averages are
/// approximated over a design realization of size m_limit.
Vector noncentrality_shift(const DesignSpec& design, const LocalAlternativeSpec& alt,
                           Eigen::Index m_limit = kDefaultMLimit);

/// tau = || Sigma_T^{-1/2} C_T ||.
double theoretical_tau(const DesignSpec& design, const LocalAlternativeSpec& alt,
                       const SymMatrix& sigma_t, Eigen::Index m_limit = kDefaultMLimit);

/// Constant perturbation whose theoretical tau equals `tau`, with C_T
/// pointing along Sigma_T^{1/2} direction.
LocalAlternativeSpec constant_alternative_for_tau(const SimConfig& config, double tau,
                                                  const Vector& direction);

// --- Monte Carlo studies ---------------------------------------------------

struct LevelReport
{
    int reps{};
    int completed{};
    int rejections{};
    double reject_rate{};
    int failed_runs{};
    std::map<std::string, int> failures;  ///< keyed by error kind
    double ks_distance{};                 ///< of t2_samples against chi2_d
    std::vector<double> t2_samples;       ///< completed replicates, rep order
    std::vector<double> p_values;
};

struct PowerReport
{
    LevelReport empirical;
    double tau_theoretical{};
    double power_theoretical{};
};

struct PowerCurve
{
    std::vector<double> scales;
    std::vector<PowerReport> points;
    bool empirical_monotone{};
};

struct CltReport
{
    int reps{};
    int failed_runs{};
    Matrix projection_cov;   ///< sample covariance of sqrt(m)(X_hat - X0)^T mu_a
    Matrix mean_sandwich;    ///< S_hat(mu_a_hat) averaged over replicates
    double relative_error{}; ///< ||mean_sandwich - projection_cov||_F / ||projection_cov||_F
    double median_remainder{};
    std::vector<double> remainder_norms;
};

struct CltTrend
{
    std::vector<Eigen::Index> m_values;
    std::vector<double> median_remainders;
    bool strictly_decreasing{};
};

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and `cdf`.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Replicates are independent and seeded by index, so results do not depend
/// on `threads`.
LevelReport monte_carlo_level(const SimConfig& config, unsigned threads = 1);
PowerReport monte_carlo_power(const SimConfig& config, unsigned threads = 1);
PowerCurve monte_carlo_power_curve(const SimConfig& config, const std::vector<double>& scales,
                                   unsigned threads = 1);

/// Checks the linear expansion of sqrt(m)(X_hat - X0) and the sandwich
/// estimator against direct sampling.  The remainder uses the design's own
/// second-moment matrix A0^T A0 / m in place of V_A.
CltReport validate_estimator_clt(const SimConfig& config, unsigned threads = 1);
CltTrend clt_remainder_trend(const SimConfig& config, const std::vector<Eigen::Index>& m_values,
                             unsigned threads = 1);

}  // namespace eivgof
