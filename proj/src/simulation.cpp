#include "eivgof/simulation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "eivgof/errors.hpp"

namespace eivgof {

namespace {

// Stream tags keep design and error streams disjoint for equal seeds.
constexpr std::uint32_t kDesignStream = 0x44534731u;
constexpr std::uint32_t kErrorStream = 0x45525231u;

std::mt19937_64 make_engine(std::uint64_t key, std::uint64_t index, std::uint32_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      stream};
    return std::mt19937_64(seq);
}

double radical_inverse(std::uint64_t index, unsigned base)
{
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= base;
    }
    return result;
}

constexpr std::array<unsigned, 32> kPrimes{2,  3,  5,  7,  11, 13, 17, 19, 23,  29,  31,
                                           37, 41, 43, 47, 53, 59, 61, 67, 71,  73,  79,
                                           83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

Matrix cholesky_factor(const SymMatrix& s)
{
    const Eigen::LLT<Matrix> llt(s.matrix());
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("design covariance s_a is not positive definite");
    }
    return llt.matrixL();
}

std::string failure_kind(const std::exception& e)
{
    if (dynamic_cast<const CovarianceNotPD*>(&e)) return "covariance_not_pd";
    if (dynamic_cast<const NotPositiveDefinite*>(&e)) return "not_positive_definite";
    if (dynamic_cast<const NoFiniteSolution*>(&e)) return "no_finite_solution";
    if (dynamic_cast<const DegenerateInput*>(&e)) return "degenerate_input";
    return "other";
}

// Evaluates fn(rep) for rep in [0, reps) on up to `threads` workers.  The
// output vector is indexed by rep, so any reduction over it in index order is
// independent of scheduling.
template <typename T, typename Fn>
std::vector<T> run_replicates(int reps, unsigned threads, Fn fn)
{
    std::vector<T> out(static_cast<std::size_t>(reps));
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (int rep = next++; rep < reps; rep = next++) {
            try {
                out[static_cast<std::size_t>(rep)] = fn(static_cast<std::uint64_t>(rep));
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next = reps;
            }
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

struct TestOutcome
{
    bool ok{};
    std::string failure;
    double t2{};
    double p_value{};
    bool reject{};
};

TestOutcome run_one(const EivDataset& data, double alpha)
{
    TestOutcome out;
    try {
        const GofReport r = run_test(data, alpha);
        out.ok = true;
        out.t2 = r.t2;
        out.p_value = r.p_value;
        out.reject = r.decision == Decision::Reject;
    } catch (const Error& e) {
        out.failure = failure_kind(e);
    }
    return out;
}

LevelReport summarize(const std::vector<TestOutcome>& outcomes, int df)
{
    LevelReport report;
    report.reps = static_cast<int>(outcomes.size());
    for (const auto& o : outcomes) {
        if (!o.ok) {
            ++report.failed_runs;
            ++report.failures[o.failure];
            continue;
        }
        ++report.completed;
        report.rejections += o.reject ? 1 : 0;
        report.t2_samples.push_back(o.t2);
        report.p_values.push_back(o.p_value);
    }
    if (report.completed > 0) {
        report.reject_rate = static_cast<double>(report.rejections) / report.completed;
        report.ks_distance = ks_distance(report.t2_samples,
                                         [df](double x) { return 1.0 - chi2_sf(x, df); });
    }
    return report;
}

double median(std::vector<double> values)
{
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (values.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

Matrix sample_covariance(const std::vector<Vector>& samples)
{
    const auto count = static_cast<Eigen::Index>(samples.size());
    const Eigen::Index dim = samples.front().size();
    Vector mean = Vector::Zero(dim);
    for (const auto& s : samples) mean += s;
    mean /= static_cast<double>(count);
    Matrix cov = Matrix::Zero(dim, dim);
    for (const auto& s : samples) {
        const Vector c = s - mean;
        cov += c * c.transpose();
    }
    return cov / static_cast<double>(count - 1);
}

}  // namespace

// --- specs -----------------------------------------------------------------

SymMatrix DesignSpec::va() const
{
    return SymMatrix(s_a.matrix() + mu_a * mu_a.transpose());
}

void DesignSpec::validate() const
{
    if (mu_a.size() < 1) {
        throw std::invalid_argument("design.mu_a must have at least one entry");
    }
    if (s_a.size() != mu_a.size()) {
        throw std::invalid_argument("design.s_a must be n x n with n = len(design.mu_a)");
    }
    if (!mu_a.allFinite() || !s_a.matrix().allFinite()) {
        throw std::invalid_argument("design entries must be finite");
    }
    if (!s_a.is_positive_definite()) {
        throw std::invalid_argument("design.s_a must be positive definite");
    }
    if (kind == DesignKind::Lattice && static_cast<std::size_t>(n()) > kPrimes.size()) {
        throw std::invalid_argument("lattice design supports at most 32 input dimensions");
    }
}

double ErrorSpec::fourth_moment() const noexcept
{
    const double s4 = sigma * sigma * sigma * sigma;
    // Uniform on [-sqrt(3) sigma, sqrt(3) sigma]: E e^4 = 9 sigma^4 / 5.
    return law == ErrorLaw::Normal ? 3.0 * s4 : 1.8 * s4;
}

void ErrorSpec::validate() const
{
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("errors.sigma must be finite and >= 0");
    }
}

Eigen::Index LocalAlternativeSpec::d() const
{
    return std::visit(
        [](const auto& g) -> Eigen::Index {
            if constexpr (std::is_same_v<std::decay_t<decltype(g)>, ConstantPerturbation>) {
                return g.c.size();
            } else {
                return g.v.size();
            }
        },
        this->g);
}

Matrix LocalAlternativeSpec::evaluate(const Matrix& a0) const
{
    const Eigen::Index m = a0.rows();
    return std::visit(
        [&](const auto& g) -> Matrix {
            if constexpr (std::is_same_v<std::decay_t<decltype(g)>, ConstantPerturbation>) {
                return g.c.transpose().replicate(m, 1);
            } else {
                const Vector forms = (a0 * g.q.matrix()).cwiseProduct(a0).rowwise().sum();
                return forms * g.v.transpose();
            }
        },
        this->g);
}

LocalAlternativeSpec LocalAlternativeSpec::scaled(double factor) const
{
    return std::visit(
        [&](const auto& g) -> LocalAlternativeSpec {
            if constexpr (std::is_same_v<std::decay_t<decltype(g)>, ConstantPerturbation>) {
                return {ConstantPerturbation{factor * g.c}};
            } else {
                return {QuadraticPerturbation{factor * g.v, g.q}};
            }
        },
        this->g);
}

void LocalAlternativeSpec::validate(Eigen::Index n, Eigen::Index d_expected) const
{
    if (d() != d_expected) {
        throw std::invalid_argument("alternative: perturbation dimension must equal d");
    }
    if (const auto* quad = std::get_if<QuadraticPerturbation>(&g)) {
        if (quad->q.size() != n) {
            throw std::invalid_argument("alternative: quadratic form must be n x n");
        }
    }
}

void SimConfig::validate() const
{
    design.validate();
    errors.validate();
    if (x0.rows() != design.n() || x0.cols() < 1) {
        throw std::invalid_argument("x0 must be n x d with n = len(design.mu_a) and d >= 1");
    }
    if (!x0.allFinite()) {
        throw std::invalid_argument("x0 entries must be finite");
    }
    if (reps < 1) {
        throw std::invalid_argument("reps must be >= 1");
    }
    if (m < n() + d()) {
        throw std::invalid_argument("m must be >= n + d");
    }
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw std::invalid_argument("alpha must lie in (0, 0.5)");
    }
    if (alternative) {
        alternative->validate(n(), d());
    }
}

// --- generation ------------------------------------------------------------

Matrix generate_design(const DesignSpec& spec, Eigen::Index m)
{
    spec.validate();
    if (m < 1) {
        throw std::invalid_argument("generate_design: m must be >= 1");
    }
    const Eigen::Index n = spec.n();
    const Matrix chol = cholesky_factor(spec.s_a);
    Matrix z(m, n);

    if (spec.kind == DesignKind::FrozenGaussian) {
        auto engine = make_engine(spec.design_seed, static_cast<std::uint64_t>(m), kDesignStream);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                z(i, j) = normal(engine);
            }
        }
    } else {
        // Halton points mapped to unit-variance uniform coordinates.
        const double half_width = std::sqrt(3.0);
        for (Eigen::Index i = 0; i < m; ++i) {
            const std::uint64_t index = spec.design_seed + static_cast<std::uint64_t>(i) + 1;
            for (Eigen::Index j = 0; j < n; ++j) {
                const double u = radical_inverse(index, kPrimes[static_cast<std::size_t>(j)]);
                z(i, j) = half_width * (2.0 * u - 1.0);
            }
        }
    }
    return (z * chol.transpose()).rowwise() + spec.mu_a.transpose();
}

namespace {

EivDataset add_errors(const SimConfig& config, const Matrix& design, Matrix b_clean,
                      std::uint64_t rep_index)
{
    const Eigen::Index m = design.rows();
    const Eigen::Index n = design.cols();
    const Eigen::Index d = b_clean.cols();
    Matrix a = design;
    auto engine = make_engine(config.master_seed, rep_index, kErrorStream);

    auto fill = [&](auto& dist) {
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) a(i, j) += dist(engine);
            for (Eigen::Index j = 0; j < d; ++j) b_clean(i, j) += dist(engine);
        }
    };
    const double sigma = config.errors.sigma;
    if (sigma > 0.0) {
        if (config.errors.law == ErrorLaw::Normal) {
            std::normal_distribution<double> dist(0.0, sigma);
            fill(dist);
        } else {
            const double half_width = std::sqrt(3.0) * sigma;
            std::uniform_real_distribution<double> dist(-half_width, half_width);
            fill(dist);
        }
    }
    return EivDataset(std::move(a), std::move(b_clean));
}

void check_design(const SimConfig& config, const Matrix& design)
{
    if (design.rows() != config.m || design.cols() != config.n()) {
        throw std::invalid_argument("design matrix must be m x n");
    }
}

}  // namespace

EivDataset generate_h0(const SimConfig& config, std::uint64_t rep_index)
{
    config.validate();
    return generate_h0(config, generate_design(config.design, config.m), rep_index);
}

EivDataset generate_h0(const SimConfig& config, const Matrix& design, std::uint64_t rep_index)
{
    check_design(config, design);
    return add_errors(config, design, design * config.x0, rep_index);
}

EivDataset generate_h1m(const SimConfig& config, std::uint64_t rep_index)
{
    config.validate();
    return generate_h1m(config, generate_design(config.design, config.m), rep_index);
}

EivDataset generate_h1m(const SimConfig& config, const Matrix& design, std::uint64_t rep_index)
{
    if (!config.alternative) {
        throw std::invalid_argument("generate_h1m: config has no alternative");
    }
    check_design(config, design);
    const double scale = 1.0 / std::sqrt(static_cast<double>(config.m));
    Matrix b_clean = design * config.x0 + scale * config.alternative->evaluate(design);
    return add_errors(config, design, std::move(b_clean), rep_index);
}

// --- asymptotics -----------------------------------------------------------

SymMatrix asymptotic_sandwich(const DesignSpec& design, const ErrorSpec& errors,
                              const Matrix& x0, const Vector& f)
{
    const Eigen::Index n = x0.rows();
    const Eigen::Index d = x0.cols();
    const SymMatrix va = design.va();
    const double s2 = errors.sigma * errors.sigma;
    const double s4 = s2 * s2;
    const double excess = errors.fourth_moment() - 3.0 * s4;

    const Matrix gram = Matrix::Identity(d, d) + x0.transpose() * x0;
    const Vector w = spd_solve(va, f);

    Matrix p(d, n + d);
    p << x0.transpose(), -Matrix::Identity(d, d);

    Vector h = Vector::Zero(n + d);
    h.head(n) = w;
    h -= p.transpose() * Eigen::LLT<Matrix>(gram).solve(x0.transpose() * w);

    const Matrix fourth = s4 * (h.squaredNorm() * Matrix::Identity(n + d, n + d) +
                                2.0 * h * h.transpose()) +
                          excess * Matrix(h.cwiseProduct(h).asDiagonal());
    return SymMatrix(f.dot(w) * s2 * gram + p * fourth * p.transpose());
}

SymMatrix asymptotic_sigma_t(const DesignSpec& design, const ErrorSpec& errors,
                             const Matrix& x0)
{
    const Eigen::Index d = x0.cols();
    const Vector& mu = design.mu_a;
    const double rho = mu.dot(spd_solve(design.va(), mu));
    const double s2 = errors.sigma * errors.sigma;
    const Matrix gram = Matrix::Identity(d, d) + x0.transpose() * x0;
    return SymMatrix(s2 * (1.0 - 2.0 * rho) * gram +
                     asymptotic_sandwich(design, errors, x0, mu).matrix());
}

Vector noncentrality_shift(const DesignSpec& design, const LocalAlternativeSpec& alt,
                           Eigen::Index m_limit)
{
    const Vector& mu = design.mu_a;
    const Vector v_inv_mu = spd_solve(design.va(), mu);
    if (const auto* constant = std::get_if<ConstantPerturbation>(&alt.g)) {
        return constant->c * (1.0 - mu.dot(v_inv_mu));
    }
    const Matrix a0 = generate_design(design, m_limit);
    const Matrix g = alt.evaluate(a0);
    const double count = static_cast<double>(m_limit);
    const Vector mean_g = g.colwise().mean().transpose();
    const Matrix mean_ga = g.transpose() * a0 / count;  // d x n
    return mean_g - mean_ga * v_inv_mu;
}

double theoretical_tau(const DesignSpec& design, const LocalAlternativeSpec& alt,
                       const SymMatrix& sigma_t, Eigen::Index m_limit)
{
    const Vector shift = noncentrality_shift(design, alt, m_limit);
    return (sym_inv_sqrt(sigma_t).matrix() * shift).norm();
}

LocalAlternativeSpec constant_alternative_for_tau(const SimConfig& config, double tau,
                                                  const Vector& direction)
{
    if (direction.size() != config.d() || !(direction.norm() > 0.0)) {
        throw std::invalid_argument("direction must be a nonzero d-vector");
    }
    const SymMatrix sigma_t = asymptotic_sigma_t(config.design, config.errors, config.x0);
    const Vector& mu = config.design.mu_a;
    const double rho = mu.dot(spd_solve(config.design.va(), mu));
    const Vector shift = tau * (sym_sqrt(sigma_t).matrix() * direction.normalized());
    return {ConstantPerturbation{shift / (1.0 - rho)}};
}

// --- Monte Carlo -----------------------------------------------------------

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf)
{
    if (samples.empty()) return 0.0;
    std::sort(samples.begin(), samples.end());
    const double count = static_cast<double>(samples.size());
    double dist = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        dist = std::max({dist, (static_cast<double>(i) + 1.0) / count - f,
                         f - static_cast<double>(i) / count});
    }
    return dist;
}

LevelReport monte_carlo_level(const SimConfig& config, unsigned threads)
{
    config.validate();
    if (config.alternative) {
        throw std::invalid_argument("monte_carlo_level: config must not carry an alternative");
    }
    const Matrix design = generate_design(config.design, config.m);
    const auto outcomes = run_replicates<TestOutcome>(config.reps, threads, [&](std::uint64_t rep) {
        return run_one(generate_h0(config, design, rep), config.alpha);
    });
    return summarize(outcomes, static_cast<int>(config.d()));
}

PowerReport monte_carlo_power(const SimConfig& config, unsigned threads)
{
    config.validate();
    if (!config.alternative) {
        throw std::invalid_argument("monte_carlo_power: config has no alternative");
    }
    const int df = static_cast<int>(config.d());
    const Matrix design = generate_design(config.design, config.m);
    const auto outcomes = run_replicates<TestOutcome>(config.reps, threads, [&](std::uint64_t rep) {
        return run_one(generate_h1m(config, design, rep), config.alpha);
    });

    PowerReport report;
    report.empirical = summarize(outcomes, df);
    const SymMatrix sigma_t = asymptotic_sigma_t(config.design, config.errors, config.x0);
    report.tau_theoretical = theoretical_tau(config.design, *config.alternative, sigma_t);
    report.power_theoretical = noncentral_chi2_sf(chi2_upper_quantile(config.alpha, df), df,
                                                  report.tau_theoretical);
    return report;
}

PowerCurve monte_carlo_power_curve(const SimConfig& config, const std::vector<double>& scales,
                                   unsigned threads)
{
    if (!config.alternative) {
        throw std::invalid_argument("monte_carlo_power_curve: config has no alternative");
    }
    PowerCurve curve;
    curve.scales = scales;
    for (const double scale : scales) {
        SimConfig point = config;
        point.alternative = config.alternative->scaled(scale);
        curve.points.push_back(monte_carlo_power(point, threads));
    }
    curve.empirical_monotone = true;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        if (curve.points[i].empirical.reject_rate < curve.points[i - 1].empirical.reject_rate) {
            curve.empirical_monotone = false;
        }
    }
    return curve;
}

CltReport validate_estimator_clt(const SimConfig& config, unsigned threads)
{
    config.validate();
    const Eigen::Index m = config.m;
    const double root_m = std::sqrt(static_cast<double>(m));
    const Matrix design = generate_design(config.design, m);
    const SymMatrix design_second_moment(design.transpose() * design / static_cast<double>(m));
    const Vector& mu = config.design.mu_a;

    struct Sample
    {
        bool ok{};
        Vector projection;
        Matrix sandwich;
        double remainder{};
    };

    const auto samples = run_replicates<Sample>(config.reps, threads, [&](std::uint64_t rep) {
        Sample s;
        const EivDataset data = generate_h0(config, design, rep);
        try {
            const TlsFit fit = tls_estimate(data);
            const NuisanceEstimates nuis = estimate_nuisance(data, fit.x_hat);
            const Matrix scaled_error = root_m * (fit.x_hat - config.x0);
            s.projection = scaled_error.transpose() * mu;
            s.sandwich = sandwich(data, fit.x_hat, nuis.va_hat, nuis.mu_a_hat).matrix();
            const Matrix linear = spd_solve(design_second_moment, score_sum(data, config.x0)) / root_m;
            s.remainder = (scaled_error + linear).norm();
            s.ok = true;
        } catch (const Error&) {
        }
        return s;
    });

    CltReport report;
    report.reps = config.reps;
    std::vector<Vector> projections;
    Matrix sandwich_sum = Matrix::Zero(config.d(), config.d());
    for (const auto& s : samples) {
        if (!s.ok) {
            ++report.failed_runs;
            continue;
        }
        projections.push_back(s.projection);
        sandwich_sum += s.sandwich;
        report.remainder_norms.push_back(s.remainder);
    }
    if (projections.size() >= 2) {
        report.projection_cov = sample_covariance(projections);
        report.mean_sandwich = sandwich_sum / static_cast<double>(projections.size());
        const double denom = report.projection_cov.norm();
        report.relative_error = denom > 0.0
                                    ? (report.mean_sandwich - report.projection_cov).norm() / denom
                                    : std::numeric_limits<double>::quiet_NaN();
    }
    report.median_remainder = median(report.remainder_norms);
    return report;
}

CltTrend clt_remainder_trend(const SimConfig& config, const std::vector<Eigen::Index>& m_values,
                             unsigned threads)
{
    CltTrend trend;
    trend.m_values = m_values;
    for (const Eigen::Index m : m_values) {
        SimConfig point = config;
        point.m = m;
        trend.median_remainders.push_back(validate_estimator_clt(point, threads).median_remainder);
    }
    trend.strictly_decreasing = true;
    for (std::size_t i = 1; i < trend.median_remainders.size(); ++i) {
        if (!(trend.median_remainders[i] < trend.median_remainders[i - 1])) {
            trend.strictly_decreasing = false;
        }
    }
    return trend;
}

}  // namespace eivgof
