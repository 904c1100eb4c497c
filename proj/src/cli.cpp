#include "eivgof/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "eivgof/errors.hpp"

namespace eivgof::cli {

using nlohmann::json;

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_double(const std::string& text)
{
    if (text.empty()) return std::nullopt;
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (*begin == '+') ++begin;
    double value{};
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
    return value;
}

// --- config helpers --------------------------------------------------------

const json& require(const json& obj, const std::string& key, const std::string& path)
{
    if (!obj.is_object() || !obj.contains(key)) {
        throw InputError(path + key + ": missing required key");
    }
    return obj.at(key);
}

double as_number(const json& j, const std::string& path)
{
    if (!j.is_number()) throw InputError(path + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw InputError(path + ": expected a finite number");
    return v;
}

std::int64_t as_integer(const json& j, const std::string& path)
{
    if (!j.is_number_integer()) throw InputError(path + ": expected an integer");
    return j.get<std::int64_t>();
}

std::uint64_t as_seed(const json& j, const std::string& path)
{
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    }
    throw InputError(path + ": expected a non-negative integer");
}

Vector as_vector(const json& j, const std::string& path, Eigen::Index expected = -1)
{
    if (!j.is_array()) throw InputError(path + ": expected an array of numbers");
    const auto size = static_cast<Eigen::Index>(j.size());
    if (expected >= 0 && size != expected) {
        std::ostringstream msg;
        msg << path << ": expected " << expected << " entries, got " << size;
        throw InputError(msg.str());
    }
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        v(i) = as_number(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
    }
    return v;
}

Matrix as_matrix(const json& j, const std::string& path, Eigen::Index rows, Eigen::Index cols = -1)
{
    if (!j.is_array()) throw InputError(path + ": expected an array of rows");
    if (static_cast<Eigen::Index>(j.size()) != rows) {
        std::ostringstream msg;
        msg << path << ": expected " << rows << " rows, got " << j.size();
        throw InputError(msg.str());
    }
    if (rows == 0) throw InputError(path + ": matrix must not be empty");
    if (cols < 0) {
        if (!j[0].is_array() || j[0].empty()) throw InputError(path + "[0]: expected a non-empty row");
        cols = static_cast<Eigen::Index>(j[0].size());
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        m.row(i) = as_vector(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]", cols)
                       .transpose();
    }
    return m;
}

LocalAlternativeSpec parse_alternative(const json& j, Eigen::Index n, Eigen::Index d)
{
    const std::string path = "alternative.";
    const json& kind = require(j, "kind", path);
    if (!kind.is_string()) throw InputError("alternative.kind: expected a string");
    const json& params = require(j, "params", path);
    const std::string k = kind.get<std::string>();
    if (k == "constant") {
        return {ConstantPerturbation{as_vector(require(params, "c", "alternative.params."),
                                               "alternative.params.c", d)}};
    }
    if (k == "quadratic") {
        const Vector v = as_vector(require(params, "v", "alternative.params."),
                                   "alternative.params.v", d);
        const Matrix q = as_matrix(require(params, "q", "alternative.params."),
                                   "alternative.params.q", n, n);
        return {QuadraticPerturbation{v, SymMatrix(q)}};
    }
    throw InputError("alternative.kind: expected \"constant\" or \"quadratic\", got \"" + k + "\"");
}

json matrix_or_null(const Matrix& m)
{
    return m.size() == 0 ? json(nullptr) : to_json(m);
}

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

// --- commands --------------------------------------------------------------

struct CommonDataArgs
{
    std::string input;
    int n{};
    int d{};
};

EivDataset load_dataset(const CommonDataArgs& args)
{
    std::ifstream in(args.input, std::ios::binary);
    if (!in) throw InputError("cannot open input file '" + args.input + "'");
    return read_csv(in, args.n, args.d);
}

int cmd_fit(const CommonDataArgs& args, std::ostream& out, std::ostream& err)
{
    try {
        const EivDataset data = load_dataset(args);
        const TlsFit fit = tls_estimate(data);
        const NuisanceEstimates nuis = estimate_nuisance(data, fit.x_hat);
        out << fit_to_json(fit, nuis).dump(2) << '\n';
        return kAccept;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NoFiniteSolution& e) {
        err << "error [estimate]: " << e.what() << '\n';
        return kEstimator;
    } catch (const DegenerateInput& e) {
        err << "error [estimate]: " << e.what() << '\n';
        return kEstimator;
    }
}

int cmd_test(const CommonDataArgs& args, double alpha, std::ostream& out, std::ostream& err)
{
    if (!(alpha > 0.0 && alpha < 0.5)) {
        err << "usage error: --alpha must lie in (0, 0.5)\n";
        return kUsage;
    }
    try {
        const EivDataset data = load_dataset(args);
        const GofReport report = run_test(data, alpha);
        out << report_to_json(report).dump(2) << '\n';
        return report.decision == Decision::Reject ? kReject : kAccept;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NoFiniteSolution& e) {
        err << "error [" << e.stage() << "]: " << e.what() << '\n';
        return kEstimator;
    } catch (const DegenerateInput& e) {
        err << "error [" << e.stage() << "]: " << e.what() << '\n';
        return kEstimator;
    } catch (const CovarianceNotPD& e) {
        err << "error [" << e.stage() << "]: " << e.what() << '\n';
        return kCovariance;
    } catch (const NotPositiveDefinite& e) {
        err << "error [" << e.stage() << "]: " << e.what() << '\n';
        return kCovariance;
    }
}

struct SimulateArgs
{
    std::string config_path;
    std::string mode{"level"};
    unsigned threads{1};
    std::string dump_path;
    std::optional<std::uint64_t> seed;
    bool no_timing{};
};

std::uint64_t parse_seed_text(const std::string& text, const std::string& source)
{
    std::uint64_t value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw InputError(source + ": expected a non-negative integer seed, got '" + text + "'");
    }
    return value;
}

void write_dump(const std::string& path, const std::string& header,
                const std::vector<std::vector<double>>& columns)
{
    std::ofstream dump(path);
    if (!dump) throw InputError("cannot open dump file '" + path + "'");
    dump << "sample," << header << '\n';
    dump.precision(17);
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t i = 0; i < rows; ++i) {
        dump << i;
        for (const auto& col : columns) dump << ',' << col[i];
        dump << '\n';
    }
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err)
{
    const auto start = std::chrono::steady_clock::now();
    try {
        std::ifstream in(args.config_path);
        if (!in) throw InputError("cannot open config file '" + args.config_path + "'");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw InputError(std::string("config is not valid JSON: ") + e.what());
        }
        StudyConfig study = parse_study_config(doc);

        // Seed precedence: --seed flag, then EIV_GOF_SEED, then the file.
        if (args.seed) {
            study.sim.master_seed = *args.seed;
        } else if (const char* env = std::getenv("EIV_GOF_SEED"); env != nullptr && *env != '\0') {
            study.sim.master_seed = parse_seed_text(env, "EIV_GOF_SEED");
        }

        json result;
        json report;
        report["mode"] = args.mode;
        if (args.mode == "level") {
            SimConfig sim = study.sim;
            sim.alternative.reset();
            const LevelReport level = monte_carlo_level(sim, args.threads);
            result = level_to_json(level);
            if (!args.dump_path.empty()) {
                write_dump(args.dump_path, "t2,p_value", {level.t2_samples, level.p_values});
            }
        } else if (args.mode == "power") {
            if (!study.sim.alternative) {
                throw InputError("alternative: mode=power requires an alternative in the config");
            }
            const PowerReport power = monte_carlo_power(study.sim, args.threads);
            result = power_to_json(power);
            if (!study.options.power_scales.empty()) {
                const PowerCurve curve =
                    monte_carlo_power_curve(study.sim, study.options.power_scales, args.threads);
                json points = json::array();
                for (std::size_t i = 0; i < curve.points.size(); ++i) {
                    json point = power_to_json(curve.points[i]);
                    point["scale"] = curve.scales[i];
                    points.push_back(point);
                }
                result["curve"] = {{"points", points},
                                   {"empirical_monotone", curve.empirical_monotone}};
            }
            if (!args.dump_path.empty()) {
                write_dump(args.dump_path, "t2,p_value",
                           {power.empirical.t2_samples, power.empirical.p_values});
            }
        } else if (args.mode == "clt") {
            const CltReport clt = validate_estimator_clt(study.sim, args.threads);
            result = clt_to_json(clt);
            if (!study.options.clt_m_values.empty()) {
                const CltTrend trend =
                    clt_remainder_trend(study.sim, study.options.clt_m_values, args.threads);
                json medians = json::array();
                for (double v : trend.median_remainders) medians.push_back(number_or_null(v));
                result["trend"] = {{"m_values", trend.m_values},
                                   {"median_remainders", medians},
                                   {"strictly_decreasing", trend.strictly_decreasing}};
            }
            if (!args.dump_path.empty()) {
                write_dump(args.dump_path, "remainder_norm", {clt.remainder_norms});
            }
        } else {
            throw InputError("--mode: expected level, power or clt");
        }

        report["config"] = config_to_json(study);
        report["result"] = result;
        if (!args.no_timing) {
            report["wall_time_seconds"] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
        out << report.dump(2) << '\n';
        return kAccept;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: invalid config: " << e.what() << '\n';
        return kUsage;
    } catch (const NotPositiveDefinite& e) {
        err << "error: " << e.what() << '\n';
        return kCovariance;
    }
}

}  // namespace

// --- CSV -------------------------------------------------------------------

EivDataset read_csv(std::istream& in, Eigen::Index n, Eigen::Index d)
{
    if (n < 1 || d < 1) throw InputError("n and d must both be >= 1");
    const auto width = static_cast<std::size_t>(n + d);

    std::vector<std::string> expected;
    for (Eigen::Index j = 1; j <= n; ++j) expected.push_back("a" + std::to_string(j));
    for (Eigen::Index j = 1; j <= d; ++j) expected.push_back("b" + std::to_string(j));

    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line()) throw InputError("line 1: missing header row");
    const auto header = split_fields(line);
    if (header.size() != width) {
        std::ostringstream msg;
        msg << "line 1 (header): expected " << width << " columns, got " << header.size();
        throw InputError(msg.str());
    }
    for (std::size_t j = 0; j < width; ++j) {
        if (header[j] != expected[j]) {
            std::ostringstream msg;
            msg << "line 1 (header), column " << j + 1 << ": expected '" << expected[j]
                << "', got '" << header[j] << "'";
            throw InputError(msg.str());
        }
    }

    std::vector<std::vector<double>> rows;
    while (next_line()) {
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != width) {
            std::ostringstream msg;
            msg << "line " << line_no << " (row " << rows.size() + 1 << "): expected " << width
                << " columns, got " << fields.size();
            throw InputError(msg.str());
        }
        std::vector<double> values(width);
        for (std::size_t j = 0; j < width; ++j) {
            const auto v = parse_double(fields[j]);
            if (!v) {
                std::ostringstream msg;
                msg << "line " << line_no << " (row " << rows.size() + 1 << "), column " << j + 1
                    << " (" << expected[j] << "): cannot parse '" << fields[j]
                    << "' as a finite number";
                throw InputError(msg.str());
            }
            values[j] = *v;
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw InputError("no data rows after the header");

    const auto m = static_cast<Eigen::Index>(rows.size());
    Matrix a(m, n);
    Matrix b(m, d);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = r[static_cast<std::size_t>(j)];
        for (Eigen::Index j = 0; j < d; ++j) b(i, j) = r[static_cast<std::size_t>(n + j)];
    }
    return EivDataset(std::move(a), std::move(b));
}

// --- config ----------------------------------------------------------------

StudyConfig parse_study_config(const json& doc)
{
    if (!doc.is_object()) throw InputError("config: expected a JSON object at top level");
    StudyConfig study;
    SimConfig& sim = study.sim;

    const json& design = require(doc, "design", "");
    const json& kind = require(design, "kind", "design.");
    if (!kind.is_string()) throw InputError("design.kind: expected a string");
    const std::string kind_name = kind.get<std::string>();
    if (kind_name == "frozen_gaussian") {
        sim.design.kind = DesignKind::FrozenGaussian;
    } else if (kind_name == "lattice") {
        sim.design.kind = DesignKind::Lattice;
    } else {
        throw InputError("design.kind: expected \"frozen_gaussian\" or \"lattice\", got \"" +
                         kind_name + "\"");
    }
    const std::int64_t n = as_integer(require(design, "n", "design."), "design.n");
    if (n < 1) throw InputError("design.n: must be >= 1");
    sim.design.mu_a = as_vector(require(design, "mu_a", "design."), "design.mu_a", n);
    const Matrix s_a = as_matrix(require(design, "s_a", "design."), "design.s_a", n, n);
    if (!SymMatrix(s_a).matrix().isApprox(s_a, 1e-12)) {
        throw InputError("design.s_a: matrix must be symmetric");
    }
    sim.design.s_a = SymMatrix(s_a);
    if (!sim.design.s_a.is_positive_definite()) {
        throw InputError("design.s_a: matrix must be positive definite");
    }
    sim.design.design_seed = as_seed(require(design, "design_seed", "design."), "design.design_seed");

    const json& errors = require(doc, "errors", "");
    const json& law = require(errors, "law", "errors.");
    if (!law.is_string()) throw InputError("errors.law: expected a string");
    const std::string law_name = law.get<std::string>();
    if (law_name == "normal") {
        sim.errors.law = ErrorLaw::Normal;
    } else if (law_name == "uniform") {
        sim.errors.law = ErrorLaw::UniformSymmetric;
    } else {
        throw InputError("errors.law: expected \"normal\" or \"uniform\", got \"" + law_name + "\"");
    }
    sim.errors.sigma = as_number(require(errors, "sigma", "errors."), "errors.sigma");
    if (sim.errors.sigma < 0.0) throw InputError("errors.sigma: must be >= 0");

    sim.x0 = as_matrix(require(doc, "x0", ""), "x0", n);
    const Eigen::Index d = sim.x0.cols();

    sim.m = as_integer(require(doc, "m", ""), "m");
    if (sim.m < n + d) throw InputError("m: must be >= n + d");
    const std::int64_t reps = as_integer(require(doc, "reps", ""), "reps");
    if (reps < 1 || reps > std::numeric_limits<int>::max()) throw InputError("reps: must be >= 1");
    sim.reps = static_cast<int>(reps);
    sim.alpha = as_number(require(doc, "alpha", ""), "alpha");
    if (!(sim.alpha > 0.0 && sim.alpha < 0.5)) throw InputError("alpha: must lie in (0, 0.5)");
    sim.master_seed = as_seed(require(doc, "master_seed", ""), "master_seed");

    if (doc.contains("alternative") && !doc.at("alternative").is_null()) {
        sim.alternative = parse_alternative(doc.at("alternative"), n, d);
    }
    if (doc.contains("power_scales")) {
        const Vector scales = as_vector(doc.at("power_scales"), "power_scales");
        study.options.power_scales.assign(scales.data(), scales.data() + scales.size());
    }
    if (doc.contains("clt_m_values")) {
        const json& ms = doc.at("clt_m_values");
        if (!ms.is_array()) throw InputError("clt_m_values: expected an array of integers");
        for (std::size_t i = 0; i < ms.size(); ++i) {
            const std::string path = "clt_m_values[" + std::to_string(i) + "]";
            const std::int64_t value = as_integer(ms[i], path);
            if (value < n + d) throw InputError(path + ": must be >= n + d");
            study.options.clt_m_values.push_back(value);
        }
    }
    return study;
}

// --- serialization ---------------------------------------------------------

json to_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number_or_null(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(const Vector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v(i)));
    return out;
}

json fit_to_json(const TlsFit& fit, const NuisanceEstimates& nuis)
{
    return {
        {"x_hat", to_json(fit.x_hat)},
        {"sigma2_hat", nuis.sigma2_hat},
        {"va_hat", to_json(nuis.va_hat.matrix())},
        {"mu_a_hat", to_json(nuis.mu_a_hat)},
        {"loss", fit.loss_at_solution},
        {"singular_gap", fit.singular_gap},
        {"singular_values", to_json(fit.singular_values)},
        {"score_residual", fit.score_residual},
        {"sa_min_eigenvalue", nuis.sa_min_eigenvalue},
    };
}

json report_to_json(const GofReport& report)
{
    json out = {
        {"t0", to_json(report.t0)},
        {"t2", report.t2},
        {"df", report.df},
        {"p_value", report.p_value},
        {"alpha", report.alpha},
        {"quantile", report.quantile},
        {"decision", std::string(to_string(report.decision))},
        {"sigma_t_hat", to_json(report.covariance.sigma_t_hat.matrix())},
        {"sandwich", to_json(report.covariance.sandwich_part.matrix())},
    };
    out["fit"] = fit_to_json(report.fit, report.nuisance);
    return out;
}

json config_to_json(const StudyConfig& study)
{
    const SimConfig& sim = study.sim;
    json out = {
        {"design",
         {{"kind", sim.design.kind == DesignKind::FrozenGaussian ? "frozen_gaussian" : "lattice"},
          {"n", sim.design.n()},
          {"mu_a", to_json(sim.design.mu_a)},
          {"s_a", to_json(sim.design.s_a.matrix())},
          {"design_seed", sim.design.design_seed}}},
        {"errors",
         {{"law", sim.errors.law == ErrorLaw::Normal ? "normal" : "uniform"},
          {"sigma", sim.errors.sigma}}},
        {"x0", to_json(sim.x0)},
        {"m", sim.m},
        {"reps", sim.reps},
        {"alpha", sim.alpha},
        {"master_seed", sim.master_seed},
    };
    if (sim.alternative) {
        if (const auto* c = std::get_if<ConstantPerturbation>(&sim.alternative->g)) {
            out["alternative"] = {{"kind", "constant"}, {"params", {{"c", to_json(c->c)}}}};
        } else {
            const auto& q = std::get<QuadraticPerturbation>(sim.alternative->g);
            out["alternative"] = {{"kind", "quadratic"},
                                  {"params", {{"v", to_json(q.v)}, {"q", to_json(q.q.matrix())}}}};
        }
    }
    if (!study.options.power_scales.empty()) out["power_scales"] = study.options.power_scales;
    if (!study.options.clt_m_values.empty()) out["clt_m_values"] = study.options.clt_m_values;
    return out;
}

json level_to_json(const LevelReport& report)
{
    double mean_t2 = 0.0;
    for (double t : report.t2_samples) mean_t2 += t;
    return {
        {"reps", report.reps},
        {"completed", report.completed},
        {"rejections", report.rejections},
        {"reject_rate", report.reject_rate},
        {"failed_runs", report.failed_runs},
        {"failures", report.failures},
        {"ks_distance_chi2", report.ks_distance},
        {"mean_t2", report.completed > 0 ? json(mean_t2 / report.completed) : json(nullptr)},
    };
}

json power_to_json(const PowerReport& report)
{
    json out = level_to_json(report.empirical);
    out["tau_theoretical"] = report.tau_theoretical;
    out["power_theoretical"] = report.power_theoretical;
    return out;
}

json clt_to_json(const CltReport& report)
{
    return {
        {"reps", report.reps},
        {"failed_runs", report.failed_runs},
        {"projection_cov", matrix_or_null(report.projection_cov)},
        {"mean_sandwich", matrix_or_null(report.mean_sandwich)},
        {"relative_error", number_or_null(report.relative_error)},
        {"median_remainder", number_or_null(report.median_remainder)},
    };
}

// --- entry point -----------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Total least squares fit and goodness-of-fit test for A X ~ B", "eivgof"};
    app.require_subcommand(1);

    CommonDataArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Fit X_hat and nuisance estimates from a CSV file");
    fit->add_option("input", fit_args.input, "CSV with header a1..an,b1..bd")->required();
    fit->add_option("-n,--n", fit_args.n, "number of input columns")->required()->check(CLI::PositiveNumber);
    fit->add_option("-d,--d", fit_args.d, "number of response columns")->required()->check(CLI::PositiveNumber);

    CommonDataArgs test_args;
    double alpha = 0.05;
    auto* test = app.add_subcommand("test", "Run the goodness-of-fit test on a CSV file");
    test->add_option("input", test_args.input, "CSV with header a1..an,b1..bd")->required();
    test->add_option("-n,--n", test_args.n, "number of input columns")->required()->check(CLI::PositiveNumber);
    test->add_option("-d,--d", test_args.d, "number of response columns")->required()->check(CLI::PositiveNumber);
    test->add_option("--alpha", alpha, "test level in (0, 0.5)")->capture_default_str();

    SimulateArgs sim_args;
    std::uint64_t seed_flag{};
    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study from a JSON config");
    simulate->add_option("config", sim_args.config_path, "JSON study config")->required();
    simulate->add_option("--mode", sim_args.mode, "level, power or clt")
        ->check(CLI::IsMember({"level", "power", "clt"}))
        ->capture_default_str();
    simulate->add_option("--threads", sim_args.threads, "worker threads")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate->add_option("--dump", sim_args.dump_path, "write per-replicate values to this CSV");
    auto* seed_opt = simulate->add_option("--seed", seed_flag, "override master_seed");
    simulate->add_flag("--no-timing", sim_args.no_timing, "omit wall_time_seconds from the report");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kAccept;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    if (*fit) return cmd_fit(fit_args, out, err);
    if (*test) return cmd_test(test_args, alpha, out, err);
    if (seed_opt->count() > 0) sim_args.seed = seed_flag;
    return cmd_simulate(sim_args, out, err);
}

}  // namespace eivgof::cli
