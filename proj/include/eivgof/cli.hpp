#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "eivgof/simulation.hpp"

namespace eivgof::cli {

/// Process exit codes.
enum ExitCode : int {
    kAccept = 0,
    kReject = 1,
    kUsage = 2,       ///< bad arguments, unparseable CSV or config
    kEstimator = 3,   ///< NoFiniteSolution / DegenerateInput
    kCovariance = 4,  ///< CovarianceNotPD / NotPositiveDefinite
};

/// Input error (CSV, config, arguments); the message names the location.
class InputError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Reads `a1,...,an,b1,...,bd` CSV (header required, LF or CRLF).
EivDataset read_csv(std::istream& in, Eigen::Index n, Eigen::Index d);

/// Extra simulation settings carried by the config file.
struct StudyOptions
{
    std::vector<double> power_scales;         ///< optional power curve
    std::vector<Eigen::Index> clt_m_values;   ///< optional remainder trend
};

struct StudyConfig
{
    SimConfig sim;
    StudyOptions options;
};

/// Parses the simulation config document.  Throws InputError naming the
/// offending key.
StudyConfig parse_study_config(const nlohmann::json& doc);

nlohmann::json to_json(const Matrix& m);
nlohmann::json to_json(const Vector& v);
nlohmann::json fit_to_json(const TlsFit& fit, const NuisanceEstimates& nuis);
nlohmann::json report_to_json(const GofReport& report);
nlohmann::json config_to_json(const StudyConfig& config);
nlohmann::json level_to_json(const LevelReport& report);
nlohmann::json power_to_json(const PowerReport& report);
nlohmann::json clt_to_json(const CltReport& report);

/// Entry point behind the `eivgof` executable.  Writes the JSON result to
/// `out`, diagnostics to `err`, and returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eivgof::cli
