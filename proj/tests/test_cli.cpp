#include "catch_amalgamated.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eivgof/cli.hpp"
#include "eivgof/errors.hpp"
#include "json.hpp"
#include "sim_support.hpp"

using namespace eivgof;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run
{
    int code{};
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class TempDir
{
public:
    TempDir()
    {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("eivgof_cli_" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::string write_text(const std::string& path, const std::string& text)
{
    std::ofstream(path, std::ios::binary) << text;
    return path;
}

std::string write_csv(const std::string& path, const EivDataset& data)
{
    std::ofstream out(path);
    out << std::setprecision(17);
    for (Eigen::Index j = 0; j < data.n(); ++j) out << (j ? "," : "") << "a" << j + 1;
    for (Eigen::Index j = 0; j < data.d(); ++j) out << ",b" << j + 1;
    out << "\n";
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.n(); ++j) out << (j ? "," : "") << data.a()(i, j);
        for (Eigen::Index j = 0; j < data.d(); ++j) out << "," << data.b()(i, j);
        out << "\n";
    }
    return path;
}

std::string config_dir()
{
    return EIVGOF_CONFIG_DIR;
}

json small_config()
{
    return json::parse(R"({
      "design": {"kind": "frozen_gaussian", "n": 2, "mu_a": [1.0, -0.5],
                 "s_a": [[1.0, 0.3], [0.3, 0.8]], "design_seed": 7},
      "errors": {"law": "normal", "sigma": 0.2},
      "x0": [[1.0, 0.5], [-0.5, 2.0]],
      "m": 300, "reps": 40, "alpha": 0.05, "master_seed": 11
    })");
}

std::string write_config(const TempDir& dir, const std::string& name, const json& doc)
{
    return write_text(dir.file(name), doc.dump());
}

class ScopedEnv
{
public:
    ScopedEnv(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
    ~ScopedEnv() { ::unsetenv(name_); }

private:
    const char* name_;
};

}  // namespace

TEST_CASE("read_csv parses headers, CRLF and BOM", "[cli]")
{
    std::istringstream plain("a1,a2,b1\n1,2,3\n4.5,-6e-1,7\n");
    const EivDataset data = cli::read_csv(plain, 2, 1);
    CHECK(data.rows() == 2);
    CHECK(data.a()(1, 1) == -0.6);
    CHECK(data.b()(1, 0) == 7.0);

    std::istringstream crlf("\xEF\xBB\xBF" "a1,b1,b2\r\n1,2,3\r\n");
    const EivDataset other = cli::read_csv(crlf, 1, 2);
    CHECK(other.b()(0, 1) == 3.0);

    std::istringstream header("a1,b2\n1,2\n");
    CHECK_THROWS_AS(cli::read_csv(header, 1, 1), cli::InputError);
    std::istringstream short_row("a1,b1\n1\n");
    CHECK_THROWS_AS(cli::read_csv(short_row, 1, 1), cli::InputError);
    std::istringstream empty("a1,b1\n");
    CHECK_THROWS_AS(cli::read_csv(empty, 1, 1), cli::InputError);
    std::istringstream inf("a1,b1\n1,inf\n");
    CHECK_THROWS_AS(cli::read_csv(inf, 1, 1), cli::InputError);
}

TEST_CASE("fit recovers exact data", "[cli]")
{
    TempDir dir;
    const std::string csv = write_text(dir.file("exact.csv"), "a1,b1\n1,2\n2,4\n3,6\n4,8\n");
    const Run r = run({"fit", csv, "-n", "1", "-d", "1"});
    REQUIRE(r.code == cli::kAccept);
    const json out = json::parse(r.out);
    CHECK(std::abs(out["x_hat"][0][0].get<double>() - 2.0) < 1e-10);
    CHECK(std::abs(out["sigma2_hat"].get<double>()) < 1e-12);
    for (const char* key : {"va_hat", "mu_a_hat", "loss", "singular_gap"}) CHECK(out.contains(key));
}

TEST_CASE("fit reports the bad cell", "[cli]")
{
    TempDir dir;
    const std::string csv = write_text(dir.file("bad.csv"), "a1,a2,b1\n1,2,3\n4,x5,6\n");
    const Run r = run({"fit", csv, "-n", "2", "-d", "1"});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("line 3") != std::string::npos);
    CHECK(r.err.find("a2") != std::string::npos);
    CHECK(r.err.find("x5") != std::string::npos);

    CHECK(run({"fit", dir.file("missing.csv"), "-n", "1", "-d", "1"}).code == cli::kUsage);
    CHECK(run({"fit", csv, "-n", "1", "-d", "1"}).code == cli::kUsage);
    CHECK(run({"fit", csv}).code == cli::kUsage);
    CHECK(run({}).code == cli::kUsage);
    CHECK(run({"frobnicate"}).code == cli::kUsage);
}

TEST_CASE("fit on degenerate data exits with the estimator code", "[cli]")
{
    TempDir dir;
    const std::string csv = write_text(dir.file("degenerate.csv"), "a1,a2,b1\n2,0,0\n0,2,0\n0,0,2\n");
    const Run r = run({"fit", csv, "-n", "2", "-d", "1"});
    CHECK(r.code == cli::kEstimator);
    CHECK(run({"test", csv, "-n", "2", "-d", "1"}).code == cli::kEstimator);
}

TEST_CASE("fit output round-trips through the loss", "[cli]")
{
    TempDir dir;
    std::mt19937_64 rng(3);
    const support::Model model = support::standard_model(rng, 150, 0.4);
    const EivDataset data = support::draw(rng, model);
    const std::string csv = write_csv(dir.file("data.csv"), data);
    const Run r = run({"fit", csv, "-n", "2", "-d", "2"});
    REQUIRE(r.code == cli::kAccept);
    const json out = json::parse(r.out);
    Matrix x(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) x(i, j) = out["x_hat"][i][j].get<double>();
    const double loss = out["loss"].get<double>();
    CHECK(std::abs(total_loss(data, x) - loss) <= 1e-12 * (1.0 + loss));
    // Numbers are written with full round-trip precision.
    CHECK(x == tls_estimate(data).x_hat);
}

TEST_CASE("test command exit codes", "[cli]")
{
    TempDir dir;
    std::mt19937_64 rng(4);
    const support::Model model = support::standard_model(rng, 2000, 0.3);

    const std::string good = write_csv(dir.file("good.csv"), support::draw(rng, model));
    const Run accept = run({"test", good, "-n", "2", "-d", "2", "--alpha", "0.01"});
    const json report = json::parse(accept.out);
    CHECK(accept.code == (report["decision"] == "reject" ? cli::kReject : cli::kAccept));
    for (const char* key : {"t0", "t2", "df", "p_value", "alpha", "quantile", "decision"}) {
        CHECK(report.contains(key));
    }
    CHECK(report["alpha"].get<double>() == 0.01);

    Vector mu(2);
    mu << 1.0, -0.5;
    Matrix wide(2, 2);
    wide << 9.0, 2.7, 2.7, 7.2;
    const support::Model spread{support::gaussian_design(rng, 2000, mu, wide), model.x0, 0.3};
    const Matrix shift = Matrix::Constant(2000, 2, 5.0);
    const std::string bad = write_csv(dir.file("bad.csv"), support::draw(rng, spread, shift));
    const Run reject = run({"test", bad, "-n", "2", "-d", "2"});
    CHECK(reject.code == cli::kReject);
    CHECK(json::parse(reject.out)["decision"] == "reject");

    const Run alpha = run({"test", good, "-n", "2", "-d", "2", "--alpha", "0.7"});
    CHECK(alpha.code == cli::kUsage);
    CHECK(run({"test", good, "-n", "2", "-d", "2", "--alpha", "0"}).code == cli::kUsage);

    const std::string exact = write_csv(dir.file("exact.csv"), EivDataset(model.a0, model.a0 * model.x0));
    const Run cov = run({"test", exact, "-n", "2", "-d", "2"});
    CHECK(cov.code == cli::kCovariance);
    CHECK(cov.err.find("[statistic]") != std::string::npos);
}

TEST_CASE("test command is calibrated on generated files", "[cli][montecarlo]")
{
    TempDir dir;
    std::mt19937_64 rng(5);
    const support::Model model = support::standard_model(rng, 2000, 0.1);
    int accepted = 0;
    const int files = 200;
    for (int k = 0; k < files; ++k) {
        const std::string csv = write_csv(dir.file("f.csv"), support::draw(rng, model));
        const Run r = run({"test", csv, "-n", "2", "-d", "2"});
        REQUIRE((r.code == cli::kAccept || r.code == cli::kReject));
        accepted += r.code == cli::kAccept ? 1 : 0;
    }
    // 200 Bernoulli(0.95) files: three standard errors is about 0.046.
    CHECK(accepted >= 180);
    CHECK(accepted <= 198);
}

TEST_CASE("config parse errors name the key", "[cli]")
{
    json doc = small_config();
    CHECK_NOTHROW(cli::parse_study_config(doc));

    const auto message = [](const json& bad) {
        try {
            cli::parse_study_config(bad);
        } catch (const cli::InputError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    json bad = doc;
    bad["design"].erase("s_a");
    CHECK(message(bad).find("design.s_a") != std::string::npos);
    bad = doc;
    bad["errors"]["law"] = "cauchy";
    CHECK(message(bad).find("errors.law") != std::string::npos);
    bad = doc;
    bad["x0"] = json::parse("[[1.0, 2.0]]");
    CHECK(message(bad).find("x0") != std::string::npos);
    bad = doc;
    bad["m"] = "many";
    CHECK(message(bad).find("m") != std::string::npos);
    bad = doc;
    bad["alternative"] = json::parse(R"({"kind": "constant", "params": {"c": [1.0]}})");
    CHECK(!message(bad).empty());
    bad = doc;
    bad["alternative"] = json::parse(R"({"kind": "quadratic", "params": {"v": [1.0, 0.0], "q": [[1.0, 0.0], [0.0, 1.0]]}})");
    CHECK(message(bad).empty());
    CHECK(cli::parse_study_config(bad).sim.alternative.has_value());
}

TEST_CASE("simulate usage errors", "[cli]")
{
    TempDir dir;
    const std::string config = write_config(dir, "c.json", small_config());
    CHECK(run({"simulate", config, "--mode", "power"}).code == cli::kUsage);
    CHECK(run({"simulate", config, "--mode", "bogus"}).code == cli::kUsage);
    CHECK(run({"simulate", config, "--threads", "0"}).code == cli::kUsage);
    CHECK(run({"simulate", dir.file("none.json")}).code == cli::kUsage);
    const std::string broken = write_text(dir.file("broken.json"), "{\"design\": ");
    CHECK(run({"simulate", broken}).code == cli::kUsage);
}

TEST_CASE("simulate output does not depend on threads", "[cli]")
{
    TempDir dir;
    json doc = small_config();
    doc["alternative"] = json::parse(R"({"kind": "constant", "params": {"c": [0.5, 0.0]}})");
    doc["power_scales"] = {0.0, 1.0};
    doc["clt_m_values"] = {100, 400};
    const std::string config = write_config(dir, "c.json", doc);
    for (const char* mode : {"level", "power", "clt"}) {
        const Run one = run({"simulate", config, "--mode", mode, "--threads", "1", "--no-timing"});
        REQUIRE(one.code == cli::kAccept);
        CHECK(json::parse(one.out).contains("wall_time_seconds") == false);
        for (const char* threads : {"4", "8"}) {
            const Run many = run({"simulate", config, "--mode", mode, "--threads", threads, "--no-timing"});
            CHECK(many.out == one.out);
        }
    }
    const json timed = json::parse(run({"simulate", config}).out);
    CHECK(timed.contains("wall_time_seconds"));
    CHECK(timed["mode"] == "level");
}

TEST_CASE("seed precedence is flag, environment, file", "[cli]")
{
    TempDir dir;
    const std::string config = write_config(dir, "c.json", small_config());
    const auto seed_of = [](const Run& r) {
        return json::parse(r.out)["config"]["master_seed"].get<std::uint64_t>();
    };
    const Run file = run({"simulate", config, "--no-timing"});
    CHECK(seed_of(file) == 11);
    {
        ScopedEnv env("EIV_GOF_SEED", "99");
        const Run from_env = run({"simulate", config, "--no-timing"});
        CHECK(seed_of(from_env) == 99);
        CHECK(from_env.out != file.out);
        CHECK(seed_of(run({"simulate", config, "--seed", "5", "--no-timing"})) == 5);
    }
    {
        ScopedEnv env("EIV_GOF_SEED", "not-a-number");
        CHECK(run({"simulate", config}).code == cli::kUsage);
    }
    // Same seed through different routes gives the same study.
    const Run flag = run({"simulate", config, "--seed", "11", "--no-timing"});
    CHECK(flag.out == file.out);
}

TEST_CASE("simulate dump files", "[cli]")
{
    TempDir dir;
    const std::string config = write_config(dir, "c.json", small_config());
    const std::string dump = dir.file("dump.csv");
    REQUIRE(run({"simulate", config, "--dump", dump}).code == cli::kAccept);
    std::ifstream in(dump);
    std::string line;
    std::getline(in, line);
    CHECK(line == "sample,t2,p_value");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 40);

    REQUIRE(run({"simulate", config, "--mode", "clt", "--dump", dump}).code == cli::kAccept);
    std::ifstream clt(dump);
    std::getline(clt, line);
    CHECK(line == "sample,remainder_norm");
}

TEST_CASE("bundled level config is calibrated", "[cli][montecarlo]")
{
    const Run r = run({"simulate", config_dir() + "/level_example.json", "--threads", "2"});
    REQUIRE(r.code == cli::kAccept);
    const json out = json::parse(r.out);
    const double rate = out["result"]["reject_rate"].get<double>();
    CHECK(std::abs(rate - 0.05) <= 0.015);
    CHECK(out["result"]["failed_runs"] == 0);
}

TEST_CASE("bundled power and clt configs run", "[cli]")
{
    const Run power = run({"simulate", config_dir() + "/power_example.json", "--mode", "power"});
    REQUIRE(power.code == cli::kAccept);
    const json p = json::parse(power.out)["result"];
    CHECK(std::abs(p["tau_theoretical"].get<double>() - 2.0) < 0.01);
    CHECK(p["curve"]["empirical_monotone"] == true);

    const Run clt = run({"simulate", config_dir() + "/clt_example.json", "--mode", "clt"});
    REQUIRE(clt.code == cli::kAccept);
    CHECK(json::parse(clt.out)["result"]["trend"]["strictly_decreasing"] == true);
}
