#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "faraday/model_io.hpp"
#include "faraday/scan.hpp"

#include "test_util.hpp"

using namespace faraday;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "faraday_cli_test";
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cli = testutil::cli_path();
    REQUIRE(!cli.empty());
    const std::string command = cli + " " + args + " >/dev/null 2>/dev/null";
    const int status = std::system(command.c_str());
    return (status >= 0) ? ((status >> 8) & 0xff) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string config_dir() { return testutil::data_dir() + "/configs"; }

/// A minimal single-point config writing CSV to `out`, with B overridable.
void write_point_config(const fs::path& path, const std::string& model_path,
                        const fs::path& out, const std::string& b_vector,
                        const std::string& extra = "") {
    std::ofstream cfg(path);
    cfg << R"({
  "model": ")" << model_path << R"(",
  "field": {
    "photon_energy_eV": 1.2,
    "k_direction": [0, 0, 1],
    "e1": [1, 0, 0],
    "e2": [0, 1, 0],
    "n_photons": 1,
    "volume_m3": 1e-18
  },
  "experiment": {
    "B_tesla": )" << b_vector << R"(,
    "length_m": 0.1,
    "density_per_m3": 2.5e25,
    "n_molecules": 25000000
  },
  "method": "b_term",
  "output": {"path": ")" << out.string() << R"(", "format": "csv"})" << extra
        << "\n}\n";
}

}  // namespace

TEST_CASE("single-point run with B perpendicular to k gives zero rotation") {
    const fs::path dir = work_dir();
    const fs::path cfg = dir / "perp.json";
    const fs::path out = dir / "perp.csv";
    write_point_config(cfg, testutil::data_dir() + "/models/three_level.json", out,
                       "[1.0, 0.0, 0.0]");
    REQUIRE(run_cli("run --config " + cfg.string()) == 0);

    std::ifstream in(out);
    std::string header, row;
    REQUIRE(std::getline(in, header));
    REQUIRE(std::getline(in, row));
    double scan_value = -1.0, theta = -1.0;
    REQUIRE(std::sscanf(row.c_str(), "omega,%lg,%lg", &scan_value, &theta) == 2);
    REQUIRE(theta == 0.0);
    std::string extra;
    REQUIRE(!std::getline(in, extra));  // exactly one row
}

TEST_CASE("identical configs produce byte-identical output") {
    const fs::path dir = work_dir();
    const fs::path out1 = dir / "det1.csv";
    const fs::path out2 = dir / "det2.csv";
    const std::string base = config_dir() + "/bscan.json";
    REQUIRE(run_cli("run --config " + base + " --output " + out1.string()) == 0);
    REQUIRE(run_cli("run --config " + base + " --output " + out2.string()) == 0);
    REQUIRE(slurp(out1) == slurp(out2));
    REQUIRE(slurp(out1).size() > 0);
}

TEST_CASE("row count equals the requested point count") {
    const std::string base = config_dir() + "/bscan.json";
    const fs::path out = work_dir() / "points.csv";
    REQUIRE(run_cli("run --config " + base + " --points 7 --output " +
                    out.string()) == 0);
    std::istringstream in(slurp(out));
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    REQUIRE(lines == 1 + 7);
}

TEST_CASE("b_term and via_amplitude columns agree on the sample scan") {
    const RunConfig cfg = load_run_config(config_dir() + "/bscan.json");
    const MolecularModel model = load_model(cfg.model_path);
    const auto rows = run_scan(cfg, model);
    REQUIRE(rows.size() == 5);
    for (const auto& row : rows) {
        REQUIRE(row.theta_b_term.has_value());
        REQUIRE(row.theta_via_amplitude.has_value());
        REQUIRE(row.theta_oracle.has_value());
        const double rel = std::abs(*row.theta_via_amplitude - *row.theta_b_term) /
                           std::abs(*row.theta_b_term);
        REQUIRE(rel < 1e-6);
    }
}

TEST_CASE("scan rows equal the single-point evaluation") {
    const RunConfig cfg = load_run_config(config_dir() + "/bscan.json");
    const MolecularModel model = load_model(cfg.model_path);
    const auto rows = run_scan(cfg, model);
    const auto values = scan_values(cfg.scan);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const ScanRow single = evaluate_point(cfg, model, values[i]);
        REQUIRE(single.theta_b_term == rows[i].theta_b_term);
        REQUIRE(single.theta_via_amplitude == rows[i].theta_via_amplitude);
    }
}

TEST_CASE("malformed model files abort with an error record and no output") {
    const fs::path dir = work_dir();
    const fs::path bad_model = dir / "bad_model.json";
    std::ofstream(bad_model) << "{ this is not json";
    const fs::path cfg = dir / "bad.json";
    const fs::path out = dir / "bad_out.csv";
    fs::remove(out);
    write_point_config(cfg, bad_model.string(), out, "[0, 0, 1]");

    const std::string cli = testutil::cli_path();
    const fs::path stderr_file = dir / "bad_stderr.txt";
    const std::string command = cli + " run --config " + cfg.string() +
                                " >/dev/null 2>" + stderr_file.string();
    const int status = std::system(command.c_str());
    REQUIRE(((status >> 8) & 0xff) == 3);  // model error exit code
    REQUIRE(!fs::exists(out));

    const auto record = nlohmann::json::parse(slurp(stderr_file));
    REQUIRE(record["error"]["type"] == "ParseError");
}

TEST_CASE("missing config file exits with the config code") {
    REQUIRE(run_cli("run --config /nonexistent/faraday.json") == 2);
}

TEST_CASE("numerical failures exit with code 4 and name the scan point") {
    const fs::path dir = work_dir();
    const fs::path model_path = dir / "degenerate_run_model.json";
    nlohmann::json doc = nlohmann::json::parse(
        std::ifstream(testutil::data_dir() + "/models/two_level.json"));
    doc["levels"][1]["energy"] = 0.0;  // loads fine, fails in the formulas
    std::ofstream(model_path) << doc.dump();

    const fs::path cfg = dir / "degenerate_run.json";
    const fs::path out = dir / "degenerate_run.csv";
    write_point_config(cfg, model_path.string(), out, "[0, 0, 1]");

    const fs::path stderr_file = dir / "degenerate_stderr.txt";
    const std::string command = testutil::cli_path() + " run --config " +
                                cfg.string() + " >/dev/null 2>" +
                                stderr_file.string();
    REQUIRE(((std::system(command.c_str()) >> 8) & 0xff) == 4);
    const auto record = nlohmann::json::parse(slurp(stderr_file));
    REQUIRE(record["error"]["type"] == "DegenerateSpectrum");
    REQUIRE(record["error"]["scan_index"] == 0);
}

TEST_CASE("json output format carries nulls for methods not run") {
    const fs::path dir = work_dir();
    const fs::path cfg = dir / "json_out.json";
    const fs::path out = dir / "json_out_result.json";
    write_point_config(cfg, testutil::data_dir() + "/models/three_level.json", out,
                       "[0, 0, 1]");
    nlohmann::json doc = nlohmann::json::parse(std::ifstream(cfg));
    doc["output"]["format"] = "json";
    std::ofstream(cfg) << doc.dump();

    REQUIRE(run_cli("run --config " + cfg.string()) == 0);
    const auto rows = nlohmann::json::parse(slurp(out));
    REQUIRE(rows.is_array());
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0]["theta_b_term_rad"].is_number());
    REQUIRE(rows[0]["theta_via_amplitude_rad"].is_null());
    REQUIRE(rows[0]["theta_oracle_rad"].is_null());
}

TEST_CASE("validate passes the shipped configuration") {
    const fs::path report_file = work_dir() / "validate_ok.txt";
    const std::string cli = testutil::cli_path();
    const std::string command = cli + " validate --config " + config_dir() +
                                "/bscan.json >" + report_file.string() + " 2>&1";
    REQUIRE(((std::system(command.c_str()) >> 8) & 0xff) == 0);
    const std::string report = slurp(report_file);
    REQUIRE(report.find("pass") != std::string::npos);
    REQUIRE(report.find("FAIL") == std::string::npos);
}

TEST_CASE("validate names degenerate pairs") {
    const fs::path dir = work_dir();
    const fs::path model_path = dir / "degenerate.json";
    nlohmann::json doc = nlohmann::json::parse(
        std::ifstream(testutil::data_dir() + "/models/two_level.json"));
    doc["levels"][1]["energy"] = 0.0;
    std::ofstream(model_path) << doc.dump();

    const fs::path cfg = dir / "degenerate_cfg.json";
    write_point_config(cfg, model_path.string(), dir / "deg_out.csv", "[0, 0, 1]");

    const RunConfig run_cfg = load_run_config(cfg.string());
    const ValidationReport report = validate_run(run_cfg);
    REQUIRE(!report.pass);
    REQUIRE(report.text.find("degenerate") != std::string::npos);
    REQUIRE(report.text.find("A and C terms") != std::string::npos);
}

TEST_CASE("validate lists resonant scan indices") {
    const fs::path dir = work_dir();
    const fs::path cfg = dir / "resonant_cfg.json";
    const double ev_over_hbar = kElectronVolt / kHbar;
    std::ostringstream scan;
    scan << ",\n  \"scan\": {\"variable\": \"omega\", \"start\": "
         << detail::format_g17(1.9 * ev_over_hbar)
         << ", \"stop\": " << detail::format_g17(2.1 * ev_over_hbar)
         << ", \"points\": 5, \"spacing\": \"linear\"}";
    write_point_config(cfg, testutil::data_dir() + "/models/three_level.json",
                       dir / "res_out.csv", "[0, 0, 1]", scan.str());

    const ValidationReport report = validate_run(load_run_config(cfg.string()));
    REQUIRE(!report.pass);
    REQUIRE(report.text.find("point indices 2") != std::string::npos);
}

TEST_CASE("near-resonant scan points become null rows with warnings") {
    const fs::path dir = work_dir();
    const fs::path cfg_path = dir / "resonant_run.json";
    const double ev_over_hbar = kElectronVolt / kHbar;
    std::ostringstream scan;
    scan << ",\n  \"scan\": {\"variable\": \"omega\", \"start\": "
         << detail::format_g17(1.9 * ev_over_hbar)
         << ", \"stop\": " << detail::format_g17(2.1 * ev_over_hbar)
         << ", \"points\": 5, \"spacing\": \"linear\"}";
    write_point_config(cfg_path, testutil::data_dir() + "/models/three_level.json",
                       dir / "resonant_run.csv", "[0, 0, 1]", scan.str());

    const RunConfig cfg = load_run_config(cfg_path.string());
    const MolecularModel model = load_model(cfg.model_path);
    const auto rows = run_scan(cfg, model);
    REQUIRE(rows.size() == 5);
    REQUIRE(!rows[2].theta_b_term.has_value());
    REQUIRE(rows[2].warnings == std::vector<std::string>{"near_resonance"});
    REQUIRE(rows[0].theta_b_term.has_value());
    REQUIRE(rows[4].theta_b_term.has_value());
}

TEST_CASE("oracle-report emits the documented fields") {
    const fs::path out = work_dir() / "oracle_report.json";
    const std::string cli = testutil::cli_path();
    const std::string command = cli + " oracle-report --config " + config_dir() +
                                "/oracle.json --output " + out.string() +
                                " >/dev/null 2>&1";
    REQUIRE(((std::system(command.c_str()) >> 8) & 0xff) == 0);
    const auto report = nlohmann::json::parse(slurp(out));
    for (const char* key : {"parameters", "theta_oracle", "theta_perturbative",
                            "relative_deviation", "leakage", "norm_drift"}) {
        REQUIRE(report.contains(key));
    }
    REQUIRE(std::abs(report["relative_deviation"].get<double>()) < 0.05);
    REQUIRE(report["leakage"].get<double>() < 0.05);
    REQUIRE(report["norm_drift"].get<double>() < 1e-12);
    REQUIRE(report["parameters"]["hilbert_dim"].get<int>() <= 36);
}

TEST_CASE("scan specs are validated") {
    ScanSpec bad;
    bad.points = 0;
    REQUIRE_THROWS_AS(validate(bad), ConfigError);
    ScanSpec reversed{ScanVariable::omega, 2.0, 1.0, 5, ScanSpacing::linear};
    REQUIRE_THROWS_AS(validate(reversed), ConfigError);
    ScanSpec log_bad{ScanVariable::omega, 0.0, 1.0, 5, ScanSpacing::log};
    REQUIRE_THROWS_AS(validate(log_bad), ConfigError);

    ScanSpec log_ok{ScanVariable::omega, 1.0, 100.0, 3, ScanSpacing::log};
    const auto values = scan_values(log_ok);
    REQUIRE(values.size() == 3);
    REQUIRE_THAT(values[1], Catch::Matchers::WithinRel(10.0, 1e-12));
}

TEST_CASE("tolerance profiles") {
    REQUIRE(tolerance_profile("strict").degeneracy_rel == 1e-6);
    REQUIRE(tolerance_profile("loose").degeneracy_rel == 1e-12);
    REQUIRE(tolerance_profile("default").degeneracy_rel == Tolerances{}.degeneracy_rel);
    REQUIRE_THROWS_AS(tolerance_profile("bogus"), ConfigError);

    setenv("FARADAY_TOLERANCE_PROFILE", "strict", 1);
    REQUIRE(tolerances_from_environment().degeneracy_rel == 1e-6);
    unsetenv("FARADAY_TOLERANCE_PROFILE");
}

TEST_CASE("model and method flags override the config") {
    const fs::path dir = work_dir();
    const fs::path cfg = dir / "override.json";
    const fs::path out = dir / "override.csv";
    // config points at the three-level model with method b_term
    write_point_config(cfg, testutil::data_dir() + "/models/three_level.json", out,
                       "[0, 0, 0.5]");
    REQUIRE(run_cli("run --config " + cfg.string() +
                    " --method via_amplitude --model " + testutil::data_dir() +
                    "/models/two_level.json") == 0);
    std::istringstream in(slurp(out));
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    // method override: b_term column empty, via_amplitude column filled
    double scan_value = -1.0;
    char rest[256] = {0};
    REQUIRE(std::sscanf(row.c_str(), "omega,%lg,,%255s", &scan_value, rest) == 2);
}

TEST_CASE("unknown flags exit with the config code") {
    REQUIRE(run_cli("run --frobnicate") == 2);
    REQUIRE(run_cli("bogus-verb") == 2);
}

TEST_CASE("config parsing rejects unknown enum strings") {
    const fs::path dir = work_dir();
    const fs::path cfg = dir / "bad_method.json";
    write_point_config(cfg, testutil::data_dir() + "/models/three_level.json",
                       dir / "x.csv", "[0, 0, 1]");
    nlohmann::json doc = nlohmann::json::parse(std::ifstream(cfg));
    doc["method"] = "magic";
    std::ofstream(cfg) << doc.dump();
    REQUIRE_THROWS_AS(load_run_config(cfg.string()), ConfigError);
}
