// Command-line front end: model validation, rotation-angle scans, and
// oracle cross-validation reports. See docs/file_formats.md for the file
// schemas and README.md for usage examples.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "faraday/faraday.hpp"

namespace {

nlohmann::json error_record(const faraday::Error& e) {
    nlohmann::json record;
    record["error"]["type"] = e.type_name();
    record["error"]["message"] = e.what();
    if (const auto* sp = dynamic_cast<const faraday::ScanPointError*>(&e)) {
        record["error"]["scan_index"] = sp->scan_index();
    }
    return record;
}

int fail(const faraday::Error& e) {
    std::cerr << error_record(e).dump() << std::endl;
    return static_cast<int>(e.category());
}

int run_command(const std::string& config_path, const std::string& model_override,
                const std::string& method_override,
                const std::string& output_override, long points_override) {
    faraday::RunConfig cfg = faraday::load_run_config(config_path);
    if (!model_override.empty()) cfg.model_path = model_override;
    if (!output_override.empty()) cfg.output_path = output_override;
    if (points_override > 0) cfg.scan.points = points_override;
    if (!method_override.empty()) {
        if (method_override == "b_term") cfg.method = faraday::RunMethod::b_term;
        else if (method_override == "via_amplitude")
            cfg.method = faraday::RunMethod::via_amplitude;
        else if (method_override == "oracle") cfg.method = faraday::RunMethod::oracle;
        else if (method_override == "all") cfg.method = faraday::RunMethod::all;
        else throw faraday::ConfigError("unknown method '" + method_override + "'");
    }
    faraday::validate(cfg.scan);

    const faraday::MolecularModel model =
        faraday::load_model(cfg.model_path, {}, cfg.tolerances);
    const std::vector<faraday::ScanRow> rows = faraday::run_scan(cfg, model);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!cfg.output_path.empty()) {
        file.open(cfg.output_path, std::ios::binary);
        if (!file) {
            throw faraday::ConfigError("cannot open output file '" + cfg.output_path +
                                       "'");
        }
        out = &file;
    }
    if (cfg.output_format == faraday::OutputFormat::csv) {
        faraday::write_scan_csv(rows, cfg.scan.variable, *out);
    } else {
        *out << faraday::scan_rows_to_json(rows, cfg.scan.variable).dump(2) << "\n";
    }
    return 0;
}

int validate_command(const std::string& config_path) {
    const faraday::RunConfig cfg = faraday::load_run_config(config_path);
    const faraday::ValidationReport report = faraday::validate_run(cfg);
    std::cout << report.text;
    return 0;
}

int oracle_report_command(const std::string& config_path,
                          const std::string& output_override) {
    faraday::RunConfig cfg = faraday::load_run_config(config_path);
    if (!output_override.empty()) cfg.output_path = output_override;
    const faraday::MolecularModel model =
        faraday::load_model(cfg.model_path, {}, cfg.tolerances);
    const nlohmann::json report = faraday::oracle_report(cfg, model);
    if (cfg.output_path.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::ofstream file(cfg.output_path, std::ios::binary);
        if (!file) {
            throw faraday::ConfigError("cannot open output file '" + cfg.output_path +
                                       "'");
        }
        file << report.dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Magnetic optical rotation (Faraday B-term) calculator"};
    app.require_subcommand(1);

    std::string config_path, model_override, method_override, output_override;
    long points_override = 0;

    auto* run = app.add_subcommand("run", "run a rotation-angle scan");
    run->add_option("--config", config_path, "run configuration file")->required();
    run->add_option("--model", model_override, "override the model path");
    run->add_option("--method", method_override,
                    "override the method (b_term|via_amplitude|oracle|all)");
    run->add_option("--output", output_override, "override the output path");
    run->add_option("--points", points_override, "override the scan point count");

    auto* validate = app.add_subcommand("validate", "pre-flight checks, no computation");
    validate->add_option("--config", config_path, "run configuration file")->required();

    auto* oracle = app.add_subcommand("oracle-report",
                                      "exact Fock-space cross-validation report");
    oracle->add_option("--config", config_path, "run configuration file")->required();
    oracle->add_option("--output", output_override, "override the output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // flag errors are configuration errors
    }

    try {
        if (run->parsed()) {
            return run_command(config_path, model_override, method_override,
                               output_override, points_override);
        }
        if (validate->parsed()) return validate_command(config_path);
        if (oracle->parsed()) return oracle_report_command(config_path, output_override);
    } catch (const faraday::Error& e) {
        return fail(e);
    } catch (const std::exception& e) {
        nlohmann::json record;
        record["error"]["type"] = "InternalError";
        record["error"]["message"] = e.what();
        std::cerr << record.dump() << std::endl;
        return 4;
    }
    return 0;
}
