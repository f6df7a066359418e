#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "faraday/amplitude.hpp"
#include "faraday/fock.hpp"
#include "faraday/model_io.hpp"

namespace faraday {

enum class ScanVariable { omega, B_magnitude };
enum class ScanSpacing { linear, log };
enum class RunMethod { b_term, via_amplitude, oracle, all };
enum class OutputFormat { csv, json };

struct ScanSpec {
    ScanVariable variable = ScanVariable::omega;
    double start = 0.0;
    double stop = 0.0;
    long points = 1;
    ScanSpacing spacing = ScanSpacing::linear;
};

struct OracleParams {
    long n1_max = -1;    // -1: use the initial photon number
    long n2_max = 2;
    double time_s = -1;  // -1: use length_L / c
};

/// A fully resolved run request: model path, base field and experiment
/// parameters, scan axis, method, and output destination.
struct RunConfig {
    std::string model_path;
    double omega = 0.0;  // rad/s, base value (scan start overrides on omega scans)
    Vec3 k_direction = Vec3(0, 0, 1);
    Vec3 e1 = Vec3(1, 0, 0);
    Vec3 e2 = Vec3(0, 1, 0);
    long n_photons = 1;
    double volume = 0.0;  // m^3
    ExperimentConfig experiment{Vec3::Zero(), 0.0, 0.0, 1};
    ScanSpec scan;
    RunMethod method = RunMethod::b_term;
    std::string output_path;
    OutputFormat output_format = OutputFormat::csv;
    Tolerances tolerances;
    OracleParams oracle;
};

namespace detail {

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline Vec3 parse_vec3(const nlohmann::json& j, const std::string& name) {
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError(name + " must be a 3-element array");
    }
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline double require_number(const nlohmann::json& j, const std::string& key,
                             const std::string& context) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ConfigError(context + " needs numeric field '" + key + "'");
    }
    return j.at(key).get<double>();
}

}  // namespace detail

inline void validate(const ScanSpec& scan) {
    if (scan.points < 1) throw ConfigError("scan needs at least one point");
    if (scan.points > 1 && !(scan.start < scan.stop)) {
        throw ConfigError("scan start must be below stop");
    }
    if (scan.spacing == ScanSpacing::log && !(scan.start > 0.0)) {
        throw ConfigError("log spacing requires a positive start");
    }
}

inline std::vector<double> scan_values(const ScanSpec& scan) {
    validate(scan);
    std::vector<double> values;
    values.reserve(scan.points);
    if (scan.points == 1) {
        values.push_back(scan.start);
        return values;
    }
    for (long i = 0; i < scan.points; ++i) {
        const double frac = static_cast<double>(i) / (scan.points - 1);
        if (scan.spacing == ScanSpacing::linear) {
            values.push_back(scan.start + frac * (scan.stop - scan.start));
        } else {
            values.push_back(scan.start * std::pow(scan.stop / scan.start, frac));
        }
    }
    return values;
}

/// Tolerance presets selected through FARADAY_TOLERANCE_PROFILE.
inline Tolerances tolerance_profile(const std::string& name) {
    if (name.empty() || name == "default") return {};
    if (name == "strict") return {1e-27, 1e-6, 1e-30, 1e-13};
    if (name == "loose") return {1e-33, 1e-12, 1e-38, 1e-9};
    throw ConfigError("unknown tolerance profile '" + name +
                      "' (expected default, strict, or loose)");
}

inline Tolerances tolerances_from_environment() {
    const char* profile = std::getenv("FARADAY_TOLERANCE_PROFILE");
    return tolerance_profile(profile ? profile : "");
}

inline RunConfig parse_run_config(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
    RunConfig cfg;
    cfg.tolerances = tolerances_from_environment();

    if (!doc.contains("model") || !doc.at("model").is_string()) {
        throw ConfigError("run config needs a 'model' path");
    }
    std::filesystem::path model = doc.at("model").get<std::string>();
    cfg.model_path = model.is_absolute() ? model.string() : (base_dir / model).string();

    if (!doc.contains("field")) throw ConfigError("run config needs a 'field' block");
    const auto& jf = doc.at("field");
    if (jf.contains("photon_energy_eV")) {
        cfg.omega = jf.at("photon_energy_eV").get<double>() * kElectronVolt / kHbar;
    } else {
        cfg.omega = detail::require_number(jf, "omega_rad_s", "field");
    }
    if (jf.contains("k_direction")) {
        cfg.k_direction = detail::parse_vec3(jf.at("k_direction"), "field.k_direction");
    }
    if (jf.contains("e1")) cfg.e1 = detail::parse_vec3(jf.at("e1"), "field.e1");
    if (jf.contains("e2")) cfg.e2 = detail::parse_vec3(jf.at("e2"), "field.e2");
    if (jf.contains("n_photons")) cfg.n_photons = jf.at("n_photons").get<long>();
    cfg.volume = detail::require_number(jf, "volume_m3", "field");

    if (!doc.contains("experiment")) {
        throw ConfigError("run config needs an 'experiment' block");
    }
    const auto& jx = doc.at("experiment");
    cfg.experiment.B = detail::parse_vec3(jx.at("B_tesla"), "experiment.B_tesla");
    cfg.experiment.length_L = detail::require_number(jx, "length_m", "experiment");
    cfg.experiment.density_eta =
        detail::require_number(jx, "density_per_m3", "experiment");
    if (jx.contains("n_molecules")) {
        cfg.experiment.n_molecules_N = jx.at("n_molecules").get<long>();
    }

    if (doc.contains("scan")) {
        const auto& js = doc.at("scan");
        const std::string var = js.at("variable").get<std::string>();
        if (var == "omega") {
            cfg.scan.variable = ScanVariable::omega;
        } else if (var == "B_magnitude") {
            cfg.scan.variable = ScanVariable::B_magnitude;
        } else {
            throw ConfigError("scan variable must be 'omega' or 'B_magnitude'");
        }
        cfg.scan.start = detail::require_number(js, "start", "scan");
        cfg.scan.stop = detail::require_number(js, "stop", "scan");
        cfg.scan.points = js.contains("points") ? js.at("points").get<long>() : 1;
        if (js.contains("spacing")) {
            const std::string sp = js.at("spacing").get<std::string>();
            if (sp == "linear") {
                cfg.scan.spacing = ScanSpacing::linear;
            } else if (sp == "log") {
                cfg.scan.spacing = ScanSpacing::log;
            } else {
                throw ConfigError("scan spacing must be 'linear' or 'log'");
            }
        }
    } else {
        cfg.scan = {ScanVariable::omega, cfg.omega, cfg.omega, 1, ScanSpacing::linear};
    }
    validate(cfg.scan);

    if (doc.contains("method")) {
        const std::string m = doc.at("method").get<std::string>();
        if (m == "b_term") cfg.method = RunMethod::b_term;
        else if (m == "via_amplitude") cfg.method = RunMethod::via_amplitude;
        else if (m == "oracle") cfg.method = RunMethod::oracle;
        else if (m == "all") cfg.method = RunMethod::all;
        else throw ConfigError("unknown method '" + m + "'");
    }

    if (doc.contains("output")) {
        const auto& jo = doc.at("output");
        if (jo.contains("path")) {
            std::filesystem::path out = jo.at("path").get<std::string>();
            cfg.output_path =
                out.is_absolute() ? out.string() : (base_dir / out).string();
        }
        if (jo.contains("format")) {
            const std::string fm = jo.at("format").get<std::string>();
            if (fm == "csv") cfg.output_format = OutputFormat::csv;
            else if (fm == "json") cfg.output_format = OutputFormat::json;
            else throw ConfigError("output format must be 'csv' or 'json'");
        }
    }

    if (doc.contains("tolerances")) {
        const auto& jt = doc.at("tolerances");
        if (jt.contains("degeneracy_abs"))
            cfg.tolerances.degeneracy_abs = jt.at("degeneracy_abs").get<double>();
        if (jt.contains("degeneracy_rel"))
            cfg.tolerances.degeneracy_rel = jt.at("degeneracy_rel").get<double>();
        if (jt.contains("resonance_guard"))
            cfg.tolerances.resonance_guard = jt.at("resonance_guard").get<double>();
        if (jt.contains("hermiticity_rel"))
            cfg.tolerances.hermiticity_rel = jt.at("hermiticity_rel").get<double>();
        cfg.tolerances.validate();
    }

    if (doc.contains("oracle")) {
        const auto& jo = doc.at("oracle");
        if (jo.contains("n1_max")) cfg.oracle.n1_max = jo.at("n1_max").get<long>();
        if (jo.contains("n2_max")) cfg.oracle.n2_max = jo.at("n2_max").get<long>();
        if (jo.contains("time_s")) cfg.oracle.time_s = jo.at("time_s").get<double>();
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config file '" + path + "': " + e.what());
    }
    try {
        return parse_run_config(doc, std::filesystem::path(path).parent_path());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid config file '" + path + "': " + e.what());
    }
}

/// One output record of a scan.
struct ScanRow {
    double scan_value = 0.0;
    std::optional<double> theta_b_term;
    std::optional<double> theta_via_amplitude;
    std::optional<double> theta_oracle;
    std::optional<double> amplitude_abs;
    std::vector<std::string> warnings;
};

namespace detail {

inline FieldConfig field_at(const RunConfig& cfg, double omega) {
    const Vec3 khat = cfg.k_direction.normalized();
    return make_field_config(khat * (omega / kSpeedOfLight), cfg.e1, cfg.e2,
                             cfg.n_photons, cfg.volume);
}

inline void note_warnings(ScanRow& row, const WarningLog& log) {
    for (const auto& w : log) {
        const std::string name = warning_code_name(w.code);
        bool seen = false;
        for (const auto& existing : row.warnings) seen = seen || existing == name;
        if (!seen) row.warnings.push_back(name);
    }
}

}  // namespace detail

/// Evaluates every requested method at one parameter point. Near-resonant
/// points yield null angles plus a warning instead of failing the scan.
inline ScanRow evaluate_point(const RunConfig& cfg, const MolecularModel& model,
                              double scan_value) {
    ScanRow row;
    row.scan_value = scan_value;

    double omega = cfg.omega;
    ExperimentConfig x = cfg.experiment;
    if (cfg.scan.variable == ScanVariable::omega) {
        omega = scan_value;
    } else {
        const double bnorm = cfg.experiment.B.norm();
        if (bnorm == 0.0) {
            throw ConfigError("B-magnitude scans need a nonzero B direction");
        }
        x.B = cfg.experiment.B / bnorm * scan_value;
    }
    const FieldConfig f = detail::field_at(cfg, omega);

    const bool want_b_term =
        cfg.method == RunMethod::b_term || cfg.method == RunMethod::all;
    const bool want_via =
        cfg.method == RunMethod::via_amplitude || cfg.method == RunMethod::all;
    const bool want_oracle =
        cfg.method == RunMethod::oracle || cfg.method == RunMethod::all;

    WarningLog log;
    if (want_b_term) {
        try {
            row.theta_b_term = faraday_b_term_angle(model, f, x, cfg.tolerances, &log).theta;
        } catch (const NearResonance&) {
            row.warnings.push_back("near_resonance");
        }
    }
    if (want_via) {
        try {
            const RotationResult res =
                via_amplitude_angle(model, f, x, cfg.tolerances,
                                    AmplitudeOrder::second_order_closed, &log);
            row.theta_via_amplitude = res.theta;
            row.amplitude_abs = std::abs(res.amplitude->value);
        } catch (const NearResonance&) {
            if (row.warnings.empty() || row.warnings.back() != "near_resonance") {
                row.warnings.push_back("near_resonance");
            }
        }
    }
    if (want_oracle) {
        const FockBasis basis{model.size(),
                              int(cfg.oracle.n1_max < 0 ? f.n_photons
                                                        : cfg.oracle.n1_max),
                              int(cfg.oracle.n2_max)};
        const double t =
            cfg.oracle.time_s > 0 ? cfg.oracle.time_s : x.length_L / kSpeedOfLight;
        // Single-molecule occupation angle; includes the virtual dressing of
        // mode 2, so it tracks the other columns only when the coherent
        // transfer dominates (see docs/file_formats.md).
        row.theta_oracle = oracle_rotation_angle(model, f, x, basis, t).theta;
    }
    detail::note_warnings(row, log);
    return row;
}

/// Failure at a specific scan point; keeps the underlying error type name so
/// machine-readable error records stay precise.
class ScanPointError : public Error {
  public:
    ScanPointError(const Error& cause, long index)
        : Error(cause.category(), "[scan point " + std::to_string(index) + "] " +
                                      cause.what()),
          type_(cause.type_name()),
          index_(index) {}
    const char* type_name() const noexcept override { return type_.c_str(); }
    long scan_index() const noexcept { return index_; }

  private:
    std::string type_;
    long index_;
};

inline std::vector<ScanRow> run_scan(const RunConfig& cfg,
                                     const MolecularModel& model) {
    std::vector<ScanRow> rows;
    const std::vector<double> values = scan_values(cfg.scan);
    rows.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        try {
            rows.push_back(evaluate_point(cfg, model, values[i]));
        } catch (const ScanPointError&) {
            throw;
        } catch (const Error& e) {
            throw ScanPointError(e, static_cast<long>(i));
        }
    }
    return rows;
}

inline const char* scan_variable_name(ScanVariable v) {
    return v == ScanVariable::omega ? "omega" : "B_magnitude";
}

inline void write_scan_csv(const std::vector<ScanRow>& rows, ScanVariable variable,
                           std::ostream& out) {
    out << "scan_variable,scan_value,theta_b_term_rad,theta_via_amplitude_rad,"
           "theta_oracle_rad,amplitude_abs_J,warnings\n";
    auto cell = [](const std::optional<double>& v) {
        return v ? detail::format_g17(*v) : std::string();
    };
    for (const auto& row : rows) {
        out << scan_variable_name(variable) << ',' << detail::format_g17(row.scan_value)
            << ',' << cell(row.theta_b_term) << ',' << cell(row.theta_via_amplitude)
            << ',' << cell(row.theta_oracle) << ',' << cell(row.amplitude_abs) << ',';
        for (std::size_t i = 0; i < row.warnings.size(); ++i) {
            if (i) out << ';';
            out << row.warnings[i];
        }
        out << '\n';
    }
}

inline nlohmann::json scan_rows_to_json(const std::vector<ScanRow>& rows,
                                        ScanVariable variable) {
    nlohmann::json result = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json jr;
        jr["scan_variable"] = scan_variable_name(variable);
        jr["scan_value"] = row.scan_value;
        auto put = [&](const char* key, const std::optional<double>& v) {
            if (v) jr[key] = *v; else jr[key] = nullptr;
        };
        put("theta_b_term_rad", row.theta_b_term);
        put("theta_via_amplitude_rad", row.theta_via_amplitude);
        put("theta_oracle_rad", row.theta_oracle);
        put("amplitude_abs_J", row.amplitude_abs);
        jr["warnings"] = row.warnings;
        result.push_back(std::move(jr));
    }
    return result;
}

/// Single-point oracle cross-validation report.
inline nlohmann::json oracle_report(const RunConfig& cfg,
                                    const MolecularModel& model) {
    const FieldConfig f = detail::field_at(cfg, cfg.omega);
    const ExperimentConfig& x = cfg.experiment;
    const FockBasis basis{model.size(),
                          int(cfg.oracle.n1_max < 0 ? f.n_photons : cfg.oracle.n1_max),
                          int(cfg.oracle.n2_max)};
    const double t =
        cfg.oracle.time_s > 0 ? cfg.oracle.time_s : x.length_L / kSpeedOfLight;

    OracleDiagnostics diag;
    const double theta_oracle =
        oracle_rotation_angle(model, f, x, basis, t, &diag).theta;

    const PerturbedModel pm = first_order_corrections(model, x.B, cfg.tolerances);
    const TransitionAmplitude amp =
        amplitude_second_order_closed(pm, f, cfg.tolerances);
    const double theta_pert = std::abs(amp.value) * t /
                              (kHbar * std::sqrt(double(f.n_photons)));

    nlohmann::json report;
    report["parameters"] = {
        {"model", cfg.model_path},
        {"omega_rad_s", cfg.omega},
        {"n_photons", f.n_photons},
        {"volume_m3", f.volume},
        {"B_tesla", {x.B.x(), x.B.y(), x.B.z()}},
        {"time_s", t},
        {"n1_max", basis.n1_max},
        {"n2_max", basis.n2_max},
        {"hilbert_dim", basis.dim()},
    };
    report["theta_oracle"] = theta_oracle;
    report["theta_perturbative"] = theta_pert;
    report["relative_deviation"] = (theta_oracle - theta_pert) / theta_pert;
    report["leakage"] = diag.leakage;
    report["norm_drift"] = diag.norm_drift;
    return report;
}

/// Pre-flight report: model invariants, degeneracy, resonance proximity over
/// the scan range, and density/molecule-count consistency. Never throws for
/// physics findings; those become FAIL/WARN lines.
struct ValidationReport {
    bool pass = true;
    std::string text;
};

inline ValidationReport validate_run(const RunConfig& cfg) {
    std::ostringstream out;
    bool pass = true;

    MolecularModel model;
    try {
        model = load_model(cfg.model_path, {}, cfg.tolerances);
        out << "PASS: model '" << cfg.model_path << "' loads; " << model.size()
            << " levels, invariants hold\n";
    } catch (const Error& e) {
        out << "FAIL: model: " << e.what() << "\n";
        return {false, out.str()};
    }

    const auto degenerate = detect_degeneracy(model, cfg.tolerances);
    if (degenerate.empty()) {
        out << "PASS: spectrum is non-degenerate\n";
    } else {
        pass = false;
        for (auto [i, j] : degenerate) {
            out << "FAIL: levels " << i << " ('" << model.levels[i].label << "') and "
                << j << " ('" << model.levels[j].label
                << "') are degenerate; Faraday A and C terms are not supported\n";
        }
    }

    try {
        validate(detail::field_at(cfg, cfg.omega));
        out << "PASS: field configuration valid\n";
    } catch (const Error& e) {
        pass = false;
        out << "FAIL: field: " << e.what() << "\n";
    }
    try {
        validate(cfg.experiment);
        out << "PASS: experiment configuration valid\n";
    } catch (const Error& e) {
        pass = false;
        out << "FAIL: experiment: " << e.what() << "\n";
    }

    // resonance proximity across the scan range; B scans have one frequency
    const RealVector e0 = model.energies();
    const bool omega_scan = cfg.scan.variable == ScanVariable::omega;
    const std::vector<double> omegas =
        omega_scan ? scan_values(cfg.scan) : std::vector<double>{cfg.omega};
    std::vector<long> resonant_points;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const double homega = kHbar * omegas[i];
        const double guard = resonance_guard_for(cfg.tolerances, homega);
        bool near = false;
        for (Eigen::Index r = 0; r < e0.size(); ++r) {
            const double erg = e0(r) - e0(model.ground_index);
            near = near || std::abs(homega - erg) < guard ||
                   std::abs(homega + erg) < guard;
        }
        if (near) resonant_points.push_back(static_cast<long>(i));
    }
    if (resonant_points.empty()) {
        out << "PASS: scan stays off-resonant\n";
    } else {
        pass = false;
        if (omega_scan) {
            out << "FAIL: scan crosses a molecular transition at point indices";
            for (long i : resonant_points) out << ' ' << i;
            out << "\n";
        } else {
            out << "FAIL: the base frequency sits on a molecular transition\n";
        }
    }

    const double implied_eta =
        static_cast<double>(cfg.experiment.n_molecules_N) / cfg.volume;
    if (cfg.experiment.density_eta > 0.0 &&
        std::abs(implied_eta - cfg.experiment.density_eta) >
            1e-6 * cfg.experiment.density_eta) {
        out << "WARN: density_per_m3 differs from n_molecules / volume_m3; "
               "b_term and via_amplitude angles will disagree by that ratio\n";
    }

    out << (pass ? "pass\n" : "fail\n");
    return {pass, out.str()};
}

}  // namespace faraday
