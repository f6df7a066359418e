#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "faraday/model.hpp"

namespace faraday {

enum class EnergyUnit { joule, electron_volt };
enum class ElectricDipoleUnit { coulomb_meter, debye };
enum class MagneticDipoleUnit { joule_per_tesla, bohr_magneton };

/// Unit tags declared by a model file. Values are converted to SI on load.
struct UnitSystem {
    EnergyUnit energy = EnergyUnit::joule;
    ElectricDipoleUnit electric_dipole = ElectricDipoleUnit::coulomb_meter;
    MagneticDipoleUnit magnetic_dipole = MagneticDipoleUnit::joule_per_tesla;

    double energy_factor() const {
        return energy == EnergyUnit::electron_volt ? kElectronVolt : 1.0;
    }
    double electric_factor() const {
        return electric_dipole == ElectricDipoleUnit::debye ? kDebye : 1.0;
    }
    double magnetic_factor() const {
        return magnetic_dipole == MagneticDipoleUnit::bohr_magneton ? kBohrMagneton
                                                                    : 1.0;
    }
};

namespace detail {

inline EnergyUnit parse_energy_unit(const std::string& tag) {
    if (tag == "J") return EnergyUnit::joule;
    if (tag == "eV") return EnergyUnit::electron_volt;
    throw UnitError("unknown energy unit '" + tag + "' (expected \"J\" or \"eV\")");
}

inline ElectricDipoleUnit parse_electric_unit(const std::string& tag) {
    if (tag == "C*m") return ElectricDipoleUnit::coulomb_meter;
    if (tag == "debye") return ElectricDipoleUnit::debye;
    throw UnitError("unknown electric dipole unit '" + tag +
                    "' (expected \"C*m\" or \"debye\")");
}

inline MagneticDipoleUnit parse_magnetic_unit(const std::string& tag) {
    if (tag == "J/T") return MagneticDipoleUnit::joule_per_tesla;
    if (tag == "mu_B") return MagneticDipoleUnit::bohr_magneton;
    throw UnitError("unknown magnetic dipole unit '" + tag +
                    "' (expected \"J/T\" or \"mu_B\")");
}

inline Complex parse_complex_entry(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ParseError("matrix entries must be [re, im] number pairs");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

inline ComplexMatrix parse_complex_matrix(const nlohmann::json& j, Eigen::Index n,
                                          const std::string& name, double scale) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
        throw ShapeError(name + " must be a " + std::to_string(n) + "x" +
                         std::to_string(n) + " array");
    }
    ComplexMatrix mat(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
            throw ShapeError(name + " row " + std::to_string(r) + " has wrong length");
        }
        for (Eigen::Index c = 0; c < n; ++c) {
            mat(r, c) = scale * parse_complex_entry(row[c]);
        }
    }
    return mat;
}

inline CartesianOperator parse_operator(const nlohmann::json& j, Eigen::Index n,
                                        const std::string& name, double scale) {
    if (!j.is_object()) throw ParseError(name + " must be an object with x, y, z");
    CartesianOperator op;
    ComplexMatrix* comps[3] = {&op.x, &op.y, &op.z};
    static const char* keys[3] = {"x", "y", "z"};
    for (int i = 0; i < 3; ++i) {
        if (!j.contains(keys[i])) {
            throw ParseError(name + " is missing component '" + keys[i] + "'");
        }
        *comps[i] = parse_complex_matrix(j.at(keys[i]), n,
                                         name + "." + keys[i], scale);
    }
    return op;
}

inline nlohmann::json dump_complex_matrix(const ComplexMatrix& mat) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < mat.cols(); ++c) {
            row.push_back({mat(r, c).real(), mat(r, c).imag()});
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

inline UnitSystem parse_unit_system(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("'units' must be an object");
    UnitSystem units;
    if (j.contains("energy")) {
        units.energy = detail::parse_energy_unit(j.at("energy").get<std::string>());
    }
    if (j.contains("electric_dipole")) {
        units.electric_dipole =
            detail::parse_electric_unit(j.at("electric_dipole").get<std::string>());
    }
    if (j.contains("magnetic_dipole")) {
        units.magnetic_dipole =
            detail::parse_magnetic_unit(j.at("magnetic_dipole").get<std::string>());
    }
    return units;
}

/// Builds a model (internal SI units) from parsed JSON. When `units_override`
/// is given it replaces the file's `units` block.
inline MolecularModel parse_model(const nlohmann::json& doc,
                                  std::optional<UnitSystem> units_override = {},
                                  const Tolerances& tol = {}) {
    if (!doc.is_object()) throw ParseError("model document must be a JSON object");
    UnitSystem units;
    if (units_override) {
        units = *units_override;
    } else if (doc.contains("units")) {
        units = parse_unit_system(doc.at("units"));
    }

    if (!doc.contains("levels") || !doc.at("levels").is_array()) {
        throw ParseError("model document needs a 'levels' array");
    }
    std::vector<Level> levels;
    for (const auto& jl : doc.at("levels")) {
        if (!jl.contains("label") || !jl.contains("energy")) {
            throw ParseError("each level needs 'label' and 'energy'");
        }
        levels.push_back({jl.at("label").get<std::string>(),
                          jl.at("energy").get<double>() * units.energy_factor()});
    }
    const auto n = static_cast<Eigen::Index>(levels.size());

    if (!doc.contains("ground")) throw ParseError("model document needs 'ground'");
    const std::string ground_label = doc.at("ground").get<std::string>();
    int ground_index = -1;
    for (int i = 0; i < static_cast<int>(levels.size()); ++i) {
        if (levels[i].label == ground_label) ground_index = i;
    }
    if (ground_index < 0) {
        throw ValidationError("ground label '" + ground_label + "' not found");
    }

    if (!doc.contains("mu") || !doc.contains("m")) {
        throw ParseError("model document needs 'mu' and 'm' operators");
    }
    CartesianOperator mu =
        detail::parse_operator(doc.at("mu"), n, "mu", units.electric_factor());
    CartesianOperator m =
        detail::parse_operator(doc.at("m"), n, "m", units.magnetic_factor());

    return make_molecular_model(std::move(levels), std::move(mu), std::move(m),
                                ground_index, tol);
}

inline MolecularModel load_model(const std::string& path,
                                 std::optional<UnitSystem> units_override = {},
                                 const Tolerances& tol = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed model file '" + path + "': " + e.what());
    }
    try {
        return parse_model(doc, units_override, tol);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid model file '" + path + "': " + e.what());
    }
}

/// Serializes in internal SI units; load(serialize(m)) reproduces m exactly.
inline nlohmann::json serialize_model(const MolecularModel& model) {
    nlohmann::json doc;
    doc["units"] = {{"energy", "J"},
                    {"electric_dipole", "C*m"},
                    {"magnetic_dipole", "J/T"}};
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& lvl : model.levels) {
        levels.push_back({{"label", lvl.label}, {"energy", lvl.energy}});
    }
    doc["levels"] = std::move(levels);
    doc["ground"] = model.levels[model.ground_index].label;
    doc["mu"] = {{"x", detail::dump_complex_matrix(model.mu.x)},
                 {"y", detail::dump_complex_matrix(model.mu.y)},
                 {"z", detail::dump_complex_matrix(model.mu.z)}};
    doc["m"] = {{"x", detail::dump_complex_matrix(model.m.x)},
                {"y", detail::dump_complex_matrix(model.m.y)},
                {"z", detail::dump_complex_matrix(model.m.z)}};
    return doc;
}

inline void save_model(const MolecularModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << serialize_model(model).dump(2) << "\n";
}

}  // namespace faraday
