#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "faraday/model.hpp"
#include "faraday/model_io.hpp"

#include "test_util.hpp"

using namespace faraday;
using Catch::Matchers::WithinRel;

TEST_CASE("physical constants satisfy mu0 eps0 c^2 = 1") {
    const double product = kMu0 * kEps0 * kSpeedOfLight * kSpeedOfLight;
    REQUIRE_THAT(product, WithinRel(1.0, 1e-12));
}

TEST_CASE("unit conversions round-trip") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(0.1, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const double value = dist(rng);
        REQUIRE_THAT(value * kElectronVolt / kElectronVolt, WithinRel(value, 1e-15));
        REQUIRE_THAT(value * kDebye / kDebye, WithinRel(value, 1e-15));
        REQUIRE_THAT(value * kBohrMagneton / kBohrMagneton, WithinRel(value, 1e-15));
    }
}

TEST_CASE("sample models load with SI values") {
    const auto two = load_model(testutil::data_dir() + "/models/two_level.json");
    REQUIRE(two.size() == 2);
    REQUIRE(two.ground_index == 0);
    REQUIRE_THAT(two.levels[1].energy, WithinRel(2.0 * kElectronVolt, 1e-15));
    REQUIRE_THAT(two.mu.x(0, 1).real(),
                 WithinRel(0.70710678118654752 * kDebye, 1e-15));
    REQUIRE_THAT(two.m.z(0, 1).imag(), WithinRel(0.1 * kBohrMagneton, 1e-15));

    const auto three = load_model(testutil::data_dir() + "/models/three_level.json");
    REQUIRE(three.size() == 3);
    REQUIRE(detect_degeneracy(three).empty());
}

TEST_CASE("energies declared in eV convert with the CODATA factor") {
    nlohmann::json doc = {
        {"units", {{"energy", "eV"}}},
        {"levels", {{{"label", "g"}, {"energy", 0.0}}, {{"label", "e"}, {"energy", 1.0}}}},
        {"ground", "g"},
    };
    nlohmann::json zero = nlohmann::json::array();
    for (int r = 0; r < 2; ++r) {
        zero.push_back({{0.0, 0.0}, {0.0, 0.0}});
    }
    doc["mu"] = {{"x", zero}, {"y", zero}, {"z", zero}};
    doc["m"] = {{"x", zero}, {"y", zero}, {"z", zero}};
    const MolecularModel model = parse_model(doc);
    REQUIRE(model.levels[1].energy == 1.602176634e-19);
}

TEST_CASE("hermiticity violations are rejected") {
    nlohmann::json doc = nlohmann::json::parse(std::ifstream(
        testutil::data_dir() + "/models/two_level.json"));
    doc["mu"]["x"][0][1] = {1.0, 0.0};
    doc["mu"]["x"][1][0] = {0.5, 0.0};  // != conj of (0,1)
    REQUIRE_THROWS_AS(parse_model(doc), HermiticityViolation);
}

TEST_CASE("matrix shape mismatches are rejected") {
    nlohmann::json doc = nlohmann::json::parse(std::ifstream(
        testutil::data_dir() + "/models/two_level.json"));
    doc["mu"]["x"] = {{{0.0, 0.0}}};  // 1x1 instead of 2x2
    REQUIRE_THROWS_AS(parse_model(doc), ShapeError);
}

TEST_CASE("unknown unit tags are rejected") {
    nlohmann::json doc = nlohmann::json::parse(std::ifstream(
        testutil::data_dir() + "/models/two_level.json"));
    doc["units"]["energy"] = "hartree";
    REQUIRE_THROWS_AS(parse_model(doc), UnitError);
}

TEST_CASE("malformed documents raise ParseError") {
    const std::string path = std::filesystem::temp_directory_path() /
                             "faraday_bad_model.json";
    std::ofstream(path) << "{ not json";
    REQUIRE_THROWS_AS(load_model(path), ParseError);
    std::ofstream(path) << "{\"levels\": []}";
    REQUIRE_THROWS_AS(load_model(path), ParseError);
    REQUIRE_THROWS_AS(load_model("/nonexistent/nowhere.json"), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("ground level must carry the minimum energy") {
    nlohmann::json doc = nlohmann::json::parse(std::ifstream(
        testutil::data_dir() + "/models/two_level.json"));
    doc["ground"] = "e";
    REQUIRE_THROWS_AS(parse_model(doc), ValidationError);
    doc["ground"] = "missing";
    REQUIRE_THROWS_AS(parse_model(doc), ValidationError);
}

TEST_CASE("explicit unit override replaces the file's units block") {
    // File declares eV; overriding with joules keeps raw numbers.
    UnitSystem si;
    const auto model = load_model(testutil::data_dir() + "/models/two_level.json", si);
    REQUIRE(model.levels[1].energy == 2.0);
}

TEST_CASE("degeneracy detection thresholds") {
    auto make = [](std::vector<double> energies) {
        std::vector<Level> levels;
        for (std::size_t i = 0; i < energies.size(); ++i) {
            levels.push_back({"L" + std::to_string(i), energies[i]});
        }
        const auto n = static_cast<Eigen::Index>(energies.size());
        return make_molecular_model(levels, CartesianOperator::zero(n),
                                    CartesianOperator::zero(n), 0);
    };
    Tolerances tol;
    tol.degeneracy_abs = 1e-25;

    REQUIRE(detect_degeneracy(make({0.0, 1e-19, 2e-19}), tol).empty());

    const auto exact = detect_degeneracy(make({0.0, 0.0, 1e-19}), tol);
    REQUIRE(exact == std::vector<std::pair<int, int>>{{0, 1}});

    const auto below = detect_degeneracy(make({0.0, 1e-30, 1e-19}), tol);
    REQUIRE(below == std::vector<std::pair<int, int>>{{0, 1}});
}

TEST_CASE("relative degeneracy threshold scales with the energies") {
    std::vector<Level> levels{{"a", 1e-19}, {"b", 1e-19 * (1.0 + 1e-10)}};
    const auto model = make_molecular_model(levels, CartesianOperator::zero(2),
                                            CartesianOperator::zero(2), 0);
    REQUIRE(detect_degeneracy(model).size() == 1);  // default rel tol 1e-9
    Tolerances tight;
    tight.degeneracy_rel = 1e-12;
    REQUIRE(detect_degeneracy(model, tight).empty());
}

TEST_CASE("serialize/load round-trip reproduces every field") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const auto model = testutil::random_model(rng, 2 + trial % 4);
        const auto doc = serialize_model(model);
        const auto again = parse_model(nlohmann::json::parse(doc.dump()));
        REQUIRE(again.size() == model.size());
        REQUIRE(again.ground_index == model.ground_index);
        for (int i = 0; i < model.size(); ++i) {
            REQUIRE(again.levels[i].label == model.levels[i].label);
            REQUIRE_THAT(again.levels[i].energy,
                         WithinRel(model.levels[i].energy, 1e-15));
        }
        for (int comp = 0; comp < 3; ++comp) {
            REQUIRE((again.mu.component(comp) - model.mu.component(comp))
                        .cwiseAbs()
                        .maxCoeff() <=
                    1e-15 * model.mu.component(comp).cwiseAbs().maxCoeff());
            REQUIRE((again.m.component(comp) - model.m.component(comp))
                        .cwiseAbs()
                        .maxCoeff() <=
                    1e-15 * model.m.component(comp).cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("field config invariants") {
    const Vec3 z(0, 0, 1), x(1, 0, 0), y(0, 1, 0);
    REQUIRE_NOTHROW(make_field_config(z * 6e6, x, y, 1, 1e-18));
    // parallel polarizations
    REQUIRE_THROWS_AS(make_field_config(z * 6e6, x, x, 1, 1e-18), ConfigError);
    // non-unit vector
    REQUIRE_THROWS_AS(make_field_config(z * 6e6, 2.0 * x, y, 1, 1e-18), ConfigError);
    // longitudinal polarization
    REQUIRE_THROWS_AS(make_field_config(x * 6e6, x, y, 1, 1e-18), ConfigError);
    // negative photon number / volume
    REQUIRE_THROWS_AS(make_field_config(z * 6e6, x, y, -1, 1e-18), ConfigError);
    REQUIRE_THROWS_AS(make_field_config(z * 6e6, x, y, 1, 0.0), ConfigError);

    const FieldConfig f = make_field_config(z * 6e6, x, y, 3, 1e-18);
    REQUIRE_THAT(f.omega(), WithinRel(kSpeedOfLight * 6e6, 1e-15));
}

TEST_CASE("experiment config invariants") {
    REQUIRE_NOTHROW(validate(ExperimentConfig{Vec3(0, 0, 1), 0.1, 1e25, 10}));
    REQUIRE_THROWS_AS(validate(ExperimentConfig{Vec3(0, 0, 1), 0.0, 1e25, 10}),
                      ConfigError);
    REQUIRE_THROWS_AS(validate(ExperimentConfig{Vec3(0, 0, 1), 0.1, -1.0, 10}),
                      ConfigError);
    REQUIRE_THROWS_AS(validate(ExperimentConfig{Vec3(0, 0, 1), 0.1, 1e25, 0}),
                      ConfigError);
}

TEST_CASE("tolerances must be positive") {
    Tolerances tol;
    tol.degeneracy_rel = 0.0;
    REQUIRE_THROWS_AS(tol.validate(), ConfigError);
}
