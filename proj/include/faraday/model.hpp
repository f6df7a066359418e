#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "faraday/constants.hpp"
#include "faraday/errors.hpp"

namespace faraday {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

/// Numerical guard thresholds shared across the library.
struct Tolerances {
    double degeneracy_abs = 1e-30;   // J
    double degeneracy_rel = 1e-9;
    double resonance_guard = 1e-35;  // J, absolute floor; see resonance_guard_for()
    double hermiticity_rel = 1e-12;

    void validate() const {
        if (!(degeneracy_abs > 0.0) || !(degeneracy_rel > 0.0) ||
            !(resonance_guard > 0.0) || !(hermiticity_rel > 0.0)) {
            throw ConfigError("all tolerance fields must be strictly positive");
        }
    }
};

/// Photon energies within 1e-3 relative of a transition energy are treated
/// as resonant; the absolute field is a floor for pathological scales.
inline double resonance_guard_for(const Tolerances& tol, double photon_energy) {
    return std::max(tol.resonance_guard, 1e-3 * std::abs(photon_energy));
}

/// One Cartesian vector operator on the molecular level space: three L x L
/// complex matrices, one per component, each Hermitian.
struct CartesianOperator {
    ComplexMatrix x, y, z;

    Eigen::Index dim() const { return x.rows(); }

    const ComplexMatrix& component(int i) const {
        switch (i) {
            case 0: return x;
            case 1: return y;
            default: return z;
        }
    }

    /// Projection e . Op as a single matrix.
    ComplexMatrix project(const Vec3& e) const {
        return e.x() * x + e.y() * y + e.z() * z;
    }

    static CartesianOperator zero(Eigen::Index n) {
        return {ComplexMatrix::Zero(n, n), ComplexMatrix::Zero(n, n),
                ComplexMatrix::Zero(n, n)};
    }
};

struct Level {
    std::string label;
    double energy;  // J
};

/// A finite molecular level system with electric (mu, C m) and magnetic
/// (m, J/T) dipole transition-moment matrices. Immutable after validation.
struct MolecularModel {
    std::vector<Level> levels;
    CartesianOperator mu;
    CartesianOperator m;
    int ground_index = 0;

    int size() const { return static_cast<int>(levels.size()); }

    RealVector energies() const {
        RealVector e(size());
        for (int i = 0; i < size(); ++i) e(i) = levels[i].energy;
        return e;
    }

    double ground_energy() const { return levels[ground_index].energy; }
};

namespace detail {

inline double hermiticity_residual(const ComplexMatrix& a) {
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline void check_hermitian(const ComplexMatrix& a, const std::string& name,
                            double rel_tol) {
    const double res = hermiticity_residual(a);
    if (res > rel_tol) {
        throw HermiticityViolation(name + " is not Hermitian: relative residual " +
                                   format_quantity(res) + " exceeds " +
                                   format_quantity(rel_tol));
    }
}

inline void check_operator_shape(const CartesianOperator& op, Eigen::Index n,
                                 const std::string& name) {
    for (int i = 0; i < 3; ++i) {
        const ComplexMatrix& c = op.component(i);
        if (c.rows() != n || c.cols() != n) {
            throw ShapeError(name + " component " + std::to_string(i) +
                             " has shape " + std::to_string(c.rows()) + "x" +
                             std::to_string(c.cols()) + ", expected " +
                             std::to_string(n) + "x" + std::to_string(n));
        }
    }
}

}  // namespace detail

inline void validate(const MolecularModel& model, const Tolerances& tol) {
    const int n = model.size();
    if (n < 2) throw ValidationError("model needs at least two levels");
    for (const auto& lvl : model.levels) {
        if (!std::isfinite(lvl.energy)) {
            throw ValidationError("non-finite energy for level '" + lvl.label + "'");
        }
    }
    if (model.ground_index < 0 || model.ground_index >= n) {
        throw ValidationError("ground index out of range");
    }
    for (const auto& lvl : model.levels) {
        if (lvl.energy < model.ground_energy()) {
            throw ValidationError("ground level does not have the minimum energy");
        }
    }
    detail::check_operator_shape(model.mu, n, "mu");
    detail::check_operator_shape(model.m, n, "m");
    static const char* comp[3] = {"x", "y", "z"};
    for (int i = 0; i < 3; ++i) {
        detail::check_hermitian(model.mu.component(i), std::string("mu.") + comp[i],
                                tol.hermiticity_rel);
        detail::check_hermitian(model.m.component(i), std::string("m.") + comp[i],
                                tol.hermiticity_rel);
    }
}

inline MolecularModel make_molecular_model(std::vector<Level> levels,
                                           CartesianOperator mu,
                                           CartesianOperator m, int ground_index,
                                           const Tolerances& tol = {}) {
    MolecularModel model{std::move(levels), std::move(mu), std::move(m), ground_index};
    validate(model, tol);
    return model;
}

/// All level pairs (i, j), i < j, closer in energy than the degeneracy
/// threshold. An empty result means the non-degenerate formulas apply.
inline std::vector<std::pair<int, int>> detect_degeneracy(const MolecularModel& model,
                                                          const Tolerances& tol = {}) {
    std::vector<std::pair<int, int>> pairs;
    const int n = model.size();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double ei = model.levels[i].energy;
            const double ej = model.levels[j].energy;
            const double thr = std::max(tol.degeneracy_abs,
                                        tol.degeneracy_rel *
                                            std::max(std::abs(ei), std::abs(ej)));
            if (std::abs(ei - ej) < thr) pairs.emplace_back(i, j);
        }
    }
    return pairs;
}

/// Level spacings within 10x of the degeneracy threshold are usable but
/// ill-conditioned in first-order denominators; report them.
inline void warn_near_degenerate(const MolecularModel& model, const Tolerances& tol,
                                 WarningLog* warnings) {
    if (!warnings) return;
    const int n = model.size();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double ei = model.levels[i].energy;
            const double ej = model.levels[j].energy;
            const double thr = std::max(tol.degeneracy_abs,
                                        tol.degeneracy_rel *
                                            std::max(std::abs(ei), std::abs(ej)));
            if (std::abs(ei - ej) < 10.0 * thr) {
                warn(warnings, WarningCode::near_degenerate_denominator,
                     "levels " + std::to_string(i) + " and " + std::to_string(j) +
                         " are close in energy; first-order denominators are "
                         "ill-conditioned");
            }
        }
    }
}

/// Two co-propagating modes with orthogonal linear polarizations sharing the
/// wave vector k; mode 1 carries n photons, mode 2 starts empty.
struct FieldConfig {
    Vec3 k;          // rad/m
    Vec3 e1, e2;     // unit polarization vectors
    long n_photons;  // occupation of mode 1
    double volume;   // quantization volume, m^3

    double omega() const { return kSpeedOfLight * k.norm(); }
    double photon_energy() const { return kHbar * omega(); }
    Vec3 k_hat() const { return k / k.norm(); }
};

inline void validate(const FieldConfig& f) {
    constexpr double kGeomTol = 1e-12;
    if (!(f.k.norm() > 0.0)) throw ConfigError("wave vector must be nonzero");
    if (std::abs(f.e1.norm() - 1.0) > kGeomTol || std::abs(f.e2.norm() - 1.0) > kGeomTol) {
        throw ConfigError("polarization vectors must be unit length");
    }
    if (std::abs(f.e1.dot(f.e2)) > kGeomTol) {
        throw ConfigError("polarization vectors must be orthogonal");
    }
    if (std::abs(f.e1.dot(f.k)) > kGeomTol * f.k.norm() ||
        std::abs(f.e2.dot(f.k)) > kGeomTol * f.k.norm()) {
        throw ConfigError("polarization vectors must be transverse to k");
    }
    if (f.n_photons < 0) throw ConfigError("photon number must be nonnegative");
    if (!(f.volume > 0.0)) throw ConfigError("quantization volume must be positive");
}

inline FieldConfig make_field_config(const Vec3& k, const Vec3& e1, const Vec3& e2,
                                     long n_photons, double volume) {
    FieldConfig f{k, e1, e2, n_photons, volume};
    validate(f);
    return f;
}

/// Static field, sample geometry, and molecule count for the gas result.
struct ExperimentConfig {
    Vec3 B;              // T
    double length_L;     // m
    double density_eta;  // molecules / m^3
    long n_molecules_N;
};

inline void validate(const ExperimentConfig& x) {
    if (!(x.length_L > 0.0)) throw ConfigError("path length must be positive");
    if (!(x.density_eta >= 0.0)) throw ConfigError("number density must be nonnegative");
    if (x.n_molecules_N < 1) throw ConfigError("molecule count must be positive");
}

}  // namespace faraday
