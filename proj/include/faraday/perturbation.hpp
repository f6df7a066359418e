#pragma once

#include <cmath>
#include <string>

#include "faraday/model.hpp"

namespace faraday {

/// Molecular data corrected to first order in the static field B: shifted
/// energies and mixed-state transition moments. The corrections are exactly
/// linear in B.
struct PerturbedModel {
    RealVector energies;         // J, zeroth + first order
    CartesianOperator mu_corr;   // C m
    CartesianOperator m_corr;    // J/T
    MolecularModel base;
    Vec3 B;

    int size() const { return base.size(); }
    int ground_index() const { return base.ground_index; }
    double ground_energy() const { return energies(base.ground_index); }
};

/// Zeeman coupling matrix V(p,q) = -sum_i m_i(p,q) B_i. Hermitian.
inline ComplexMatrix zeeman_matrix(const MolecularModel& model, const Vec3& B) {
    return -model.m.project(B);
}

namespace detail {

/// Mixing coefficients C(p,i) = V(p,i) / (E_i - E_p) for p != i, zero diagonal.
inline ComplexMatrix mixing_coefficients(const RealVector& energies,
                                         const ComplexMatrix& V) {
    const auto n = energies.size();
    ComplexMatrix c = ComplexMatrix::Zero(n, n);
    for (Eigen::Index p = 0; p < n; ++p) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (p == i) continue;
            c(p, i) = V(p, i) / (energies(i) - energies(p));
        }
    }
    return c;
}

/// First-order corrected matrix elements of an operator between the mixed
/// states: O' = O + C^dag O + O C.
inline ComplexMatrix corrected_operator(const ComplexMatrix& O,
                                        const ComplexMatrix& mixing) {
    return O + mixing.adjoint() * O + O * mixing;
}

}  // namespace detail

/// Non-degenerate first-order corrections under the Zeeman perturbation.
/// Throws DegenerateSpectrum when the level spacing falls inside the
/// degeneracy threshold; spacings within 10x of it produce a warning.
inline PerturbedModel first_order_corrections(const MolecularModel& model,
                                              const Vec3& B,
                                              const Tolerances& tol = {},
                                              WarningLog* warnings = nullptr) {
    const auto degenerate = detect_degeneracy(model, tol);
    if (!degenerate.empty()) {
        throw DegenerateSpectrum(
            "levels " + std::to_string(degenerate.front().first) + " and " +
            std::to_string(degenerate.front().second) +
            " are degenerate; non-degenerate perturbation theory does not apply");
    }

    warn_near_degenerate(model, tol, warnings);

    const RealVector e0 = model.energies();
    const ComplexMatrix V = zeeman_matrix(model, B);
    const ComplexMatrix mixing = detail::mixing_coefficients(e0, V);

    PerturbedModel pm;
    pm.energies = e0 + V.diagonal().real();
    pm.mu_corr = {detail::corrected_operator(model.mu.x, mixing),
                  detail::corrected_operator(model.mu.y, mixing),
                  detail::corrected_operator(model.mu.z, mixing)};
    pm.m_corr = {detail::corrected_operator(model.m.x, mixing),
                 detail::corrected_operator(model.m.y, mixing),
                 detail::corrected_operator(model.m.z, mixing)};
    pm.base = model;
    pm.B = B;
    return pm;
}

}  // namespace faraday
