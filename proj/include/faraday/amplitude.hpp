#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "faraday/model.hpp"
#include "faraday/perturbation.hpp"

namespace faraday {

enum class AmplitudeOrder {
    second_order_closed,
    second_order_diagrams,
    third_order,
};

/// Forward-scattering transition amplitude between |a> = |n(1)> and
/// |b> = |(n-1)(1); 1(2)> for a fixed molecular ground state.
struct TransitionAmplitude {
    Complex value;  // J
    AmplitudeOrder order;
    FieldConfig field;
};

enum class AngleMethod {
    via_amplitude,
    b_term_formula,
    oracle,
};

struct RotationResult {
    double theta;  // rad
    std::optional<TransitionAmplitude> amplitude;
    AngleMethod method;
};

namespace detail {

/// Single-photon field coupling sqrt(hbar*omega / (2 eps0 V)), V/m.
inline double field_coupling(const FieldConfig& f) {
    return std::sqrt(kHbar * f.omega() / (2.0 * kEps0 * f.volume));
}

/// <l', n-1| -mu.E |l, n> for one mode with polarization along the projected
/// moment; mu_elem = (e . mu)(l', l).
inline Complex vertex_absorb(double gf, long n_before, Complex mu_elem) {
    return Complex(0.0, -1.0) * gf * std::sqrt(static_cast<double>(n_before)) * mu_elem;
}

/// <l', n+1| -mu.E |l, n>.
inline Complex vertex_emit(double gf, long n_before, Complex mu_elem) {
    return Complex(0.0, 1.0) * gf * std::sqrt(static_cast<double>(n_before) + 1.0) *
           mu_elem;
}

inline void check_off_resonance(const RealVector& energies, int g,
                                double photon_energy, const Tolerances& tol) {
    const double guard = resonance_guard_for(tol, photon_energy);
    for (Eigen::Index r = 0; r < energies.size(); ++r) {
        const double erg = energies(r) - energies(g);
        if (std::abs(photon_energy - erg) < guard ||
            std::abs(photon_energy + erg) < guard) {
            throw NearResonance(
                "photon energy " + format_quantity(photon_energy) +
                " J is within the resonance guard of transition energy " +
                format_quantity(erg) + " J (level " + std::to_string(r) + ")");
        }
    }
}

inline void warn_if_no_photons(const FieldConfig& f, WarningLog* warnings) {
    if (f.n_photons == 0) {
        warn(warnings, WarningCode::no_photons,
             "mode 1 is empty; the scattering amplitude vanishes identically");
    }
}

/// The two pieces of the single-molecule dispersion sum, separated by their
/// parity in omega: even_part = sum_r E_rg Re{mu1_gr mu2_rg} / D_r,
/// odd_part = sum_r -i hbar omega Im{mu1_gr mu2_rg} / D_r, with
/// D_r = (hbar omega)^2 - E_rg^2.
inline std::pair<Complex, Complex> dispersion_sum_parts(const RealVector& energies,
                                                        const ComplexMatrix& mu1,
                                                        const ComplexMatrix& mu2,
                                                        int g, double photon_energy) {
    Complex even_part = 0.0, odd_part = 0.0;
    for (Eigen::Index r = 0; r < energies.size(); ++r) {
        const double erg = energies(r) - energies(g);
        const Complex prod = mu1(g, r) * mu2(r, g);
        const double denom = photon_energy * photon_energy - erg * erg;
        even_part += erg * prod.real() / denom;
        odd_part += Complex(0.0, -1.0) * photon_energy * prod.imag() / denom;
    }
    return {even_part, odd_part};
}

}  // namespace detail

/// Second-order amplitude evaluated diagram by diagram: for each molecular
/// intermediate level the absorption-first and emission-first time orderings
/// are accumulated with explicit vertex factors and energy denominators.
inline TransitionAmplitude amplitude_second_order_diagrams(
    const PerturbedModel& pm, const FieldConfig& f, const Tolerances& tol = {},
    WarningLog* warnings = nullptr) {
    validate(f);
    detail::warn_if_no_photons(f, warnings);
    const double homega = f.photon_energy();
    const int g = pm.ground_index();
    detail::check_off_resonance(pm.energies, g, homega, tol);

    const ComplexMatrix mu1 = pm.mu_corr.project(f.e1);
    const ComplexMatrix mu2 = pm.mu_corr.project(f.e2);
    const double gf = detail::field_coupling(f);

    Complex m_total = 0.0;
    for (int r = 0; r < pm.size(); ++r) {
        const double erg = pm.energies(r) - pm.energies(g);
        // (a) photon absorbed from mode 1, then one emitted into mode 2;
        // intermediate |E_r; (n-1)(1)> at E_a - E_I = hbar omega - E_rg.
        const Complex absorb_first = detail::vertex_emit(gf, 0, mu2(g, r)) *
                                     detail::vertex_absorb(gf, f.n_photons, mu1(r, g));
        m_total += absorb_first / (homega - erg);
        // (b) emission into mode 2 first; intermediate |E_r; n(1); 1(2)>
        // at E_a - E_I = -(hbar omega + E_rg).
        const Complex emit_first = detail::vertex_absorb(gf, f.n_photons, mu1(g, r)) *
                                   detail::vertex_emit(gf, 0, mu2(r, g));
        m_total += emit_first / (-(homega + erg));
    }
    if (!std::isfinite(m_total.real()) || !std::isfinite(m_total.imag())) {
        throw ConvergenceFailure("non-finite transition amplitude");
    }
    return {m_total, AmplitudeOrder::second_order_diagrams, f};
}

/// Second-order amplitude in rearranged closed form:
/// M = (mu0 c^2 hbar omega sqrt(n) / V) sum_r
///     [E_rg Re{mu1_gr mu2_rg} - i hbar omega Im{mu1_gr mu2_rg}]
///     / ((hbar omega)^2 - E_rg^2).
inline TransitionAmplitude amplitude_second_order_closed(
    const PerturbedModel& pm, const FieldConfig& f, const Tolerances& tol = {},
    WarningLog* warnings = nullptr) {
    validate(f);
    detail::warn_if_no_photons(f, warnings);
    const double homega = f.photon_energy();
    const int g = pm.ground_index();
    detail::check_off_resonance(pm.energies, g, homega, tol);

    const ComplexMatrix mu1 = pm.mu_corr.project(f.e1);
    const ComplexMatrix mu2 = pm.mu_corr.project(f.e2);
    const auto [even_part, odd_part] =
        detail::dispersion_sum_parts(pm.energies, mu1, mu2, g, homega);

    const double prefactor = kMu0 * kSpeedOfLight * kSpeedOfLight * homega *
                             std::sqrt(static_cast<double>(f.n_photons)) / f.volume;
    const Complex value = prefactor * (even_part + odd_part);
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
        throw ConvergenceFailure("non-finite transition amplitude");
    }
    return {value, AmplitudeOrder::second_order_closed, f};
}

/// Third-order amplitude on the unperturbed molecule: two electric-dipole
/// vertices (mode-1 absorption, mode-2 emission) and one photon-conserving
/// static vertex -m.B, summed over all six time orderings and over both
/// molecular intermediate levels. Intermediate states coinciding with |a> or
/// |b> are excluded. Exactly linear in B.
inline TransitionAmplitude amplitude_third_order(const MolecularModel& model,
                                                 const Vec3& B, const FieldConfig& f,
                                                 const Tolerances& tol = {},
                                                 WarningLog* warnings = nullptr) {
    validate(f);
    detail::warn_if_no_photons(f, warnings);
    if (!detect_degeneracy(model, tol).empty()) {
        throw DegenerateSpectrum(
            "third-order amplitude requires a non-degenerate spectrum");
    }
    warn_near_degenerate(model, tol, warnings);
    const double homega = f.photon_energy();
    const int g = model.ground_index;
    const RealVector e0 = model.energies();
    detail::check_off_resonance(e0, g, homega, tol);

    const ComplexMatrix V = zeeman_matrix(model, B);
    const ComplexMatrix mu1 = model.mu.project(f.e1);
    const ComplexMatrix mu2 = model.mu.project(f.e2);
    const double gf = detail::field_coupling(f);
    const double photon_factor =
        gf * gf * std::sqrt(static_cast<double>(f.n_photons));
    const int n = model.size();

    Complex m_total = 0.0;
    for (int p = 0; p < n; ++p) {
        const double epg = e0(p) - e0(g);
        for (int q = 0; q < n; ++q) {
            const double eqg = e0(q) - e0(g);
            if (p != g) {
                // static vertex first, then absorb, then emit
                m_total += photon_factor * mu2(g, q) * mu1(q, p) * V(p, g) /
                           (epg * (eqg - homega));
                // static vertex first, then emit, then absorb
                m_total += photon_factor * mu1(g, q) * mu2(q, p) * V(p, g) /
                           (epg * (eqg + homega));
            }
            // absorb, static vertex, emit
            m_total += photon_factor * mu2(g, q) * V(q, p) * mu1(p, g) /
                       ((epg - homega) * (eqg - homega));
            // emit, static vertex, absorb
            m_total += photon_factor * mu1(g, q) * V(q, p) * mu2(p, g) /
                       ((epg + homega) * (eqg + homega));
            if (q != g) {
                // absorb, emit, static vertex
                m_total += photon_factor * V(g, q) * mu2(q, p) * mu1(p, g) /
                           ((epg - homega) * eqg);
                // emit, absorb, static vertex
                m_total += photon_factor * V(g, q) * mu1(q, p) * mu2(p, g) /
                           ((epg + homega) * eqg);
            }
        }
    }
    if (!std::isfinite(m_total.real()) || !std::isfinite(m_total.imag())) {
        throw ConvergenceFailure("non-finite transition amplitude");
    }
    return {m_total, AmplitudeOrder::third_order, f};
}

/// Gas rotation angle from a transition amplitude: theta = N |M| L / (hbar c
/// sqrt(n)). Yields the magnitude; the sign convention comes from the B-term
/// formula (see via_amplitude_angle).
inline RotationResult angle_from_amplitude(const TransitionAmplitude& amplitude,
                                           const FieldConfig& f,
                                           const ExperimentConfig& x) {
    validate(f);
    validate(x);
    if (f.n_photons < 1) {
        throw EmptyMode1("rotation angle requires at least one photon in mode 1");
    }
    const double theta = static_cast<double>(x.n_molecules_N) *
                         std::abs(amplitude.value) * x.length_L /
                         (kHbar * kSpeedOfLight *
                          std::sqrt(static_cast<double>(f.n_photons)));
    return {theta, amplitude, AngleMethod::via_amplitude};
}

/// Faraday B-term rotation angle from unperturbed molecular data:
///
///   theta = -(mu0 c L eta (B.k) / (hbar |k|)) sum_r [omega^2 /
///           (omega_rg^2 - omega^2)] Im{ sum_{p!=g} m3_pg / (hbar omega_pg)
///           (mu1_gr mu2_rp - mu2_gr mu1_rp) + sum_{s!=r} m3_rs /
///           (hbar omega_sr) (mu1_gr mu2_sg - mu2_gr mu1_sg) }
///
/// with components 1, 2, 3 along e1, e2 and k-hat. Exactly linear in B.
inline RotationResult faraday_b_term_angle(const MolecularModel& model,
                                           const FieldConfig& f,
                                           const ExperimentConfig& x,
                                           const Tolerances& tol = {},
                                           WarningLog* warnings = nullptr) {
    validate(f);
    validate(x);
    if (!detect_degeneracy(model, tol).empty()) {
        throw DegenerateSpectrum(
            "the B-term formula requires a non-degenerate spectrum; degenerate "
            "molecules need the A/C-term treatment, which is unsupported");
    }
    warn_near_degenerate(model, tol, warnings);
    const double homega = f.photon_energy();
    const int g = model.ground_index;
    const RealVector e0 = model.energies();
    detail::check_off_resonance(e0, g, homega, tol);

    const ComplexMatrix mu1 = model.mu.project(f.e1);
    const ComplexMatrix mu2 = model.mu.project(f.e2);
    const ComplexMatrix m3 = model.m.project(f.k_hat());
    const double omega = f.omega();
    const int n = model.size();

    double dispersion_sum = 0.0;
    for (int r = 0; r < n; ++r) {
        const double wrg = (e0(r) - e0(g)) / kHbar;
        const double dispersion = omega * omega / (wrg * wrg - omega * omega);
        Complex inner = 0.0;
        for (int p = 0; p < n; ++p) {
            if (p == g) continue;
            inner += m3(p, g) / (e0(p) - e0(g)) *
                     (mu1(g, r) * mu2(r, p) - mu2(g, r) * mu1(r, p));
        }
        for (int s = 0; s < n; ++s) {
            if (s == r) continue;
            inner += m3(r, s) / (e0(s) - e0(r)) *
                     (mu1(g, r) * mu2(s, g) - mu2(g, r) * mu1(s, g));
        }
        dispersion_sum += dispersion * inner.imag();
    }

    const double theta = -kMu0 * kSpeedOfLight * x.length_L * x.density_eta *
                         x.B.dot(f.k) / (kHbar * f.k.norm()) * dispersion_sum;
    return {theta, std::nullopt, AngleMethod::b_term_formula};
}

/// Rotation angle through the perturbed-state pipeline, signed with the
/// B-term convention: magnitude from angle_from_amplitude on the corrected
/// model, sign from the B-term formula at the same field.
inline RotationResult via_amplitude_angle(
    const MolecularModel& model, const FieldConfig& f, const ExperimentConfig& x,
    const Tolerances& tol = {},
    AmplitudeOrder order = AmplitudeOrder::second_order_closed,
    WarningLog* warnings = nullptr) {
    const PerturbedModel pm = first_order_corrections(model, x.B, tol, warnings);
    const TransitionAmplitude amplitude =
        order == AmplitudeOrder::second_order_diagrams
            ? amplitude_second_order_diagrams(pm, f, tol, warnings)
            : amplitude_second_order_closed(pm, f, tol, warnings);
    RotationResult result = angle_from_amplitude(amplitude, f, x);
    const double signed_reference = faraday_b_term_angle(model, f, x, tol).theta;
    if (signed_reference < 0.0) result.theta = -result.theta;
    return result;
}

}  // namespace faraday
