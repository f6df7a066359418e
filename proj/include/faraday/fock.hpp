#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <tuple>

#include "faraday/amplitude.hpp"
#include "faraday/dynamics.hpp"
#include "faraday/model.hpp"
#include "faraday/perturbation.hpp"

namespace faraday {

/// Product basis |level; n1(1); n2(2)> with occupation cutoffs, flattened as
/// index = (level * (n1_max+1) + n1) * (n2_max+1) + n2.
struct FockBasis {
    int levels;
    int n1_max;
    int n2_max;

    int dim() const { return levels * (n1_max + 1) * (n2_max + 1); }

    int index(int level, int n1, int n2) const {
        if (level < 0 || level >= levels || n1 < 0 || n1 > n1_max || n2 < 0 ||
            n2 > n2_max) {
            throw DimensionError("basis state (" + std::to_string(level) + ", " +
                                 std::to_string(n1) + ", " + std::to_string(n2) +
                                 ") outside cutoffs");
        }
        return (level * (n1_max + 1) + n1) * (n2_max + 1) + n2;
    }

    std::tuple<int, int, int> unpack(int idx) const {
        if (idx < 0 || idx >= dim()) throw DimensionError("flat index out of range");
        const int n2 = idx % (n2_max + 1);
        const int rest = idx / (n2_max + 1);
        const int n1 = rest % (n1_max + 1);
        return {rest / (n1_max + 1), n1, n2};
    }
};

/// A dense Hermitian Hamiltonian in a flattened Fock basis, J.
struct DenseHermitian {
    ComplexMatrix matrix;

    Eigen::Index dim() const { return matrix.rows(); }
};

struct EigenSystem {
    RealVector eigenvalues;     // ascending
    ComplexMatrix eigenvectors; // columns, orthonormal
};

namespace detail {

/// Deterministic eigenvector convention: phase chosen so the largest-magnitude
/// component is real positive; degenerate columns ordered lexicographically.
inline void canonicalize_eigenvectors(EigenSystem& sys) {
    const auto n = sys.eigenvectors.cols();
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < sys.eigenvectors.rows(); ++r) {
            const double mag = std::abs(sys.eigenvectors(r, c));
            if (mag > best + 1e-15) {
                best = mag;
                imax = r;
            }
        }
        const Complex pivot = sys.eigenvectors(imax, c);
        if (std::abs(pivot) > 0.0) {
            sys.eigenvectors.col(c) *= std::conj(pivot) / std::abs(pivot);
        }
    }
    for (Eigen::Index c = 0; c + 1 < n; ++c) {
        if (sys.eigenvalues(c + 1) != sys.eigenvalues(c)) continue;
        // exact ties: order by lexicographic comparison of (re, im) entries
        for (Eigen::Index r = 0; r < sys.eigenvectors.rows(); ++r) {
            const Complex a = sys.eigenvectors(r, c), b = sys.eigenvectors(r, c + 1);
            if (a.real() != b.real() || a.imag() != b.imag()) {
                if (std::make_pair(b.real(), b.imag()) <
                    std::make_pair(a.real(), a.imag())) {
                    sys.eigenvectors.col(c).swap(sys.eigenvectors.col(c + 1));
                }
                break;
            }
        }
    }
}

inline EigenSystem hermitian_eigensystem(const ComplexMatrix& h) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceFailure("Hermitian eigensolver failed to converge");
    }
    EigenSystem sys{solver.eigenvalues(), solver.eigenvectors()};
    canonicalize_eigenvectors(sys);
    return sys;
}

}  // namespace detail

/// Exact eigensystem of H_mol + V_Zeeman(B). Eigenvalues ascending.
inline EigenSystem exact_diagonalize_molecule(const MolecularModel& model,
                                              const Vec3& B) {
    ComplexMatrix h = model.energies().asDiagonal();
    h += zeeman_matrix(model, B);
    return detail::hermitian_eigensystem(h);
}

/// Full Hamiltonian of molecule plus the two retained forward modes:
/// H = H_mol + V_Zeeman + sum_modes hbar omega (n + 1/2) - mu . E(0),
/// with the molecule at the origin and no rotating-wave approximation.
inline DenseHermitian build_total_hamiltonian(const MolecularModel& model,
                                              const FieldConfig& f,
                                              const FockBasis& basis,
                                              const Vec3& B) {
    validate(f);
    if (basis.levels != model.size()) {
        throw DimensionError("basis level count " + std::to_string(basis.levels) +
                             " does not match model size " +
                             std::to_string(model.size()));
    }
    const double homega = f.photon_energy();
    const double gf = detail::field_coupling(f);
    const ComplexMatrix vz = zeeman_matrix(model, B);
    const ComplexMatrix mu1 = model.mu.project(f.e1);
    const ComplexMatrix mu2 = model.mu.project(f.e2);

    ComplexMatrix h = ComplexMatrix::Zero(basis.dim(), basis.dim());
    for (int l = 0; l < basis.levels; ++l) {
        for (int n1 = 0; n1 <= basis.n1_max; ++n1) {
            for (int n2 = 0; n2 <= basis.n2_max; ++n2) {
                const int col = basis.index(l, n1, n2);
                h(col, col) += model.levels[l].energy + homega * (n1 + 0.5) +
                               homega * (n2 + 0.5);
                for (int lp = 0; lp < basis.levels; ++lp) {
                    if (vz(lp, l) != 0.0) h(basis.index(lp, n1, n2), col) += vz(lp, l);
                    // -mu.E with E(0) = i gf [e1 (a1 - a1+) + e2 (a2 - a2+)]:
                    // annihilation gives -i gf sqrt(n), creation +i gf sqrt(n+1).
                    const Complex i_unit(0.0, 1.0);
                    if (n1 > 0) {
                        h(basis.index(lp, n1 - 1, n2), col) +=
                            -i_unit * gf * std::sqrt(double(n1)) * mu1(lp, l);
                    }
                    if (n1 < basis.n1_max) {
                        h(basis.index(lp, n1 + 1, n2), col) +=
                            i_unit * gf * std::sqrt(double(n1 + 1)) * mu1(lp, l);
                    }
                    if (n2 > 0) {
                        h(basis.index(lp, n1, n2 - 1), col) +=
                            -i_unit * gf * std::sqrt(double(n2)) * mu2(lp, l);
                    }
                    if (n2 < basis.n2_max) {
                        h(basis.index(lp, n1, n2 + 1), col) +=
                            i_unit * gf * std::sqrt(double(n2 + 1)) * mu2(lp, l);
                    }
                }
            }
        }
    }
    return {std::move(h)};
}

/// Propagator psi(t) = exp(-i H t / hbar) psi0 through the eigendecomposition
/// of H; reusable across evolution times.
class ExactPropagator {
  public:
    explicit ExactPropagator(const DenseHermitian& h)
        : sys_(detail::hermitian_eigensystem(h.matrix)) {}

    ComplexVector evolve(const ComplexVector& psi0, double t) const {
        if (psi0.size() != sys_.eigenvectors.rows()) {
            throw DimensionError("state vector size does not match Hamiltonian");
        }
        if (std::abs(psi0.norm() - 1.0) > 1e-12) {
            throw ConfigError("initial state must be normalized to 1e-12");
        }
        ComplexVector coeffs = sys_.eigenvectors.adjoint() * psi0;
        for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
            coeffs(i) *= std::polar(1.0, -sys_.eigenvalues(i) * t / kHbar);
        }
        return sys_.eigenvectors * coeffs;
    }

    const EigenSystem& eigensystem() const { return sys_; }

  private:
    EigenSystem sys_;
};

inline ComplexVector evolve_exact(const DenseHermitian& h, const ComplexVector& psi0,
                                  double t) {
    return ExactPropagator(h).evolve(psi0, t);
}

/// <n_mode> over the basis; mode is 1 or 2.
inline double expectation_number(const ComplexVector& psi, const FockBasis& basis,
                                 int mode) {
    if (mode != 1 && mode != 2) throw ConfigError("mode must be 1 or 2");
    if (psi.size() != basis.dim()) {
        throw DimensionError("state vector size does not match basis");
    }
    double total = 0.0;
    for (int idx = 0; idx < basis.dim(); ++idx) {
        const auto [l, n1, n2] = basis.unpack(idx);
        total += (mode == 1 ? n1 : n2) * std::norm(psi(idx));
    }
    return total;
}

/// Population outside the two-state manifold {|g; n, 0>, |g; n-1, 1>}.
inline double two_state_leakage(const ComplexVector& psi, const FockBasis& basis,
                                int ground_index, long n_photons) {
    double inside = std::norm(psi(basis.index(ground_index, int(n_photons), 0)));
    if (n_photons >= 1 && basis.n2_max >= 1) {
        inside += std::norm(psi(basis.index(ground_index, int(n_photons) - 1, 1)));
    }
    return 1.0 - inside;
}

/// Extra diagnostics captured by oracle runs.
struct OracleDiagnostics {
    double leakage = 0.0;
    double norm_drift = 0.0;
    double n1_expect = 0.0;
    double n2_expect = 0.0;
};

/// Exact single-molecule rotation angle: evolve |g; n(1); 0(2)> under the
/// full Hamiltonian for time t and apply theta = atan(sqrt(<n2>/<n1>)).
inline RotationResult oracle_rotation_angle(const MolecularModel& model,
                                            const FieldConfig& f,
                                            const ExperimentConfig& x,
                                            const FockBasis& basis, double t,
                                            OracleDiagnostics* diag = nullptr) {
    validate(f);
    validate(x);
    if (f.n_photons > basis.n1_max) {
        throw DimensionError("initial photon number exceeds n1_max cutoff");
    }
    const DenseHermitian h = build_total_hamiltonian(model, f, basis, x.B);
    ComplexVector psi0 = ComplexVector::Zero(basis.dim());
    psi0(basis.index(model.ground_index, int(f.n_photons), 0)) = 1.0;
    const ComplexVector psi = evolve_exact(h, psi0, t);

    const double n1 = expectation_number(psi, basis, 1);
    const double n2 = expectation_number(psi, basis, 2);
    if (diag) {
        diag->leakage = two_state_leakage(psi, basis, model.ground_index, f.n_photons);
        diag->norm_drift = std::abs(psi.norm() - 1.0);
        diag->n1_expect = n1;
        diag->n2_expect = n2;
    }
    return {angle_from_occupations(n1, n2), std::nullopt, AngleMethod::oracle};
}

enum class PipelineMethod {
    second_order_closed,
    second_order_diagrams,
    b_term,
};

namespace detail {

inline double signed_theta_at(const MolecularModel& model, const FieldConfig& f,
                              const ExperimentConfig& x, const Vec3& B,
                              PipelineMethod method, const Tolerances& tol) {
    ExperimentConfig at = x;
    at.B = B;
    if (method == PipelineMethod::b_term) {
        return faraday_b_term_angle(model, f, at, tol).theta;
    }
    const AmplitudeOrder order = method == PipelineMethod::second_order_diagrams
                                     ? AmplitudeOrder::second_order_diagrams
                                     : AmplitudeOrder::second_order_closed;
    return via_amplitude_angle(model, f, at, tol, order).theta;
}

}  // namespace detail

/// Central finite difference of the selected rotation pipeline with respect
/// to the field magnitude along k-hat, with one Richardson step (h, h/2).
/// Returns d theta / d|B| in rad/T at B -> 0.
inline double finite_difference_dtheta_dB(const MolecularModel& model,
                                          const FieldConfig& f,
                                          const ExperimentConfig& x, double h,
                                          PipelineMethod method,
                                          const Tolerances& tol = {}) {
    if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");
    const Vec3 khat = f.k_hat();
    auto slope = [&](double step) {
        const double plus =
            detail::signed_theta_at(model, f, x, step * khat, method, tol);
        const double minus =
            detail::signed_theta_at(model, f, x, -step * khat, method, tol);
        return (plus - minus) / (2.0 * step);
    };
    const double d_h = slope(h);
    const double d_h2 = slope(0.5 * h);
    return (4.0 * d_h2 - d_h) / 3.0;
}

}  // namespace faraday
