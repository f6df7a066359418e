#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "faraday/constants.hpp"
#include "faraday/errors.hpp"

namespace faraday {

/// Time series of the two-state amplitudes c_a, c_b and their probabilities,
/// for the basis |a> = |n(1)>, |b> = |(n-1)(1); 1(2)>.
struct TwoStateTrajectory {
    std::vector<double> times;
    std::vector<std::complex<double>> c_a, c_b;
    std::vector<double> p_a, p_b;

    std::size_t size() const { return times.size(); }
};

namespace detail {

inline void check_time_grid(const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw ConfigError("time grid must not be empty");
    double prev = -1.0;
    for (double t : t_grid) {
        if (!(t >= 0.0)) throw ConfigError("time grid must be nonnegative");
        if (t < prev) throw ConfigError("time grid must be ascending");
        prev = t;
    }
}

}  // namespace detail

/// Closed-form Rabi evolution of H_eff = [[E0, M*], [M, E0]] from c_a(0) = 1:
/// |c_a|^2 = cos^2(|M| t / hbar), |c_b|^2 = sin^2(|M| t / hbar). The global
/// phase is e^{-i E0 t / hbar}; c_b additionally carries -i e^{i arg M}.
inline TwoStateTrajectory evolve_analytic(std::complex<double> coupling_M, double E0,
                                          const std::vector<double>& t_grid) {
    detail::check_time_grid(t_grid);
    TwoStateTrajectory traj;
    traj.times = t_grid;
    const double rabi = std::abs(coupling_M) / kHbar;
    const std::complex<double> phase_b =
        std::complex<double>(0.0, -1.0) *
        (std::abs(coupling_M) > 0.0 ? coupling_M / std::abs(coupling_M)
                                    : std::complex<double>(1.0, 0.0));
    for (double t : t_grid) {
        const double cos_amp = std::cos(rabi * t);
        const double sin_amp = std::sin(rabi * t);
        const std::complex<double> global = std::polar(1.0, -E0 * t / kHbar);
        traj.c_a.push_back(global * cos_amp);
        traj.c_b.push_back(global * phase_b * sin_amp);
        traj.p_a.push_back(cos_amp * cos_amp);
        traj.p_b.push_back(sin_amp * sin_amp);
    }
    return traj;
}

/// Fixed-step RK4 integration of i hbar d/dt (c_a, c_b) = H_eff (c_a, c_b).
/// The step never exceeds dt_max nor (hbar/|M|)/100; dt_max must still keep
/// the fast phase E0 within the RK4 stability region, otherwise StepTooLarge.
inline TwoStateTrajectory evolve_numeric(std::complex<double> coupling_M, double E0,
                                         const std::vector<double>& t_grid,
                                         double dt_max) {
    detail::check_time_grid(t_grid);
    if (!(dt_max > 0.0)) throw ConfigError("dt_max must be positive");

    const double m_abs = std::abs(coupling_M);
    double step = dt_max;
    if (m_abs > 0.0) step = std::min(step, 0.01 * kHbar / m_abs);

    // Stability of classical RK4 on the purely imaginary spectrum of H_eff:
    // |step * lambda| must stay below ~2.8; eigenvalues are (E0 +- |M|)/hbar.
    const double spectral_radius = (std::abs(E0) + m_abs) / kHbar;
    if (step * spectral_radius > 2.0) {
        throw StepTooLarge("dt_max does not resolve the fast phase: step * (|E0| + "
                           "|M|) / hbar = " +
                           detail::format_quantity(step * spectral_radius) +
                           " exceeds 2");
    }

    using State = std::array<std::complex<double>, 2>;
    const std::complex<double> h10 = coupling_M;          // H_eff(2,1)
    const std::complex<double> h01 = std::conj(coupling_M);
    auto rhs = [&](const State& s) -> State {
        const std::complex<double> factor(0.0, -1.0 / kHbar);
        return {factor * (E0 * s[0] + h01 * s[1]), factor * (h10 * s[0] + E0 * s[1])};
    };
    auto advance = [&](State s, double h) -> State {
        const State k1 = rhs(s);
        const State s2{s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]};
        const State k2 = rhs(s2);
        const State s3{s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]};
        const State k3 = rhs(s3);
        const State s4{s[0] + h * k3[0], s[1] + h * k3[1]};
        const State k4 = rhs(s4);
        return {s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
    };

    TwoStateTrajectory traj;
    traj.times = t_grid;
    State state{{1.0, 0.0}};
    double t_now = 0.0;
    for (double t_target : t_grid) {
        const double span = t_target - t_now;
        if (span > 0.0) {
            const auto n_steps = static_cast<long>(std::ceil(span / step - 1e-12));
            const double h = span / static_cast<double>(std::max<long>(n_steps, 1));
            for (long i = 0; i < std::max<long>(n_steps, 1); ++i) {
                state = advance(state, h);
            }
            t_now = t_target;
        }
        traj.c_a.push_back(state[0]);
        traj.c_b.push_back(state[1]);
        traj.p_a.push_back(std::norm(state[0]));
        traj.p_b.push_back(std::norm(state[1]));
    }

    const double norm_end = traj.p_a.back() + traj.p_b.back();
    if (std::abs(norm_end - 1.0) > 1e-10) {
        throw ConvergenceFailure("norm drift " +
                                 detail::format_quantity(norm_end - 1.0) +
                                 " exceeds 1e-10; reduce dt_max");
    }
    return traj;
}

/// Rotation angle from mode occupations: theta = atan(sqrt(<n2>/<n1>)).
inline double angle_from_occupations(double n1_expect, double n2_expect) {
    if (!(n1_expect > 0.0)) {
        throw EmptyMode1("mode-1 occupation must be positive to define an angle");
    }
    if (n2_expect < 0.0) throw ConfigError("mode-2 occupation must be nonnegative");
    return std::atan(std::sqrt(n2_expect / n1_expect));
}

inline void write_trajectory_csv(const TwoStateTrajectory& traj, std::ostream& out) {
    out << "time_s,p_a,p_b,re_ca,im_ca,re_cb,im_cb\n";
    char buf[64];
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
        out << buf;
    };
    for (std::size_t i = 0; i < traj.size(); ++i) {
        put(traj.times[i], ',');
        put(traj.p_a[i], ',');
        put(traj.p_b[i], ',');
        put(traj.c_a[i].real(), ',');
        put(traj.c_a[i].imag(), ',');
        put(traj.c_b[i].real(), ',');
        put(traj.c_b[i].imag(), '\n');
    }
}

inline void write_trajectory_csv(const TwoStateTrajectory& traj,
                                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    write_trajectory_csv(traj, out);
}

}  // namespace faraday
