#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cqed/model.hpp"
#include "cqed/spectral_density.hpp"

namespace cqed {

struct PolePair {
    cplx s_plus;   ///< pole with the larger imaginary part
    cplx s_minus;
    bool converged = false;
    double residual = 0.0;  ///< max |D| at the two poles

    double decay_rate_plus() const noexcept { return -2.0 * s_plus.real(); }
    double decay_rate_minus() const noexcept { return -2.0 * s_minus.real(); }
    double rabi_splitting() const noexcept { return s_plus.imag() - s_minus.imag(); }
};

struct AnalysisResult {
    double gamma = 0.0;    ///< intensity decay rate (rad/ns)
    double omega_r = 0.0;  ///< Rabi splitting (rad/ns)
    double t_r = 0.0;      ///< Rabi period (ns)
    std::optional<double> enhancement;
};

/// D(s) = s + kappa + i(omega_c - omega_p) + Omega^2 int rho(w) / (s + gamma + i(w - omega_p)) dw.
/// For Re(s + gamma) < 0 the integral is continued analytically across the spin
/// band by adding 2 pi rho(omega_p + i(s + gamma)). Throws QuadratureFailure.
cplx dispersion_value(cplx s, const SystemParams& params, const SpectralDensity& rho);

/// Newton iteration on D(s) = 0 from s0 = -i(omega_s - omega_p) +- i Omega - (kappa + pi Omega^2 rho(omega_s +- Omega))/2.
/// Throws NotSplit below Omega = HWHM/2 or when both guesses reach the same root,
/// NoConvergence after 50 iterations.
PolePair find_poles(const SystemParams& params, const SpectralDensity& rho);

/// kappa + pi Omega^2 rho(omega_s + Omega), intensity decay rate for Omega -> infinity.
double gamma_asymptotic(const SystemParams& params, const SpectralDensity& rho);

/// 2 [kappa + pi Omega^2 rho(omega_s)].
double gamma_markov(const SystemParams& params, const SpectralDensity& rho);

/// Roots of s^2 + (delta + kappa) s + kappa delta + Omega^2 = 0:
/// [-2(delta + kappa) +- sqrt((2 delta - 2 kappa)^2 - 16 Omega^2)] / 4, first with Im >= 0.
std::pair<cplx, cplx> gamma_lorentzian(double delta, double kappa, double Omega);

struct Peak {
    double t = 0.0;
    double value = 0.0;
};

/// Local maxima of `values` in [t_from, t_to] whose prominence is at least
/// rel_prominence times their height, refined by a parabola through three samples.
std::vector<Peak> find_maxima(const TimeGrid& grid, const std::vector<double>& values, double t_from, double t_to,
                              double rel_prominence);

/// Intensity decay rate after t_fit_start: least squares on ln of the |A|^2 maxima
/// above 1e-6 of the post-switch-off maximum. With fewer than three such maxima the
/// fit runs over ln of the upper envelope max_{t' >= t} |A(t')|^2 down to the same
/// floor (identical to ln |A|^2 for a monotone decay). Throws InsufficientDecay.
double extract_decay_rate(const CavityTrajectory& traj, double t_fit_start);

/// {omega_r, T_R}: T_R is the mean spacing of |A|^2 maxima in [t_from, t_to], omega_r = 2 pi / T_R.
/// Throws NoOscillation with fewer than two maxima.
std::pair<double, double> extract_rabi(const CavityTrajectory& traj, double t_from = -1e300, double t_to = 1e300,
                                       double rel_prominence = 0.1);

struct EnhancementWindow {
    double pulsed_from = -1e300;  ///< maxima of the pulsed trace are taken in [pulsed_from, pulsed_to]
    double pulsed_to = 1e300;
    double cw_time = 1e300;       ///< steady state sample of the CW trace (clamped to its end)
};

/// Mean of the last three |A|^2 maxima of `pulsed` divided by |A|^2 of `cw` at
/// cw_time. Throws NotSteady unless those maxima agree within 5% and the CW
/// trace changed by less than 5% over the preceding 100 ns.
double enhancement_factor(const CavityTrajectory& pulsed, const CavityTrajectory& cw,
                          const EnhancementWindow& window = {});

}  // namespace cqed
