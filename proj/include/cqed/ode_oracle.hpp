#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cqed/drive.hpp"
#include "cqed/model.hpp"
#include "cqed/spectral_density.hpp"

namespace cqed {

struct DiscreteEnsemble {
    std::vector<double> omegas;     ///< spin frequencies (rad/ns)
    std::vector<double> couplings;  ///< g_k (rad/ns), sum g_k^2 = Omega^2
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return omegas.size(); }
};

struct EnsembleState {
    cplx a{};
    std::vector<cplx> b;
};

/// Equal couplings Omega/sqrt(n). Frequencies are i.i.d. inverse-CDF draws,
/// or the (k - 1/2)/n quantiles when `stratified` is set (seed unused).
DiscreteEnsemble build_ensemble(const SpectralDensity& rho, std::size_t n, double Omega, std::uint64_t seed,
                                bool stratified = false);

/// Kolmogorov-Smirnov distance between the ensemble frequencies and cdf(rho).
double ks_distance(const DiscreteEnsemble& ensemble, const SpectralDensity& rho);

/// Classic RK4 for
///   A'   = -[kappa + i(omega_c - omega_p)] A + sum_k g_k B_k - eta(t)
///   B_k' = -[gamma + i(omega_k - omega_p)] B_k - g_k A
/// with `substeps` RK4 steps per grid interval; steps are split at drive
/// boundaries. Throws StepTooLarge when a step exceeds the RK4 stability
/// margin and NonFinite on divergence.
std::pair<CavityTrajectory, EnsembleState> integrate(const DiscreteEnsemble& ensemble, const SystemParams& params,
                                                     const DriveProtocol& protocol, const TimeGrid& grid,
                                                     int substeps = 1, const EnsembleState& initial = {});

/// |A|^2 + sum_k |B_k|^2.
double total_excitation(const EnsembleState& state);

/// Cavity plus one collective spin mode, exact for a Lorentzian density of HWHM delta:
///   A' = -[kappa + i(omega_c - omega_p)] A + Omega B - eta
///   B' = -[gamma + delta + i(omega_s - omega_p)] B - Omega A
CavityTrajectory lorentzian_reduction(const SystemParams& params, double delta, const DriveProtocol& protocol,
                                      const TimeGrid& grid, int substeps = 10);

}  // namespace cqed
