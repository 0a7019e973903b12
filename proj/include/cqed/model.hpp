#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace cqed {

using cplx = std::complex<double>;

// Units: time in ns, every rate and frequency is angular (rad/ns).

struct SystemParams {
    double omega_c = 0.0;  ///< cavity frequency
    double omega_s = 0.0;  ///< centre of the spin distribution
    double omega_p = 0.0;  ///< probe frequency, defines the rotating frame
    double kappa = 0.0;    ///< cavity amplitude decay rate (half width)
    double gamma = 0.0;    ///< spin amplitude decay rate
    double Omega = 0.0;    ///< collective coupling, Omega^2 = sum g_k^2

    bool operator==(const SystemParams&) const = default;
};

/// Cycle frequency in MHz to angular frequency in rad/ns.
constexpr double mhz_to_angular(double f_mhz) noexcept {
    return 2.0 * std::numbers::pi * f_mhz * 1e-3;
}

constexpr double angular_to_mhz(double w) noexcept {
    return w / (2.0 * std::numbers::pi * 1e-3);
}

/// Device parameters of the NV-ensemble experiment: 2.6899 GHz resonance,
/// cavity FWHM 2pi*0.8 MHz (kappa stores the half width), 2*Omega = 2pi*17.2 MHz.
SystemParams device_params();

/// Returns `params` unchanged or throws NegativeRate / NonPositiveFrequency.
SystemParams validate(const SystemParams& params);

struct TimeGrid {
    double t_start = 0.0;
    double t_end = 0.0;
    double dt = 0.0;

    /// floor((t_end - t_start)/dt) + 1, tolerant to representation error in the ratio.
    std::size_t size() const;
    double time(std::size_t i) const noexcept { return t_start + static_cast<double>(i) * dt; }
};

/// Throws InvalidGrid unless dt > 0 and t_end > t_start.
TimeGrid make_grid(double t_start, double t_end, double dt);

struct CavityTrajectory {
    TimeGrid grid;
    std::vector<cplx> amplitude;  ///< A(t_i) in the frame rotating at omega_p

    std::vector<double> intensity() const;  ///< |A(t_i)|^2
};

/// Throws NonFinite if any sample is NaN/Inf or the length mismatches the grid.
void check_trajectory(const CavityTrajectory& traj);

/// sqrt(sum |a-b|^2 / sum |b|^2) over the common prefix of samples.
double relative_l2(const std::vector<cplx>& a, const std::vector<cplx>& b);

}  // namespace cqed
