#pragma once

#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "cqed/drive.hpp"
#include "cqed/model.hpp"
#include "cqed/spectral_density.hpp"

namespace cqed {

struct QuadratureOptions {
    double eps = 1e-10;        ///< support window: rho < eps * peak outside
    double cap_hwhm = 400.0;   ///< window half width never exceeds cap_hwhm * HWHM
    double tolerance = 1e-9;   ///< doubling stops when max |dK| < tolerance * max |K|
    int max_doublings = 12;
};

/// Frequency quadrature nodes; weight[j] = w_j * rho(omega[j]).
struct FrequencyNodes {
    std::vector<double> omega;
    std::vector<double> weight;

    std::size_t size() const noexcept { return omega.size(); }
};

/// Frequency nodes for `rho` on its (capped) support window with `panels`
/// Gauss-Legendre panels.
FrequencyNodes frequency_nodes(const SpectralDensity& rho, std::size_t panels, const QuadratureOptions& options = {});

/// Kernel in the frame rotating at omega_c with unit coupling:
///   J(u) = int rho(w) [e^{-kappa u} - e^{-(gamma + i(w - omega_c)) u}] / z(w) dw,
///   z(w) = (kappa - gamma) - i(w - omega_c).
/// Independent of omega_p and Omega, so scans over either reuse it.
struct ResonantKernel {
    FrequencyNodes nodes;
    double dt = 0.0;
    double kappa = 0.0;
    double gamma = 0.0;
    double omega_c = 0.0;
    std::vector<cplx> values;  ///< J(m dt), m = 0..M
    std::size_t panels = 0;

    double horizon() const noexcept { return dt * static_cast<double>(values.empty() ? 0 : values.size() - 1); }
};

/// Builds J on the dt lattice up to `horizon`. The panel count is doubled until
/// the strided lags of two successive rules agree to options.tolerance; the
/// coarser of the pair is kept. Throws QuadratureFailure.
ResonantKernel resonant_kernel(const SystemParams& params, const SpectralDensity& rho, double dt, double horizon,
                               const QuadratureOptions& options = {});

struct KernelTable {
    double dt = 0.0;
    std::vector<cplx> values;  ///< K(m dt), values[0] = 0
    std::uint64_t params_hash = 0;
};

/// K(u) = Omega^2 e^{-i(omega_c - omega_p) u} J(u).
KernelTable kernel_table(const SystemParams& params, const SpectralDensity& rho, double dt, double horizon,
                         const QuadratureOptions& options = {});
KernelTable kernel_table(const SystemParams& params, const ResonantKernel& base);

/// Stable identifier of (params, rho, dt).
std::uint64_t params_hash(const SystemParams& params, const SpectralDensity& rho, double dt);

/// F(t) = int_{t_begin}^t eta(tau) e^{-mu (t - tau)} dtau, mu = kappa + i(omega_c - omega_p),
/// evaluated segment by segment in closed form.
cplx forcing(const SystemParams& params, const DriveProtocol& protocol, double t);

struct MemoryState {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<cplx> i_values;  ///< I_n(omega_j) = int_0^{T_n} e^{-lambda_j (T_n - tau)} A(tau) dtau
    cplx a_last{};
};

MemoryState initial_memory(const FrequencyNodes& nodes);

/// I_{n+1} = e^{-lambda (T_{n+1}-T_n)} I_n + trapezoid of e^{-lambda(T_{n+1}-tau)} A(tau)
/// over the segment, lambda = gamma + i(omega - omega_p). `piece` holds A on the
/// segment grid including both end points.
MemoryState advance_memory(const MemoryState& state, std::span<const cplx> piece, double dt,
                           const SystemParams& params);

/// Cavity amplitude on `grid` from A(t_start) = 0 with all spins in the ground state.
/// Throws StepTooLarge if Omega*dt >= 0.05, NonFinite on divergence,
/// InvalidGrid if a drive boundary misses the grid, OutOfRange if the protocol
/// does not cover the grid.
CavityTrajectory solve(const SystemParams& params, const SpectralDensity& rho, const DriveProtocol& protocol,
                       const TimeGrid& grid, const QuadratureOptions& options = {});
CavityTrajectory solve(const SystemParams& params, const ResonantKernel& base, const DriveProtocol& protocol,
                       const TimeGrid& grid);

/// Thread-safe store of resonant kernels keyed by everything J depends on.
class KernelCache {
public:
    explicit KernelCache(QuadratureOptions options = {}) : options_(options) {}

    std::shared_ptr<const ResonantKernel> get(const SystemParams& params, const SpectralDensity& rho, double dt,
                                              double horizon);
    std::size_t size() const;

private:
    using Key = std::tuple<std::uint64_t, double>;
    QuadratureOptions options_;
    mutable std::mutex mutex_;
    std::map<Key, std::shared_future<std::shared_ptr<const ResonantKernel>>> pending_;
};

}  // namespace cqed
