#include "cqed/ode_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cqed/error.hpp"

namespace cqed {
namespace {

constexpr double kStabilityMargin = 2.5;

// Linear system A' = -mu A + sum g B - eta, B' = -lambda B - g A in split storage.
class LinearSystem {
public:
    LinearSystem(cplx mu, const std::vector<cplx>& lambda, const std::vector<double>& g)
        : mu_(mu), g_(g), n_(g.size()) {
        lr_.resize(n_);
        li_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            lr_[k] = lambda[k].real();
            li_[k] = lambda[k].imag();
        }
        for (auto* v : {&k1r_, &k1i_, &k2r_, &k2i_, &k3r_, &k3i_, &k4r_, &k4i_, &tr_, &ti_}) v->resize(n_);
    }

    double rate_bound() const {
        double m = std::abs(mu_);
        double g2 = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
            m = std::max(m, std::hypot(lr_[k], li_[k]));
            g2 += g_[k] * g_[k];
        }
        return m + std::sqrt(g2);
    }

    void step(cplx& a, std::vector<double>& br, std::vector<double>& bi, double h, cplx eta) {
        const cplx k1a = deriv(a, br.data(), bi.data(), eta, k1r_.data(), k1i_.data());
        stage(br, bi, k1r_, k1i_, 0.5 * h);
        const cplx k2a = deriv(a + 0.5 * h * k1a, tr_.data(), ti_.data(), eta, k2r_.data(), k2i_.data());
        stage(br, bi, k2r_, k2i_, 0.5 * h);
        const cplx k3a = deriv(a + 0.5 * h * k2a, tr_.data(), ti_.data(), eta, k3r_.data(), k3i_.data());
        stage(br, bi, k3r_, k3i_, h);
        const cplx k4a = deriv(a + h * k3a, tr_.data(), ti_.data(), eta, k4r_.data(), k4i_.data());

        a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        const double c = h / 6.0;
#pragma omp simd
        for (std::size_t k = 0; k < n_; ++k) {
            br[k] += c * (k1r_[k] + 2.0 * k2r_[k] + 2.0 * k3r_[k] + k4r_[k]);
            bi[k] += c * (k1i_[k] + 2.0 * k2i_[k] + 2.0 * k3i_[k] + k4i_[k]);
        }
    }

private:
    cplx deriv(cplx a, const double* br, const double* bi, cplx eta, double* dr, double* di) const {
        const double* lr = lr_.data();
        const double* li = li_.data();
        const double* g = g_.data();
        double sr = 0.0;
        double si = 0.0;
#pragma omp simd reduction(+ : sr, si)
        for (std::size_t k = 0; k < n_; ++k) {
            sr += g[k] * br[k];
            si += g[k] * bi[k];
            dr[k] = -(lr[k] * br[k] - li[k] * bi[k]) - g[k] * a.real();
            di[k] = -(lr[k] * bi[k] + li[k] * br[k]) - g[k] * a.imag();
        }
        return -mu_ * a + cplx(sr, si) - eta;
    }

    void stage(const std::vector<double>& br, const std::vector<double>& bi, const std::vector<double>& kr,
               const std::vector<double>& ki, double h) {
#pragma omp simd
        for (std::size_t k = 0; k < n_; ++k) {
            tr_[k] = br[k] + h * kr[k];
            ti_[k] = bi[k] + h * ki[k];
        }
    }

    cplx mu_;
    std::vector<double> g_;
    std::size_t n_;
    std::vector<double> lr_, li_;
    std::vector<double> k1r_, k1i_, k2r_, k2i_, k3r_, k3i_, k4r_, k4i_, tr_, ti_;
};

std::pair<CavityTrajectory, EnsembleState> run_rk4(LinearSystem& sys, std::size_t n_spins,
                                                   const DriveProtocol& protocol, const TimeGrid& grid,
                                                   int substeps, const EnsembleState& initial) {
    if (substeps < 1) throw Error(ErrorCode::InvalidGrid, "substeps must be >= 1");
    const double h_max = grid.dt / substeps;
    if (h_max * sys.rate_bound() > kStabilityMargin) {
        throw Error(ErrorCode::StepTooLarge, "RK4 step " + std::to_string(h_max) + " ns is outside the stability margin");
    }

    cplx a = initial.a;
    std::vector<double> br(n_spins, 0.0), bi(n_spins, 0.0);
    if (!initial.b.empty()) {
        if (initial.b.size() != n_spins) throw Error(ErrorCode::ValidationError, "initial state size mismatch");
        for (std::size_t k = 0; k < n_spins; ++k) {
            br[k] = initial.b[k].real();
            bi[k] = initial.b[k].imag();
        }
    }

    std::vector<double> bounds;
    for (const auto& s : protocol.segments()) bounds.push_back(s.t_start);
    if (!protocol.segments().empty()) bounds.push_back(protocol.t_end());

    const std::size_t n = grid.size();
    CavityTrajectory traj;
    traj.grid = grid;
    traj.amplitude.resize(n);
    traj.amplitude[0] = a;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (int s = 0; s < substeps; ++s) {
            const double t0 = grid.time(i) + s * h_max;
            const double t1 = (s + 1 == substeps) ? grid.time(i + 1) : t0 + h_max;
            double lo = t0;
            auto it = std::upper_bound(bounds.begin(), bounds.end(), t0 + 1e-9 * h_max);
            while (lo < t1) {
                double hi = t1;
                if (it != bounds.end() && *it < t1 - 1e-9 * h_max) hi = *it++;
                sys.step(a, br, bi, hi - lo, amplitude_at(protocol, 0.5 * (lo + hi)));
                lo = hi;
            }
        }
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
            throw Error(ErrorCode::NonFinite, "oracle diverged at t = " + std::to_string(grid.time(i + 1)));
        }
        traj.amplitude[i + 1] = a;
    }

    EnsembleState final_state;
    final_state.a = a;
    final_state.b.resize(n_spins);
    for (std::size_t k = 0; k < n_spins; ++k) final_state.b[k] = cplx(br[k], bi[k]);
    return {std::move(traj), std::move(final_state)};
}

}  // namespace

DiscreteEnsemble build_ensemble(const SpectralDensity& rho, std::size_t n, double Omega, std::uint64_t seed,
                                bool stratified) {
    if (n == 0) throw Error(ErrorCode::ValidationError, "ensemble size must be >= 1");
    if (!(Omega >= 0.0)) throw Error(ErrorCode::NegativeRate, "Omega must be >= 0");
    DiscreteEnsemble e;
    e.seed = seed;
    e.omegas = stratified ? stratified_frequencies(rho, n) : sample_frequencies(rho, n, seed);
    e.couplings.assign(n, Omega / std::sqrt(static_cast<double>(n)));
    return e;
}

double ks_distance(const DiscreteEnsemble& ensemble, const SpectralDensity& rho) {
    std::vector<double> w = ensemble.omegas;
    std::sort(w.begin(), w.end());
    const double n = static_cast<double>(w.size());
    double d = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double f = cdf(rho, w[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
    }
    return d;
}

std::pair<CavityTrajectory, EnsembleState> integrate(const DiscreteEnsemble& ensemble, const SystemParams& params,
                                                     const DriveProtocol& protocol, const TimeGrid& grid,
                                                     int substeps, const EnsembleState& initial) {
    validate(params);
    const cplx mu(params.kappa, params.omega_c - params.omega_p);
    std::vector<cplx> lambda(ensemble.size());
    for (std::size_t k = 0; k < ensemble.size(); ++k) lambda[k] = cplx(params.gamma, ensemble.omegas[k] - params.omega_p);
    LinearSystem sys(mu, lambda, ensemble.couplings);
    return run_rk4(sys, ensemble.size(), protocol, grid, substeps, initial);
}

double total_excitation(const EnsembleState& state) {
    double s = std::norm(state.a);
    for (const auto& b : state.b) s += std::norm(b);
    return s;
}

CavityTrajectory lorentzian_reduction(const SystemParams& params, double delta, const DriveProtocol& protocol,
                                      const TimeGrid& grid, int substeps) {
    validate(params);
    const cplx mu(params.kappa, params.omega_c - params.omega_p);
    LinearSystem sys(mu, {cplx(params.gamma + delta, params.omega_s - params.omega_p)}, {params.Omega});
    return run_rk4(sys, 1, protocol, grid, substeps, {}).first;
}

}  // namespace cqed
