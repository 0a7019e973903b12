#include "cqed/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cqed/error.hpp"
#include "cqed/quadrature.hpp"

namespace cqed {
namespace {

constexpr double kDispersionTol = 1e-12;
constexpr int kNewtonIterations = 50;
constexpr double kDecayFloor = 1e-6;
constexpr double kPeakProminence = 0.5;
constexpr double kSteadyTolerance = 0.05;
constexpr double kSteadySpan = 100.0;

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

std::size_t first_index_at(const TimeGrid& grid, double t) {
    if (t <= grid.t_start) return 0;
    return std::min(grid.size() - 1, static_cast<std::size_t>(std::ceil((t - grid.t_start) / grid.dt - 1e-9)));
}

std::size_t last_index_at(const TimeGrid& grid, double t) {
    const double x = (t - grid.t_start) / grid.dt + 1e-9;
    if (x < 0.0) return 0;
    return std::min(grid.size() - 1, static_cast<std::size_t>(std::floor(x)));
}

cplx newton_root(cplx s, const SystemParams& params, const SpectralDensity& rho) {
    const double target = 1e-10 * params.Omega;
    const double h = 1e-6 * params.Omega;
    for (int it = 0; it < kNewtonIterations; ++it) {
        const cplx d = dispersion_value(s, params, rho);
        const cplx slope_d = (dispersion_value(s + h, params, rho) - dispersion_value(s - h, params, rho)) / (2.0 * h);
        cplx step = d / slope_d;
        if (std::abs(step) > 0.5 * params.Omega) step *= 0.5 * params.Omega / std::abs(step);
        s -= step;
        if (std::abs(d) < target) return s;  // the step just taken is the final polish
    }
    throw Error(ErrorCode::NoConvergence, "pole search did not converge in 50 Newton iterations");
}

}  // namespace

cplx dispersion_value(cplx s, const SystemParams& params, const SpectralDensity& rho) {
    const cplx sp = s + params.gamma;
    const auto [lo, hi] = support_window(rho, 1e-10);
    const double centre = rho.omega_s();
    const double pole = params.omega_p - sp.imag();
    const double reach = std::max(std::abs(sp.real()), 1e-9);

    std::vector<double> breaks{centre, pole};
    for (double d = 0.25 * rho.delta(); d < hi - centre; d *= 2.0) {
        breaks.push_back(centre - d);
        breaks.push_back(centre + d);
    }
    for (double d = reach; d < 64.0 * rho.delta(); d *= 2.0) {
        breaks.push_back(pole - d);
        breaks.push_back(pole + d);
    }

    const cplx band = adaptive_integrate(
        [&](double w) { return rho(w) / (sp + cplx(0.0, w - params.omega_p)); }, lo, hi, kDispersionTol, breaks,
        1e-15);
    cplx total = band;
    if (sp.real() < 0.0) total += 2.0 * std::numbers::pi * rho(cplx(params.omega_p, 0.0) + cplx(0.0, 1.0) * sp);
    return s + cplx(params.kappa, params.omega_c - params.omega_p) + params.Omega * params.Omega * total;
}

PolePair find_poles(const SystemParams& params, const SpectralDensity& rho) {
    validate(params);
    if (!(params.Omega > 0.5 * rho.hwhm())) {
        throw Error(ErrorCode::NotSplit, "Omega must exceed half the spectral HWHM for a split pole pair");
    }
    const double pi = std::numbers::pi;
    const double om = params.Omega;
    auto guess = [&](double sign) {
        const double rate = params.kappa + pi * om * om * rho(rho.omega_s() + sign * om);
        return cplx(-0.5 * rate, -(rho.omega_s() - params.omega_p) + sign * om);
    };

    PolePair p;
    p.s_plus = newton_root(guess(+1.0), params, rho);
    p.s_minus = newton_root(guess(-1.0), params, rho);
    if (p.s_plus.imag() < p.s_minus.imag()) std::swap(p.s_plus, p.s_minus);
    if (std::abs(p.s_plus - p.s_minus) < 1e-6 * om) {
        throw Error(ErrorCode::NotSplit, "both Newton starts reached the same pole");
    }
    p.residual = std::max(std::abs(dispersion_value(p.s_plus, params, rho)),
                          std::abs(dispersion_value(p.s_minus, params, rho)));
    p.converged = p.residual < 1e-10 * om;
    return p;
}

double gamma_asymptotic(const SystemParams& params, const SpectralDensity& rho) {
    return params.kappa + std::numbers::pi * params.Omega * params.Omega * rho(rho.omega_s() + params.Omega);
}

double gamma_markov(const SystemParams& params, const SpectralDensity& rho) {
    return 2.0 * (params.kappa + std::numbers::pi * params.Omega * params.Omega * rho(rho.omega_s()));
}

std::pair<cplx, cplx> gamma_lorentzian(double delta, double kappa, double Omega) {
    const double a = 2.0 * delta - 2.0 * kappa;
    const cplx root = std::sqrt(cplx(a * a - 16.0 * Omega * Omega, 0.0));
    const double base = -2.0 * (delta + kappa);
    return {(base + root) / 4.0, (base - root) / 4.0};
}

std::vector<Peak> find_maxima(const TimeGrid& grid, const std::vector<double>& y, double t_from, double t_to,
                              double rel_prominence) {
    std::vector<Peak> out;
    if (y.size() < 3) return out;
    const std::size_t lo = std::max<std::size_t>(1, first_index_at(grid, t_from));
    const std::size_t hi = std::min(y.size() - 2, last_index_at(grid, t_to));
    const std::size_t w_lo = first_index_at(grid, t_from);
    const std::size_t w_hi = std::min(y.size() - 1, last_index_at(grid, t_to));
    for (std::size_t i = lo; i <= hi && hi >= lo; ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
        double left = y[i];
        for (std::size_t j = i; j-- > w_lo;) {
            if (y[j] > y[i]) break;
            left = std::min(left, y[j]);
        }
        double right = y[i];
        for (std::size_t j = i + 1; j <= w_hi; ++j) {
            if (y[j] > y[i]) break;
            right = std::min(right, y[j]);
        }
        if (y[i] - std::max(left, right) < rel_prominence * y[i]) continue;

        const double y0 = y[i - 1];
        const double y1 = y[i];
        const double y2 = y[i + 1];
        const double curv = y0 - 2.0 * y1 + y2;
        const double shift = curv != 0.0 ? 0.5 * (y0 - y2) / curv : 0.0;
        out.push_back({grid.time(i) + shift * grid.dt, y1 - 0.25 * (y0 - y2) * shift});
    }
    return out;
}

double extract_decay_rate(const CavityTrajectory& traj, double t_fit_start) {
    const auto y = traj.intensity();
    const std::size_t i0 = first_index_at(traj.grid, t_fit_start);
    const double ref = *std::max_element(y.begin() + static_cast<std::ptrdiff_t>(i0), y.end());
    if (!(ref > 0.0)) throw Error(ErrorCode::InsufficientDecay, "trajectory is zero after t_fit_start");

    std::vector<double> xs;
    std::vector<double> ls;
    for (const auto& p : find_maxima(traj.grid, y, t_fit_start, traj.grid.t_end, kPeakProminence)) {
        if (p.value < kDecayFloor * ref) break;
        xs.push_back(p.t);
        ls.push_back(std::log(p.value));
    }
    if (xs.size() < 3) {
        // upper envelope; equals |A|^2 wherever the decay is monotone
        std::vector<double> env(y.begin() + static_cast<std::ptrdiff_t>(i0), y.end());
        for (std::size_t k = env.size() - 1; k-- > 0;) env[k] = std::max(env[k], env[k + 1]);
        xs.clear();
        ls.clear();
        for (std::size_t k = 0; k < env.size(); ++k) {
            if (env[k] < kDecayFloor * ref) break;
            xs.push_back(traj.grid.time(i0 + k));
            ls.push_back(std::log(env[k]));
        }
    }
    if (xs.size() < 3) throw Error(ErrorCode::InsufficientDecay, "fewer than three usable points above the floor");
    const double rate = -slope(xs, ls);
    if (!(rate > 0.0)) throw Error(ErrorCode::InsufficientDecay, "intensity does not decay after t_fit_start");
    return rate;
}

std::pair<double, double> extract_rabi(const CavityTrajectory& traj, double t_from, double t_to,
                                       double rel_prominence) {
    const auto peaks = find_maxima(traj.grid, traj.intensity(), t_from, t_to, rel_prominence);
    if (peaks.size() < 2) throw Error(ErrorCode::NoOscillation, "fewer than two intensity maxima in the window");
    const double t_r = (peaks.back().t - peaks.front().t) / static_cast<double>(peaks.size() - 1);
    return {2.0 * std::numbers::pi / t_r, t_r};
}

double enhancement_factor(const CavityTrajectory& pulsed, const CavityTrajectory& cw, const EnhancementWindow& window) {
    const auto peaks = find_maxima(pulsed.grid, pulsed.intensity(), window.pulsed_from, window.pulsed_to, 0.0);
    if (peaks.size() < 3) throw Error(ErrorCode::NotSteady, "pulsed trace has fewer than three maxima");
    const std::size_t n = peaks.size();
    double lo = peaks[n - 1].value;
    double hi = lo;
    double mean = 0.0;
    for (std::size_t k = n - 3; k < n; ++k) {
        lo = std::min(lo, peaks[k].value);
        hi = std::max(hi, peaks[k].value);
        mean += peaks[k].value / 3.0;
    }
    if (hi > (1.0 + kSteadyTolerance) * lo) throw Error(ErrorCode::NotSteady, "last three pulsed maxima differ by > 5%");

    const auto y = cw.intensity();
    const std::size_t i_end = last_index_at(cw.grid, window.cw_time);
    const std::size_t i_begin = first_index_at(cw.grid, cw.grid.time(i_end) - kSteadySpan);
    const auto [mn, mx] = std::minmax_element(y.begin() + static_cast<std::ptrdiff_t>(i_begin),
                                              y.begin() + static_cast<std::ptrdiff_t>(i_end) + 1);
    if (!(*mn > 0.0) || *mx > (1.0 + kSteadyTolerance) * *mn) {
        throw Error(ErrorCode::NotSteady, "CW trace is not stationary before the reference time");
    }
    return mean / y[i_end];
}

}  // namespace cqed
