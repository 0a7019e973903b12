#include "cqed/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cqed/error.hpp"

namespace cqed {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NegativeRate: return "NegativeRate";
        case ErrorCode::NonPositiveFrequency: return "NonPositiveFrequency";
        case ErrorCode::BadInterval: return "BadInterval";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::InvalidDensity: return "InvalidDensity";
        case ErrorCode::InvalidGrid: return "InvalidGrid";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::QuadratureFailure: return "QuadratureFailure";
        case ErrorCode::StepTooLarge: return "StepTooLarge";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::NotSplit: return "NotSplit";
        case ErrorCode::InsufficientDecay: return "InsufficientDecay";
        case ErrorCode::NoOscillation: return "NoOscillation";
        case ErrorCode::NotSteady: return "NotSteady";
    }
    return "Unknown";
}

SystemParams device_params() {
    SystemParams p;
    p.omega_c = mhz_to_angular(2689.9);
    p.omega_s = p.omega_c;
    p.omega_p = p.omega_c;
    p.kappa = mhz_to_angular(0.4);
    p.gamma = 0.0;
    p.Omega = mhz_to_angular(8.6);
    return p;
}

SystemParams validate(const SystemParams& params) {
    auto rate = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::NegativeRate, std::string(name) + " must be finite and >= 0");
        }
    };
    auto freq = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::NonPositiveFrequency, std::string(name) + " must be finite and > 0");
        }
    };
    rate(params.kappa, "kappa");
    rate(params.gamma, "gamma");
    rate(params.Omega, "Omega");
    freq(params.omega_c, "omega_c");
    freq(params.omega_s, "omega_s");
    freq(params.omega_p, "omega_p");
    return params;
}

std::size_t TimeGrid::size() const {
    const double steps = (t_end - t_start) / dt;
    return static_cast<std::size_t>(std::floor(steps + 1e-9)) + 1;
}

TimeGrid make_grid(double t_start, double t_end, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidGrid, "dt must be > 0");
    if (!(t_end > t_start)) throw Error(ErrorCode::InvalidGrid, "t_end must exceed t_start");
    return TimeGrid{t_start, t_end, dt};
}

std::vector<double> CavityTrajectory::intensity() const {
    std::vector<double> out(amplitude.size());
    for (std::size_t i = 0; i < amplitude.size(); ++i) out[i] = std::norm(amplitude[i]);
    return out;
}

void check_trajectory(const CavityTrajectory& traj) {
    if (traj.amplitude.size() != traj.grid.size()) {
        throw Error(ErrorCode::NonFinite, "trajectory length does not match its grid");
    }
    for (std::size_t i = 0; i < traj.amplitude.size(); ++i) {
        const cplx a = traj.amplitude[i];
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
            throw Error(ErrorCode::NonFinite, "non-finite amplitude at sample " + std::to_string(i));
        }
    }
}

double relative_l2(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
    return std::sqrt(num / den);
}

}  // namespace cqed
