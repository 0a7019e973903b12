#include "cqed/drive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cqed/error.hpp"

namespace cqed {

DriveProtocol::DriveProtocol(std::vector<DriveSegment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw Error(ErrorCode::BadInterval, "protocol needs at least one segment");
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& s = segments_[i];
        if (!(s.t_end > s.t_start) || !std::isfinite(s.t_start) || !std::isfinite(s.t_end)) {
            throw Error(ErrorCode::BadInterval, "segment " + std::to_string(i) + " is empty or reversed");
        }
        if (i > 0 && s.t_start != segments_[i - 1].t_end) {
            throw Error(ErrorCode::BadInterval, "segment " + std::to_string(i) + " is not contiguous");
        }
    }
}

double DriveProtocol::mean_power() const noexcept {
    double energy = 0.0;
    for (const auto& s : segments_) energy += std::norm(s.eta) * s.duration();
    const double span = t_end() - t_begin();
    return span > 0.0 ? energy / span : 0.0;
}

DriveProtocol rectangular(std::complex<double> eta0, double t_on, double t_off, double t_end) {
    if (!(0.0 <= t_on && t_on < t_off && t_off <= t_end)) {
        throw Error(ErrorCode::BadInterval, "rectangular pulse needs 0 <= t_on < t_off <= t_end");
    }
    std::vector<DriveSegment> segs;
    if (t_on > 0.0) segs.push_back({0.0, t_on, 0.0});
    segs.push_back({t_on, t_off, eta0});
    if (t_end > t_off) segs.push_back({t_off, t_end, 0.0});
    return DriveProtocol(std::move(segs));
}

DriveProtocol phase_switched_train(std::complex<double> eta0, double tau, int n_pulses, double t_end) {
    if (!(tau > 0.0) || n_pulses < 1 || !(n_pulses * tau <= t_end)) {
        throw Error(ErrorCode::BadInterval, "pulse train needs tau > 0, n_pulses >= 1, n_pulses*tau <= t_end");
    }
    std::vector<DriveSegment> segs;
    for (int n = 0; n < n_pulses; ++n) {
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        segs.push_back({n * tau, (n + 1) * tau, sign * eta0});
    }
    const double train_end = n_pulses * tau;
    if (t_end > train_end) segs.push_back({train_end, t_end, 0.0});
    return DriveProtocol(std::move(segs));
}

std::complex<double> amplitude_at(const DriveProtocol& p, double t) {
    const auto& segs = p.segments();
    if (segs.empty() || t < p.t_begin() || t > p.t_end()) {
        throw Error(ErrorCode::OutOfRange, "t = " + std::to_string(t) + " outside the protocol span");
    }
    auto it = std::upper_bound(segs.begin(), segs.end(), t,
                               [](double v, const DriveSegment& s) { return v < s.t_end; });
    if (it == segs.end()) return segs.back().eta;
    return it->eta;
}

DriveProtocol scaled(const DriveProtocol& p, std::complex<double> factor) {
    auto segs = p.segments();
    for (auto& s : segs) s.eta *= factor;
    return DriveProtocol(std::move(segs));
}

DriveProtocol split_at(const DriveProtocol& p, double t) {
    std::vector<DriveSegment> out;
    for (const auto& s : p.segments()) {
        if (t > s.t_start && t < s.t_end) {
            out.push_back({s.t_start, t, s.eta});
            out.push_back({t, s.t_end, s.eta});
        } else {
            out.push_back(s);
        }
    }
    return DriveProtocol(std::move(out));
}

}  // namespace cqed
