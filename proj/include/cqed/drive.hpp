#pragma once

#include <complex>
#include <vector>

namespace cqed {

/// Constant drive amplitude on [t_start, t_end).
struct DriveSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    std::complex<double> eta{};

    double duration() const noexcept { return t_end - t_start; }
};

/// Piecewise-constant drive eta(t) in the frame rotating at omega_p.
/// Segments are contiguous, sorted and non-empty; their boundaries are the
/// subinterval boundaries of the segmented Volterra solve.
class DriveProtocol {
public:
    DriveProtocol() = default;
    /// Throws BadInterval unless the segments are contiguous, sorted and non-empty.
    explicit DriveProtocol(std::vector<DriveSegment> segments);

    const std::vector<DriveSegment>& segments() const noexcept { return segments_; }
    double t_begin() const noexcept { return segments_.empty() ? 0.0 : segments_.front().t_start; }
    double t_end() const noexcept { return segments_.empty() ? 0.0 : segments_.back().t_end; }

    /// Mean |eta|^2 over the protocol span.
    double mean_power() const noexcept;

private:
    std::vector<DriveSegment> segments_;
};

/// Zero drive before t_on, eta0 on [t_on, t_off), zero until t_end.
DriveProtocol rectangular(std::complex<double> eta0, double t_on, double t_off, double t_end);

/// n_pulses back-to-back pulses of length tau with amplitude eta0 * (-1)^(n-1),
/// then zero drive until t_end.
DriveProtocol phase_switched_train(std::complex<double> eta0, double tau, int n_pulses, double t_end);

/// Amplitude of the segment containing t (left-closed, right-open; the final
/// instant t_end belongs to the last segment). Throws OutOfRange outside the span.
std::complex<double> amplitude_at(const DriveProtocol& p, double t);

/// Same protocol with eta multiplied by `factor`.
DriveProtocol scaled(const DriveProtocol& p, std::complex<double> factor);

/// Same protocol with an extra boundary at t (no-op if t is already a boundary).
DriveProtocol split_at(const DriveProtocol& p, double t);

}  // namespace cqed
