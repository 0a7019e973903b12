#include "cqed/spectral_density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>

// pchip.hpp calls isnan unqualified
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "cqed/error.hpp"
#include "cqed/quadrature.hpp"

namespace cqed {
namespace {

constexpr double kGaussianSwitch = 1e-3;
constexpr double kWindowEps = 1e-10;
constexpr double kNormTolerance = 1e-10;
constexpr std::size_t kCdfNodes = 16384;

bool use_gaussian(double q) { return std::abs(q - 1.0) < kGaussianSwitch; }

double qgauss_shape(double x, double q, double delta) {
    const double r = x / delta;
    return std::exp(-std::log1p((q - 1.0) * r * r) / (q - 1.0));
}

double qgauss_half_width(double q, double delta, double eps) {
    if (eps >= 1.0) return 0.0;
    return delta * std::sqrt(std::expm1(-(q - 1.0) * std::log(eps)) / (q - 1.0));
}

// Unnormalised integral of the q-Gaussian shape over [x, inf).
double qgauss_tail_integral(double x, double q, double delta) {
    const double a = (q - 1.0) / (delta * delta);
    const double p = 1.0 / (q - 1.0);
    double y = 1.0 / (a * x * x);
    double extra = 0.0;
    if (y > 0.25) {
        // move the expansion point out until the binomial series converges quickly
        const double x2 = 2.0 / std::sqrt(a);
        extra = adaptive_integrate([&](double s) { return qgauss_shape(s, q, delta); }, x, x2, 1e-11, {}, 1e-14);
        x = x2;
        y = 0.25;
    }
    // int_x^inf (1 + a s^2)^-p ds = x y^p sum_k binom(-p, k) y^k / (2p + 2k - 1)
    double sum = 0.0;
    double coeff = 1.0;  // binom(-p, k) y^k
    for (int k = 0; k < 400; ++k) {
        const double term = coeff / (2.0 * p + 2.0 * k - 1.0);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        coeff *= -(p + k) / (k + 1.0) * y;
    }
    return extra + x * std::pow(y, p) * sum;
}

// Breakpoints delta * 2^k inside (0, hi); helps the adaptive rule with the
// many decades spanned by heavy-tailed windows.
std::vector<double> geometric_breaks(double delta, double hi) {
    std::vector<double> out;
    for (double b = 0.5 * delta; b < hi; b *= 2.0) out.push_back(b);
    return out;
}

}  // namespace

double normalization_constant(double q, double delta) {
    if (!(q > 1.0 && q < 3.0)) throw Error(ErrorCode::InvalidDensity, "q must lie in (1, 3)");
    if (!(delta > 0.0)) throw Error(ErrorCode::InvalidDensity, "delta must be > 0");
    if (use_gaussian(q)) return 1.0 / (delta * std::sqrt(std::numbers::pi));

    const double x_max = qgauss_half_width(q, delta, kWindowEps);
    const double core = adaptive_integrate([&](double x) { return qgauss_shape(x, q, delta); }, 0.0, x_max,
                                           kNormTolerance, geometric_breaks(delta, x_max));
    const double tail = qgauss_tail_integral(x_max, q, delta);
    return 1.0 / (2.0 * (core + tail));
}

double fwhm(double q, double delta) {
    if (q == 1.0) return 2.0 * delta * std::sqrt(std::numbers::ln2);
    // (2^q - 2)/(2q - 2) written without cancellation near q = 1
    const double ratio = std::expm1((q - 1.0) * std::numbers::ln2) / (q - 1.0);
    return 2.0 * delta * std::sqrt(ratio);
}

double delta_from_fwhm(double q, double gamma_q) { return gamma_q / fwhm(q, 1.0); }

SpectralDensity::SpectralDensity(DensityKind kind, double omega_s, double q, double delta)
    : kind_(kind), omega_s_(omega_s), q_(q), delta_(delta), norm_c_(0.0) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw Error(ErrorCode::InvalidDensity, "delta must be > 0");
    if (!std::isfinite(omega_s)) throw Error(ErrorCode::InvalidDensity, "omega_s must be finite");
    switch (kind) {
        case DensityKind::QGaussian: norm_c_ = normalization_constant(q, delta); break;
        case DensityKind::Lorentzian: norm_c_ = 1.0 / (std::numbers::pi * delta); break;
        case DensityKind::Gaussian: norm_c_ = 1.0 / (delta * std::sqrt(std::numbers::pi)); break;
    }
}

SpectralDensity SpectralDensity::q_gaussian(double omega_s, double q, double delta) {
    if (!(q > 1.0 && q < 3.0)) throw Error(ErrorCode::InvalidDensity, "q must lie in (1, 3)");
    return SpectralDensity(DensityKind::QGaussian, omega_s, q, delta);
}

SpectralDensity SpectralDensity::lorentzian(double omega_s, double hwhm) {
    return SpectralDensity(DensityKind::Lorentzian, omega_s, 2.0, hwhm);
}

SpectralDensity SpectralDensity::gaussian(double omega_s, double delta) {
    return SpectralDensity(DensityKind::Gaussian, omega_s, 1.0, delta);
}

SpectralDensity SpectralDensity::from_fwhm(DensityKind kind, double omega_s, double width, double q) {
    if (!(width > 0.0)) throw Error(ErrorCode::InvalidDensity, "fwhm must be > 0");
    switch (kind) {
        case DensityKind::QGaussian: return q_gaussian(omega_s, q, delta_from_fwhm(q, width));
        case DensityKind::Lorentzian: return lorentzian(omega_s, 0.5 * width);
        case DensityKind::Gaussian: return gaussian(omega_s, delta_from_fwhm(1.0, width));
    }
    throw Error(ErrorCode::InvalidDensity, "unknown density kind");
}

SpectralDensity SpectralDensity::recentred(double omega_s) const {
    SpectralDensity copy = *this;
    copy.omega_s_ = omega_s;
    return copy;
}

bool SpectralDensity::gaussian_branch() const noexcept {
    return kind_ == DensityKind::Gaussian || (kind_ == DensityKind::QGaussian && use_gaussian(q_));
}

double SpectralDensity::shape(double x) const noexcept {
    const double r = x / delta_;
    if (gaussian_branch()) return std::exp(-r * r);
    if (kind_ == DensityKind::Lorentzian) return 1.0 / (1.0 + r * r);
    return qgauss_shape(x, q_, delta_);
}

double SpectralDensity::operator()(double omega) const noexcept { return norm_c_ * shape(omega - omega_s_); }

std::complex<double> SpectralDensity::operator()(std::complex<double> omega) const noexcept {
    const std::complex<double> r = (omega - omega_s_) / delta_;
    if (gaussian_branch()) return norm_c_ * std::exp(-r * r);
    if (kind_ == DensityKind::Lorentzian) return norm_c_ / (1.0 + r * r);
    return norm_c_ * std::exp(-std::log(1.0 + (q_ - 1.0) * r * r) / (q_ - 1.0));
}

double SpectralDensity::fwhm() const noexcept {
    if (kind_ == DensityKind::Lorentzian) return 2.0 * delta_;
    if (gaussian_branch()) return 2.0 * delta_ * std::sqrt(std::numbers::ln2);
    return cqed::fwhm(q_, delta_);
}

double SpectralDensity::window_half_width(double eps) const noexcept {
    if (eps >= 1.0) return 0.0;
    if (gaussian_branch()) return delta_ * std::sqrt(-std::log(eps));
    if (kind_ == DensityKind::Lorentzian) return delta_ * std::sqrt(1.0 / eps - 1.0);
    return qgauss_half_width(q_, delta_, eps);
}

double SpectralDensity::tail_mass(double half_width) const {
    const double h = std::abs(half_width);
    if (gaussian_branch()) return std::erfc(h / delta_);
    if (kind_ == DensityKind::Lorentzian) return 2.0 / std::numbers::pi * std::atan2(delta_, h);
    return 2.0 * norm_c_ * qgauss_tail_integral(h, q_, delta_);
}

double density_at(const SpectralDensity& rho, double omega) { return rho(omega); }

std::pair<double, double> support_window(const SpectralDensity& rho, double eps) {
    const double h = rho.window_half_width(eps);
    return {rho.omega_s() - h, rho.omega_s() + h};
}

double cdf(const SpectralDensity& rho, double omega) {
    const double x = omega - rho.omega_s();
    if (x == 0.0) return 0.5;
    const double h = std::abs(x);
    double outside = 0.0;
    if (rho.gaussian_branch() || rho.kind() == DensityKind::Lorentzian || h > 2.0 * rho.delta()) {
        outside = 0.5 * rho.tail_mass(h);
    } else {
        const double inner = adaptive_integrate([&](double s) { return rho(rho.omega_s() + s); }, 0.0, h, 1e-12, {},
                                                 1e-15);
        outside = 0.5 - inner;
    }
    return x < 0.0 ? outside : 1.0 - outside;
}

namespace {

// Inverse CDF on the lower half of the distribution; the upper half follows by symmetry.
class InverseCdf {
public:
    explicit InverseCdf(const SpectralDensity& rho) : centre_(rho.omega_s()) {
        using Gauss = boost::math::quadrature::gauss<double, 8>;
        const double delta = rho.delta();
        const double x_max = support_window(rho, kWindowEps).second - centre_;
        const double s_max = std::asinh(x_max / delta);

        // offsets x_i = -delta sinh(s_i), from the far tail towards the centre
        std::vector<double> xs(kCdfNodes + 1);
        for (std::size_t i = 0; i <= kCdfNodes; ++i) {
            const double s = s_max * (1.0 - static_cast<double>(i) / kCdfNodes);
            xs[i] = -delta * std::sinh(s);
        }
        xs.back() = 0.0;

        std::vector<double> u;
        std::vector<double> x;
        u.reserve(xs.size());
        x.reserve(xs.size());
        double acc = 0.5 * rho.tail_mass(x_max);
        u.push_back(acc);
        x.push_back(xs.front());
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            acc += Gauss::integrate([&](double s) { return rho(centre_ + s); }, xs[i], xs[i + 1]);
            if (acc > u.back()) {
                u.push_back(acc);
                x.push_back(xs[i + 1]);
            }
        }
        u_min_ = u.front();
        x_min_ = x.front();
        u_max_ = u.back();
        interp_.emplace(std::move(u), std::move(x));
    }

    double operator()(double u) const {
        if (u > 0.5) return 2.0 * centre_ - (*this)(1.0 - u);
        if (u <= u_min_) return centre_ + x_min_;
        if (u >= u_max_) return centre_;
        return centre_ + (*interp_)(u);
    }

private:
    double centre_;
    double u_min_ = 0.0;
    double x_min_ = 0.0;
    double u_max_ = 0.5;
    std::optional<boost::math::interpolators::pchip<std::vector<double>>> interp_;
};

double uniform_open(std::mt19937_64& gen) {
    // (0, 1) from the top 53 bits; identical on every platform
    return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::vector<double> sample_frequencies(const SpectralDensity& rho, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error(ErrorCode::ValidationError, "sample count must be >= 1");
    const InverseCdf inverse(rho);
    std::mt19937_64 gen(seed);
    std::vector<double> out(n);
    for (auto& w : out) w = inverse(uniform_open(gen));
    return out;
}

std::vector<double> stratified_frequencies(const SpectralDensity& rho, std::size_t n) {
    if (n == 0) throw Error(ErrorCode::ValidationError, "sample count must be >= 1");
    const InverseCdf inverse(rho);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = inverse((static_cast<double>(k) + 0.5) / static_cast<double>(n));
    return out;
}

}  // namespace cqed
