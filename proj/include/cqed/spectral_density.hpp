#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace cqed {

enum class DensityKind { QGaussian, Lorentzian, Gaussian };

/// Inhomogeneous spin distribution rho(omega), normalised to unit area.
///
/// QGaussian:  C [1 + (q-1) x^2/delta^2]^(-1/(q-1)),  x = omega - omega_s, 1 < q < 3.
///             For |q-1| < 1e-3 the Gaussian limit is evaluated instead.
/// Lorentzian: delta is the half width at half maximum.
/// Gaussian:   exp(-x^2/delta^2)/(delta sqrt(pi)).
class SpectralDensity {
public:
    static SpectralDensity q_gaussian(double omega_s, double q, double delta);
    static SpectralDensity lorentzian(double omega_s, double hwhm);
    static SpectralDensity gaussian(double omega_s, double delta);
    /// Same family, parameterised by the full width at half maximum.
    static SpectralDensity from_fwhm(DensityKind kind, double omega_s, double fwhm, double q = 2.0);

    DensityKind kind() const noexcept { return kind_; }
    double omega_s() const noexcept { return omega_s_; }
    double q() const noexcept { return q_; }
    double delta() const noexcept { return delta_; }
    double norm_c() const noexcept { return norm_c_; }

    /// True when the Gaussian formula is used for evaluation.
    bool gaussian_branch() const noexcept;

    double operator()(double omega) const noexcept;
    /// Analytic continuation to complex frequency (principal branch).
    std::complex<double> operator()(std::complex<double> omega) const noexcept;

    double peak() const noexcept { return norm_c_; }
    double fwhm() const noexcept;
    double hwhm() const noexcept { return 0.5 * fwhm(); }

    /// Mass of rho outside omega_s +- half_width, from the analytic tail.
    double tail_mass(double half_width) const;

    /// Same shape moved to a different centre.
    SpectralDensity recentred(double omega_s) const;

private:
    SpectralDensity(DensityKind kind, double omega_s, double q, double delta);

    double shape(double x) const noexcept;  // unnormalised, shape(0) = 1
    double window_half_width(double eps) const noexcept;

    friend std::pair<double, double> support_window(const SpectralDensity&, double);

    DensityKind kind_;
    double omega_s_;
    double q_;
    double delta_;
    double norm_c_;
};

double density_at(const SpectralDensity& rho, double omega);

/// C such that the q-Gaussian with width delta integrates to one.
/// Adaptive quadrature on the eps=1e-10 window plus a power-law tail series.
double normalization_constant(double q, double delta);

/// gamma_q = 2 delta sqrt((2^q - 2)/(2q - 2)); q -> 1 gives 2 delta sqrt(ln 2).
double fwhm(double q, double delta);
double delta_from_fwhm(double q, double gamma_q);

/// Symmetric interval outside of which rho < eps * rho(omega_s).
std::pair<double, double> support_window(const SpectralDensity& rho, double eps);

/// Cumulative distribution, computed by direct quadrature.
double cdf(const SpectralDensity& rho, double omega);

/// n i.i.d. draws by inverse-CDF transform of a tabulated CDF (monotone cubic).
std::vector<double> sample_frequencies(const SpectralDensity& rho, std::size_t n, std::uint64_t seed);

/// Quantiles (k - 1/2)/n, k = 1..n, through the same inverse CDF.
std::vector<double> stratified_frequencies(const SpectralDensity& rho, std::size_t n);

}  // namespace cqed
