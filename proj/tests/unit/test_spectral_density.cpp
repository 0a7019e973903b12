#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cqed/spectral_density.hpp"
#include "support.hpp"

using namespace cqed;
using testing::error_code_of;

namespace {

constexpr double kCentre = 16.9;
constexpr double kDelta = 0.0331;

// Trapezoid rule after omega = centre + scale sinh(v); the map turns power-law
// tails into exponential ones, so the rule converges geometrically.
double sinh_trapezoid(const SpectralDensity& rho, double scale, double v_lo, double v_hi, double h = 5e-3) {
    const auto n = static_cast<std::size_t>(std::ceil((v_hi - v_lo) / h));
    const double step = (v_hi - v_lo) / static_cast<double>(n);
    double s = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double v = v_lo + step * static_cast<double>(k);
        const double w = (k == 0 || k == n) ? 0.5 : 1.0;
        s += w * rho(rho.omega_s() + scale * std::sinh(v)) * scale * std::cosh(v);
    }
    return s * step;
}

double gamma_function_norm(double q, double delta) {
    const double a = 1.0 / (q - 1.0);
    return std::sqrt(q - 1.0) * std::tgamma(a) / (delta * std::sqrt(std::numbers::pi) * std::tgamma(a - 0.5));
}

}  // namespace

TEST_CASE("q-Gaussian normalisation against a brute-force integral and the Beta-function form") {
    for (double q : {1.1, 1.39, 1.7, 2.0, 2.5}) {
        CAPTURE(q);
        const auto rho = SpectralDensity::q_gaussian(kCentre, q, kDelta);
        const double tail_rate = 2.0 / (q - 1.0) - 1.0;  // integrand ~ exp(-tail_rate |v|)
        const double v_max = 36.0 / tail_rate + 10.0;
        CHECK(std::abs(sinh_trapezoid(rho, kDelta, -v_max, v_max) - 1.0) < 1e-9);
        CHECK(rho.norm_c() == doctest::Approx(gamma_function_norm(q, kDelta)).epsilon(1e-9));
    }
    for (const auto& rho : {SpectralDensity::lorentzian(kCentre, kDelta), SpectralDensity::gaussian(kCentre, kDelta)}) {
        CHECK(std::abs(sinh_trapezoid(rho, kDelta, -40.0, 40.0) - 1.0) < 1e-9);
    }
}

TEST_CASE("normalisation constant limits") {
    CHECK(normalization_constant(2.0, kDelta) == doctest::Approx(1.0 / (std::numbers::pi * kDelta)).epsilon(1e-12));
    CHECK(normalization_constant(1.0001, kDelta) ==
          doctest::Approx(1.0 / (kDelta * std::sqrt(std::numbers::pi))).epsilon(1e-3));
    CHECK(error_code_of([] { normalization_constant(3.0, kDelta); }) == ErrorCode::InvalidDensity);
    CHECK(error_code_of([] { normalization_constant(1.5, 0.0); }) == ErrorCode::InvalidDensity);
    CHECK(error_code_of([] { SpectralDensity::q_gaussian(kCentre, 0.5, kDelta); }) == ErrorCode::InvalidDensity);
    CHECK(error_code_of([] { SpectralDensity::lorentzian(kCentre, -1.0); }) == ErrorCode::InvalidDensity);
}

TEST_CASE("Lorentzian peak and half maximum") {
    const auto rho = SpectralDensity::lorentzian(kCentre, kDelta);
    CHECK(rho(kCentre) == doctest::Approx(1.0 / (std::numbers::pi * kDelta)).epsilon(1e-14));
    CHECK(rho(kCentre + kDelta) == doctest::Approx(1.0 / (2.0 * std::numbers::pi * kDelta)).epsilon(1e-12));
    CHECK(density_at(rho, kCentre - kDelta) == rho(kCentre + kDelta));
}

TEST_CASE("device density is at half maximum one half width from the centre") {
    const auto rho = testing::device_density();
    const double half = 0.5 * mhz_to_angular(9.4);
    CHECK(rho.fwhm() == doctest::Approx(mhz_to_angular(9.4)).epsilon(1e-14));
    CHECK(rho(rho.omega_s() + half) == doctest::Approx(0.5 * rho(rho.omega_s())).epsilon(1e-12));
    CHECK(rho(rho.omega_s() - half) == doctest::Approx(0.5 * rho(rho.omega_s())).epsilon(1e-12));
}

TEST_CASE("width conversions") {
    CHECK(fwhm(2.0, kDelta) == doctest::Approx(2.0 * kDelta).epsilon(1e-15));
    CHECK(fwhm(1.0, kDelta) == doctest::Approx(2.0 * kDelta * std::sqrt(std::log(2.0))).epsilon(1e-15));
    CHECK(fwhm(1.0 + 1e-7, kDelta) == doctest::Approx(fwhm(1.0, kDelta)).epsilon(1e-6));
    for (double q : {1.05, 1.39, 2.0, 2.9}) CHECK(delta_from_fwhm(q, fwhm(q, kDelta)) == doctest::Approx(kDelta).epsilon(1e-14));
}

TEST_CASE("even symmetry holds to rounding") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 50.0 * kDelta);
    const SpectralDensity all[] = {testing::device_density(), SpectralDensity::lorentzian(kCentre, kDelta),
                                   SpectralDensity::gaussian(kCentre, kDelta), SpectralDensity::q_gaussian(kCentre, 2.7, kDelta)};
    for (const auto& rho : all) {
        for (int k = 0; k < 100; ++k) {
            const double d = u(gen);
            const double a = rho(rho.omega_s() + d);
            const double b = rho(rho.omega_s() - d);
            // omega_s +- d is rounded before evaluation; allow that one ulp of the argument
            CHECK(std::abs(a - b) <= 1e-12 * rho.peak());
        }
    }
}

TEST_CASE("q = 2 coincides with the Lorentzian and q -> 1 with the Gaussian") {
    const auto q2 = SpectralDensity::q_gaussian(kCentre, 2.0, kDelta);
    const auto lor = SpectralDensity::lorentzian(kCentre, kDelta);
    for (double x = -40.0; x <= 40.0; x += 0.37) {
        const double w = kCentre + x * kDelta;
        CHECK(std::abs(q2(w) - lor(w)) <= 1e-12 * lor(w));
    }
    const auto q1 = SpectralDensity::q_gaussian(kCentre, 1.0 + 1e-4, kDelta);
    const auto gau = SpectralDensity::gaussian(kCentre, kDelta);
    for (double x = -5.0; x <= 5.0; x += 0.05) {
        const double w = kCentre + x * kDelta;
        CHECK(std::abs(q1(w) - gau(w)) <= 1e-6 * gau(w));
    }
}

TEST_CASE("device density tails fall faster than 1/omega^2") {
    const auto rho = testing::device_density();
    for (double x : {20.0, 100.0, 1000.0}) {
        const double a = rho(rho.omega_s() + x * rho.delta());
        const double b = rho(rho.omega_s() + 2.0 * x * rho.delta());
        CHECK(std::log(b / a) / std::log(2.0) < -2.0);
    }
}

TEST_CASE("support window") {
    const auto lor = SpectralDensity::lorentzian(kCentre, kDelta);
    auto [lo, hi] = support_window(lor, 0.25);
    CHECK(hi - kCentre == doctest::Approx(kDelta * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(kCentre - lo == doctest::Approx(kDelta * std::sqrt(3.0)).epsilon(1e-12));
    const auto [a, b] = support_window(lor, 1.0);
    CHECK(a == kCentre);
    CHECK(b == kCentre);

    const auto rho = testing::device_density();
    std::tie(lo, hi) = support_window(rho, 1e-10);
    CHECK(rho(lo) <= 1e-10 * rho.peak() * (1.0 + 1e-9));
    CHECK(rho(hi) <= 1e-10 * rho.peak() * (1.0 + 1e-9));
    CHECK(rho(0.99 * (hi - rho.omega_s()) + rho.omega_s()) > 1e-10 * rho.peak());
}

TEST_CASE("tail mass matches a direct integral") {
    for (const auto& rho : {testing::device_density(), SpectralDensity::lorentzian(kCentre, kDelta)}) {
        const double w = 7.0 * rho.delta();
        const double v0 = std::asinh(w / rho.delta());
        const double direct = 2.0 * sinh_trapezoid(rho, rho.delta(), v0, 60.0, 1e-3);
        CHECK(rho.tail_mass(w) == doctest::Approx(direct).epsilon(1e-8));
    }
}

TEST_CASE("cumulative distribution") {
    const auto lor = SpectralDensity::lorentzian(kCentre, kDelta);
    for (double x : {-30.0, -2.0, -0.3, 0.0, 0.7, 5.0, 100.0}) {
        const double exact = 0.5 + std::atan(x) / std::numbers::pi;
        CHECK(cdf(lor, kCentre + x * kDelta) == doctest::Approx(exact).epsilon(1e-10));
    }
    const auto rho = testing::device_density();
    CHECK(cdf(rho, rho.omega_s()) == doctest::Approx(0.5).epsilon(1e-12));
    double prev = 0.0;
    for (double x = -10.0; x <= 10.0; x += 0.5) {
        const double c = cdf(rho, rho.omega_s() + x * rho.delta());
        CHECK(c >= prev);
        prev = c;
    }
}

TEST_CASE("sampling is deterministic per seed") {
    const auto lor = SpectralDensity::lorentzian(kCentre, kDelta);
    const auto a = sample_frequencies(lor, 1, 42);
    REQUIRE(a.size() == 1);
    CHECK(a == sample_frequencies(lor, 1, 42));
    CHECK(sample_frequencies(lor, 500, 3) == sample_frequencies(lor, 500, 3));
    CHECK(sample_frequencies(lor, 500, 3) != sample_frequencies(lor, 500, 4));
}

TEST_CASE("Gaussian samples have standard deviation delta/sqrt(2)") {
    const auto rho = SpectralDensity::gaussian(kCentre, kDelta);
    const auto w = sample_frequencies(rho, 100000, 11);
    double m = 0.0;
    for (double x : w) m += x;
    m /= static_cast<double>(w.size());
    double v = 0.0;
    for (double x : w) v += (x - m) * (x - m);
    const double sd = std::sqrt(v / static_cast<double>(w.size() - 1));
    CHECK(sd == doctest::Approx(kDelta / std::sqrt(2.0)).epsilon(0.01));
    CHECK(std::abs(m - kCentre) < 5.0 * sd / std::sqrt(1e5));
}

TEST_CASE("histogram of device-density samples reproduces its width") {
    const auto rho = testing::device_density();
    const auto w = sample_frequencies(rho, 100000, 5);
    const double gamma_q = rho.fwhm();
    const int bins = 48;
    const double lo = rho.omega_s() - 1.2 * gamma_q;
    const double width = 2.4 * gamma_q / bins;
    std::vector<double> h(bins, 0.0);
    for (double x : w) {
        const auto k = static_cast<long>(std::floor((x - lo) / width));
        if (k >= 0 && k < bins) h[static_cast<std::size_t>(k)] += 1.0;
    }
    const double peak = 0.5 * (h[bins / 2 - 1] + h[bins / 2]);
    auto crossing = [&](int from, int step) {
        for (int k = from; k >= 0 && k < bins; k += step) {
            if (h[static_cast<std::size_t>(k)] < 0.5 * peak) {
                const double y0 = h[static_cast<std::size_t>(k - step)];
                const double y1 = h[static_cast<std::size_t>(k)];
                const double frac = (y0 - 0.5 * peak) / (y0 - y1);
                return lo + width * (k - step + 0.5 + step * frac);
            }
        }
        return std::nan("");
    };
    const double measured = crossing(bins / 2, 1) - crossing(bins / 2 - 1, -1);
    CHECK(measured == doctest::Approx(gamma_q).epsilon(0.03));
}

TEST_CASE("stratified quantiles are symmetric and ordered") {
    const auto rho = testing::device_density();
    const auto w = stratified_frequencies(rho, 1001);
    CHECK(std::is_sorted(w.begin(), w.end()));
    CHECK(w[500] == doctest::Approx(rho.omega_s()).epsilon(1e-12));
    for (std::size_t k = 0; k < 500; ++k) {
        CHECK(std::abs((w[k] - rho.omega_s()) + (w[1000 - k] - rho.omega_s())) < 1e-9 * rho.delta());
    }
}
