#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "cqed/error.hpp"
#include "cqed/model.hpp"
#include "cqed/spectral_density.hpp"

namespace testing {

inline cqed::SpectralDensity device_density() {
    return cqed::SpectralDensity::from_fwhm(cqed::DensityKind::QGaussian, cqed::device_params().omega_s,
                                            cqed::mhz_to_angular(9.4), 1.39);
}

inline cqed::SpectralDensity lorentzian_like_device() {
    return cqed::SpectralDensity::from_fwhm(cqed::DensityKind::Lorentzian, cqed::device_params().omega_s,
                                            cqed::mhz_to_angular(9.4));
}

inline double max_abs(const std::vector<std::complex<double>>& a) {
    double m = 0.0;
    for (const auto& x : a) m = std::max(m, std::abs(x));
    return m;
}

inline double max_abs_diff(const std::vector<std::complex<double>>& a, const std::vector<std::complex<double>>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

template <class F>
cqed::ErrorCode error_code_of(F&& f) {
    try {
        f();
    } catch (const cqed::Error& e) {
        return e.code();
    }
    return static_cast<cqed::ErrorCode>(-1);
}

}  // namespace testing
