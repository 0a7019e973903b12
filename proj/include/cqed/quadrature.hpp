#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstddef>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cqed/error.hpp"

namespace cqed {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }
};

/// Points per Gauss-Legendre panel used by the composite rules.
inline constexpr std::size_t kPanelOrder = 16;

/// Composite Gauss-Legendre rule with `panels` equal panels on [lo, hi].
QuadratureRule composite_gauss_legendre(double lo, double hi, std::size_t panels);

/// (e^w - 1)/w, accurate through w -> 0.
std::complex<double> phi1(std::complex<double> w) noexcept;

namespace detail {
inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }
}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [lo, hi], split at the given
/// interior breakpoints. Works for real and complex integrands.
/// Throws QuadratureFailure when the summed error estimate exceeds
/// rel_tol*|result| + abs_tol.
template <class F>
auto adaptive_integrate(F&& f, double lo, double hi, double rel_tol, std::vector<double> breaks = {},
                        double abs_tol = 0.0) {
    using Result = decltype(f(lo));
    breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [&](double b) { return !(b > lo && b < hi); }),
                 breaks.end());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    breaks.insert(breaks.begin(), lo);
    breaks.push_back(hi);

    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    struct Piece {
        double a, b;
        Result value;
        double error;
    };
    auto rule = [&](double a, double b) {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double e = 0.0;
        const Result v = GK::integrate([&](double x) { return f(mid + half * x) * half; }, -1.0, 1.0, 0, 0.0, &e);
        return Piece{a, b, v, e};
    };
    auto by_error = [](const Piece& x, const Piece& y) { return x.error < y.error; };

    // global bisection of the piece with the largest error estimate
    std::vector<Piece> heap;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) heap.push_back(rule(breaks[i], breaks[i + 1]));
    std::make_heap(heap.begin(), heap.end(), by_error);
    auto sums = [&] {
        Result v{};
        double e = 0.0;
        for (const auto& p : heap) {
            v += p.value;
            e += p.error;
        }
        return std::pair{v, e};
    };
    auto [total, err_total] = sums();
    for (int iter = 0; iter < 4000 && err_total > 0.5 * rel_tol * detail::magnitude(total) + abs_tol; ++iter) {
        std::pop_heap(heap.begin(), heap.end(), by_error);
        const Piece worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            heap.push_back(worst);
            break;
        }
        total -= worst.value;
        err_total -= worst.error;
        for (const Piece& p : {rule(worst.a, mid), rule(mid, worst.b)}) {
            total += p.value;
            err_total += p.error;
            heap.push_back(p);
            std::push_heap(heap.begin(), heap.end(), by_error);
        }
        if (iter % 64 == 63) std::tie(total, err_total) = sums();
    }
    std::tie(total, err_total) = sums();
    if (!std::isfinite(err_total) || err_total > rel_tol * detail::magnitude(total) + abs_tol) {
        char msg[160];
        std::snprintf(msg, sizeof msg, "adaptive quadrature on [%.6g, %.6g]: error estimate %.3e above tolerance %.3e",
                      lo, hi, err_total, rel_tol * detail::magnitude(total) + abs_tol);
        throw Error(ErrorCode::QuadratureFailure, msg);
    }
    return total;
}

}  // namespace cqed
