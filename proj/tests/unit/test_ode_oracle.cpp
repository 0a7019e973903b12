#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cqed/drive.hpp"
#include "cqed/ode_oracle.hpp"
#include "cqed/volterra.hpp"
#include "support.hpp"

using namespace cqed;
using testing::error_code_of;

namespace {

// exp(M t) applied to (a0, b0) for a 2x2 matrix M.
std::pair<cplx, cplx> expm2(cplx m11, cplx m12, cplx m21, cplx m22, double t, cplx a0, cplx b0) {
    const cplx m = 0.5 * (m11 + m22);
    const cplx d = std::sqrt(m * m - (m11 * m22 - m12 * m21));
    const cplx ch = std::cosh(d * t);
    const cplx sh = std::abs(d) < 1e-14 ? cplx(t) : std::sinh(d * t) / d;
    const cplx e = std::exp(m * t);
    return {e * (ch * a0 + sh * ((m11 - m) * a0 + m12 * b0)), e * (ch * b0 + sh * (m21 * a0 + (m22 - m) * b0))};
}

}  // namespace

TEST_CASE("single spin against the two-mode matrix exponential") {
    SystemParams p = device_params();
    p.gamma = mhz_to_angular(0.1);
    DiscreteEnsemble one{{p.omega_s + mhz_to_angular(2.0)}, {p.Omega}, 0};
    EnsembleState init{cplx(1.0, 0.0), {cplx(0.0, 0.5)}};
    const auto grid = make_grid(0.0, 200.0, 0.05);
    const auto [traj, fin] = integrate(one, p, rectangular(0.0, 0.0, 200.0, 200.0), grid, 5, init);
    const cplx m11(-p.kappa, -(p.omega_c - p.omega_p));
    const cplx m22(-p.gamma, -(one.omegas[0] - p.omega_p));
    double err = 0.0;
    for (std::size_t i = 0; i < grid.size(); i += 97) {
        const auto [a, b] = expm2(m11, p.Omega, -p.Omega, m22, grid.time(i), init.a, init.b[0]);
        err = std::max(err, std::abs(traj.amplitude[i] - a));
    }
    const auto [a_end, b_end] = expm2(m11, p.Omega, -p.Omega, m22, 200.0, init.a, init.b[0]);
    CHECK(err < 1e-9);
    CHECK(std::abs(fin.b[0] - b_end) < 1e-9);
}

TEST_CASE("ensemble construction") {
    const auto rho = testing::device_density();
    const double Omega = device_params().Omega;
    const auto e = build_ensemble(rho, 4000, Omega, 1);
    REQUIRE(e.size() == 4000);
    const double g2 = std::accumulate(e.couplings.begin(), e.couplings.end(), 0.0,
                                      [](double acc, double g) { return acc + g * g; });
    CHECK(std::abs(g2 - Omega * Omega) <= 1e-12 * Omega * Omega);
    CHECK(ks_distance(e, rho) < 0.032);

    CHECK(build_ensemble(rho, 4000, Omega, 1).omegas == e.omegas);
    CHECK(build_ensemble(rho, 4000, Omega, 2).omegas != e.omegas);

    const auto s = build_ensemble(rho, 1000, Omega, 7, true);
    CHECK(ks_distance(s, rho) <= 0.5 / 1000 + 1e-9);
    CHECK(build_ensemble(rho, 1000, Omega, 8, true).omegas == s.omegas);
}

TEST_CASE("lossless ensemble conserves total excitation after the drive") {
    SystemParams p = device_params();
    p.kappa = 0.0;
    p.gamma = 0.0;
    const auto e = build_ensemble(testing::device_density(), 200, p.Omega, 3);
    const auto drive = rectangular(1.0, 0.0, 10.0, 500.0);
    const auto [on, s10] = integrate(e, p, drive, make_grid(0.0, 10.0, 0.05), 5);
    const auto [off, s500] = integrate(e, p, drive, make_grid(10.0, 500.0, 0.05), 5, s10);
    const double n0 = total_excitation(s10);
    CHECK(n0 > 0.0);
    CHECK(std::abs(total_excitation(s500) - n0) <= 1e-8 * n0);
}

TEST_CASE("dissipation never increases the undriven excitation") {
    SystemParams p = device_params();
    p.gamma = mhz_to_angular(0.2);
    const auto e = build_ensemble(testing::device_density(), 100, p.Omega, 4, true);
    const auto none = rectangular(0.0, 0.0, 400.0, 400.0);
    EnsembleState s{cplx(1.0, 0.0), std::vector<cplx>(100, cplx(0.0, 0.0))};
    double last = total_excitation(s);
    for (double t = 0.0; t < 400.0; t += 50.0) {
        s = integrate(e, p, none, make_grid(t, t + 50.0, 0.05), 5, s).second;
        const double now = total_excitation(s);
        CHECK(now <= last);
        last = now;
    }
}

TEST_CASE("large stratified ensemble approaches the continuum solution") {
    const SystemParams p = device_params();
    const auto rho = testing::device_density();
    const auto grid = make_grid(0.0, 300.0, 0.05);
    const auto drive = rectangular(1.0, 0.0, 200.0, 300.0);
    const auto volterra = solve(p, rho, drive, grid);
    const auto oracle = integrate(build_ensemble(rho, 2000, p.Omega, 1, true), p, drive, grid, 5).first;
    CHECK(relative_l2(oracle.amplitude, volterra.amplitude) < 2e-2);
}

TEST_CASE("Lorentzian reduction without coupling is a driven damped cavity") {
    SystemParams p = device_params();
    p.Omega = 0.0;
    const auto grid = make_grid(0.0, 300.0, 0.05);
    const auto traj = lorentzian_reduction(p, mhz_to_angular(4.7), rectangular(1.0, 0.0, 300.0, 300.0), grid);
    for (std::size_t i = 0; i < grid.size(); i += 500) {
        const double t = grid.time(i);
        CHECK(std::abs(traj.amplitude[i] + (1.0 - std::exp(-p.kappa * t)) / p.kappa) < 1e-9 / p.kappa);
    }
}

TEST_CASE("oracle input checks") {
    const SystemParams p = device_params();
    const auto e = build_ensemble(testing::device_density(), 10, p.Omega, 1);
    const auto drive = rectangular(1.0, 0.0, 100.0, 200.0);
    CHECK(error_code_of([&] { integrate(e, p, drive, make_grid(0.0, 200.0, 100.0), 1); }) == ErrorCode::StepTooLarge);
    CHECK(error_code_of([&] { integrate(e, p, drive, make_grid(0.0, 200.0, 0.05), 0); }) == ErrorCode::InvalidGrid);
}
