#include <doctest.h>

#include <numbers>

#include "cqed/model.hpp"
#include "support.hpp"

using namespace cqed;
using testing::error_code_of;

TEST_CASE("unit conversion is linear and exact at one GHz") {
    CHECK(mhz_to_angular(1000.0) == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-15));
    for (double a : {0.4, 8.6, 2689.9}) {
        for (double b : {0.1, 9.4, 17.2}) {
            CHECK(std::abs(mhz_to_angular(a + b) - mhz_to_angular(a) - mhz_to_angular(b)) <=
                  4e-16 * mhz_to_angular(a + b));
        }
        CHECK(angular_to_mhz(mhz_to_angular(a)) == doctest::Approx(a).epsilon(1e-15));
    }
}

TEST_CASE("device parameters") {
    const SystemParams p = device_params();
    CHECK(p.omega_c == doctest::Approx(2.0 * std::numbers::pi * 2.6899).epsilon(1e-15));
    CHECK(p.omega_s == p.omega_c);
    CHECK(p.omega_p == p.omega_c);
    CHECK(p.kappa == doctest::Approx(2.0 * std::numbers::pi * 0.4e-3).epsilon(1e-15));
    CHECK(p.gamma == 0.0);
    CHECK(2.0 * p.Omega == doctest::Approx(2.0 * std::numbers::pi * 17.2e-3).epsilon(1e-15));
}

TEST_CASE("parameter validation") {
    const SystemParams p = device_params();
    CHECK(validate(p) == p);
    CHECK(validate(validate(p)) == validate(p));

    SystemParams bad = p;
    bad.kappa = -1.0;
    CHECK(error_code_of([&] { validate(bad); }) == ErrorCode::NegativeRate);
    bad = p;
    bad.gamma = std::nan("");
    CHECK(error_code_of([&] { validate(bad); }) == ErrorCode::NegativeRate);
    bad = p;
    bad.omega_c = 0.0;
    CHECK(error_code_of([&] { validate(bad); }) == ErrorCode::NonPositiveFrequency);
    bad = p;
    bad.omega_p = -3.0;
    CHECK(error_code_of([&] { validate(bad); }) == ErrorCode::NonPositiveFrequency);
}

TEST_CASE("time grid") {
    const TimeGrid g = make_grid(0.0, 1500.0, 0.05);
    CHECK(g.size() == 30001);
    CHECK(g.time(16000) == doctest::Approx(800.0).epsilon(1e-15));
    CHECK(make_grid(0.0, 1.0, 0.3).size() == 4);
    CHECK(error_code_of([] { make_grid(0.0, 1.0, 0.0); }) == ErrorCode::InvalidGrid);
    CHECK(error_code_of([] { make_grid(1.0, 1.0, 0.1); }) == ErrorCode::InvalidGrid);
}

TEST_CASE("trajectory helpers") {
    CavityTrajectory t{make_grid(0.0, 0.2, 0.1), {{0.0, 0.0}, {3.0, 4.0}, {1.0, -1.0}}};
    const auto y = t.intensity();
    CHECK(y[1] == 25.0);
    CHECK(y[2] == 2.0);
    CHECK_NOTHROW(check_trajectory(t));
    t.amplitude[2] = {std::nan(""), 0.0};
    CHECK(error_code_of([&] { check_trajectory(t); }) == ErrorCode::NonFinite);
    t.amplitude.pop_back();
    CHECK(error_code_of([&] { check_trajectory(t); }) == ErrorCode::NonFinite);

    const std::vector<cplx> a{{1.0, 0.0}, {0.0, 1.0}};
    const std::vector<cplx> b{{1.0, 0.0}, {0.0, 2.0}};
    CHECK(relative_l2(a, a) == 0.0);
    CHECK(relative_l2(a, b) == doctest::Approx(std::sqrt(1.0 / 5.0)).epsilon(1e-15));
}

TEST_CASE("error classification") {
    CHECK(is_input_error(ErrorCode::ParseError));
    CHECK(is_input_error(ErrorCode::BadInterval));
    CHECK_FALSE(is_input_error(ErrorCode::StepTooLarge));
    CHECK_FALSE(is_input_error(ErrorCode::NotSteady));
    const Error e(ErrorCode::NotSplit, "x");
    CHECK(std::string(e.what()).rfind("NotSplit", 0) == 0);
}
