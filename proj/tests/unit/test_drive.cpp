#include <doctest.h>

#include <cmath>

#include "cqed/drive.hpp"
#include "support.hpp"

using namespace cqed;
using testing::error_code_of;

TEST_CASE("rectangular pulse layout") {
    const auto p = rectangular(1.0, 0.0, 800.0, 1500.0);
    REQUIRE(p.segments().size() == 2);
    CHECK(p.segments()[0].t_start == 0.0);
    CHECK(p.segments()[0].t_end == 800.0);
    CHECK(p.segments()[0].eta == std::complex<double>(1.0, 0.0));
    CHECK(p.segments()[1].eta == std::complex<double>(0.0, 0.0));
    CHECK(p.t_end() == 1500.0);

    const auto delayed = rectangular({0.0, 2.0}, 10.0, 20.0, 20.0);
    REQUIRE(delayed.segments().size() == 2);
    CHECK(delayed.segments()[0].eta == std::complex<double>(0.0, 0.0));
    CHECK(delayed.segments()[1].eta == std::complex<double>(0.0, 2.0));

    const auto zero = rectangular(0.0, 0.0, 800.0, 1500.0);
    for (double t : {0.0, 400.0, 1200.0}) CHECK(amplitude_at(zero, t) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("rectangular pulse rejects empty or reversed intervals") {
    CHECK(error_code_of([] { rectangular(1.0, 5.0, 5.0, 10.0); }) == ErrorCode::BadInterval);
    CHECK(error_code_of([] { rectangular(1.0, 0.0, 20.0, 10.0); }) == ErrorCode::BadInterval);
    CHECK(error_code_of([] { rectangular(1.0, -1.0, 20.0, 30.0); }) == ErrorCode::BadInterval);
}

TEST_CASE("protocol constructor enforces contiguity") {
    CHECK(error_code_of([] { DriveProtocol(std::vector<DriveSegment>{}); }) == ErrorCode::BadInterval);
    CHECK(error_code_of([] { DriveProtocol({{0.0, 1.0, 1.0}, {1.5, 2.0, 1.0}}); }) == ErrorCode::BadInterval);
    CHECK(error_code_of([] { DriveProtocol({{0.0, 1.0, 1.0}, {1.0, 1.0, 1.0}}); }) == ErrorCode::BadInterval);
    CHECK_NOTHROW(DriveProtocol({{0.0, 1.0, 1.0}, {1.0, 3.0, -1.0}}));
}

TEST_CASE("phase-switched train alternates sign") {
    const auto p = phase_switched_train(1.0, 52.0, 11, 900.0);
    REQUIRE(p.segments().size() == 12);
    for (int n = 0; n < 11; ++n) {
        CHECK(p.segments()[n].eta.real() == (n % 2 == 0 ? 1.0 : -1.0));
        CHECK(p.segments()[n].duration() == doctest::Approx(52.0));
    }
    CHECK(p.segments().back().eta == std::complex<double>(0.0, 0.0));
    CHECK(amplitude_at(p, 60.0) == std::complex<double>(-1.0, 0.0));

    const auto two = phase_switched_train(1.0, 52.0, 2, 104.0);
    CHECK(two.segments()[1].eta == std::complex<double>(-1.0, 0.0));

    const auto one = phase_switched_train(1.0, 52.0, 1, 200.0);
    const auto rect = rectangular(1.0, 0.0, 52.0, 200.0);
    REQUIRE(one.segments().size() == rect.segments().size());
    for (std::size_t k = 0; k < one.segments().size(); ++k) {
        CHECK(one.segments()[k].t_start == rect.segments()[k].t_start);
        CHECK(one.segments()[k].t_end == rect.segments()[k].t_end);
        CHECK(one.segments()[k].eta == rect.segments()[k].eta);
    }
    CHECK(error_code_of([] { phase_switched_train(1.0, 52.0, 11, 500.0); }) == ErrorCode::BadInterval);
}

TEST_CASE("amplitude lookup is left-closed") {
    const auto p = rectangular(1.0, 0.0, 800.0, 1500.0);
    CHECK(amplitude_at(p, 400.0) == std::complex<double>(1.0, 0.0));
    CHECK(amplitude_at(p, 1000.0) == std::complex<double>(0.0, 0.0));
    CHECK(amplitude_at(p, 800.0) == std::complex<double>(0.0, 0.0));
    CHECK(amplitude_at(p, 1500.0) == std::complex<double>(0.0, 0.0));
    CHECK(amplitude_at(p, 123.4) == amplitude_at(p, 777.7));
    CHECK(error_code_of([&] { amplitude_at(p, -0.1); }) == ErrorCode::OutOfRange);
    CHECK(error_code_of([&] { amplitude_at(p, 1500.1); }) == ErrorCode::OutOfRange);
}

TEST_CASE("net power of a train equals that of a rectangular pulse") {
    const auto train = phase_switched_train({0.6, 0.8}, 52.0, 11, 900.0);
    const auto rect = rectangular({0.6, 0.8}, 0.0, 572.0, 900.0);
    CHECK(train.mean_power() == doctest::Approx(rect.mean_power()).epsilon(1e-14));
    CHECK(rect.mean_power() == doctest::Approx(572.0 / 900.0).epsilon(1e-14));
}

TEST_CASE("scaling and splitting") {
    const auto p = phase_switched_train(1.0, 10.0, 3, 40.0);
    const auto s = scaled(p, {0.0, 2.0});
    for (double t : {1.0, 15.0, 25.0, 35.0}) CHECK(amplitude_at(s, t) == std::complex<double>(0.0, 2.0) * amplitude_at(p, t));

    const auto q = split_at(p, 13.0);
    CHECK(q.segments().size() == p.segments().size() + 1);
    for (double t = 0.0; t <= 40.0; t += 0.5) CHECK(amplitude_at(q, t) == amplitude_at(p, t));
    CHECK(split_at(p, 10.0).segments().size() == p.segments().size());
}
