#include <catch2/catch_amalgamated.hpp>

#include "gencs/rng.hpp"

using namespace gencs;

TEST_CASE("same stream replays the same sequence") {
    RngStream a(42, 7), b(42, 7);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    RngStream ra(1, 2), rb(1, 2);
    const Tensor ta = gaussian(ra, {16}, 0.0, 1.0);
    const Tensor tb = gaussian(rb, {16}, 0.0, 1.0);
    for (std::size_t i = 0; i < ta.numel(); ++i) CHECK(ta[i] == tb[i]);
}

TEST_CASE("distinct stream indices differ") {
    RngStream a(42, 0), b(42, 1);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
    CHECK(same == 0);
}

TEST_CASE("gaussian rejects std <= 0") {
    RngStream rng(0);
    CHECK_THROWS_AS(gaussian(rng, {4}, 0.0, 0.0), ParameterError);
    CHECK_THROWS_AS(gaussian(rng, {4}, 0.0, -1.0), ParameterError);
}

TEST_CASE("gaussian degenerate spread concentrates at the mean") {
    RngStream rng(3);
    const Tensor t = gaussian(rng, {64}, 5.0, 1e-12);
    for (double v : t.data()) CHECK(std::abs(v - 5.0) < 1e-9);
}

TEST_CASE("gaussian moments over 1e5 samples") {
    RngStream rng(1234);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("uniform01 stays in [0,1)") {
    RngStream rng(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("split streams are independent of parent consumption") {
    RngStream a(5, 1);
    RngStream child_before = a.split(3);
    a.next_u64();
    RngStream child_after = a.split(3);
    CHECK(child_before.next_u64() == child_after.next_u64());
}

TEST_CASE("stream_label is stable") {
    CHECK(stream_label("abc") == stream_label("abc"));
    CHECK(stream_label("abc") != stream_label("abd"));
}
