#include <doctest.h>

#include <kbl/rng.hpp>

#include <cmath>
#include <set>
#include <vector>

using namespace kbl;

TEST_CASE("philox4x32-10 known answers") {
    // Random123 reference vectors: counter words, key words -> output words.
    auto out0 = philox::block({0u, 0u, 0u, 0u}, {0u, 0u});
    CHECK(out0 == std::array<uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

    auto out1 = philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              {0xffffffffu, 0xffffffffu});
    CHECK(out1 == std::array<uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

    auto out2 = philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              {0xa4093822u, 0x299f31d0u});
    CHECK(out2 == std::array<uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniform lands in (0,1] with the right mean") {
    RngStream st(0x1234abcd, StreamDomain::scratch);
    const int N = 20000;
    double s = 0.0, lo = 1.0, hi = 0.0;
    for (int i = 0; i < N; ++i) {
        double u = st.uniform(i);
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
        s += u;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    // 4 sigma around 1/2 (sd = 1/sqrt(12))
    CHECK(std::abs(s / N - 0.5) < 4.0 * 0.2887 / std::sqrt(double(N)));
    CHECK(lo < 0.001); // the sample actually explores both ends
    CHECK(hi > 0.999);
}

TEST_CASE("gaussian moments") {
    RngStream st(0xfeed, StreamDomain::scratch);
    const int N = 20000;
    double s = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < N; ++i) {
        double z = st.gaussian(i);
        CHECK(std::isfinite(z));
        s += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    double rn = std::sqrt(double(N));
    CHECK(std::abs(s / N) < 4.0 / rn);                          // mean 0, sd 1
    CHECK(std::abs(s2 / N - 1.0) < 4.0 * std::sqrt(2.0) / rn);  // var of z^2 is 2
    CHECK(std::abs(s4 / N - 3.0) < 4.0 * std::sqrt(96.0) / rn); // var of z^4 is 96
}

TEST_CASE("exponential moments") {
    RngStream st(0xbeef, StreamDomain::thresholds);
    const int N = 20000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < N; ++i) {
        double e = st.exponential(i);
        CHECK(e >= 0.0);
        s += e;
        s2 += e * e;
    }
    double rn = std::sqrt(double(N));
    CHECK(std::abs(s / N - 1.0) < 4.0 / rn);
    CHECK(std::abs(s2 / N - 2.0) < 4.0 * std::sqrt(20.0) / rn); // var of e^2 is 20
}

TEST_CASE("streams are reproducible and separated") {
    RngStream a(7, StreamDomain::increments, 3, 11);
    RngStream a2(7, StreamDomain::increments, 3, 11);
    RngStream b_domain(7, StreamDomain::thresholds, 3, 11);
    RngStream b_replica(7, StreamDomain::increments, 4, 11);
    RngStream b_particle(7, StreamDomain::increments, 3, 12);
    RngStream b_seed(8, StreamDomain::increments, 3, 11);

    for (uint64_t i : {0ull, 1ull, 12345ull, (1ull << 40)}) {
        CHECK(a.raw(i) == a2.raw(i));
        CHECK(a.raw(i) != b_domain.raw(i));
        CHECK(a.raw(i) != b_replica.raw(i));
        CHECK(a.raw(i) != b_particle.raw(i));
        CHECK(a.raw(i) != b_seed.raw(i));
    }
    CHECK(a.raw(0) != a.raw(1));
}

TEST_CASE("replica index is capped below 2^28") {
    CHECK_THROWS_AS(RngStream(1, StreamDomain::increments, 1u << 28), config_error);
    CHECK_NOTHROW(RngStream(1, StreamDomain::increments, (1u << 28) - 1));
}
