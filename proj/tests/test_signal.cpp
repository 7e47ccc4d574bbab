#include "dynsample/signal.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

using namespace dynsample::signal;

namespace {

ControlBounds unit_bounds(std::size_t n, double amp = 0.1) {
    return {Vector(n, 0.0), Vector(n, 1.0), Vector(n, amp)};
}

} // namespace

TEST_CASE("two-segment signal structure", "[signal]") {
    const std::vector<FaprbsSegment> segs{{10.0, 30}, {40.0, 10}};
    const auto s = generate_faprbs({0.5, 0.5}, segs, unit_bounds(2), 11);
    CHECK(s.plateaus() == 40);
    CHECK(s.total_duration == 700.0);
    CHECK(total_duration(segs) == 700.0);
    std::size_t changes = 0;
    for (std::size_t k = 1; k < s.levels.size(); ++k) {
        changes += s.levels[k] != s.levels[k - 1] ? 1 : 0;
    }
    CHECK(changes <= 39);
    const auto lengths = s.plateau_lengths();
    CHECK(std::count(lengths.begin(), lengths.end(), 10.0) == 30);
    CHECK(std::count(lengths.begin(), lengths.end(), 40.0) == 10);
    CHECK(std::all_of(lengths.begin(), lengths.begin() + 30, [](double l) { return l == 10.0; }));
}

TEST_CASE("levels clip at the lower bound", "[signal]") {
    const ControlBounds b{{0.05}, {0.07}, {0.004}};
    const auto s = generate_faprbs({0.05}, {{1.0, 200}}, b, 3);
    bool clipped = false;
    for (const auto& l : s.levels) {
        CHECK(l[0] >= 0.05);
        CHECK(l[0] <= 0.054);
        clipped = clipped || l[0] == 0.05;
    }
    CHECK(clipped);
}

TEST_CASE("single plateau is constant", "[signal]") {
    const auto s = generate_faprbs({0.5}, {{2.0, 1}}, unit_bounds(1), 5);
    REQUIRE(s.plateaus() == 1);
    CHECK(sample_at(s, 0.0) == sample_at(s, 2.0));
    CHECK(sample_at(s, 1.3) == s.levels[0]);
    CHECK(std::abs(s.levels[0][0] - 0.5) <= 0.1);
}

TEST_CASE("sample_at conventions", "[signal]") {
    const auto s = generate_faprbs({0.5, 0.4}, {{0.5, 4}, {1.0, 2}}, unit_bounds(2), 9);
    CHECK(sample_at(s, 0.0) == s.levels[0]);
    for (std::size_t k = 1; k < s.breakpoints.size(); ++k) {
        CHECK(sample_at(s, s.breakpoints[k]) == s.levels[k]);
        CHECK(sample_at(s, s.breakpoints[k] - 1e-6) == s.levels[k - 1]);
    }
    CHECK(sample_at(s, s.total_duration) == s.levels.back());
    // Accumulated grid times land on the breakpoint they approximate.
    double t = 0.0;
    for (int i = 0; i < 10; ++i) t += 0.05;
    CHECK(sample_at(s, t) == s.levels[1]);
    CHECK_THROWS_AS(sample_at(s, -0.1), std::out_of_range);
    CHECK_THROWS_AS(sample_at(s, 4.5), std::out_of_range);
}

TEST_CASE("bound, amplitude and determinism properties", "[signal]") {
    const ControlBounds b{{80, 340, 290}, {120, 360, 310}, {3, 1.5, 1.5}};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Vector mean{80.0 + 0.8 * double(seed), 340.0 + 0.4 * double(seed), 310.0};
        const auto s = generate_faprbs(mean, {{0.25, 30}, {1.0, 10}}, b, seed);
        for (const auto& l : s.levels) {
            for (std::size_t c = 0; c < 3; ++c) {
                REQUIRE(l[c] >= b.lower[c]);
                REQUIRE(l[c] <= b.upper[c]);
                REQUIRE(std::abs(l[c] - mean[c]) <= b.faprbs_amplitude[c]);
            }
        }
        REQUIRE(s == generate_faprbs(mean, {{0.25, 30}, {1.0, 10}}, b, seed));
        REQUIRE(s.mean_u == mean);
    }
    CHECK(generate_faprbs({100, 350, 300}, {{0.25, 30}}, b, 1) !=
          generate_faprbs({100, 350, 300}, {{0.25, 30}}, b, 2));
}

TEST_CASE("control bounds validation", "[signal]") {
    CHECK_NOTHROW(unit_bounds(3).validate());
    ControlBounds wide{{0, 0}, {1, 1}, {0.1, 0.6}};
    try {
        wide.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("channel 1") != std::string::npos);
    }
    CHECK_THROWS_AS((ControlBounds{{1}, {0}, {0.1}}.validate()), ConfigError);
    CHECK_THROWS_AS((ControlBounds{{0}, {1}, {0.0}}.validate()), ConfigError);
    CHECK_THROWS_AS(generate_faprbs({0.5}, {}, unit_bounds(1), 1), ConfigError);
    CHECK_THROWS_AS(generate_faprbs({1.5}, {{1.0, 1}}, unit_bounds(1), 1), ConfigError);
}

TEST_CASE("normalized and engineering coordinates", "[signal]") {
    const ControlBounds b{{80, 340}, {120, 360}, {3, 1.5}};
    const Vector eng = b.to_engineering({0.25, 1.0});
    CHECK(eng == Vector{90.0, 360.0});
    CHECK(b.to_normalized(eng) == Vector{0.25, 1.0});
}
