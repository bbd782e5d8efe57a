#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "shds/core.hpp"
#include "shds/systems.hpp"

using namespace shds;
using Catch::Approx;

TEST_CASE("hybrid time ordering and validation", "[core][time]") {
    CHECK(HybridTime(1.0, 0) < HybridTime(0.5, 2));
    CHECK(HybridTime(1.0, 1) < HybridTime(2.0, 1));
    CHECK(HybridTime(1.0, 1) == HybridTime(1.0, 1));
    CHECK(hybrid_time_sum(HybridTime(2.5, 3)) == 5.5);
    CHECK_THROWS_AS(HybridTime(-1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(HybridTime(0.0, -1), std::invalid_argument);
}

TEST_CASE("set descriptors measure membership and distance", "[core][sets]") {
    const auto c = SetDescriptor::box({{0.0, 1.0}});
    const auto d = SetDescriptor::singleton({1.0});
    const Vec inside{0.5};
    const Vec outside{3.0};
    CHECK(c.contains(inside));
    CHECK_FALSE(c.contains(outside));
    CHECK(c.distance(outside) == 2.0);
    CHECK(d.contains(Vec{1.0}));
    CHECK_FALSE(d.contains(Vec{0.999}));
    CHECK(d.distance(Vec{-1.0}) == 2.0);

    const auto u = set_union(SetDescriptor::box({{0.0, 1.0}}), SetDescriptor::box({{3.0, 4.0}}));
    CHECK(u.contains(Vec{3.5}));
    CHECK(u.distance(Vec{2.0}) == 1.0);

    const auto plane = SetDescriptor::box({{0.0, 1.0}, {0.0, 1.0}});
    CHECK(plane.distance(Vec{4.0, 5.0}) == Approx(5.0));

    const auto empty = SetDescriptor::union_of({});
    CHECK(empty.empty());
    CHECK(std::isinf(empty.distance(Vec{0.0})));
    CHECK_THROWS_AS(SetDescriptor::box({{1.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("distance to the target set combines x and r", "[core][sets]") {
    const SystemSpec spec = jammed_actuator({1.0, 0.1, 0.01});
    CHECK(dist_to_target(Vec{3.0}, Vec{0.5}, spec) == 3.0);
    CHECK(dist_to_target(Vec{0.0}, Vec{1.0}, spec) == 0.0);
    CHECK(dist_to_target(Vec{3.0}, Vec{5.0}, spec) == Approx(5.0));
    CHECK_THROWS_AS(dist_to_target(Vec{1.0, 2.0}, Vec{0.0}, spec), std::invalid_argument);
}

TEST_CASE("finite noise rejects probabilities that do not sum to one", "[core][noise]") {
    try {
        (void)JumpNoise::finite({{{0.0}, 0.6}, {{1.0}, 0.5}});
        FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()) == "probabilities sum to 1.1");
    }
    CHECK_THROWS_AS(JumpNoise::finite({{{0.0}, 1.5}, {{1.0}, -0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(JumpNoise::finite({}), std::invalid_argument);
    CHECK_NOTHROW(JumpNoise::finite({{{0.0}, 0.0}, {{1.0}, 1.0}}));
}

TEST_CASE("noise draws are addressed by seed and index", "[core][noise]") {
    const JumpNoise noise = jam_noise(0.3);
    CHECK(noise.draw(7, 11) == noise.draw(7, 11));

    // Relative frequency of v = 0.75 over independent indices.
    constexpr int kDraws = 100000;
    int high = 0;
    for (int i = 0; i < kDraws; ++i) {
        high += noise.draw(42, static_cast<std::uint64_t>(i))[0] > 0.0 ? 1 : 0;
    }
    const double freq = static_cast<double>(high) / kDraws;
    const double se = std::sqrt(0.3 * 0.7 / kDraws);
    CHECK(std::abs(freq - 0.3) < 5 * se);

    // Degenerate distributions never produce the zero-probability outcome.
    const JumpNoise always_low = jam_noise(0.0);
    for (int i = 0; i < 1000; ++i) {
        CHECK(always_low.draw(1, static_cast<std::uint64_t>(i))[0] == -0.75);
    }
}

TEST_CASE("draw streams produce uniform and normal variates", "[core][noise]") {
    constexpr int kDraws = 200000;
    double sum_u = 0.0;
    double sum_n = 0.0;
    double sum_n2 = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        DrawStream s(3, static_cast<std::uint64_t>(i));
        const double u = s.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum_u += u;
        const double z = s.normal();
        sum_n += z;
        sum_n2 += z * z;
    }
    CHECK(sum_u / kDraws == Approx(0.5).margin(5 * std::sqrt(1.0 / 12.0 / kDraws)));
    CHECK(sum_n / kDraws == Approx(0.0).margin(5 / std::sqrt(kDraws)));
    CHECK(sum_n2 / kDraws == Approx(1.0).margin(5 * std::sqrt(2.0 / kDraws)));
}

TEST_CASE("arcs interpolate within a segment and reject points outside", "[core][arc]") {
    HybridArc arc;
    FlowSegment s0(0, 1, 1);
    s0.push(0.0, Vec{0.0}, Vec{0.0}, 0.0);
    s0.push(1.0, Vec{2.0}, Vec{1.0}, 10.0);
    FlowSegment s1(1, 1, 1);
    s1.push(1.0, Vec{5.0}, Vec{0.0}, 10.0);
    s1.push(2.0, Vec{7.0}, Vec{1.0}, 20.0);
    arc.segments = {s0, s1};

    const auto mid = arc.state_at(HybridTime(0.25, 0));
    REQUIRE(mid.has_value());
    CHECK(mid->x[0] == Approx(0.5));
    CHECK(mid->tau == Approx(2.5));
    CHECK(arc.state_at(HybridTime(1.0, 1))->x[0] == 5.0);
    CHECK(arc.state_at(HybridTime(1.0, 0))->x[0] == 2.0);
    CHECK_FALSE(arc.state_at(HybridTime(1.5, 0)).has_value());
    CHECK_FALSE(arc.state_at(HybridTime(0.5, 1)).has_value());
    CHECK_FALSE(arc.state_at(HybridTime(0.5, 3)).has_value());
    CHECK(arc.end_time() == HybridTime(2.0, 1));
    CHECK(arc.sample_count() == 4);
}

TEST_CASE("structural validation of the jammed systems", "[core][validate]") {
    ValidationGrid grid;
    grid.r_points = {Vec{0.0}, Vec{0.5}, Vec{1.0}};
    const auto report = validate_spec(jammed_actuator({1.0, 0.1, 0.01}), grid);
    CHECK(report.passed());
    CHECK(report.flow_vanishes.status == CheckStatus::Pass);
    CHECK(report.jump_vanishes.status == CheckStatus::Pass);
    CHECK(report.jump_closure.status == CheckStatus::Pass);
    CHECK(report.h_bound == 0.0);

    ValidationGrid shell = grid;
    shell.shell_radius = 0.1;
    const auto es = validate_spec(jammed_es({1.0, 0.1, 0.01}, 0.1), shell);
    CHECK(es.passed());
    CHECK(es.flow_vanishes.status == CheckStatus::NotApplicable);

    // Without the excluded ball the regularized field does not vanish at 0.
    const auto es_full = validate_spec(jammed_es({1.0, 0.1, 0.01}, 0.1), grid);
    CHECK(es_full.flow_vanishes.status == CheckStatus::Fail);
    CHECK_FALSE(es_full.flow_vanishes.witness.empty());
}

TEST_CASE("validation reports a jump map that moves the origin", "[core][validate]") {
    SystemSpec spec = jammed_actuator({1.0, 0.1, 0.01});
    spec.g = [](ConstVecRef x, ConstVecRef, ConstVecRef v, VecRef out) { out[0] = x[0] + v[0]; };
    spec.h = [](ConstVecRef, ConstVecRef, VecRef out) { out[0] = 5.0; };
    const auto report = validate_spec(spec, {});
    CHECK_FALSE(report.passed());
    CHECK(report.jump_vanishes.status == CheckStatus::Fail);
    CHECK(report.jump_vanishes.worst == Approx(0.75));
    CHECK(report.jump_closure.status == CheckStatus::Fail);
    CHECK(report.h_bound == 5.0);
}

TEST_CASE("grid helpers", "[core][grid]") {
    const auto v = linspace(0.0, 1.0, 5);
    REQUIRE(v.size() == 5);
    CHECK(v.front() == 0.0);
    CHECK(v.back() == 1.0);
    CHECK(v[2] == 0.5);
    CHECK(linspace(3.0, 7.0, 1) == std::vector<double>{3.0});

    const auto pts = cartesian({{1.0, 2.0}, {10.0, 20.0, 30.0}});
    REQUIRE(pts.size() == 6);
    CHECK(pts[0] == Vec{1.0, 10.0});
    CHECK(pts[1] == Vec{1.0, 20.0});
    CHECK(pts[3] == Vec{2.0, 10.0});
    CHECK(cartesian({}).size() == 1);
}
