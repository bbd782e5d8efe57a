#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "oracles.hpp"
#include "shds/stats.hpp"
#include "shds/systems.hpp"

using namespace shds;
using Catch::Approx;

namespace {

StateVec start(double x, double r = 0.0) { return {{x}, {r}, 0.0}; }

// x' = -x with a timer that never jumps within the horizons used here.
SystemSpec pure_decay() {
    SystemSpec spec = jammed_actuator({1000.0, 0.5, 1.0});
    spec.f = [](ConstVecRef x, ConstVecRef, double, double, VecRef out) { out[0] = -x[0]; };
    spec.fast_time = false;
    return spec;
}

IntegratorConfig fine() {
    IntegratorConfig cfg;
    cfg.base_step = 1e-3;
    return cfg;
}

}  // namespace

TEST_CASE("hitting time of exponential decay", "[stats][hitting]") {
    const SystemSpec spec = pure_decay();
    const auto arc = simulate_path(spec, start(4.0), 0, Horizon(5.0, 10), fine());
    const auto hit = hitting_time(arc, spec, 1.0);
    REQUIRE(hit.has_value());
    CHECK(hit->j == 0);
    CHECK(hit->t == Approx(std::log(4.0)).margin(2e-3));
    CHECK_FALSE(hitting_time(arc, spec, 1e-6).has_value());
    CHECK_THROWS_AS(hitting_time(arc, spec, 0.0), std::invalid_argument);
}

TEST_CASE("Wilson intervals match reference values", "[stats][wilson]") {
    for (const auto& ref : oracle::kWilson) {
        const auto ci = wilson_interval(static_cast<std::size_t>(ref.successes), static_cast<std::size_t>(ref.trials));
        CHECK(ci.lower == Approx(ref.lower).margin(1e-12));
        CHECK(ci.upper == Approx(ref.upper).margin(1e-12));
    }
}

TEST_CASE("Wilson intervals contain the point estimate", "[stats][wilson][property]") {
    for (std::size_t n : {1UL, 7UL, 30UL, 200UL}) {
        for (std::size_t k = 0; k <= n; ++k) {
            const auto ci = wilson_interval(k, n);
            const double phat = static_cast<double>(k) / static_cast<double>(n);
            CHECK(ci.lower <= phat + 1e-15);
            CHECK(ci.upper >= phat - 1e-15);
            CHECK(ci.lower >= 0.0);
            CHECK(ci.upper <= 1.0);
        }
    }
}

TEST_CASE("recurrence estimate on a decaying ensemble", "[stats][recurrence]") {
    const SystemSpec spec = pure_decay();
    const auto arcs = simulate_ensemble(spec, {start(-2.0), start(2.0)}, 40, 0, Horizon(4.0, 10), fine());
    RecurrenceParams params;
    params.radius = 0.5;
    params.R = 2.0;
    params.t_budget = 4.0;
    params.j_budget = 10;
    const auto report = recurrence_estimate(arcs, spec, params);
    CHECK(report.hits == 40);
    CHECK(report.hit_fraction == 1.0);
    REQUIRE(report.certified());
    CHECK(*report.tau_hat == Approx(std::log(4.0)).margin(2e-3));
    CHECK(report.terminal_time == 40);
    CHECK(report.interval.upper == 1.0);

    params.radius = 1e-3;
    const auto miss = recurrence_estimate(arcs, spec, params);
    CHECK(miss.hits == 0);
    CHECK_FALSE(miss.certified());
    CHECK(miss.tau_candidate == Approx(14.0));
}

TEST_CASE("paths starting inside the ball are recurrent at time zero", "[stats][recurrence]") {
    const SystemSpec spec = pure_decay();
    const auto arcs = simulate_ensemble(spec, {start(0.05), start(0.5)}, 30, 0, Horizon(1.0, 1), fine());
    RecurrenceParams params;
    params.radius = 0.1;
    params.R = 1.0;
    params.rho = 0.6;
    const auto report = recurrence_estimate(arcs, spec, params);
    // With a zero budget only the paths starting inside can hit.
    CHECK(report.hits == 15);
    CHECK(report.hit_fraction == 0.5);
    REQUIRE(report.certified());
    CHECK(*report.tau_hat == 0.0);
}

TEST_CASE("recurrence estimation validates its inputs", "[stats][errors]") {
    const SystemSpec spec = pure_decay();
    const auto few = simulate_ensemble(spec, {start(1.0)}, 29, 0, Horizon(1.0, 1), fine());
    RecurrenceParams params;
    params.radius = 0.5;
    params.t_budget = 1.0;
    CHECK_THROWS_WITH(recurrence_estimate(few, spec, params), Catch::Matchers::ContainsSubstring("at least 30"));

    const auto far = simulate_ensemble(spec, {start(5.0)}, 30, 0, Horizon(1.0, 1), fine());
    params.R = 1.0;
    CHECK_THROWS_WITH(recurrence_estimate(far, spec, params), Catch::Matchers::ContainsSubstring("R-ball"));
    params.R = 10.0;
    params.rho = 1.0;
    CHECK_THROWS_AS(recurrence_estimate(far, spec, params), std::invalid_argument);
}

TEST_CASE("solutions that stop before the budget count as recurrent", "[stats][recurrence]") {
    SystemSpec spec = pure_decay();
    spec.flow_set = SetDescriptor::box({{0.0, 0.5}});
    spec.jump_set = SetDescriptor::union_of({});
    const auto arcs = simulate_ensemble(spec, {start(3.0)}, 30, 0, Horizon(5.0, 10), fine());
    RecurrenceParams params;
    params.radius = 0.1;
    params.R = 5.0;
    params.t_budget = 5.0;
    params.j_budget = 10;
    const auto report = recurrence_estimate(arcs, spec, params);
    CHECK(report.terminal_left == 30);
    CHECK(report.hits == 0);
    CHECK(report.early_stops == 30);
    CHECK(report.hit_fraction == 1.0);
    CHECK(report.certified());
    for (const auto& path : report.paths) {
        CHECK(path.stopped);
        CHECK(path.counted);
    }
}

TEST_CASE("post-jump grid picks the last jump at each time", "[stats][envelope]") {
    const SystemSpec spec = jammed_actuator({1.0, 0.5, 0.05});
    const auto arc = simulate_path(spec, start(1.0), 0, Horizon(3.0, 100), {});
    const auto grid = post_jump_grid(arc, {0.0, 0.5, 1.0, 2.5, 3.0});
    REQUIRE(grid.size() == 5);
    CHECK(grid[0] == HybridTime(0.0, 0));
    CHECK(grid[1] == HybridTime(0.5, 0));
    CHECK(grid[2] == HybridTime(1.0, 1));
    CHECK(grid[3] == HybridTime(2.5, 2));
    CHECK(grid[4] == HybridTime(3.0, 3));
}

TEST_CASE("envelope fit recovers the decay rate of x' = -x", "[stats][envelope]") {
    const SystemSpec spec = pure_decay();
    const auto arcs = simulate_ensemble(spec, {start(1.0), start(-3.0)}, 20, 0, Horizon(5.0, 10), fine());
    const auto grid = post_jump_grid(arcs.front(), linspace(0.0, 5.0, 21));
    const auto fit = uges_m_fit(arcs, spec, grid);
    CHECK(fit.k2 == Approx(1.0).margin(1e-3));
    CHECK(fit.k1 == Approx(1.0).margin(1e-3));
    CHECK(fit.paths_used == 20);
    const auto check = check_envelope(fit, arcs, spec);
    CHECK(check.holds);

    const auto dead = simulate_ensemble(spec, {start(0.0)}, 3, 0, Horizon(1.0, 1), fine());
    CHECK_THROWS_AS(uges_m_fit(dead, spec, grid), std::invalid_argument);
    CHECK_THROWS_AS(uges_m_fit(arcs, spec, {}), std::invalid_argument);
}

TEST_CASE("envelope fit is positive for the jammed actuator", "[stats][envelope]") {
    const SystemSpec spec = jammed_actuator({1.0, 0.1, 0.05});
    const auto arcs = simulate_ensemble(spec, {start(1.0), start(-1.0)}, 60, 0, Horizon(5.0, 100), {});
    const auto grid = post_jump_grid(arcs.front(), linspace(0.0, 5.0, 26));
    const auto fit = uges_m_fit(arcs, spec, grid);
    CHECK(fit.k2 > 0.0);
    CHECK(fit.k1 >= 1.0);
    for (double r : fit.residuals) {
        CHECK(r >= -1e-12);
    }
}

TEST_CASE("epsilon sweep of a fast-time-free flow is flat", "[stats][sweep]") {
    const SpecFamily family = [](double eps) {
        SystemSpec spec = jammed_actuator({1.0, 0.1, eps});
        spec.f = [](ConstVecRef x, ConstVecRef, double, double, VecRef out) { out[0] = -x[0]; };
        spec.fast_time = false;
        return spec;
    };
    SweepParams params;
    params.inits = {start(-2.0), start(2.0)};
    params.n_paths = 40;
    params.horizon = Horizon(3.0, 100);
    params.R = 2.0;
    const auto result = epsilon_sweep(family, {0.1, 0.05}, params);
    REQUIRE(result.entries.size() == 2);
    CHECK(result.monotone);
    CHECK(result.entries[0].certified);
    CHECK(result.entries[0].radius == result.entries[1].radius);
    CHECK(result.entries[0].radius < 2.0);
    CHECK_THROWS_AS(epsilon_sweep(family, {0.05, 0.1}, params), std::invalid_argument);
    CHECK_THROWS_AS(epsilon_sweep(family, {}, params), std::invalid_argument);
}
