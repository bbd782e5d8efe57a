#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "shds/averaging.hpp"
#include "shds/parallel.hpp"
#include "shds/solver.hpp"
#include "shds/systems.hpp"

using namespace shds;
using Catch::Approx;

namespace {

StateVec start(double x, double r = 0.0) { return {{x}, {r}, 0.0}; }

// x' = -x with a unit timer that never reaches its jump set inside [0, 100].
SystemSpec pure_decay() {
    SystemSpec spec = jammed_actuator({100.0, 0.5, 1.0});
    spec.name = "decay";
    spec.f = [](ConstVecRef x, ConstVecRef, double, double, VecRef out) { out[0] = -x[0]; };
    spec.fast_time = false;
    return spec;
}

}  // namespace

TEST_CASE("effective step resolves the fast clock", "[solver]") {
    IntegratorConfig cfg;
    CHECK(cfg.effective_step(jammed_actuator({1.0, 0.1, 0.01})) == Approx(0.001));
    CHECK(cfg.effective_step(jammed_actuator({1.0, 0.1, 1.0})) == Approx(0.01));
    CHECK(cfg.effective_step(pure_decay()) == Approx(0.01));
    IntegratorConfig bad;
    bad.base_step = 0.0;
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}

TEST_CASE("a timer of period T yields k jumps over k periods", "[solver][jumps]") {
    for (double T : {0.5, 1.0, 1.7}) {
        for (int k : {1, 3, 6}) {
            const SystemSpec spec = jammed_actuator({T, 0.5, 0.05});
            const auto arc = simulate_path(spec, start(1.0), 9, Horizon(k * T, 10000), {});
            CHECK(arc.jumps.size() == static_cast<std::size_t>(k));
            for (std::size_t i = 0; i < arc.jumps.size(); ++i) {
                CHECK(arc.jumps[i].at.t == Approx((i + 1) * T).margin(1e-9));
                CHECK(arc.jumps[i].post.r[0] == 0.0);
            }
        }
    }
}

TEST_CASE("jumps apply the sampled jam factor", "[solver][jumps]") {
    const SystemSpec spec = jammed_actuator({1.0, 0.5, 0.01});
    const auto arc = simulate_path(spec, start(2.0), 5, Horizon(4.0, 100), {});
    for (const auto& j : arc.jumps) {
        CHECK(j.post.x[0] == (0.75 + j.v[0]) * j.pre.x[0]);
        CHECK(j.post.tau == j.pre.tau);
        CHECK(j.post.r[0] == 0.0);
    }
}

TEST_CASE("average flow matches the exponential and converges at fourth order", "[solver][order]") {
    const AverageSpec avg = jammed_average({100.0, 0.1, 0.01});
    const SystemSpec sys = avg.as_system();
    double previous = 0.0;
    for (double h : {0.1, 0.05, 0.025, 0.0125}) {
        IntegratorConfig cfg;
        cfg.base_step = h;
        const auto arc = simulate_path(sys, start(1.5), 0, Horizon(2.0, 10), cfg);
        const auto fin = arc.final_state();
        const double err = std::abs(fin.x[0] - 1.5 * std::exp(-2.0));
        if (previous > 0.0) {
            CHECK(previous / err > 14.0);
            CHECK(previous / err < 18.0);
        }
        previous = err;
    }
}

TEST_CASE("tau advances as t / epsilon across jumps", "[solver][clock]") {
    const double eps = 0.01;
    const SystemSpec spec = jammed_actuator({1.0, 0.5, eps});
    const auto arc = simulate_path(spec, start(1.0), 3, Horizon(5.0, 100), {});
    double worst = 0.0;
    for (const auto& seg : arc.segments) {
        for (std::size_t i = 0; i < seg.size(); ++i) {
            worst = std::max(worst, std::abs(seg.tau(i) - seg.t(i) / eps));
        }
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("zero initial state stays at zero", "[solver]") {
    const SystemSpec spec = jammed_actuator({1.0, 0.1, 0.01});
    const auto arc = simulate_path(spec, start(0.0), 1, Horizon(5.0, 100), {});
    for (const auto& seg : arc.segments) {
        for (std::size_t i = 0; i < seg.size(); ++i) {
            REQUIRE(seg.x(i)[0] == 0.0);
        }
    }
}

TEST_CASE("initial timer outside C u D is rejected", "[solver][errors]") {
    const SystemSpec spec = jammed_actuator({1.0, 0.1, 0.01});
    CHECK_THROWS_WITH(simulate_path(spec, start(1.0, 3.0), 0, Horizon(1.0, 10), {}),
                      Catch::Matchers::ContainsSubstring("dead initial condition"));
}

TEST_CASE("non-finite derivatives name the offending map", "[solver][errors]") {
    SystemSpec spec = jammed_actuator({1.0, 0.1, 0.01});
    spec.f = [](ConstVecRef, ConstVecRef, double, double, VecRef out) { out[0] = std::nan(""); };
    CHECK_THROWS_WITH(simulate_path(spec, start(1.0), 0, Horizon(1.0, 10), {}),
                      Catch::Matchers::ContainsSubstring("flow map f"));
}

TEST_CASE("solutions stop when the timer leaves C with no jump set in the way", "[solver][terminal]") {
    SystemSpec spec = jammed_actuator({1.0, 0.1, 0.01});
    spec.jump_set = SetDescriptor::union_of({});
    const auto arc = simulate_path(spec, start(1.0), 0, Horizon(5.0, 10), {});
    CHECK(arc.terminal == TerminalReason::LeftSets);
    CHECK(arc.end_time().t < 1.1);
}

TEST_CASE("the jump horizon ends a path", "[solver][terminal]") {
    const SystemSpec spec = jammed_actuator({0.1, 0.1, 0.01});
    const auto arc = simulate_path(spec, start(1.0), 0, Horizon(100.0, 5), {});
    CHECK(arc.terminal == TerminalReason::JumpHorizon);
    CHECK(arc.jumps.size() == 5);
}

TEST_CASE("ensembles are reproducible and independent of the worker count", "[solver][ensemble]") {
    const SystemSpec spec = jammed_es({1.0, 0.3, 0.01}, 0.1);
    const std::vector<StateVec> inits{start(-2.0), start(2.0)};
    const Horizon horizon(3.0, 100);
    IntegratorConfig cfg;
    cfg.record_every = 5;

    ::setenv(kThreadsEnvVar, "1", 1);
    const auto serial = simulate_ensemble(spec, inits, 12, 100, horizon, cfg);
    ::setenv(kThreadsEnvVar, "4", 1);
    const auto parallel = simulate_ensemble(spec, inits, 12, 100, horizon, cfg);
    ::unsetenv(kThreadsEnvVar);
    CHECK(serial == parallel);

    for (std::size_t i : {0UL, 5UL, 11UL}) {
        const auto single = simulate_path(spec, inits[i % 2], 100 + i, horizon, cfg);
        CHECK(single == serial[i]);
    }
    CHECK_THROWS_AS(simulate_ensemble(spec, inits, 0, 0, horizon, cfg), std::invalid_argument);
}

TEST_CASE("parallel_for rethrows the lowest failing index", "[parallel]") {
    ::setenv(kThreadsEnvVar, "3", 1);
    try {
        parallel_for(20, [](std::size_t i) {
            if (i == 7 || i == 13) {
                throw std::runtime_error("index " + std::to_string(i));
            }
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "index 7");
    }
    ::unsetenv(kThreadsEnvVar);
}

TEST_CASE("record_every thins samples but keeps segment ends", "[solver][record]") {
    const SystemSpec spec = jammed_actuator({1.0, 0.5, 0.01});
    IntegratorConfig dense;
    IntegratorConfig sparse;
    sparse.record_every = 10;
    const auto a = simulate_path(spec, start(1.0), 2, Horizon(3.0, 100), dense);
    const auto b = simulate_path(spec, start(1.0), 2, Horizon(3.0, 100), sparse);
    REQUIRE(a.segments.size() == b.segments.size());
    CHECK(b.sample_count() < a.sample_count() / 5);
    CHECK(a.final_state() == b.final_state());
    for (std::size_t s = 0; s < a.segments.size(); ++s) {
        CHECK(a.segments[s].t_end() == b.segments[s].t_end());
    }
}
