#pragma once

// Execution of random hybrid solutions: fixed-step RK4 flows with exact
// clock advance, jump-priority semantics on D, and per-jump noise draws
// indexed by the jump counter.

#include <cstdint>
#include <optional>
#include <vector>

#include "shds/core.hpp"

namespace shds {

struct Horizon {
    double t_max = 1.0;
    std::int64_t j_max = 1000;

    Horizon() = default;
    Horizon(double t_max_, std::int64_t j_max_);
};

struct IntegratorConfig {
    double base_step = 0.01;
    double substep_per_epsilon = 0.1;
    // Keep every k-th flow sample. Segment endpoints are always kept.
    std::size_t record_every = 1;

    // min(base_step, epsilon * substep_per_epsilon), or base_step when the
    // system has no fast clock.
    [[nodiscard]] double effective_step(const SystemSpec& spec) const;
    void check() const;
};

// One classical RK4 step of (f, w) with tau advanced exactly by dt / eps.
// Throws std::runtime_error naming the map when a derivative is not finite.
[[nodiscard]] StateVec flow_step(const StateVec& s, const SystemSpec& spec, double dt);

// Earliest theta in [0, dt] at which r + theta * w(r) enters D, assuming w is
// constant over the step. Exact for timers.
[[nodiscard]] std::optional<double> detect_timer_crossing(const StateVec& s, const SystemSpec& spec, double dt);

// Throws std::invalid_argument("dead initial condition") when init.r is in
// neither C nor D.
[[nodiscard]] HybridArc simulate_path(const SystemSpec& spec, const StateVec& init, std::uint64_t seed,
                                      const Horizon& horizon, const IntegratorConfig& cfg);

// Path i uses seed seed_base + i and initial condition inits[i % inits.size()].
// Paths may run concurrently; results do not depend on scheduling.
[[nodiscard]] std::vector<HybridArc> simulate_ensemble(const SystemSpec& spec, const std::vector<StateVec>& inits,
                                                       std::size_t n_paths, std::uint64_t seed_base,
                                                       const Horizon& horizon, const IntegratorConfig& cfg);

}  // namespace shds
