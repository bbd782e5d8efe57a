#pragma once

// Built-in systems with a periodic jamming timer, and the config-driven loader.
//
// Both built-ins share the timer r in C = [0, T], D = {T}, w = 1, h = 0, and
// the jam x+ = (0.75 + v) x with v = 0.75 w.p. p and v = -0.75 otherwise.

#include <optional>
#include <vector>

#include "shds/averaging.hpp"
#include "shds/certificates.hpp"
#include "shds/config.hpp"
#include "shds/core.hpp"

namespace shds {

struct JamParams {
    double T = 1.0;
    double p = 0.1;
    double epsilon = 0.01;

    // Throws std::invalid_argument unless T > 0, 0 <= p <= 1, epsilon > 0.
    void check() const;
};

[[nodiscard]] JumpNoise jam_noise(double p);

// x' = -x (1 + sin tau) + u.
[[nodiscard]] SystemSpec jammed_actuator(const JamParams& params, double u = 0.0);

// Regularized extremum-seeking field. For |x| >= delta:
//   x' = -x sin tau - 2 x sin^2 tau - |x| sin^3 tau
// and inside the delta-ball the unregularized field with dither amplitude delta:
//   x' = -(1/delta) (x + delta sin tau)^2 sin tau
[[nodiscard]] SystemSpec jammed_es(const JamParams& params, double delta);

// Average system of both built-ins: x' = -x with the same timer and jumps.
[[nodiscard]] AverageSpec jammed_average(const JamParams& params);

// Builds a system from the [params], [system] and [noise] sections.
[[nodiscard]] SystemSpec load_system(const ConfigDocument& doc);

// Parses `[lo, hi] x [lo, hi] | {a, b}`-style set expressions of dimension dim.
[[nodiscard]] SetDescriptor parse_set(const ConfigDocument& doc, const ConfigEntry& entry, std::size_t dim);

// Closed-form average map from [average] f_ave.x_i, if registered.
[[nodiscard]] std::optional<AverageMap> load_average_map(const ConfigDocument& doc, const SystemSpec& spec);

// Lyapunov function from [certify] V; `quadratic` selects |x|^2. Throws
// ConfigError when absent.
[[nodiscard]] LyapunovFunction load_lyapunov(const ConfigDocument& doc, const SystemSpec& spec);

// `init = x_1, .., x_n ; r_1, .., r_p` lines from [simulate]; tau starts at 0.
[[nodiscard]] std::vector<StateVec> load_inits(const ConfigDocument& doc, const SystemSpec& spec);

}  // namespace shds
