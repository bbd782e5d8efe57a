#pragma once

// Ensemble statistics over simulated arcs: hitting times of open balls around
// the target set, recurrence estimates with binomial confidence intervals,
// exponential-in-the-mean envelopes, and epsilon sweeps of the smallest
// recurrent neighborhood.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shds/core.hpp"
#include "shds/solver.hpp"

namespace shds {

// First sample (in hybrid-time order) with dist_to_target < radius.
[[nodiscard]] std::optional<HybridTime> hitting_time(const HybridArc& arc, const SystemSpec& spec, double radius);

struct WilsonInterval {
    double lower = 0.0;
    double upper = 1.0;
};

// 95% Wilson score interval for `successes` out of `trials`.
[[nodiscard]] WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct RecurrenceParams {
    double radius = 1.0;  // open ball around A
    double rho = 0.05;
    double R = 10.0;      // initial conditions must satisfy |z(0,0)|_A <= R
    double t_budget = 0.0;
    std::int64_t j_budget = 0;
};

inline constexpr std::size_t kMinRecurrenceEnsemble = 30;

struct PathOutcome {
    std::optional<HybridTime> hit;  // within the budget
    bool stopped = false;           // solution ended by leaving C u D
    HybridTime end;
    TerminalReason terminal = TerminalReason::TimeHorizon;
    bool counted = false;           // contributes to hit_fraction
};

struct RecurrenceReport {
    double target_radius = 0.0;
    double rho = 0.0;
    double R = 0.0;
    double t_budget = 0.0;
    std::int64_t j_budget = 0;
    std::size_t n_paths = 0;
    std::size_t hits = 0;
    std::size_t early_stops = 0;      // stopped before tau_candidate without hitting
    double tau_candidate = 0.0;       // (1 - rho)-quantile of hitting t + j
    std::optional<double> tau_hat;    // tau_candidate, when hit_fraction >= 1 - rho
    double hit_fraction = 0.0;
    WilsonInterval interval;
    std::size_t terminal_time = 0;
    std::size_t terminal_jump = 0;
    std::size_t terminal_left = 0;
    std::vector<PathOutcome> paths;

    [[nodiscard]] bool certified() const { return tau_hat.has_value(); }
};

// Throws std::invalid_argument for fewer than kMinRecurrenceEnsemble arcs or an
// initial condition outside the R-ball.
[[nodiscard]] RecurrenceReport recurrence_estimate(const std::vector<HybridArc>& ensemble, const SystemSpec& spec,
                                                   const RecurrenceParams& params);

// (t, j) pairs for the given times, each with the largest jump count the
// reference arc reaches at that t (the state after all jumps at t).
[[nodiscard]] std::vector<HybridTime> post_jump_grid(const HybridArc& reference, const std::vector<double>& times);

struct EnvelopeFit {
    double k1 = 0.0;
    double k2 = 0.0;
    std::vector<HybridTime> times;
    std::vector<std::size_t> counts;       // paths whose domain contains the grid point
    std::vector<double> mean_ratio;        // E|z(t,j)|_A / |z(0,0)|_A
    std::vector<double> weighted_mean;     // E[|z|_A e^{k2 (t+j)}] / |z(0,0)|_A
    std::vector<double> weighted_se;       // standard error of weighted_mean
    std::vector<double> residuals;         // k1 - weighted_mean
    std::size_t paths_used = 0;
    std::size_t paths_excluded = 0;        // zero initial distance
    std::vector<std::string> warnings;
    std::string restriction = "evaluated at deterministic hybrid times only, not at all stopping times";
};

// Fits k2 as the largest rate for which m(t,j) e^{k2 (t+j)} stays below
// overshoot * max m over the grid, then k1 as the maximum of the left side.
// Throws std::invalid_argument when every path starts on A.
[[nodiscard]] EnvelopeFit uges_m_fit(const std::vector<HybridArc>& ensemble, const SystemSpec& spec,
                                     const std::vector<HybridTime>& grid, double overshoot = 1.0);

struct EnvelopeCheck {
    bool holds = true;
    double worst_excess = 0.0;  // max of mean - (k1 + slack * se); <= 0 when it holds
    std::optional<HybridTime> worst_time;
    std::vector<double> weighted_mean;
    std::vector<double> weighted_se;
};

// Checks E[|z|_A e^{k2 (t+j)}] <= k1 |z(0,0)|_A on an ensemble with
// slack_se standard errors of Monte Carlo slack.
[[nodiscard]] EnvelopeCheck check_envelope(const EnvelopeFit& fit, const std::vector<HybridArc>& ensemble,
                                           const SystemSpec& spec, double slack_se = 4.0);

using SpecFamily = std::function<SystemSpec(double epsilon)>;

struct SweepParams {
    std::vector<StateVec> inits;
    std::size_t n_paths = 200;
    std::uint64_t seed_base = 0;
    Horizon horizon;
    IntegratorConfig integrator;
    double rho = 0.05;
    double R = 10.0;
    double radius_floor = 1e-3;
    double relative_tolerance = 0.01;  // about two significant figures
    std::size_t max_bisections = 60;
};

struct SweepEntry {
    double epsilon = 0.0;
    bool certified = false;
    double radius = 0.0;   // smallest certified radius (upper end of the bracket)
    double bracket = 0.0;  // width of the final bisection bracket
    double hit_fraction = 0.0;
    std::size_t n_paths = 0;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    bool monotone = true;
    std::vector<std::size_t> violations;  // index i where entry i+1 exceeds entry i
};

// eps_list must be strictly decreasing.
[[nodiscard]] SweepResult epsilon_sweep(const SpecFamily& family, const std::vector<double>& eps_list,
                                        const SweepParams& params);

}  // namespace shds
