#pragma once

// Grid verification of a Lyapunov-Foster function V for an average system:
//
//   c1 |z|_A^2 <= V(z) <= c2 |z|_A^2,   |grad V(z)| <= c3 |z|_A     on R^n x (C u D)
//   <grad V(z), F_ave(z)> <= -c4 V(z)                               on R^n x C
//   E_v[ V(G_ave(z, v)) ] <= c5 V(z)                                on R^n x D
//
// with lambda = (c2 / c1) c5 required to be strictly below 1/2. Results are
// grid-certified only: constants are extrema over the sampled points.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shds/averaging.hpp"
#include "shds/core.hpp"

namespace shds {

using ScalarField = std::function<double(ConstVecRef x, ConstVecRef r)>;
// Gradient with respect to z = (x, r); output has n + p entries.
using GradientField = std::function<void(ConstVecRef x, ConstVecRef r, VecRef out)>;

struct LyapunovFunction {
    std::string name;
    ScalarField value;
    GradientField gradient;  // optional; central differences when empty

    [[nodiscard]] Vec grad(ConstVecRef x, ConstVecRef r, double fd_step) const;
};

// V(x, r) = |x|^2 with exact gradient (2x, 0).
[[nodiscard]] LyapunovFunction quadratic_lyapunov();
// alpha * V, keeping a registered gradient exact.
[[nodiscard]] LyapunovFunction scaled(const LyapunovFunction& v, double alpha);

struct CertificateGrid {
    std::vector<Vec> x_points;
    std::vector<Vec> r_flow;  // points of C
    std::vector<Vec> r_jump;  // points of D
    std::string description;
};

struct CertificateGridOptions {
    double r_min = 1e-3;
    double r_max = 10.0;
    std::size_t radial_points = 41;  // log-spaced on [r_min, r_max]
    std::size_t aux_points = 11;     // per non-degenerate dimension of each box
};

// Log-radial grid in |x| crossed with a uniform grid over every box of C u D.
[[nodiscard]] CertificateGrid make_certificate_grid(const AverageSpec& avg, const CertificateGridOptions& opts = {});

struct GridWitness {
    Vec x;
    Vec r;
    double value = 0.0;
};

struct SandwichCheck {
    double c1 = 0.0;
    double c2 = 0.0;
    bool ok = true;
    GridWitness argmin;
    GridWitness argmax;
    std::optional<GridWitness> failure;  // V(z) <= 0 with |z|_A > 0
    std::size_t evaluations = 0;
};

struct GradientCheck {
    double c3 = 0.0;
    GridWitness argmax;
    std::size_t evaluations = 0;
};

struct FlowDecreaseCheck {
    double c4 = 0.0;
    bool ok = true;
    GridWitness argmin;
    std::optional<GridWitness> failure;  // worst nonnegative <grad V, F_ave> / V
    std::size_t evaluations = 0;
};

struct ExpectedJumpValue {
    double value = 0.0;
    double std_error = 0.0;  // zero for finite-support noise
};

struct JumpCheck {
    double c5 = 0.0;
    double max_std_error = 0.0;
    GridWitness argmax;
    std::size_t evaluations = 0;
};

[[nodiscard]] SandwichCheck check_sandwich(const LyapunovFunction& v, const AverageSpec& avg,
                                           const CertificateGrid& grid);

[[nodiscard]] GradientCheck check_gradient_bound(const LyapunovFunction& v, const AverageSpec& avg,
                                                 const CertificateGrid& grid,
                                                 double fd_step = kFiniteDifferenceStep);

// Samples R^n x C, plus R^n x D when include_jump_set is set.
[[nodiscard]] FlowDecreaseCheck check_flow_decrease(const LyapunovFunction& v, const AverageSpec& avg,
                                                    const CertificateGrid& grid,
                                                    double fd_step = kFiniteDifferenceStep,
                                                    bool include_jump_set = false);

// Exact weighted sum for finite-support noise; Monte Carlo mean over
// mc_samples draws of stream `seed` otherwise.
[[nodiscard]] ExpectedJumpValue expected_jump_value(const LyapunovFunction& v, const AverageSpec& avg,
                                                    const StateVec& z, const JumpNoise& noise,
                                                    std::size_t mc_samples = 100000, std::uint64_t seed = 0);

[[nodiscard]] JumpCheck check_jump_condition(const LyapunovFunction& v, const AverageSpec& avg,
                                             const CertificateGrid& grid, const JumpNoise& noise,
                                             std::size_t mc_samples = 100000, std::uint64_t seed = 0);

struct CertificateOptions {
    double fd_step = kFiniteDifferenceStep;
    // Tightens the gate to lambda < 1/2 - margin. Must be nonnegative.
    double margin = 0.0;
    bool flow_on_jump_set = false;
    std::size_t mc_samples = 100000;
    std::uint64_t seed = 0;
};

struct FosterCertificate {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    double c5 = 0.0;
    double lambda = 0.0;
    bool pass = false;
    std::vector<std::string> failures;
    SandwichCheck sandwich;
    GradientCheck gradient;
    FlowDecreaseCheck flow;
    JumpCheck jump;
    std::string grid_description;
};

[[nodiscard]] FosterCertificate foster_certificate(const LyapunovFunction& v, const AverageSpec& avg,
                                                   const CertificateGrid& grid, const JumpNoise& noise,
                                                   const CertificateOptions& opts = {});

}  // namespace shds
