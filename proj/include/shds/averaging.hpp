#pragma once

// Numerical averaging over the fast clock.
//
// For a flow map f(x, r, tau, eps) the window mean
//
//   m_T(x, r, tau0) = (1/T) * integral_{tau0}^{tau0+T} f(x, r, s, 0) ds
//
// converges to an average map f_ave(x, r) as T grows. The convergence
// function gamma(T) bounds |m_T - f_ave| / |x| uniformly; here it is the
// maximum over a sampling grid ("grid-certified"), reported together with its
// least nonincreasing majorant.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shds/core.hpp"

namespace shds {

using AverageMap = std::function<void(ConstVecRef x, ConstVecRef r, VecRef out)>;

// Average system: flow (f_ave, w) on R^n x C, the original jumps on R^n x D.
struct AverageSpec {
    std::string name;
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t m = 0;
    AverageMap f_ave;
    AuxFlowMap w;
    JumpMap g;
    AuxJumpMap h;
    SetDescriptor flow_set;
    SetDescriptor jump_set;
    JumpNoise noise;

    // SystemSpec view for the solver: no fast clock, epsilon fixed at 1.
    [[nodiscard]] SystemSpec as_system() const;
    [[nodiscard]] SetDescriptor flow_or_jump_set() const { return set_union(flow_set, jump_set); }
};

[[nodiscard]] AverageSpec build_average_system(const SystemSpec& spec, AverageMap f_ave);

// Panels per 2*pi of tau used when the caller does not fix a count.
inline constexpr std::size_t kPanelsPerPeriod = 40;

// max(min_panels, ceil(kPanelsPerPeriod * T / (2 pi))).
[[nodiscard]] std::size_t default_panels(double window, std::size_t min_panels = 8);

// Composite Simpson rule with `panels` panels (2 * panels subintervals).
[[nodiscard]] Vec window_average(const SystemSpec& spec, ConstVecRef x, ConstVecRef r, double tau0, double window,
                                 std::size_t panels);

// Least nonincreasing majorant: out[i] = max_{k >= i} values[k].
[[nodiscard]] std::vector<double> monotone_envelope(const std::vector<double>& values);

struct AveragingGrid {
    std::vector<Vec> x_points;
    std::vector<Vec> r_points;
    std::vector<double> tau_points;
    std::vector<double> windows;   // increasing
    std::size_t min_panels = 8;
};

struct GammaWitness {
    Vec x;
    Vec r;
    double tau = 0.0;
};

struct GammaCurve {
    std::vector<double> windows;
    std::vector<double> values;     // raw grid maxima
    std::vector<double> envelope;   // least nonincreasing majorant of values
    std::vector<GammaWitness> witnesses;
};

// Throws std::invalid_argument when the grid contains x = 0.
[[nodiscard]] GammaCurve estimate_gamma(const SystemSpec& spec, const AverageMap& f_ave, const AveragingGrid& grid);

struct JacobianCheck {
    GammaCurve residual;                  // |window mean of d(d)/d(x,r)|, Frobenius norm
    std::vector<double> normalized;       // the same divided by |x| at the witness maximizing it
    GammaCurve state;                     // estimate_gamma on the same grid
    std::vector<bool> exceeds_state_envelope;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;

// Central differences with step fd_step * max(1, |z_i|).
[[nodiscard]] JacobianCheck check_jacobian_average(const SystemSpec& spec, const AverageMap& f_ave,
                                                   const AveragingGrid& grid,
                                                   double fd_step = kFiniteDifferenceStep);

struct LipschitzEstimate {
    double value = 0.0;
    std::size_t samples = 0;
    Vec witness_a;
    Vec witness_b;
};

// Each estimate is a maximum of sampled difference quotients, hence a lower
// bound on the true constant.
struct LipschitzEstimates {
    LipschitzEstimate l_x;    // |f(x1) - f(x2)| / |x1 - x2|
    LipschitzEstimate l_eps;  // |f(eps1) - f(eps2)| / (|x| |eps1 - eps2|)
    LipschitzEstimate l_g;    // |g(x1) - g(x2)| / |x1 - x2| on D
    LipschitzEstimate l_ave;  // |f_ave(x1) - f_ave(x2)| / |x1 - x2|
};

struct LipschitzGrid {
    std::vector<Vec> x_points;      // at least two distinct points
    std::vector<Vec> r_points;      // supplemented with the anchors of C and D
    std::vector<double> tau_points;
    std::vector<double> eps_points; // defaults to {0, spec.epsilon}
    std::vector<Vec> v_points;      // defaults to the noise support
};

[[nodiscard]] LipschitzEstimates estimate_lipschitz(const SystemSpec& spec, const AverageMap& f_ave,
                                                    const LipschitzGrid& grid);

// Multilinear interpolant over a tensor grid in (x, r). Outside the grid the
// boundary cell is extended linearly.
class TabulatedMap {
public:
    TabulatedMap(std::vector<std::vector<double>> axes, std::size_t out_dim, std::vector<double> values);

    void operator()(ConstVecRef x, ConstVecRef r, VecRef out) const;

    [[nodiscard]] const std::vector<std::vector<double>>& axes() const { return axes_; }
    [[nodiscard]] std::size_t node_count() const;
    [[nodiscard]] ConstVecRef node_value(std::size_t flat_index) const;

private:
    std::vector<std::vector<double>> axes_;
    std::size_t out_dim_;
    std::vector<double> values_;
    std::vector<std::size_t> strides_;
};

struct AverageMapEstimate {
    AverageSpec average;
    std::vector<Vec> nodes;          // (x, r) concatenated, canonical grid order
    std::vector<Vec> node_values;    // window means at the nodes
    double nodal_residual = 0.0;     // shift sensitivity of the window mean at the nodes
    double midpoint_residual = 0.0;  // interpolant vs window mean at cell midpoints
    std::optional<double> closed_form_deviation;
    bool uses_closed_form = false;
};

// Tabulates window_average(x, r, 0, window) over the tensor grid. With a
// closed form registered, the table is checked against it (deviation must not
// exceed `tolerance`) and the closed form becomes the average map. Throws
// std::runtime_error when the grid is too coarse for interpolation.
[[nodiscard]] AverageMapEstimate estimate_average_map(const SystemSpec& spec,
                                                      const std::vector<std::vector<double>>& x_axes,
                                                      const std::vector<std::vector<double>>& r_axes, double window,
                                                      const std::optional<AverageMap>& closed_form = std::nullopt,
                                                      double tolerance = 1e-6);

}  // namespace shds
