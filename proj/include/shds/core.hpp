#pragma once

// Domain model for stochastic hybrid dynamical systems with a fast clock.
//
// A system evolves the state (x, r, tau):
//
//   flow  (r in C):  x' = f(x, r, tau, eps),  r' = w(r),  tau' = 1/eps
//   jump  (r in D):  x+ = g(x, r, v),         r+ = h(r, v), tau+ = tau
//
// where v is drawn i.i.d. from a jump-noise distribution at every jump.
// C and D constrain only the auxiliary state r; x and tau are unconstrained.

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shds {

using Vec = std::vector<double>;
using ConstVecRef = std::span<const double>;
using VecRef = std::span<double>;

[[nodiscard]] double norm(ConstVecRef v);

// ---------------------------------------------------------------------------
// Hybrid time
// ---------------------------------------------------------------------------

struct HybridTime {
    double t = 0.0;
    std::int64_t j = 0;

    HybridTime() = default;
    HybridTime(double t_, std::int64_t j_);

    // Ordered by t + j first, then by t.
    [[nodiscard]] std::partial_ordering operator<=>(const HybridTime& other) const;
    [[nodiscard]] bool operator==(const HybridTime& other) const = default;
};

[[nodiscard]] double hybrid_time_sum(const HybridTime& ht);

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

struct StateVec {
    Vec x;
    Vec r;
    double tau = 0.0;

    [[nodiscard]] bool operator==(const StateVec& other) const = default;
};

// ---------------------------------------------------------------------------
// Sets over the auxiliary state
// ---------------------------------------------------------------------------

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Closed axis-aligned box. A box with lo == hi in every dimension is a point.
struct Box {
    std::vector<Interval> bounds;

    [[nodiscard]] std::size_t dim() const { return bounds.size(); }
    [[nodiscard]] bool contains(ConstVecRef r) const;
    [[nodiscard]] double distance(ConstVecRef r) const;
    void clamp(VecRef r) const;
};

enum class SetKind { IntervalBox, Singleton, UnionOfBoxes };

// Compact subset of R^p described by boxes. Membership is exact.
class SetDescriptor {
public:
    SetDescriptor() = default;

    [[nodiscard]] static SetDescriptor box(std::vector<Interval> bounds);
    [[nodiscard]] static SetDescriptor singleton(Vec point);
    [[nodiscard]] static SetDescriptor union_of(std::vector<Box> boxes);

    [[nodiscard]] SetKind kind() const { return kind_; }
    [[nodiscard]] const std::vector<Box>& boxes() const { return boxes_; }
    [[nodiscard]] std::size_t dim() const;
    [[nodiscard]] bool empty() const { return boxes_.empty(); }

    [[nodiscard]] bool contains(ConstVecRef r) const;
    // Euclidean distance from r to the set; +inf for the empty set.
    [[nodiscard]] double distance(ConstVecRef r) const;

    // Corners and centers of every box, in box order. Used to seed sampling
    // grids so that lower-dimensional pieces (e.g. a singleton jump set) are
    // always hit exactly.
    [[nodiscard]] std::vector<Vec> anchor_points() const;

private:
    SetKind kind_ = SetKind::UnionOfBoxes;
    std::vector<Box> boxes_;
};

[[nodiscard]] SetDescriptor set_union(const SetDescriptor& a, const SetDescriptor& b);

// ---------------------------------------------------------------------------
// Jump noise
// ---------------------------------------------------------------------------

struct NoiseOutcome {
    Vec value;
    double probability = 0.0;
};

// Deterministic per-draw generator handed to sampler-only distributions.
// Two streams built from the same (seed, draw index) produce the same numbers.
class DrawStream {
public:
    DrawStream(std::uint64_t seed, std::uint64_t draw_index);

    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double normal();

private:
    std::uint64_t state_;
};

using NoiseSampler = std::function<Vec(DrawStream&)>;

enum class NoiseKind { FiniteSupport, SamplerOnly };

class JumpNoise {
public:
    JumpNoise() = default;

    // Throws std::invalid_argument unless the probabilities sum to 1 within 1e-12.
    [[nodiscard]] static JumpNoise finite(std::vector<NoiseOutcome> support);
    [[nodiscard]] static JumpNoise sampler(std::size_t dim, NoiseSampler sampler);

    [[nodiscard]] NoiseKind kind() const { return kind_; }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] const std::vector<NoiseOutcome>& support() const { return support_; }

    // Draw number `draw_index` of the stream identified by `seed`.
    [[nodiscard]] Vec draw(std::uint64_t seed, std::uint64_t draw_index) const;

private:
    NoiseKind kind_ = NoiseKind::FiniteSupport;
    std::size_t dim_ = 0;
    std::vector<NoiseOutcome> support_;
    NoiseSampler sampler_;
};

// ---------------------------------------------------------------------------
// System description
// ---------------------------------------------------------------------------

using FlowMap = std::function<void(ConstVecRef x, ConstVecRef r, double tau, double eps, VecRef out)>;
using AuxFlowMap = std::function<void(ConstVecRef r, VecRef out)>;
using JumpMap = std::function<void(ConstVecRef x, ConstVecRef r, ConstVecRef v, VecRef out)>;
using AuxJumpMap = std::function<void(ConstVecRef r, ConstVecRef v, VecRef out)>;

struct SystemSpec {
    std::string name;
    std::size_t n = 0;  // main state
    std::size_t p = 0;  // auxiliary state
    std::size_t m = 0;  // jump noise
    FlowMap f;
    AuxFlowMap w;
    JumpMap g;
    AuxJumpMap h;
    SetDescriptor flow_set;  // C
    SetDescriptor jump_set;  // D
    JumpNoise noise;
    double epsilon = 1.0;
    // False when f does not depend on tau (e.g. an average system); the
    // integrator then ignores the epsilon-based step cap.
    bool fast_time = true;

    // Throws std::invalid_argument on a structural defect (missing maps,
    // dimension disagreement, non-positive epsilon).
    void check() const;

    [[nodiscard]] SetDescriptor flow_or_jump_set() const { return set_union(flow_set, jump_set); }
};

// |(x, r)|_A with A = {0} x (C u D).
[[nodiscard]] double dist_to_target(const StateVec& s, const SystemSpec& spec);
[[nodiscard]] double dist_to_target(ConstVecRef x, ConstVecRef r, const SystemSpec& spec);

// ---------------------------------------------------------------------------
// Hybrid arcs
// ---------------------------------------------------------------------------

enum class TerminalReason {
    TimeHorizon,   // t reached t_max
    JumpHorizon,   // j reached j_max
    LeftSets,      // state left C u D: the solution stops
};

[[nodiscard]] const char* to_string(TerminalReason reason);

// Samples of one flow interval at fixed jump count j. States are stored
// flat with stride n + p + 1: x..., r..., tau.
class FlowSegment {
public:
    FlowSegment(std::int64_t j, std::size_t n, std::size_t p);

    void push(double t, ConstVecRef x, ConstVecRef r, double tau);

    [[nodiscard]] std::int64_t j() const { return j_; }
    [[nodiscard]] std::size_t size() const { return t_.size(); }
    [[nodiscard]] bool empty() const { return t_.empty(); }
    [[nodiscard]] double t(std::size_t i) const { return t_[i]; }
    [[nodiscard]] double t_begin() const { return t_.front(); }
    [[nodiscard]] double t_end() const { return t_.back(); }
    [[nodiscard]] ConstVecRef x(std::size_t i) const;
    [[nodiscard]] ConstVecRef r(std::size_t i) const;
    [[nodiscard]] double tau(std::size_t i) const;
    [[nodiscard]] StateVec state(std::size_t i) const;

    [[nodiscard]] bool operator==(const FlowSegment& other) const = default;

private:
    std::int64_t j_;
    std::size_t n_;
    std::size_t p_;
    std::vector<double> t_;
    std::vector<double> data_;
};

struct JumpRecord {
    HybridTime at;  // (t, j) of the pre-jump state
    StateVec pre;
    Vec v;
    StateVec post;

    [[nodiscard]] bool operator==(const JumpRecord& other) const = default;
};

struct HybridArc {
    std::uint64_t seed = 0;
    std::vector<FlowSegment> segments;
    std::vector<JumpRecord> jumps;
    TerminalReason terminal = TerminalReason::TimeHorizon;

    [[nodiscard]] StateVec initial_state() const { return segments.front().state(0); }
    [[nodiscard]] StateVec final_state() const;
    [[nodiscard]] HybridTime end_time() const;
    [[nodiscard]] std::size_t sample_count() const;

    // State at hybrid time (t, j), linearly interpolated between samples of
    // segment j. Empty when (t, j) is outside the arc's domain.
    [[nodiscard]] std::optional<StateVec> state_at(const HybridTime& ht) const;

    [[nodiscard]] bool operator==(const HybridArc& other) const = default;
};

// ---------------------------------------------------------------------------
// Structural validation
// ---------------------------------------------------------------------------

struct ValidationGrid {
    std::vector<Vec> r_points;     // supplemented with the anchors of C and D
    std::vector<double> tau_points;
    std::vector<Vec> v_points;     // defaults to the noise support when empty
    // When positive, the origin lies inside an excluded ball of this radius and
    // the f(0, .) = 0 condition is not evaluated.
    double shell_radius = 0.0;
};

enum class CheckStatus { Pass, Fail, NotApplicable };

[[nodiscard]] const char* to_string(CheckStatus status);

struct ValidationItem {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    double worst = 0.0;        // largest violation measure seen
    std::string witness;       // human-readable worst point, empty on pass
    std::size_t evaluations = 0;
};

struct ValidationReport {
    ValidationItem flow_vanishes;    // |f(0, r, tau, eps)| <= tol
    ValidationItem jump_vanishes;    // |g(0, r, v)| <= tol for r in D
    ValidationItem jump_closure;     // h(r, v) in C u D for r in D
    ValidationItem aux_jump_bound;   // H = sup |h(r, v)|
    double h_bound = 0.0;

    [[nodiscard]] bool passed() const;
};

inline constexpr double kValidationTolerance = 1e-9;

[[nodiscard]] ValidationReport validate_spec(const SystemSpec& spec, const ValidationGrid& grid,
                                             double tol = kValidationTolerance);

// Evenly spaced values, both ends included.
[[nodiscard]] std::vector<double> linspace(double lo, double hi, std::size_t count);
// Cartesian product of per-dimension axes, last axis fastest.
[[nodiscard]] std::vector<Vec> cartesian(const std::vector<std::vector<double>>& axes);

}  // namespace shds
