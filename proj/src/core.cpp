#include "shds/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace shds {

double norm(ConstVecRef v) {
    double s = 0.0;
    for (double e : v) {
        s += e * e;
    }
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------

HybridTime::HybridTime(double t_, std::int64_t j_) : t(t_), j(j_) {
    if (!(t_ >= 0.0) || j_ < 0) {
        throw std::invalid_argument("hybrid time must satisfy t >= 0 and j >= 0");
    }
}

std::partial_ordering HybridTime::operator<=>(const HybridTime& other) const {
    const double a = hybrid_time_sum(*this);
    const double b = hybrid_time_sum(other);
    if (auto c = a <=> b; c != 0) {
        return c;
    }
    return t <=> other.t;
}

double hybrid_time_sum(const HybridTime& ht) { return ht.t + static_cast<double>(ht.j); }

// ---------------------------------------------------------------------------

bool Box::contains(ConstVecRef r) const {
    if (r.size() != bounds.size()) {
        return false;
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] >= bounds[i].lo && r[i] <= bounds[i].hi)) {
            return false;
        }
    }
    return true;
}

double Box::distance(ConstVecRef r) const {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        double d = 0.0;
        if (r[i] < bounds[i].lo) {
            d = bounds[i].lo - r[i];
        } else if (r[i] > bounds[i].hi) {
            d = r[i] - bounds[i].hi;
        }
        s += d * d;
    }
    return std::sqrt(s);
}

void Box::clamp(VecRef r) const {
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = std::clamp(r[i], bounds[i].lo, bounds[i].hi);
    }
}

namespace {

void check_box(const Box& b) {
    for (const auto& iv : b.bounds) {
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
            throw std::invalid_argument("set bounds must be finite closed intervals with lo <= hi");
        }
    }
}

}  // namespace

SetDescriptor SetDescriptor::box(std::vector<Interval> bounds) {
    SetDescriptor s;
    s.kind_ = SetKind::IntervalBox;
    s.boxes_.push_back(Box{std::move(bounds)});
    check_box(s.boxes_.front());
    return s;
}

SetDescriptor SetDescriptor::singleton(Vec point) {
    SetDescriptor s;
    s.kind_ = SetKind::Singleton;
    Box b;
    for (double v : point) {
        b.bounds.push_back({v, v});
    }
    check_box(b);
    s.boxes_.push_back(std::move(b));
    return s;
}

SetDescriptor SetDescriptor::union_of(std::vector<Box> boxes) {
    SetDescriptor s;
    s.kind_ = SetKind::UnionOfBoxes;
    for (const auto& b : boxes) {
        check_box(b);
        if (b.dim() != boxes.front().dim()) {
            throw std::invalid_argument("all boxes of a set must share one dimension");
        }
    }
    s.boxes_ = std::move(boxes);
    return s;
}

std::size_t SetDescriptor::dim() const { return boxes_.empty() ? 0 : boxes_.front().dim(); }

bool SetDescriptor::contains(ConstVecRef r) const {
    return std::any_of(boxes_.begin(), boxes_.end(), [&](const Box& b) { return b.contains(r); });
}

double SetDescriptor::distance(ConstVecRef r) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : boxes_) {
        best = std::min(best, b.distance(r));
    }
    return best;
}

std::vector<Vec> SetDescriptor::anchor_points() const {
    std::vector<Vec> out;
    for (const auto& b : boxes_) {
        std::vector<std::vector<double>> axes;
        Vec center;
        for (const auto& iv : b.bounds) {
            if (iv.lo == iv.hi) {
                axes.push_back({iv.lo});
            } else {
                axes.push_back({iv.lo, iv.hi});
            }
            center.push_back(0.5 * (iv.lo + iv.hi));
        }
        for (auto& c : cartesian(axes)) {
            out.push_back(std::move(c));
        }
        out.push_back(std::move(center));
    }
    return out;
}

SetDescriptor set_union(const SetDescriptor& a, const SetDescriptor& b) {
    std::vector<Box> boxes = a.boxes();
    boxes.insert(boxes.end(), b.boxes().begin(), b.boxes().end());
    return SetDescriptor::union_of(std::move(boxes));
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

DrawStream::DrawStream(std::uint64_t seed, std::uint64_t draw_index) {
    std::uint64_t s = seed;
    const std::uint64_t a = splitmix64(s);
    std::uint64_t t = draw_index ^ 0xD1B54A32D192ED03ULL;
    const std::uint64_t b = splitmix64(t);
    state_ = a ^ (b * 0xA24BAED4963EE407ULL);
}

std::uint64_t DrawStream::next_u64() { return splitmix64(state_); }

double DrawStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double DrawStream::normal() {
    // Box-Muller, first output only: one normal per two uniforms keeps the
    // stream position independent of any caching.
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

JumpNoise JumpNoise::finite(std::vector<NoiseOutcome> support) {
    if (support.empty()) {
        throw std::invalid_argument("finite-support noise needs at least one outcome");
    }
    double total = 0.0;
    for (const auto& o : support) {
        if (!(o.probability >= 0.0 && o.probability <= 1.0)) {
            throw std::invalid_argument("noise probabilities must lie in [0, 1]");
        }
        if (o.value.size() != support.front().value.size()) {
            throw std::invalid_argument("noise outcomes must share one dimension");
        }
        total += o.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "probabilities sum to " << total;
        throw std::invalid_argument(os.str());
    }
    JumpNoise n;
    n.kind_ = NoiseKind::FiniteSupport;
    n.dim_ = support.front().value.size();
    n.support_ = std::move(support);
    return n;
}

JumpNoise JumpNoise::sampler(std::size_t dim, NoiseSampler sampler) {
    if (!sampler) {
        throw std::invalid_argument("sampler-only noise needs a sampler");
    }
    JumpNoise n;
    n.kind_ = NoiseKind::SamplerOnly;
    n.dim_ = dim;
    n.sampler_ = std::move(sampler);
    return n;
}

Vec JumpNoise::draw(std::uint64_t seed, std::uint64_t draw_index) const {
    DrawStream stream(seed, draw_index);
    if (kind_ == NoiseKind::SamplerOnly) {
        Vec v = sampler_(stream);
        if (v.size() != dim_) {
            throw std::runtime_error("noise sampler returned a vector of the wrong dimension");
        }
        return v;
    }
    const double u = stream.uniform();
    double cumulative = 0.0;
    for (const auto& o : support_) {
        cumulative += o.probability;
        if (u < cumulative) {
            return o.value;
        }
    }
    // u lands above the rounded cumulative sum: take the last outcome with mass.
    for (auto it = support_.rbegin(); it != support_.rend(); ++it) {
        if (it->probability > 0.0) {
            return it->value;
        }
    }
    return support_.back().value;
}

// ---------------------------------------------------------------------------

void SystemSpec::check() const {
    if (!f || !w || !g || !h) {
        throw std::invalid_argument("system '" + name + "': all of f, w, g, h must be set");
    }
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("system '" + name + "': epsilon must be positive");
    }
    if (flow_set.dim() != p && !flow_set.empty()) {
        throw std::invalid_argument("system '" + name + "': flow set dimension differs from p");
    }
    if (jump_set.dim() != p && !jump_set.empty()) {
        throw std::invalid_argument("system '" + name + "': jump set dimension differs from p");
    }
    if (noise.dim() != m) {
        throw std::invalid_argument("system '" + name + "': noise dimension differs from m");
    }
}

double dist_to_target(ConstVecRef x, ConstVecRef r, const SystemSpec& spec) {
    if (x.size() != spec.n || r.size() != spec.p) {
        throw std::invalid_argument("dist_to_target: state dimensions do not match the system");
    }
    double s = 0.0;
    for (double e : x) {
        s += e * e;
    }
    double dr = 0.0;
    if (!spec.flow_set.contains(r) && !spec.jump_set.contains(r)) {
        dr = std::min(spec.flow_set.distance(r), spec.jump_set.distance(r));
    }
    return std::sqrt(s + dr * dr);
}

double dist_to_target(const StateVec& s, const SystemSpec& spec) { return dist_to_target(s.x, s.r, spec); }

// ---------------------------------------------------------------------------

const char* to_string(TerminalReason reason) {
    switch (reason) {
        case TerminalReason::TimeHorizon:
            return "time_horizon";
        case TerminalReason::JumpHorizon:
            return "jump_horizon";
        case TerminalReason::LeftSets:
            return "left_sets";
    }
    return "unknown";
}

FlowSegment::FlowSegment(std::int64_t j, std::size_t n, std::size_t p) : j_(j), n_(n), p_(p) {}

void FlowSegment::push(double t, ConstVecRef x, ConstVecRef r, double tau) {
    t_.push_back(t);
    data_.insert(data_.end(), x.begin(), x.end());
    data_.insert(data_.end(), r.begin(), r.end());
    data_.push_back(tau);
}

ConstVecRef FlowSegment::x(std::size_t i) const {
    return ConstVecRef(data_).subspan(i * (n_ + p_ + 1), n_);
}

ConstVecRef FlowSegment::r(std::size_t i) const {
    return ConstVecRef(data_).subspan(i * (n_ + p_ + 1) + n_, p_);
}

double FlowSegment::tau(std::size_t i) const { return data_[i * (n_ + p_ + 1) + n_ + p_]; }

StateVec FlowSegment::state(std::size_t i) const {
    auto xs = x(i);
    auto rs = r(i);
    return StateVec{Vec(xs.begin(), xs.end()), Vec(rs.begin(), rs.end()), tau(i)};
}

StateVec HybridArc::final_state() const {
    const auto& seg = segments.back();
    return seg.state(seg.size() - 1);
}

HybridTime HybridArc::end_time() const { return HybridTime(segments.back().t_end(), segments.back().j()); }

std::size_t HybridArc::sample_count() const {
    std::size_t total = 0;
    for (const auto& s : segments) {
        total += s.size();
    }
    return total;
}

std::optional<StateVec> HybridArc::state_at(const HybridTime& ht) const {
    for (const auto& seg : segments) {
        if (seg.j() != ht.j) {
            continue;
        }
        if (ht.t < seg.t_begin() || ht.t > seg.t_end()) {
            continue;
        }
        // First sample with t >= ht.t.
        std::size_t lo = 0;
        std::size_t hi = seg.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (seg.t(mid) < ht.t) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if (seg.t(lo) == ht.t || lo == 0) {
            return seg.state(lo);
        }
        const double t0 = seg.t(lo - 1);
        const double t1 = seg.t(lo);
        const double a = (ht.t - t0) / (t1 - t0);
        StateVec s0 = seg.state(lo - 1);
        const StateVec s1 = seg.state(lo);
        for (std::size_t i = 0; i < s0.x.size(); ++i) {
            s0.x[i] += a * (s1.x[i] - s0.x[i]);
        }
        for (std::size_t i = 0; i < s0.r.size(); ++i) {
            s0.r[i] += a * (s1.r[i] - s0.r[i]);
        }
        s0.tau += a * (s1.tau - s0.tau);
        return s0;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

const char* to_string(CheckStatus status) {
    switch (status) {
        case CheckStatus::Pass:
            return "pass";
        case CheckStatus::Fail:
            return "fail";
        case CheckStatus::NotApplicable:
            return "n/a";
    }
    return "unknown";
}

bool ValidationReport::passed() const {
    for (const auto* item : {&flow_vanishes, &jump_vanishes, &jump_closure, &aux_jump_bound}) {
        if (item->status == CheckStatus::Fail) {
            return false;
        }
    }
    return true;
}

namespace {

std::string describe(std::initializer_list<std::pair<const char*, ConstVecRef>> parts) {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (const auto& [label, values] : parts) {
        if (!first) {
            os << ' ';
        }
        first = false;
        os << label << "=(";
        for (std::size_t i = 0; i < values.size(); ++i) {
            os << (i ? "," : "") << values[i];
        }
        os << ')';
    }
    return os.str();
}

void record(ValidationItem& item, double measure, bool violated, const std::string& witness) {
    ++item.evaluations;
    if (violated && (item.status != CheckStatus::Fail || measure > item.worst)) {
        item.status = CheckStatus::Fail;
        item.witness = witness;
    }
    item.worst = std::max(item.worst, measure);
}

}  // namespace

ValidationReport validate_spec(const SystemSpec& spec, const ValidationGrid& grid, double tol) {
    spec.check();
    ValidationReport report;
    report.flow_vanishes.name = "f(0,r,tau,eps) = 0";
    report.jump_vanishes.name = "g(0,r,v) = 0";
    report.jump_closure.name = "h(r,v) in C u D";
    report.aux_jump_bound.name = "sup |h(r,v)|";

    std::vector<Vec> r_points = grid.r_points;
    for (auto& a : spec.flow_set.anchor_points()) {
        r_points.push_back(std::move(a));
    }
    for (auto& a : spec.jump_set.anchor_points()) {
        r_points.push_back(std::move(a));
    }
    std::vector<Vec> v_points = grid.v_points;
    if (v_points.empty()) {
        if (spec.noise.kind() == NoiseKind::FiniteSupport) {
            for (const auto& o : spec.noise.support()) {
                v_points.push_back(o.value);
            }
        } else {
            for (std::uint64_t k = 0; k < 64; ++k) {
                v_points.push_back(spec.noise.draw(0, k));
            }
        }
    }
    std::vector<double> tau_points = grid.tau_points;
    if (tau_points.empty()) {
        tau_points = linspace(0.0, 2.0 * std::numbers::pi, 64);
    }

    const Vec zero_x(spec.n, 0.0);
    Vec fx(spec.n);
    Vec gx(spec.n);
    Vec hr(spec.p);
    const SetDescriptor c_or_d = spec.flow_or_jump_set();

    if (grid.shell_radius > 0.0) {
        report.flow_vanishes.status = CheckStatus::NotApplicable;
    }
    for (const auto& r : r_points) {
        const bool in_c = spec.flow_set.contains(r);
        const bool in_d = spec.jump_set.contains(r);
        if (in_c && grid.shell_radius <= 0.0) {
            for (double tau : tau_points) {
                spec.f(zero_x, r, tau, spec.epsilon, fx);
                const double m = norm(fx);
                Vec tv{tau};
                record(report.flow_vanishes, m, !(m <= tol), describe({{"x", zero_x}, {"r", r}, {"tau", tv}}));
            }
        }
        if (!in_d) {
            continue;
        }
        for (const auto& v : v_points) {
            spec.g(zero_x, r, v, gx);
            const double mg = norm(gx);
            record(report.jump_vanishes, mg, !(mg <= tol), describe({{"x", zero_x}, {"r", r}, {"v", v}}));

            spec.h(r, v, hr);
            const double dist = c_or_d.distance(hr);
            record(report.jump_closure, dist, !c_or_d.contains(hr), describe({{"r", r}, {"v", v}, {"h", hr}}));

            const double mh = norm(hr);
            ++report.aux_jump_bound.evaluations;
            report.h_bound = std::max(report.h_bound, mh);
            if (!std::isfinite(mh)) {
                report.aux_jump_bound.status = CheckStatus::Fail;
                report.aux_jump_bound.witness = describe({{"r", r}, {"v", v}});
            }
        }
    }
    report.aux_jump_bound.worst = report.h_bound;
    return report;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out;
    if (count == 0) {
        return out;
    }
    if (count == 1) {
        out.push_back(lo);
        return out;
    }
    out.reserve(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i + 1 < count; ++i) {
        out.push_back(lo + step * static_cast<double>(i));
    }
    out.push_back(hi);
    return out;
}

std::vector<Vec> cartesian(const std::vector<std::vector<double>>& axes) {
    std::vector<Vec> out{Vec{}};
    for (const auto& axis : axes) {
        std::vector<Vec> next;
        next.reserve(out.size() * axis.size());
        for (const auto& prefix : out) {
            for (double v : axis) {
                Vec p = prefix;
                p.push_back(v);
                next.push_back(std::move(p));
            }
        }
        out = std::move(next);
    }
    return out;
}

}  // namespace shds
