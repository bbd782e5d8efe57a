#include "shds/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "shds/parallel.hpp"

namespace shds {

Horizon::Horizon(double t_max_, std::int64_t j_max_) : t_max(t_max_), j_max(j_max_) {
    if (!(t_max_ > 0.0) || j_max_ <= 0) {
        throw std::invalid_argument("horizon: t_max and j_max must be strictly positive");
    }
}

double IntegratorConfig::effective_step(const SystemSpec& spec) const {
    if (!spec.fast_time) {
        return base_step;
    }
    return std::min(base_step, spec.epsilon * substep_per_epsilon);
}

void IntegratorConfig::check() const {
    if (!(base_step > 0.0) || !(substep_per_epsilon > 0.0)) {
        throw std::invalid_argument("integrator: base_step and substep_per_epsilon must be positive");
    }
    if (record_every == 0) {
        throw std::invalid_argument("integrator: record_every must be at least 1");
    }
}

namespace {

void require_finite(ConstVecRef values, const char* map_name, double t_hint) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << map_name << " returned a non-finite value (near t = " << t_hint << ")";
            throw std::runtime_error(os.str());
        }
    }
}

// RK4 workspace for one system; reused across steps to avoid allocation.
class Rk4Stepper {
public:
    explicit Rk4Stepper(const SystemSpec& spec)
        : spec_(spec),
          kx_(4, Vec(spec.n)),
          kr_(4, Vec(spec.p)),
          xs_(spec.n),
          rs_(spec.p) {}

    // Advances x and r in place. tau is the clock value at the start of the step.
    void step(Vec& x, Vec& r, double tau, double dt, double t_hint) {
        const double eps = spec_.epsilon;
        const double dtau = dt / eps;
        eval(x, r, tau, 0, t_hint);
        stage(x, r, 0, 0.5 * dt);
        eval(xs_, rs_, tau + 0.5 * dtau, 1, t_hint);
        stage(x, r, 1, 0.5 * dt);
        eval(xs_, rs_, tau + 0.5 * dtau, 2, t_hint);
        stage(x, r, 2, dt);
        eval(xs_, rs_, tau + dtau, 3, t_hint);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += dt / 6.0 * (kx_[0][i] + 2.0 * kx_[1][i] + 2.0 * kx_[2][i] + kx_[3][i]);
        }
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] += dt / 6.0 * (kr_[0][i] + 2.0 * kr_[1][i] + 2.0 * kr_[2][i] + kr_[3][i]);
        }
    }

private:
    void eval(const Vec& x, const Vec& r, double tau, std::size_t k, double t_hint) {
        std::fill(kx_[k].begin(), kx_[k].end(), 0.0);
        std::fill(kr_[k].begin(), kr_[k].end(), 0.0);
        spec_.f(x, r, tau, spec_.epsilon, kx_[k]);
        require_finite(kx_[k], "flow map f", t_hint);
        spec_.w(r, kr_[k]);
        require_finite(kr_[k], "auxiliary flow map w", t_hint);
    }

    void stage(const Vec& x, const Vec& r, std::size_t k, double h) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            xs_[i] = x[i] + h * kx_[k][i];
        }
        for (std::size_t i = 0; i < r.size(); ++i) {
            rs_[i] = r[i] + h * kr_[k][i];
        }
    }

    const SystemSpec& spec_;
    std::vector<Vec> kx_;
    std::vector<Vec> kr_;
    Vec xs_;
    Vec rs_;
};

struct Crossing {
    double theta = 0.0;
    std::size_t box = 0;
};

// Earliest entry of the ray r + theta * rate into one of the boxes of D.
std::optional<Crossing> first_entry(ConstVecRef r, ConstVecRef rate, const SetDescriptor& d, double dt) {
    std::optional<Crossing> best;
    for (std::size_t b = 0; b < d.boxes().size(); ++b) {
        const auto& box = d.boxes()[b];
        double lo = 0.0;
        double hi = dt;
        for (std::size_t i = 0; i < r.size() && lo <= hi; ++i) {
            const auto& iv = box.bounds[i];
            if (rate[i] == 0.0) {
                if (r[i] < iv.lo || r[i] > iv.hi) {
                    hi = -1.0;
                }
                continue;
            }
            double a = (iv.lo - r[i]) / rate[i];
            double c = (iv.hi - r[i]) / rate[i];
            if (a > c) {
                std::swap(a, c);
            }
            lo = std::max(lo, a);
            hi = std::min(hi, c);
        }
        if (lo <= hi && (!best || lo < best->theta)) {
            best = Crossing{lo, b};
        }
    }
    return best;
}

std::optional<Crossing> timer_crossing(const StateVec& s, const SystemSpec& spec, double dt) {
    if (spec.jump_set.contains(s.r)) {
        return Crossing{0.0, 0};
    }
    Vec rate(spec.p, 0.0);
    spec.w(s.r, rate);
    return first_entry(s.r, rate, spec.jump_set, dt);
}

}  // namespace

StateVec flow_step(const StateVec& s, const SystemSpec& spec, double dt) {
    if (s.x.size() != spec.n || s.r.size() != spec.p) {
        throw std::invalid_argument("flow_step: state dimensions do not match the system");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("flow_step: dt must be positive");
    }
    Rk4Stepper stepper(spec);
    StateVec out = s;
    stepper.step(out.x, out.r, s.tau, dt, 0.0);
    out.tau = s.tau + dt / spec.epsilon;
    return out;
}

std::optional<double> detect_timer_crossing(const StateVec& s, const SystemSpec& spec, double dt) {
    auto c = timer_crossing(s, spec, dt);
    if (!c) {
        return std::nullopt;
    }
    return c->theta;
}

HybridArc simulate_path(const SystemSpec& spec, const StateVec& init, std::uint64_t seed, const Horizon& horizon,
                        const IntegratorConfig& cfg) {
    spec.check();
    cfg.check();
    if (init.x.size() != spec.n || init.r.size() != spec.p) {
        throw std::invalid_argument("simulate_path: initial state dimensions do not match the system");
    }
    if (!spec.flow_set.contains(init.r) && !spec.jump_set.contains(init.r)) {
        throw std::invalid_argument("dead initial condition");
    }

    const double h = cfg.effective_step(spec);
    // Times closer than this to t_max or to a guard are considered equal.
    const double snap = 1e-9 * h;

    HybridArc arc;
    arc.seed = seed;
    Vec x = init.x;
    Vec r = init.r;
    double tau = init.tau;
    double t = 0.0;
    std::int64_t j = 0;
    double anchor_t = 0.0;
    double anchor_tau = tau;

    arc.segments.emplace_back(j, spec.n, spec.p);
    arc.segments.back().push(t, x, r, tau);

    Rk4Stepper stepper(spec);
    Vec x_next(spec.n);
    Vec r_next(spec.p);
    std::size_t steps_in_segment = 0;

    while (true) {
        if (spec.jump_set.contains(r)) {
            if (j >= horizon.j_max) {
                arc.terminal = TerminalReason::JumpHorizon;
                break;
            }
            const Vec v = spec.noise.draw(seed, static_cast<std::uint64_t>(j));
            std::fill(x_next.begin(), x_next.end(), 0.0);
            std::fill(r_next.begin(), r_next.end(), 0.0);
            spec.g(x, r, v, x_next);
            require_finite(x_next, "jump map g", t);
            spec.h(r, v, r_next);
            require_finite(r_next, "auxiliary jump map h", t);

            JumpRecord rec;
            rec.at = HybridTime(t, j);
            rec.pre = StateVec{x, r, tau};
            rec.v = v;
            rec.post = StateVec{x_next, r_next, tau};
            arc.jumps.push_back(std::move(rec));

            x.swap(x_next);
            r.swap(r_next);
            ++j;
            anchor_t = t;
            anchor_tau = tau;
            steps_in_segment = 0;
            arc.segments.emplace_back(j, spec.n, spec.p);
            arc.segments.back().push(t, x, r, tau);
            if (!spec.flow_set.contains(r) && !spec.jump_set.contains(r)) {
                arc.terminal = TerminalReason::LeftSets;
                break;
            }
            continue;
        }
        if (!spec.flow_set.contains(r)) {
            arc.terminal = TerminalReason::LeftSets;
            break;
        }
        if (t >= horizon.t_max) {
            arc.terminal = TerminalReason::TimeHorizon;
            break;
        }

        double dt = std::min(h, horizon.t_max - t);
        const auto crossing = timer_crossing(StateVec{x, r, tau}, spec, dt + snap);
        const bool hits_guard = crossing.has_value();
        if (hits_guard) {
            dt = crossing->theta;
        }
        if (dt > 0.0) {
            stepper.step(x, r, tau, dt, t);
        }
        double t_next = t + dt;
        if (std::abs(horizon.t_max - t_next) <= snap) {
            t_next = horizon.t_max;
        }
        t = t_next;
        tau = anchor_tau + (t - anchor_t) / spec.epsilon;
        if (hits_guard) {
            const auto& box = spec.jump_set.boxes()[crossing->box];
            if (box.distance(r) <= 1e-9 * std::max(1.0, norm(r))) {
                box.clamp(r);
            }
        }
        ++steps_in_segment;

        const bool boundary = spec.jump_set.contains(r) || !spec.flow_set.contains(r) || t >= horizon.t_max;
        if (boundary || steps_in_segment % cfg.record_every == 0) {
            arc.segments.back().push(t, x, r, tau);
        }
    }
    return arc;
}

std::vector<HybridArc> simulate_ensemble(const SystemSpec& spec, const std::vector<StateVec>& inits,
                                         std::size_t n_paths, std::uint64_t seed_base, const Horizon& horizon,
                                         const IntegratorConfig& cfg) {
    if (n_paths == 0) {
        throw std::invalid_argument("n_paths must be >= 1");
    }
    if (inits.empty()) {
        throw std::invalid_argument("simulate_ensemble: at least one initial condition is required");
    }
    std::vector<HybridArc> arcs(n_paths);
    parallel_for(n_paths, [&](std::size_t i) {
        try {
            arcs[i] = simulate_path(spec, inits[i % inits.size()], seed_base + i, horizon, cfg);
        } catch (const std::exception& e) {
            throw std::runtime_error("path " + std::to_string(i) + ": " + e.what());
        }
    });
    return arcs;
}

}  // namespace shds
