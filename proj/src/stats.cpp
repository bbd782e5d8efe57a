#include "shds/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace shds {

std::optional<HybridTime> hitting_time(const HybridArc& arc, const SystemSpec& spec, double radius) {
    if (!(radius > 0.0)) {
        throw std::invalid_argument("hitting_time: radius must be positive");
    }
    for (const auto& seg : arc.segments) {
        for (std::size_t i = 0; i < seg.size(); ++i) {
            if (dist_to_target(seg.x(i), seg.r(i), spec) < radius) {
                return HybridTime(seg.t(i), seg.j());
            }
        }
    }
    return std::nullopt;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) {
        return {};
    }
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

RecurrenceReport recurrence_estimate(const std::vector<HybridArc>& ensemble, const SystemSpec& spec,
                                     const RecurrenceParams& params) {
    if (ensemble.size() < kMinRecurrenceEnsemble) {
        std::ostringstream os;
        os << "recurrence estimate needs at least " << kMinRecurrenceEnsemble << " paths, got " << ensemble.size();
        throw std::invalid_argument(os.str());
    }
    if (!(params.radius > 0.0) || !(params.rho > 0.0 && params.rho < 1.0) || !(params.R > 0.0) ||
        !(params.t_budget >= 0.0) || params.j_budget < 0) {
        throw std::invalid_argument("recurrence estimate: need radius > 0, rho in (0,1), R > 0, budgets >= 0");
    }

    RecurrenceReport report;
    report.target_radius = params.radius;
    report.rho = params.rho;
    report.R = params.R;
    report.t_budget = params.t_budget;
    report.j_budget = params.j_budget;
    report.n_paths = ensemble.size();

    std::vector<double> hit_sums;
    for (const auto& arc : ensemble) {
        if (dist_to_target(arc.initial_state(), spec) > params.R) {
            throw std::invalid_argument("recurrence estimate: an initial condition lies outside the R-ball");
        }
        PathOutcome out;
        out.terminal = arc.terminal;
        out.end = arc.end_time();
        out.stopped = arc.terminal == TerminalReason::LeftSets;
        auto hit = hitting_time(arc, spec, params.radius);
        if (hit && hit->t <= params.t_budget && hit->j <= params.j_budget) {
            out.hit = hit;
            hit_sums.push_back(hybrid_time_sum(*hit));
        }
        switch (arc.terminal) {
            case TerminalReason::TimeHorizon:
                ++report.terminal_time;
                break;
            case TerminalReason::JumpHorizon:
                ++report.terminal_jump;
                break;
            case TerminalReason::LeftSets:
                ++report.terminal_left;
                break;
        }
        report.paths.push_back(std::move(out));
    }

    report.hits = hit_sums.size();
    if (hit_sums.empty()) {
        report.tau_candidate = params.t_budget + static_cast<double>(params.j_budget);
    } else {
        std::sort(hit_sums.begin(), hit_sums.end());
        const double q = 1.0 - params.rho;
        auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(hit_sums.size())));
        rank = std::clamp<std::size_t>(rank, 1, hit_sums.size());
        report.tau_candidate = hit_sums[rank - 1];
    }

    std::size_t counted = 0;
    for (auto& out : report.paths) {
        if (out.hit) {
            out.counted = true;
        } else if (out.stopped && hybrid_time_sum(out.end) < report.tau_candidate) {
            out.counted = true;
            ++report.early_stops;
        }
        counted += out.counted ? 1 : 0;
    }
    report.hit_fraction = static_cast<double>(counted) / static_cast<double>(report.n_paths);
    report.interval = wilson_interval(counted, report.n_paths);
    if (report.hit_fraction >= 1.0 - params.rho) {
        report.tau_hat = report.tau_candidate;
    }
    return report;
}

std::vector<HybridTime> post_jump_grid(const HybridArc& reference, const std::vector<double>& times) {
    std::vector<HybridTime> grid;
    for (double t : times) {
        std::optional<std::int64_t> j;
        for (const auto& seg : reference.segments) {
            if (t >= seg.t_begin() && t <= seg.t_end()) {
                j = seg.j();
            }
        }
        if (j) {
            grid.emplace_back(t, *j);
        }
    }
    return grid;
}

namespace {

struct GridMoments {
    std::vector<std::size_t> counts;
    std::vector<double> mean;
    std::vector<double> se;
};

// Moments of |z(t_k, j_k)|_A / |z(0,0)|_A * exp(rate * (t_k + j_k)).
GridMoments grid_moments(const std::vector<HybridArc>& ensemble, const SystemSpec& spec,
                         const std::vector<HybridTime>& grid, double rate, std::size_t* excluded) {
    GridMoments mom;
    mom.counts.assign(grid.size(), 0);
    mom.mean.assign(grid.size(), 0.0);
    mom.se.assign(grid.size(), 0.0);
    std::vector<double> m2(grid.size(), 0.0);
    std::size_t skipped = 0;
    for (const auto& arc : ensemble) {
        const double d0 = dist_to_target(arc.initial_state(), spec);
        if (d0 == 0.0) {
            ++skipped;
            continue;
        }
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const auto state = arc.state_at(grid[k]);
            if (!state) {
                continue;
            }
            const double sample = dist_to_target(*state, spec) / d0 * std::exp(rate * hybrid_time_sum(grid[k]));
            const auto c = ++mom.counts[k];
            const double delta = sample - mom.mean[k];
            mom.mean[k] += delta / static_cast<double>(c);
            m2[k] += delta * (sample - mom.mean[k]);
        }
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto c = mom.counts[k];
        if (c > 1) {
            mom.se[k] = std::sqrt(m2[k] / static_cast<double>(c - 1) / static_cast<double>(c));
        }
    }
    if (excluded != nullptr) {
        *excluded = skipped;
    }
    return mom;
}

}  // namespace

EnvelopeFit uges_m_fit(const std::vector<HybridArc>& ensemble, const SystemSpec& spec,
                       const std::vector<HybridTime>& grid, double overshoot) {
    if (grid.empty()) {
        throw std::invalid_argument("uges_m_fit: empty evaluation grid");
    }
    if (!(overshoot >= 1.0)) {
        throw std::invalid_argument("uges_m_fit: overshoot must be >= 1");
    }
    EnvelopeFit fit;
    fit.times = grid;
    const GridMoments plain = grid_moments(ensemble, spec, grid, 0.0, &fit.paths_excluded);
    fit.paths_used = ensemble.size() - fit.paths_excluded;
    if (fit.paths_used == 0) {
        throw std::invalid_argument("uges_m_fit: every path starts on the target set (initial distance 0)");
    }
    if (fit.paths_excluded > 0) {
        std::ostringstream os;
        os << fit.paths_excluded << " path(s) with zero initial distance excluded";
        fit.warnings.push_back(os.str());
    }
    fit.counts = plain.counts;
    fit.mean_ratio = plain.mean;

    double cap = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (plain.counts[k] > 0) {
            cap = std::max(cap, plain.mean[k]);
        }
    }
    cap *= overshoot;

    double rate = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double s = hybrid_time_sum(grid[k]);
        if (plain.counts[k] == 0 || s <= 0.0 || plain.mean[k] <= 0.0) {
            continue;
        }
        rate = std::min(rate, std::log(cap / plain.mean[k]) / s);
    }
    if (!std::isfinite(rate)) {
        throw std::runtime_error("uges_m_fit: no grid point with t + j > 0 and positive mean distance");
    }
    fit.k2 = std::max(rate, 0.0);

    const GridMoments weighted = grid_moments(ensemble, spec, grid, fit.k2, nullptr);
    fit.weighted_mean = weighted.mean;
    fit.weighted_se = weighted.se;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (weighted.counts[k] > 0) {
            fit.k1 = std::max(fit.k1, weighted.mean[k]);
        }
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        fit.residuals.push_back(fit.k1 - weighted.mean[k]);
    }
    return fit;
}

EnvelopeCheck check_envelope(const EnvelopeFit& fit, const std::vector<HybridArc>& ensemble, const SystemSpec& spec,
                             double slack_se) {
    EnvelopeCheck check;
    const GridMoments mom = grid_moments(ensemble, spec, fit.times, fit.k2, nullptr);
    check.weighted_mean = mom.mean;
    check.weighted_se = mom.se;
    check.worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < fit.times.size(); ++k) {
        if (mom.counts[k] == 0) {
            continue;
        }
        const double excess = mom.mean[k] - (fit.k1 + slack_se * mom.se[k]);
        if (excess > check.worst_excess) {
            check.worst_excess = excess;
            check.worst_time = fit.times[k];
        }
    }
    check.holds = check.worst_excess <= 0.0;
    return check;
}

SweepResult epsilon_sweep(const SpecFamily& family, const std::vector<double>& eps_list, const SweepParams& params) {
    if (eps_list.empty()) {
        throw std::invalid_argument("epsilon_sweep: at least one epsilon is required");
    }
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        if (!(eps_list[i] < eps_list[i - 1])) {
            throw std::invalid_argument("epsilon_sweep: epsilon list must be strictly decreasing");
        }
    }
    if (!(params.radius_floor > 0.0) || !(params.radius_floor < params.R)) {
        throw std::invalid_argument("epsilon_sweep: need 0 < radius_floor < R");
    }

    SweepResult result;
    for (double eps : eps_list) {
        const SystemSpec spec = family(eps);
        const auto arcs =
            simulate_ensemble(spec, params.inits, params.n_paths, params.seed_base, params.horizon, params.integrator);
        RecurrenceParams rp;
        rp.rho = params.rho;
        rp.R = params.R;
        rp.t_budget = params.horizon.t_max;
        rp.j_budget = params.horizon.j_max;
        auto certify = [&](double radius) {
            rp.radius = radius;
            return recurrence_estimate(arcs, spec, rp);
        };

        SweepEntry entry;
        entry.epsilon = eps;
        entry.n_paths = arcs.size();
        const auto at_max = certify(params.R);
        if (!at_max.certified()) {
            entry.certified = false;
            entry.radius = std::numeric_limits<double>::infinity();
            entry.hit_fraction = at_max.hit_fraction;
            result.entries.push_back(entry);
            continue;
        }
        entry.certified = true;
        const auto at_floor = certify(params.radius_floor);
        if (at_floor.certified()) {
            entry.radius = params.radius_floor;
            entry.hit_fraction = at_floor.hit_fraction;
            result.entries.push_back(entry);
            continue;
        }
        double lo = params.radius_floor;
        double hi = params.R;
        double hi_fraction = at_max.hit_fraction;
        for (std::size_t it = 0; it < params.max_bisections && hi - lo > params.relative_tolerance * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            const auto rep = certify(mid);
            if (rep.certified()) {
                hi = mid;
                hi_fraction = rep.hit_fraction;
            } else {
                lo = mid;
            }
        }
        entry.radius = hi;
        entry.bracket = hi - lo;
        entry.hit_fraction = hi_fraction;
        result.entries.push_back(entry);
    }

    for (std::size_t i = 0; i + 1 < result.entries.size(); ++i) {
        const auto& a = result.entries[i];
        const auto& b = result.entries[i + 1];
        const double slack = std::max(a.bracket, b.bracket);
        if (!b.certified && !a.certified) {
            continue;
        }
        if (!b.certified || b.radius > a.radius + slack) {
            result.monotone = false;
            result.violations.push_back(i);
        }
    }
    return result;
}

}  // namespace shds
