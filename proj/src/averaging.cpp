#include "shds/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace shds {

SystemSpec AverageSpec::as_system() const {
    SystemSpec s;
    s.name = name.empty() ? "average" : name;
    s.n = n;
    s.p = p;
    s.m = m;
    s.f = [fa = f_ave](ConstVecRef x, ConstVecRef r, double, double, VecRef out) { fa(x, r, out); };
    s.w = w;
    s.g = g;
    s.h = h;
    s.flow_set = flow_set;
    s.jump_set = jump_set;
    s.noise = noise;
    s.epsilon = 1.0;
    s.fast_time = false;
    return s;
}

AverageSpec build_average_system(const SystemSpec& spec, AverageMap f_ave) {
    if (!f_ave) {
        throw std::invalid_argument("build_average_system: an average map is required");
    }
    AverageSpec avg;
    avg.name = spec.name + "/average";
    avg.n = spec.n;
    avg.p = spec.p;
    avg.m = spec.m;
    avg.f_ave = std::move(f_ave);
    avg.w = spec.w;
    avg.g = spec.g;
    avg.h = spec.h;
    avg.flow_set = spec.flow_set;
    avg.jump_set = spec.jump_set;
    avg.noise = spec.noise;
    return avg;
}

std::size_t default_panels(double window, std::size_t min_panels) {
    const double per_period = static_cast<double>(kPanelsPerPeriod) * window / (2.0 * std::numbers::pi);
    return std::max(min_panels, static_cast<std::size_t>(std::ceil(per_period)));
}

namespace {

// Simpson over [a, a + len] of an R^k-valued integrand, divided by len.
template <typename Integrand>
Vec simpson_mean(std::size_t dim, double a, double len, std::size_t panels, Integrand&& eval) {
    if (!(len > 0.0)) {
        throw std::invalid_argument("window length must be positive");
    }
    if (panels < 1) {
        throw std::invalid_argument("at least one quadrature panel is required");
    }
    const std::size_t intervals = 2 * panels;
    const double step = len / static_cast<double>(intervals);
    Vec acc(dim, 0.0);
    Vec value(dim);
    for (std::size_t k = 0; k <= intervals; ++k) {
        const double s = a + step * static_cast<double>(k);
        std::fill(value.begin(), value.end(), 0.0);
        eval(s, value);
        double weight = 2.0;
        if (k == 0 || k == intervals) {
            weight = 1.0;
        } else if (k % 2 == 1) {
            weight = 4.0;
        }
        for (std::size_t i = 0; i < dim; ++i) {
            if (!std::isfinite(value[i])) {
                std::ostringstream os;
                os << "non-finite integrand at tau = " << s;
                throw std::runtime_error(os.str());
            }
            acc[i] += weight * value[i];
        }
    }
    for (double& v : acc) {
        v = v * step / 3.0 / len;
    }
    return acc;
}

double distance(ConstVecRef a, ConstVecRef b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

void require_nonzero_x(const std::vector<Vec>& xs) {
    for (const auto& x : xs) {
        if (norm(x) == 0.0) {
            throw std::invalid_argument("averaging grid must not contain x = 0 (residuals are normalized by |x|)");
        }
    }
}

void require_windows(const std::vector<double>& windows) {
    if (windows.empty()) {
        throw std::invalid_argument("averaging grid needs at least one window length");
    }
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (!(windows[i] > 0.0) || (i > 0 && !(windows[i] > windows[i - 1]))) {
            throw std::invalid_argument("window lengths must be positive and strictly increasing");
        }
    }
}

std::vector<double> tau_points_or_default(const AveragingGrid& grid) {
    if (!grid.tau_points.empty()) {
        return grid.tau_points;
    }
    std::vector<double> taus = linspace(0.0, 2.0 * std::numbers::pi, 65);
    taus.pop_back();
    return taus;
}

}  // namespace

Vec window_average(const SystemSpec& spec, ConstVecRef x, ConstVecRef r, double tau0, double window,
                   std::size_t panels) {
    if (x.size() != spec.n || r.size() != spec.p) {
        throw std::invalid_argument("window_average: state dimensions do not match the system");
    }
    if (panels < 1) {
        throw std::invalid_argument("window_average: at least one panel is required");
    }
    return simpson_mean(spec.n, tau0, window, panels,
                        [&](double s, VecRef out) { spec.f(x, r, s, 0.0, out); });
}

std::vector<double> monotone_envelope(const std::vector<double>& values) {
    std::vector<double> out(values.size());
    double running = 0.0;
    for (std::size_t k = values.size(); k-- > 0;) {
        running = std::max(running, values[k]);
        out[k] = running;
    }
    return out;
}

GammaCurve estimate_gamma(const SystemSpec& spec, const AverageMap& f_ave, const AveragingGrid& grid) {
    require_nonzero_x(grid.x_points);
    require_windows(grid.windows);
    const auto taus = tau_points_or_default(grid);

    GammaCurve curve;
    curve.windows = grid.windows;
    Vec avg(spec.n);
    for (double window : grid.windows) {
        const std::size_t panels = default_panels(window, grid.min_panels);
        double best = -1.0;
        GammaWitness witness;
        for (const auto& x : grid.x_points) {
            const double scale = norm(x);
            for (const auto& r : grid.r_points) {
                std::fill(avg.begin(), avg.end(), 0.0);
                f_ave(x, r, avg);
                for (double tau0 : taus) {
                    const Vec mean = window_average(spec, x, r, tau0, window, panels);
                    const double residual = distance(mean, avg) / scale;
                    if (residual > best) {
                        best = residual;
                        witness = GammaWitness{x, r, tau0};
                    }
                }
            }
        }
        curve.values.push_back(std::max(best, 0.0));
        curve.witnesses.push_back(std::move(witness));
    }
    curve.envelope = monotone_envelope(curve.values);
    return curve;
}

namespace {

// Jacobian of d = f(., ., tau, 0) - f_ave with respect to z = (x, r), row-major
// n x (n + p), by central differences.
struct JacobianScratch {
    Vec xz, rz, plus_f, minus_f, plus_a, minus_a;

    JacobianScratch(std::size_t n, std::size_t p) : xz(n), rz(p), plus_f(n), minus_f(n), plus_a(n), minus_a(n) {}
};

void jacobian_residual(const SystemSpec& spec, const AverageMap& f_ave, ConstVecRef x, ConstVecRef r, double tau,
                       double fd_step, JacobianScratch& w, VecRef out) {
    const std::size_t n = spec.n;
    const std::size_t cols = spec.n + spec.p;
    std::copy(x.begin(), x.end(), w.xz.begin());
    std::copy(r.begin(), r.end(), w.rz.begin());
    for (std::size_t c = 0; c < cols; ++c) {
        double& coord = c < n ? w.xz[c] : w.rz[c - n];
        const double base = coord;
        const double step = fd_step * std::max(1.0, std::abs(base));
        std::fill(w.plus_f.begin(), w.plus_f.end(), 0.0);
        std::fill(w.minus_f.begin(), w.minus_f.end(), 0.0);
        std::fill(w.plus_a.begin(), w.plus_a.end(), 0.0);
        std::fill(w.minus_a.begin(), w.minus_a.end(), 0.0);
        coord = base + step;
        spec.f(w.xz, w.rz, tau, 0.0, w.plus_f);
        f_ave(w.xz, w.rz, w.plus_a);
        coord = base - step;
        spec.f(w.xz, w.rz, tau, 0.0, w.minus_f);
        f_ave(w.xz, w.rz, w.minus_a);
        coord = base;
        for (std::size_t i = 0; i < n; ++i) {
            out[i * cols + c] = ((w.plus_f[i] - w.minus_f[i]) - (w.plus_a[i] - w.minus_a[i])) / (2.0 * step);
        }
    }
}

}  // namespace

JacobianCheck check_jacobian_average(const SystemSpec& spec, const AverageMap& f_ave, const AveragingGrid& grid,
                                     double fd_step) {
    require_nonzero_x(grid.x_points);
    require_windows(grid.windows);
    const auto taus = tau_points_or_default(grid);
    const std::size_t entries = spec.n * (spec.n + spec.p);

    JacobianCheck check;
    check.state = estimate_gamma(spec, f_ave, grid);
    JacobianScratch scratch(spec.n, spec.p);
    check.residual.windows = grid.windows;
    for (double window : grid.windows) {
        const std::size_t panels = default_panels(window, grid.min_panels);
        double best = -1.0;
        double best_normalized = 0.0;
        GammaWitness witness;
        for (const auto& x : grid.x_points) {
            for (const auto& r : grid.r_points) {
                for (double tau0 : taus) {
                    const Vec mean = simpson_mean(entries, tau0, window, panels, [&](double s, VecRef out) {
                        jacobian_residual(spec, f_ave, x, r, s, fd_step, scratch, out);
                    });
                    const double magnitude = norm(mean);
                    if (magnitude > best) {
                        best = magnitude;
                        best_normalized = magnitude / norm(x);
                        witness = GammaWitness{x, r, tau0};
                    }
                }
            }
        }
        check.residual.values.push_back(std::max(best, 0.0));
        check.residual.witnesses.push_back(std::move(witness));
        check.normalized.push_back(best_normalized);
    }
    check.residual.envelope = monotone_envelope(check.residual.values);
    for (std::size_t k = 0; k < grid.windows.size(); ++k) {
        check.exceeds_state_envelope.push_back(check.residual.values[k] > check.state.envelope[k] + 1e-9);
    }
    return check;
}

namespace {

void update(LipschitzEstimate& est, double quotient, ConstVecRef a, ConstVecRef b) {
    ++est.samples;
    if (std::isfinite(quotient) && quotient > est.value) {
        est.value = quotient;
        est.witness_a.assign(a.begin(), a.end());
        est.witness_b.assign(b.begin(), b.end());
    }
}

Vec concat(ConstVecRef a, ConstVecRef b) {
    Vec out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace

LipschitzEstimates estimate_lipschitz(const SystemSpec& spec, const AverageMap& f_ave, const LipschitzGrid& grid) {
    LipschitzEstimates est;
    std::vector<Vec> r_points = grid.r_points;
    for (auto& a : spec.flow_or_jump_set().anchor_points()) {
        r_points.push_back(std::move(a));
    }
    std::vector<double> taus = grid.tau_points;
    if (taus.empty()) {
        taus = linspace(0.0, 2.0 * std::numbers::pi, 65);
    }
    std::vector<double> eps_points = grid.eps_points;
    if (eps_points.empty()) {
        eps_points = {0.0, spec.epsilon};
    }
    std::vector<Vec> v_points = grid.v_points;
    if (v_points.empty() && spec.noise.kind() == NoiseKind::FiniteSupport) {
        for (const auto& o : spec.noise.support()) {
            v_points.push_back(o.value);
        }
    }

    const auto& xs = grid.x_points;
    Vec a(spec.n), b(spec.n);
    for (const auto& r : r_points) {
        const bool in_d = spec.jump_set.contains(r);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t k = i + 1; k < xs.size(); ++k) {
                const double dx = distance(xs[i], xs[k]);
                if (dx == 0.0) {
                    continue;
                }
                for (double tau : taus) {
                    std::fill(a.begin(), a.end(), 0.0);
                    std::fill(b.begin(), b.end(), 0.0);
                    spec.f(xs[i], r, tau, spec.epsilon, a);
                    spec.f(xs[k], r, tau, spec.epsilon, b);
                    update(est.l_x, distance(a, b) / dx, concat(xs[i], r), concat(xs[k], r));
                }
                if (f_ave) {
                    std::fill(a.begin(), a.end(), 0.0);
                    std::fill(b.begin(), b.end(), 0.0);
                    f_ave(xs[i], r, a);
                    f_ave(xs[k], r, b);
                    update(est.l_ave, distance(a, b) / dx, concat(xs[i], r), concat(xs[k], r));
                }
                if (in_d) {
                    for (const auto& v : v_points) {
                        std::fill(a.begin(), a.end(), 0.0);
                        std::fill(b.begin(), b.end(), 0.0);
                        spec.g(xs[i], r, v, a);
                        spec.g(xs[k], r, v, b);
                        update(est.l_g, distance(a, b) / dx, concat(xs[i], v), concat(xs[k], v));
                    }
                }
            }
            const double scale = norm(xs[i]);
            if (scale == 0.0) {
                continue;
            }
            for (double tau : taus) {
                for (std::size_t e1 = 0; e1 < eps_points.size(); ++e1) {
                    for (std::size_t e2 = e1 + 1; e2 < eps_points.size(); ++e2) {
                        const double de = std::abs(eps_points[e1] - eps_points[e2]);
                        if (de == 0.0) {
                            continue;
                        }
                        std::fill(a.begin(), a.end(), 0.0);
                        std::fill(b.begin(), b.end(), 0.0);
                        spec.f(xs[i], r, tau, eps_points[e1], a);
                        spec.f(xs[i], r, tau, eps_points[e2], b);
                        update(est.l_eps, distance(a, b) / (scale * de), Vec{eps_points[e1]}, Vec{eps_points[e2]});
                    }
                }
            }
        }
    }
    return est;
}

// ---------------------------------------------------------------------------

TabulatedMap::TabulatedMap(std::vector<std::vector<double>> axes, std::size_t out_dim, std::vector<double> values)
    : axes_(std::move(axes)), out_dim_(out_dim), values_(std::move(values)) {
    std::size_t count = 1;
    strides_.assign(axes_.size(), 0);
    for (std::size_t d = axes_.size(); d-- > 0;) {
        if (axes_[d].empty()) {
            throw std::invalid_argument("tabulated map: empty axis");
        }
        for (std::size_t i = 1; i < axes_[d].size(); ++i) {
            if (!(axes_[d][i] > axes_[d][i - 1])) {
                throw std::invalid_argument("tabulated map: axes must be strictly increasing");
            }
        }
        strides_[d] = count;
        count *= axes_[d].size();
    }
    if (values_.size() != count * out_dim_) {
        throw std::invalid_argument("tabulated map: value table has the wrong size");
    }
}

std::size_t TabulatedMap::node_count() const { return values_.size() / out_dim_; }

ConstVecRef TabulatedMap::node_value(std::size_t flat_index) const {
    return ConstVecRef(values_).subspan(flat_index * out_dim_, out_dim_);
}

void TabulatedMap::operator()(ConstVecRef x, ConstVecRef r, VecRef out) const {
    const std::size_t dims = axes_.size();
    if (x.size() + r.size() != dims) {
        throw std::invalid_argument("tabulated map: query dimension mismatch");
    }
    std::vector<std::size_t> cell(dims, 0);
    std::vector<double> weight(dims, 0.0);
    std::vector<bool> flat(dims, false);
    for (std::size_t d = 0; d < dims; ++d) {
        const double q = d < x.size() ? x[d] : r[d - x.size()];
        const auto& axis = axes_[d];
        if (axis.size() == 1) {
            flat[d] = true;
            continue;
        }
        const auto it = std::upper_bound(axis.begin(), axis.end(), q);
        std::size_t k = it == axis.begin() ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
        k = std::min(k, axis.size() - 2);
        cell[d] = k;
        weight[d] = (q - axis[k]) / (axis[k + 1] - axis[k]);
    }
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t corners = std::size_t{1} << dims;
    for (std::size_t mask = 0; mask < corners; ++mask) {
        double wgt = 1.0;
        std::size_t index = 0;
        bool skip = false;
        for (std::size_t d = 0; d < dims; ++d) {
            const bool upper = (mask >> d) & 1U;
            if (flat[d]) {
                if (upper) {
                    skip = true;
                    break;
                }
                continue;
            }
            wgt *= upper ? weight[d] : 1.0 - weight[d];
            index += (cell[d] + (upper ? 1 : 0)) * strides_[d];
        }
        if (skip || wgt == 0.0) {
            continue;
        }
        for (std::size_t i = 0; i < out_dim_; ++i) {
            out[i] += wgt * values_[index * out_dim_ + i];
        }
    }
}

AverageMapEstimate estimate_average_map(const SystemSpec& spec, const std::vector<std::vector<double>>& x_axes,
                                        const std::vector<std::vector<double>>& r_axes, double window,
                                        const std::optional<AverageMap>& closed_form, double tolerance) {
    if (x_axes.size() != spec.n || r_axes.size() != spec.p) {
        throw std::invalid_argument("estimate_average_map: one axis per state coordinate is required");
    }
    std::vector<std::vector<double>> axes = x_axes;
    axes.insert(axes.end(), r_axes.begin(), r_axes.end());
    const std::size_t panels = default_panels(window);

    AverageMapEstimate est;
    est.nodes = cartesian(axes);
    std::vector<double> table;
    table.reserve(est.nodes.size() * spec.n);
    double scale = 0.0;
    for (const auto& z : est.nodes) {
        const ConstVecRef zx = ConstVecRef(z).first(spec.n);
        const ConstVecRef zr = ConstVecRef(z).subspan(spec.n);
        Vec mean = window_average(spec, zx, zr, 0.0, window, panels);
        // Same window shifted by a quarter period: the difference measures how
        // far the tabulated mean is from being window-independent.
        const Vec shifted = window_average(spec, zx, zr, 0.5 * std::numbers::pi, window, panels);
        est.nodal_residual = std::max(est.nodal_residual, distance(mean, shifted));
        scale = std::max(scale, norm(mean));
        table.insert(table.end(), mean.begin(), mean.end());
        est.node_values.push_back(std::move(mean));
    }
    TabulatedMap interp(axes, spec.n, table);

    // Interpolant vs direct window mean at every cell midpoint.
    std::vector<std::vector<double>> mids;
    for (const auto& axis : axes) {
        std::vector<double> m;
        for (std::size_t i = 0; i + 1 < axis.size(); ++i) {
            m.push_back(0.5 * (axis[i] + axis[i + 1]));
        }
        if (m.empty()) {
            m.push_back(axis.front());
        }
        mids.push_back(std::move(m));
    }
    Vec out(spec.n);
    for (const auto& z : cartesian(mids)) {
        const ConstVecRef zx = ConstVecRef(z).first(spec.n);
        const ConstVecRef zr = ConstVecRef(z).subspan(spec.n);
        const Vec direct = window_average(spec, zx, zr, 0.0, window, panels);
        interp(zx, zr, out);
        est.midpoint_residual = std::max(est.midpoint_residual, distance(direct, out));
    }
    const double floor = 1e-9 * (1.0 + scale);
    if (est.midpoint_residual > 10.0 * est.nodal_residual + floor) {
        std::ostringstream os;
        os << "averaging grid too coarse: interpolation residual at cell midpoints (" << est.midpoint_residual
           << ") exceeds 10x the nodal residual (" << est.nodal_residual << "); refine the grid";
        throw std::runtime_error(os.str());
    }

    if (closed_form) {
        double deviation = 0.0;
        for (std::size_t k = 0; k < est.nodes.size(); ++k) {
            const auto& z = est.nodes[k];
            (*closed_form)(ConstVecRef(z).first(spec.n), ConstVecRef(z).subspan(spec.n), out);
            deviation = std::max(deviation, distance(out, est.node_values[k]));
        }
        est.closed_form_deviation = deviation;
        if (deviation > tolerance) {
            std::ostringstream os;
            os << "registered average map deviates from the tabulated window mean by " << deviation
               << " (tolerance " << tolerance << ")";
            throw std::runtime_error(os.str());
        }
        est.average = build_average_system(spec, *closed_form);
        est.uses_closed_form = true;
    } else {
        est.average = build_average_system(
            spec, [interp = std::move(interp)](ConstVecRef x, ConstVecRef r, VecRef o) { interp(x, r, o); });
    }
    return est;
}

}  // namespace shds
