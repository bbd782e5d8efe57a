#include "shds/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace shds {

Vec LyapunovFunction::grad(ConstVecRef x, ConstVecRef r, double fd_step) const {
    Vec out(x.size() + r.size(), 0.0);
    if (gradient) {
        gradient(x, r, out);
        return out;
    }
    Vec xz(x.begin(), x.end());
    Vec rz(r.begin(), r.end());
    for (std::size_t c = 0; c < out.size(); ++c) {
        double& coord = c < xz.size() ? xz[c] : rz[c - xz.size()];
        const double base = coord;
        const double step = fd_step * std::max(1.0, std::abs(base));
        coord = base + step;
        const double up = value(xz, rz);
        coord = base - step;
        const double down = value(xz, rz);
        coord = base;
        out[c] = (up - down) / (2.0 * step);
    }
    return out;
}

LyapunovFunction quadratic_lyapunov() {
    LyapunovFunction v;
    v.name = "|x|^2";
    v.value = [](ConstVecRef x, ConstVecRef) {
        double s = 0.0;
        for (double e : x) {
            s += e * e;
        }
        return s;
    };
    v.gradient = [](ConstVecRef x, ConstVecRef, VecRef out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            out[i] = 2.0 * x[i];
        }
    };
    return v;
}

LyapunovFunction scaled(const LyapunovFunction& v, double alpha) {
    LyapunovFunction out;
    std::ostringstream os;
    os << alpha << "*(" << v.name << ")";
    out.name = os.str();
    out.value = [value = v.value, alpha](ConstVecRef x, ConstVecRef r) { return alpha * value(x, r); };
    if (v.gradient) {
        out.gradient = [gradient = v.gradient, alpha](ConstVecRef x, ConstVecRef r, VecRef o) {
            gradient(x, r, o);
            for (double& e : o) {
                e *= alpha;
            }
        };
    }
    return out;
}

namespace {

std::vector<Vec> unit_directions(std::size_t n) {
    std::vector<Vec> dirs;
    if (n == 1) {
        return {{1.0}, {-1.0}};
    }
    std::vector<std::vector<double>> axes(n, std::vector<double>{-1.0, 0.0, 1.0});
    for (auto& d : cartesian(axes)) {
        const double len = norm(d);
        if (len == 0.0) {
            continue;
        }
        for (double& e : d) {
            e /= len;
        }
        dirs.push_back(std::move(d));
    }
    return dirs;
}

std::vector<Vec> box_points(const Box& box, std::size_t per_dim) {
    std::vector<std::vector<double>> axes;
    for (const auto& iv : box.bounds) {
        if (iv.lo == iv.hi) {
            axes.push_back({iv.lo});
        } else {
            axes.push_back(linspace(iv.lo, iv.hi, std::max<std::size_t>(per_dim, 2)));
        }
    }
    return cartesian(axes);
}

double target_distance(const AverageSpec& avg, ConstVecRef x, ConstVecRef r) {
    double s = 0.0;
    for (double e : x) {
        s += e * e;
    }
    double dr = 0.0;
    if (!avg.flow_set.contains(r) && !avg.jump_set.contains(r)) {
        dr = std::min(avg.flow_set.distance(r), avg.jump_set.distance(r));
    }
    return std::sqrt(s + dr * dr);
}

std::vector<const Vec*> all_r(const CertificateGrid& grid) {
    std::vector<const Vec*> out;
    for (const auto& r : grid.r_flow) {
        out.push_back(&r);
    }
    for (const auto& r : grid.r_jump) {
        out.push_back(&r);
    }
    return out;
}

double dot(ConstVecRef a, ConstVecRef b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

}  // namespace

CertificateGrid make_certificate_grid(const AverageSpec& avg, const CertificateGridOptions& opts) {
    if (!(opts.r_min > 0.0) || !(opts.r_max >= opts.r_min) || opts.radial_points == 0) {
        throw std::invalid_argument("certificate grid: need 0 < r_min <= r_max and at least one radius");
    }
    CertificateGrid grid;
    std::vector<double> radii;
    if (opts.radial_points == 1) {
        radii.push_back(opts.r_max);
    } else {
        for (double e : linspace(std::log(opts.r_min), std::log(opts.r_max), opts.radial_points)) {
            radii.push_back(std::exp(e));
        }
        radii.front() = opts.r_min;
        radii.back() = opts.r_max;
    }
    for (const auto& dir : unit_directions(avg.n)) {
        for (double radius : radii) {
            Vec x = dir;
            for (double& e : x) {
                e *= radius;
            }
            grid.x_points.push_back(std::move(x));
        }
    }
    for (const auto& box : avg.flow_set.boxes()) {
        for (auto& r : box_points(box, opts.aux_points)) {
            grid.r_flow.push_back(std::move(r));
        }
    }
    for (const auto& box : avg.jump_set.boxes()) {
        for (auto& r : box_points(box, opts.aux_points)) {
            grid.r_jump.push_back(std::move(r));
        }
    }
    std::ostringstream os;
    os << "log-radial |x| in [" << opts.r_min << ", " << opts.r_max << "] with " << opts.radial_points
       << " radii x " << unit_directions(avg.n).size() << " directions; " << grid.r_flow.size()
       << " flow-set and " << grid.r_jump.size() << " jump-set auxiliary points";
    grid.description = os.str();
    return grid;
}

SandwichCheck check_sandwich(const LyapunovFunction& v, const AverageSpec& avg, const CertificateGrid& grid) {
    SandwichCheck check;
    check.c1 = std::numeric_limits<double>::infinity();
    check.c2 = -std::numeric_limits<double>::infinity();
    for (const auto& x : grid.x_points) {
        for (const Vec* r : all_r(grid)) {
            const double d = target_distance(avg, x, *r);
            if (d == 0.0) {
                continue;
            }
            ++check.evaluations;
            const double value = v.value(x, *r);
            if (!(value > 0.0)) {
                check.ok = false;
                if (!check.failure || value < check.failure->value) {
                    check.failure = GridWitness{x, *r, value};
                }
                continue;
            }
            const double ratio = value / (d * d);
            if (ratio < check.c1) {
                check.c1 = ratio;
                check.argmin = GridWitness{x, *r, ratio};
            }
            if (ratio > check.c2) {
                check.c2 = ratio;
                check.argmax = GridWitness{x, *r, ratio};
            }
        }
    }
    if (check.evaluations == 0 || !std::isfinite(check.c1) || !std::isfinite(check.c2)) {
        check.ok = false;
    }
    return check;
}

GradientCheck check_gradient_bound(const LyapunovFunction& v, const AverageSpec& avg, const CertificateGrid& grid,
                                   double fd_step) {
    GradientCheck check;
    for (const auto& x : grid.x_points) {
        for (const Vec* r : all_r(grid)) {
            const double d = target_distance(avg, x, *r);
            if (d == 0.0) {
                continue;
            }
            ++check.evaluations;
            const double ratio = norm(v.grad(x, *r, fd_step)) / d;
            if (ratio > check.c3) {
                check.c3 = ratio;
                check.argmax = GridWitness{x, *r, ratio};
            }
        }
    }
    return check;
}

FlowDecreaseCheck check_flow_decrease(const LyapunovFunction& v, const AverageSpec& avg,
                                      const CertificateGrid& grid, double fd_step, bool include_jump_set) {
    FlowDecreaseCheck check;
    check.c4 = std::numeric_limits<double>::infinity();
    std::vector<const Vec*> rs;
    for (const auto& r : grid.r_flow) {
        rs.push_back(&r);
    }
    if (include_jump_set) {
        for (const auto& r : grid.r_jump) {
            rs.push_back(&r);
        }
    }
    Vec field(avg.n + avg.p);
    for (const auto& x : grid.x_points) {
        for (const Vec* r : rs) {
            if (target_distance(avg, x, *r) == 0.0) {
                continue;
            }
            const double value = v.value(x, *r);
            if (!(value > 0.0)) {
                continue;
            }
            ++check.evaluations;
            std::fill(field.begin(), field.end(), 0.0);
            avg.f_ave(x, *r, VecRef(field).first(avg.n));
            avg.w(*r, VecRef(field).subspan(avg.n));
            const double rate = -dot(v.grad(x, *r, fd_step), field) / value;
            if (rate < check.c4) {
                check.c4 = rate;
                check.argmin = GridWitness{x, *r, rate};
            }
        }
    }
    if (check.evaluations == 0 || !(check.c4 > 0.0)) {
        check.ok = false;
        if (check.evaluations > 0) {
            check.failure = check.argmin;
        }
    }
    return check;
}

ExpectedJumpValue expected_jump_value(const LyapunovFunction& v, const AverageSpec& avg, const StateVec& z,
                                      const JumpNoise& noise, std::size_t mc_samples, std::uint64_t seed) {
    Vec gx(avg.n);
    Vec hr(avg.p);
    auto value_after = [&](const Vec& draw) {
        std::fill(gx.begin(), gx.end(), 0.0);
        std::fill(hr.begin(), hr.end(), 0.0);
        avg.g(z.x, z.r, draw, gx);
        avg.h(z.r, draw, hr);
        return v.value(gx, hr);
    };
    ExpectedJumpValue out;
    if (noise.kind() == NoiseKind::FiniteSupport) {
        for (const auto& o : noise.support()) {
            if (o.probability == 0.0) {
                continue;
            }
            out.value += o.probability * value_after(o.value);
        }
        return out;
    }
    if (mc_samples < 2) {
        throw std::invalid_argument("expected_jump_value: at least two Monte Carlo samples are required");
    }
    // Welford accumulation.
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t k = 0; k < mc_samples; ++k) {
        const double sample = value_after(noise.draw(seed, k));
        const double delta = sample - mean;
        mean += delta / static_cast<double>(k + 1);
        m2 += delta * (sample - mean);
    }
    out.value = mean;
    out.std_error = std::sqrt(m2 / static_cast<double>(mc_samples - 1) / static_cast<double>(mc_samples));
    return out;
}

JumpCheck check_jump_condition(const LyapunovFunction& v, const AverageSpec& avg, const CertificateGrid& grid,
                               const JumpNoise& noise, std::size_t mc_samples, std::uint64_t seed) {
    JumpCheck check;
    for (const auto& x : grid.x_points) {
        for (const auto& r : grid.r_jump) {
            const double value = v.value(x, r);
            if (!(value > 0.0)) {
                continue;
            }
            ++check.evaluations;
            const auto expected = expected_jump_value(v, avg, StateVec{x, r, 0.0}, noise, mc_samples, seed);
            const double ratio = expected.value / value;
            check.max_std_error = std::max(check.max_std_error, expected.std_error / value);
            if (ratio > check.c5 || check.evaluations == 1) {
                check.c5 = ratio;
                check.argmax = GridWitness{x, r, ratio};
            }
        }
    }
    return check;
}

FosterCertificate foster_certificate(const LyapunovFunction& v, const AverageSpec& avg, const CertificateGrid& grid,
                                     const JumpNoise& noise, const CertificateOptions& opts) {
    if (!(opts.margin >= 0.0)) {
        throw std::invalid_argument("certificate margin must be nonnegative");
    }
    FosterCertificate cert;
    cert.grid_description = grid.description;
    cert.sandwich = check_sandwich(v, avg, grid);
    cert.gradient = check_gradient_bound(v, avg, grid, opts.fd_step);
    cert.flow = check_flow_decrease(v, avg, grid, opts.fd_step, opts.flow_on_jump_set);
    cert.jump = check_jump_condition(v, avg, grid, noise, opts.mc_samples, opts.seed);

    cert.c1 = cert.sandwich.c1;
    cert.c2 = cert.sandwich.c2;
    cert.c3 = cert.gradient.c3;
    cert.c4 = cert.flow.c4;
    cert.c5 = cert.jump.c5;
    cert.lambda = (cert.c2 / cert.c1) * cert.c5;

    if (!cert.sandwich.ok) {
        cert.failures.push_back("sandwich bound: V is not positive definite relative to A on the grid");
    }
    if (!(cert.c3 < std::numeric_limits<double>::infinity())) {
        cert.failures.push_back("gradient bound: no finite c3 on the grid");
    }
    if (!cert.flow.ok) {
        cert.failures.push_back("flow decrease: <grad V, F_ave> >= 0 somewhere on R^n x C");
    }
    if (cert.jump.evaluations == 0) {
        cert.failures.push_back("jump condition: no grid point in R^n x D with V > 0");
    }
    if (!(cert.c5 >= 0.0)) {
        cert.failures.push_back("jump condition: negative c5");
    }
    const double gate = 0.5 - opts.margin;
    if (!(cert.lambda < gate)) {
        std::ostringstream os;
        os << "lambda = (c2/c1) c5 = " << cert.lambda << " is not below " << gate;
        cert.failures.push_back(os.str());
    }
    cert.pass = cert.failures.empty();
    return cert;
}

}  // namespace shds
