#pragma once

// Closed-form reference values computed independently of the library.

#include <cmath>

namespace oracle {

// sup over tau0 of |(1/T) int_{tau0}^{tau0+T} sin(s) ds| = 2 |sin(T/2)| / T.
inline double actuator_gamma(double T) { return 2.0 * std::abs(std::sin(T / 2.0)) / T; }

// E[(0.75 + v)^2] for v = 0.75 w.p. p, -0.75 otherwise.
inline double jam_second_moment(double p) { return p * 1.5 * 1.5 + (1.0 - p) * 0.0; }

// E[(0.75 + v)^2] for v uniform on [lo, hi].
inline double uniform_jam_second_moment(double lo, double hi) {
    const double a = 0.75 + lo;
    const double b = 0.75 + hi;
    return (b * b * b - a * a * a) / (3.0 * (b - a));
}

// Extremum-seeking field for |x| >= delta, by direct substitution.
inline double es_outer(double x, double tau) {
    const double s = std::sin(tau);
    return -x * s - 2.0 * x * s * s - std::abs(x) * s * s * s;
}

// Extremum-seeking field inside the delta-ball.
inline double es_inner(double x, double tau, double delta) {
    const double s = std::sin(tau);
    const double y = x + delta * s;
    return -(y * y) * s / delta;
}

// 95% Wilson interval endpoints (reference values from an external
// statistics package).
struct WilsonReference {
    int successes;
    int trials;
    double lower;
    double upper;
};

inline constexpr WilsonReference kWilson[] = {
    {19, 20, 0.7638688065532577, 0.9911185511992044},
    {0, 30, 0.0, 0.1135133931739688},
    {30, 30, 0.8864866068260311, 1.0},
    {190, 200, 0.9104218518612239, 0.972617354399236},
};

}  // namespace oracle
