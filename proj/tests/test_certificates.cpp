#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "shds/certificates.hpp"
#include "shds/systems.hpp"

using namespace shds;
using Catch::Approx;

namespace {

FosterCertificate certify(double p, const CertificateOptions& opts = {}) {
    const AverageSpec avg = jammed_average({1.0, p, 0.01});
    return foster_certificate(quadratic_lyapunov(), avg, make_certificate_grid(avg), avg.noise, opts);
}

}  // namespace

TEST_CASE("quadratic certificate constants for the jammed average system", "[certificates]") {
    const FosterCertificate cert = certify(0.1);
    CHECK(cert.c1 == Approx(1.0).margin(1e-9));
    CHECK(cert.c2 == Approx(1.0).margin(1e-9));
    CHECK(cert.c3 == Approx(2.0).margin(1e-9));
    CHECK(cert.c4 == Approx(2.0).margin(1e-9));
    CHECK(cert.c5 == Approx(oracle::jam_second_moment(0.1)).margin(1e-12));
    CHECK(cert.lambda == Approx(0.225).margin(1e-12));
    CHECK(cert.pass);
    CHECK(cert.failures.empty());
    CHECK(cert.jump.max_std_error == 0.0);
}

TEST_CASE("jump constant is 2.25 p and the gate is strict", "[certificates][property]") {
    for (int k = 0; k <= 20; ++k) {
        const double p = k / 20.0;
        const FosterCertificate cert = certify(p);
        CHECK(cert.c5 == Approx(oracle::jam_second_moment(p)).margin(1e-12));
        CHECK(cert.pass == (cert.lambda < 0.5));
    }
    const FosterCertificate boundary = certify(2.0 / 9.0);
    CHECK(boundary.lambda == Approx(0.5).margin(1e-12));
    CHECK_FALSE(boundary.pass);
    CHECK_FALSE(boundary.failures.empty());
    CHECK(certify(1.0).c5 == Approx(2.25).margin(1e-12));
}

TEST_CASE("a safety margin tightens the gate", "[certificates]") {
    CertificateOptions opts;
    opts.margin = 0.01;
    CHECK(certify(0.2, opts).pass);
    opts.margin = 0.1;
    CHECK_FALSE(certify(0.2, opts).pass);
    opts.margin = -0.1;
    CHECK_THROWS_AS(certify(0.2, opts), std::invalid_argument);
}

TEST_CASE("scaling V leaves lambda and the verdict unchanged", "[certificates][property]") {
    const AverageSpec avg = jammed_average({1.0, 0.1, 0.01});
    const CertificateGrid grid = make_certificate_grid(avg);
    const auto base = foster_certificate(quadratic_lyapunov(), avg, grid, avg.noise);
    for (double alpha : {0.5, 3.0, 17.0}) {
        const auto cert = foster_certificate(scaled(quadratic_lyapunov(), alpha), avg, grid, avg.noise);
        CHECK(cert.c1 == Approx(alpha * base.c1));
        CHECK(cert.c2 == Approx(alpha * base.c2));
        CHECK(cert.c3 == Approx(alpha * base.c3));
        CHECK(cert.c4 == Approx(base.c4));
        CHECK(cert.lambda == Approx(base.lambda).margin(1e-12));
        CHECK(cert.pass == base.pass);
    }
}

TEST_CASE("finite-difference gradients agree with the exact one", "[certificates]") {
    const AverageSpec avg = jammed_average({1.0, 0.1, 0.01});
    LyapunovFunction fd = quadratic_lyapunov();
    fd.gradient = nullptr;
    const auto cert = foster_certificate(fd, avg, make_certificate_grid(avg), avg.noise);
    CHECK(cert.c3 == Approx(2.0).epsilon(1e-6));
    CHECK(cert.c4 == Approx(2.0).epsilon(1e-6));
    CHECK(cert.pass);
}

TEST_CASE("a function that is not positive definite fails the sandwich", "[certificates][errors]") {
    const AverageSpec avg = jammed_average({1.0, 0.1, 0.01});
    LyapunovFunction neg;
    neg.name = "-|x|^2";
    neg.value = [](ConstVecRef x, ConstVecRef) { return -x[0] * x[0]; };
    const auto cert = foster_certificate(neg, avg, make_certificate_grid(avg), avg.noise);
    CHECK_FALSE(cert.sandwich.ok);
    REQUIRE(cert.sandwich.failure.has_value());
    CHECK(cert.sandwich.failure->x[0] != 0.0);
    CHECK_FALSE(cert.pass);
}

TEST_CASE("an unstable average flow fails the decrease condition", "[certificates][errors]") {
    AverageSpec avg = jammed_average({1.0, 0.1, 0.01});
    avg.f_ave = [](ConstVecRef x, ConstVecRef, VecRef out) { out[0] = 0.5 * x[0]; };
    const auto cert = foster_certificate(quadratic_lyapunov(), avg, make_certificate_grid(avg), avg.noise);
    CHECK_FALSE(cert.flow.ok);
    CHECK(cert.c4 == Approx(-1.0));
    REQUIRE(cert.flow.failure.has_value());
    CHECK_FALSE(cert.pass);
}

TEST_CASE("continuous noise uses a seeded Monte Carlo mean", "[certificates][mc]") {
    const AverageSpec avg = jammed_average({1.0, 0.1, 0.01});
    const JumpNoise uniform = JumpNoise::sampler(1, [](DrawStream& s) { return Vec{s.uniform() - 0.5}; });
    const StateVec z{{2.0}, {1.0}, 0.0};
    const auto e = expected_jump_value(quadratic_lyapunov(), avg, z, uniform, 200000, 11);
    const double exact = 4.0 * oracle::uniform_jam_second_moment(-0.5, 0.5);
    CHECK(e.std_error > 0.0);
    CHECK(std::abs(e.value - exact) < 5 * e.std_error);
    const auto again = expected_jump_value(quadratic_lyapunov(), avg, z, uniform, 200000, 11);
    CHECK(again.value == e.value);
    CHECK_THROWS_AS(expected_jump_value(quadratic_lyapunov(), avg, z, uniform, 1, 0), std::invalid_argument);
}

TEST_CASE("certificate grids span the radial range and both timer sets", "[certificates][grid]") {
    const AverageSpec avg = jammed_average({2.0, 0.1, 0.01});
    CertificateGridOptions opts;
    opts.radial_points = 5;
    opts.aux_points = 3;
    const CertificateGrid grid = make_certificate_grid(avg, opts);
    double lo = 1e9;
    double hi = 0.0;
    for (const auto& x : grid.x_points) {
        lo = std::min(lo, std::abs(x[0]));
        hi = std::max(hi, std::abs(x[0]));
    }
    CHECK(lo == Approx(opts.r_min));
    CHECK(hi == Approx(opts.r_max));
    for (const auto& r : grid.r_flow) {
        CHECK(avg.flow_set.contains(r));
    }
    REQUIRE_FALSE(grid.r_jump.empty());
    for (const auto& r : grid.r_jump) {
        CHECK(r[0] == 2.0);
    }
    opts.r_min = 0.0;
    CHECK_THROWS_AS(make_certificate_grid(avg, opts), std::invalid_argument);
}
