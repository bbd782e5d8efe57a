#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "oracles.hpp"
#include "shds/config.hpp"
#include "shds/expr.hpp"
#include "shds/solver.hpp"
#include "shds/systems.hpp"

using namespace shds;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

double flow_at(const SystemSpec& spec, double x, double tau) {
    Vec out(1);
    spec.f(Vec{x}, Vec{0.0}, tau, spec.epsilon, out);
    return out[0];
}

double eval1(const std::string& src, double x = 0.0, double tau = 0.0) {
    ExprScope scope;
    scope.n = 1;
    scope.allow_tau = true;
    const Vec xs{x};
    const Vec none;
    return Expression::compile(src, scope).eval({xs, none, none, tau, 0.0});
}

std::string config_path(const char* name) { return std::string(SHDS_CONFIG_DIR) + "/" + name; }

}  // namespace

TEST_CASE("jammed actuator field and jump", "[systems]") {
    const SystemSpec spec = jammed_actuator({1.0, 0.1, 0.01});
    CHECK(flow_at(spec, 4.0, kPi / 2) == -8.0);
    CHECK(flow_at(spec, 4.0, 3 * kPi / 2) == Approx(0.0).margin(1e-15));
    Vec out(1);
    spec.g(Vec{2.0}, Vec{1.0}, Vec{0.75}, out);
    CHECK(out[0] == 3.0);
    spec.h(Vec{1.0}, Vec{0.75}, out);
    CHECK(out[0] == 0.0);
    CHECK(jammed_actuator({1.0, 0.1, 0.01}, 0.5).epsilon == 0.01);
    CHECK(flow_at(jammed_actuator({1.0, 0.1, 0.01}, 0.5), 0.0, 1.0) == 0.5);
    CHECK_THROWS_AS(jammed_actuator({0.0, 0.1, 0.01}), std::invalid_argument);
    CHECK_THROWS_AS(jammed_actuator({1.0, 1.5, 0.01}), std::invalid_argument);
}

TEST_CASE("extremum-seeking field matches direct substitution", "[systems][es]") {
    const double delta = 0.1;
    const SystemSpec spec = jammed_es({1.0, 0.1, 0.01}, delta);
    CHECK(flow_at(spec, 4.0, kPi / 2) == Approx(-4.0 - 8.0 - 4.0));
    CHECK(flow_at(spec, -2.0, 3 * kPi / 2) == Approx(-2.0 + 4.0 + 2.0));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> xs(-3.0, 3.0);
    std::uniform_real_distribution<double> taus(0.0, 2 * kPi);
    for (int i = 0; i < 200; ++i) {
        const double x = xs(rng);
        const double tau = taus(rng);
        const double expected = std::abs(x) >= delta ? oracle::es_outer(x, tau) : oracle::es_inner(x, tau, delta);
        CHECK(flow_at(spec, x, tau) == Approx(expected).margin(1e-12));
    }
}

TEST_CASE("extremum-seeking field near the origin", "[systems][es]") {
    const double delta = 0.1;
    const SystemSpec spec = jammed_es({1.0, 0.1, 0.01}, delta);
    for (double tau : linspace(0.0, 2 * kPi, 37)) {
        CHECK(flow_at(spec, 0.0, tau) == Approx(-delta * std::pow(std::sin(tau), 3)).margin(1e-15));
        for (double x : linspace(-delta * 0.999, delta * 0.999, 21)) {
            CHECK(std::abs(flow_at(spec, x, tau)) <= 4.0 * delta + 1e-12);
        }
    }
    // Continuous at +delta, jump of 2 delta sin(tau) across -delta.
    const double tau = 1.1;
    const double h = 1e-9;
    CHECK(flow_at(spec, delta - h, tau) == Approx(flow_at(spec, delta, tau)).margin(1e-7));
    const double gap = flow_at(spec, -delta, tau) - flow_at(spec, -delta + h, tau);
    CHECK(std::abs(gap) == Approx(2 * delta * std::abs(std::sin(tau))).margin(1e-7));
}

TEST_CASE("expressions follow the usual precedence", "[systems][expr]") {
    CHECK(eval1("1 + 2 * 3") == 7.0);
    CHECK(eval1("(1 + 2) * 3") == 9.0);
    CHECK(eval1("2 ^ 3 ^ 2") == 512.0);
    CHECK(eval1("-2 ^ 2") == -4.0);
    CHECK(eval1("2 ^ -1") == 0.5);
    CHECK(eval1("8 / 4 / 2") == 1.0);
    CHECK(eval1("10 - 4 - 3") == 3.0);
    CHECK(eval1("1 + 1 == 2") == 1.0);
    CHECK(eval1("if(x_1 < 0, -1, 1)", -3.0) == -1.0);
    CHECK(eval1("max(1, min(5, x_1))", 3.0) == 3.0);
    CHECK(eval1("pow(x_1, 2) + abs(-1) + sign(-4)", 3.0) == 9.0);
    CHECK(eval1("sin(tau)", 0.0, kPi / 2) == 1.0);
    CHECK(eval1("pi") == kPi);
    CHECK(eval1("2e-1 + .5") == Approx(0.7));
}

TEST_CASE("expression errors name the symbol and its position", "[systems][expr]") {
    ExprScope scope;
    scope.n = 1;
    try {
        (void)Expression::compile("x_1 + y", scope, 4, 10);
        FAIL("expected an exception");
    } catch (const ExprError& e) {
        CHECK(std::string(e.what()).find("unknown symbol \"y\"") != std::string::npos);
        CHECK(e.line() == 4);
        CHECK(e.column() == 17);
    }
    CHECK_THROWS_AS(Expression::compile("x_2", scope), ExprError);
    CHECK_THROWS_AS(Expression::compile("tau", scope), ExprError);
    CHECK_THROWS_AS(Expression::compile("sin(1, 2)", scope), ExprError);
    CHECK_THROWS_AS(Expression::compile("(1 + 2", scope), ExprError);
    CHECK_THROWS_AS(Expression::compile("1 +", scope), ExprError);
    CHECK_FALSE(Expression::compile("x_1", scope).uses_tau());
    scope.allow_tau = true;
    CHECK(Expression::compile("sin(tau)", scope).uses_tau());
}

TEST_CASE("config documents parse sections, params and lists", "[systems][config]") {
    const auto doc = ConfigDocument::parse(R"(# leading comment
[params]
a = 2
b = a * 3   # trailing comment

[simulate]
t_max = b + 1
list = 1, 2, a
range = 0:1:5
)");
    CHECK(doc.constants().at("b") == 6.0);
    CHECK(doc.number("simulate", "t_max", 0.0) == 7.0);
    CHECK(doc.number("simulate", "missing", 3.5) == 3.5);
    CHECK(*doc.numbers("simulate", "list") == std::vector<double>{1.0, 2.0, 2.0});
    CHECK(*doc.numbers("simulate", "range") == linspace(0.0, 1.0, 5));
    CHECK_FALSE(doc.numbers("simulate", "nothing").has_value());

    CHECK_THROWS_AS(ConfigDocument::parse("[bogus]\n"), ConfigError);
    CHECK_THROWS_AS(ConfigDocument::parse("[params]\n[params]\n"), ConfigError);
    CHECK_THROWS_AS(ConfigDocument::parse("key = 1\n"), ConfigError);
    CHECK_THROWS_AS(ConfigDocument::parse("[params]\nq = unknown + 1\n"), ConfigError);
}

TEST_CASE("loading a system reports unknown symbols with location", "[systems][config]") {
    const auto doc = ConfigDocument::parse(R"([system]
n = 1
p = 1
m = 0
epsilon = 0.1
flow.x_1 = -x_1 + y
flow.r_1 = 1
jump.x_1 = x_1
jump.r_1 = 0
C = [0, 1]
D = {1}
)",
                                           "bad.cfg");
    try {
        (void)load_system(doc);
        FAIL("expected an exception");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bad.cfg") != std::string::npos);
        CHECK(msg.find("line 6") != std::string::npos);
        CHECK(msg.find("unknown symbol \"y\"") != std::string::npos);
    }
}

TEST_CASE("noise sections are validated", "[systems][config]") {
    const std::string head = R"([system]
n = 1
p = 1
m = 1
epsilon = 0.1
flow.x_1 = -x_1
flow.r_1 = 1
jump.x_1 = v*x_1
jump.r_1 = 0
C = [0, 1]
D = {1}
)";
    try {
        (void)load_system(ConfigDocument::parse(head + "[noise]\nkind = finite\noutcome = 1 @ 0.6\noutcome = 0 @ 0.5\n"));
        FAIL("expected an exception");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("probabilities sum to 1.1") != std::string::npos);
    }
    const auto uniform = load_system(ConfigDocument::parse(head + "[noise]\nkind = uniform\nlo = -1\nhi = 1\n"));
    CHECK(uniform.noise.kind() == NoiseKind::SamplerOnly);
    CHECK_THROWS_AS(load_system(ConfigDocument::parse(head)), ConfigError);
    CHECK_THROWS_AS(load_system(ConfigDocument::parse(head + "[noise]\nkind = cauchy\n")), ConfigError);
}

TEST_CASE("set expressions", "[systems][config]") {
    const auto doc = ConfigDocument::parse("[params]\nT = 2\n[system]\nA = [0, T] x [-1, 1] | {5, 5}\nB = empty\n");
    const auto a = parse_set(doc, *doc.require("system").find("A"), 2);
    CHECK(a.contains(Vec{1.0, 0.0}));
    CHECK(a.contains(Vec{5.0, 5.0}));
    CHECK_FALSE(a.contains(Vec{3.0, 0.0}));
    CHECK(parse_set(doc, *doc.require("system").find("B"), 2).empty());
    CHECK_THROWS_AS(parse_set(doc, *doc.require("system").find("A"), 1), ConfigError);
}

TEST_CASE("shipped configs reproduce the built-in systems exactly", "[systems][config]") {
    const struct {
        const char* file;
        SystemSpec builtin;
    } cases[] = {
        {"actuator.cfg", jammed_actuator({1.0, 0.1, 0.01})},
        {"es.cfg", jammed_es({1.0, 0.1, 0.01}, 0.1)},
    };
    for (const auto& c : cases) {
        const auto doc = ConfigDocument::load(config_path(c.file));
        const SystemSpec loaded = load_system(doc);
        CHECK(loaded.fast_time);
        const auto inits = load_inits(doc, loaded);
        REQUIRE(inits.size() == 2);
        for (const auto& init : inits) {
            const Horizon horizon(3.0, 100);
            const auto a = simulate_path(loaded, init, 17, horizon, {});
            const auto b = simulate_path(c.builtin, init, 17, horizon, {});
            CHECK(a == b);
        }
        const auto avg = load_average_map(doc, loaded);
        REQUIRE(avg.has_value());
        Vec out(1);
        (*avg)(Vec{1.5}, Vec{0.0}, out);
        CHECK(out[0] == -1.5);
        CHECK(load_lyapunov(doc, loaded).value(Vec{3.0}, Vec{0.5}) == 9.0);
    }
}

TEST_CASE("expression Lyapunov functions get numerical gradients", "[systems][config]") {
    const auto doc = ConfigDocument::load(config_path("static.cfg"));
    const SystemSpec spec = load_system(doc);
    CHECK_FALSE(spec.fast_time);
    const LyapunovFunction v = load_lyapunov(doc, spec);
    const Vec g = v.grad(Vec{1.5}, Vec{0.2}, 1e-5);
    CHECK(g[0] == Approx(3.0).epsilon(1e-8));
    CHECK(g[1] == Approx(0.0).margin(1e-8));
    CHECK_THROWS_AS(load_lyapunov(ConfigDocument::parse("[certify]\n"), spec), ConfigError);
}
