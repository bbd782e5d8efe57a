#include "shds/systems.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "shds/expr.hpp"

namespace shds {

void JamParams::check() const {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw std::invalid_argument("JamParams: T must be positive");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("JamParams: p must lie in [0, 1]");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument("JamParams: epsilon must be positive");
    }
}

JumpNoise jam_noise(double p) {
    return JumpNoise::finite({{{0.75}, p}, {{-0.75}, 1.0 - p}});
}

namespace {

SystemSpec jammed_base(const JamParams& params) {
    params.check();
    SystemSpec spec;
    spec.n = 1;
    spec.p = 1;
    spec.m = 1;
    spec.epsilon = params.epsilon;
    spec.w = [](ConstVecRef, VecRef out) { out[0] = 1.0; };
    spec.g = [](ConstVecRef x, ConstVecRef, ConstVecRef v, VecRef out) { out[0] = (0.75 + v[0]) * x[0]; };
    spec.h = [](ConstVecRef, ConstVecRef, VecRef out) { out[0] = 0.0; };
    spec.flow_set = SetDescriptor::box({{0.0, params.T}});
    spec.jump_set = SetDescriptor::singleton({params.T});
    spec.noise = jam_noise(params.p);
    return spec;
}

}  // namespace

SystemSpec jammed_actuator(const JamParams& params, double u) {
    SystemSpec spec = jammed_base(params);
    spec.name = "jammed-actuator";
    if (u == 0.0) {
        spec.f = [](ConstVecRef x, ConstVecRef, double tau, double, VecRef out) {
            out[0] = -x[0] * (1 + std::sin(tau));
        };
    } else {
        spec.f = [u](ConstVecRef x, ConstVecRef, double tau, double, VecRef out) {
            out[0] = -x[0] * (1 + std::sin(tau)) + u;
        };
    }
    return spec;
}

SystemSpec jammed_es(const JamParams& params, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw std::invalid_argument("jammed_es: delta must be positive");
    }
    SystemSpec spec = jammed_base(params);
    spec.name = "jammed-es";
    spec.f = [delta](ConstVecRef x, ConstVecRef, double tau, double, VecRef out) {
        const double s = std::sin(tau);
        if (std::abs(x[0]) >= delta) {
            out[0] = -x[0] * s - 2 * x[0] * std::pow(s, 2) - std::abs(x[0]) * std::pow(s, 3);
        } else {
            out[0] = -(1 / delta) * std::pow(x[0] + delta * s, 2) * s;
        }
    };
    return spec;
}

AverageSpec jammed_average(const JamParams& params) {
    const SystemSpec base = jammed_actuator(params);
    return build_average_system(base, [](ConstVecRef x, ConstVecRef, VecRef out) { out[0] = -x[0]; });
}

namespace {

using ExprList = std::shared_ptr<const std::vector<Expression>>;

Expression compile_entry(const ConfigDocument& doc, const ConfigEntry& e, const ExprScope& scope) {
    try {
        return Expression::compile(e.value, scope, e.line, e.value_column);
    } catch (const ExprError& err) {
        throw ConfigError(doc.origin() + ": " + e.key + ": " + err.what());
    }
}

// Compiles `<prefix>1 .. <prefix>count`, requiring every component exactly once.
ExprList compile_components(const ConfigDocument& doc, const ConfigSection& sec, const std::string& prefix,
                            std::size_t count, const ExprScope& scope) {
    std::vector<const ConfigEntry*> slots(count, nullptr);
    for (const auto& e : sec.entries) {
        if (!e.key.starts_with(prefix)) {
            continue;
        }
        const std::string idx_text = e.key.substr(prefix.size());
        std::size_t idx = 0;
        try {
            std::size_t used = 0;
            idx = std::stoul(idx_text, &used);
            if (used != idx_text.size()) {
                idx = 0;
            }
        } catch (const std::exception&) {
            idx = 0;
        }
        if (idx < 1 || idx > count) {
            std::ostringstream os;
            os << "component index out of range (dimension " << count << ")";
            doc.fail(e, os.str());
        }
        if (slots[idx - 1] != nullptr) {
            doc.fail(e, "component defined twice");
        }
        slots[idx - 1] = &e;
    }
    auto exprs = std::make_shared<std::vector<Expression>>();
    for (std::size_t i = 0; i < count; ++i) {
        if (slots[i] == nullptr) {
            std::ostringstream os;
            os << doc.origin() << ": [" << sec.name << "] missing " << prefix << i + 1;
            throw ConfigError(os.str());
        }
        exprs->push_back(compile_entry(doc, *slots[i], scope));
    }
    return exprs;
}

std::string_view trim_view(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

JumpNoise load_noise(const ConfigDocument& doc, std::size_t m) {
    const auto* sec = doc.section("noise");
    if (sec == nullptr) {
        if (m == 0) {
            return JumpNoise::finite({{{}, 1.0}});
        }
        throw ConfigError(doc.origin() + ": missing section [noise] (m > 0)");
    }
    sec->allow_only({"kind", "outcome", "lo", "hi", "mean", "stddev"});
    const std::string kind = doc.string("noise", "kind", "finite");
    if (kind == "finite") {
        std::vector<NoiseOutcome> support;
        for (const auto* e : sec->all("outcome")) {
            const auto at = e->value.rfind('@');
            if (at == std::string::npos) {
                doc.fail(*e, "expected `v_1, .., v_m @ probability`");
            }
            ConfigEntry value_part = *e;
            value_part.value = std::string(trim_view(std::string_view(e->value).substr(0, at)));
            ConfigEntry prob_part = *e;
            prob_part.value = std::string(trim_view(std::string_view(e->value).substr(at + 1)));
            prob_part.value_column = e->value_column + at + 1;
            NoiseOutcome o;
            o.value = doc.numbers(value_part);
            o.probability = doc.number(prob_part);
            if (o.value.size() != m) {
                std::ostringstream os;
                os << "outcome has dimension " << o.value.size() << ", expected m = " << m;
                doc.fail(*e, os.str());
            }
            support.push_back(std::move(o));
        }
        if (support.empty()) {
            throw ConfigError(doc.origin() + ": [noise] kind = finite needs at least one `outcome`");
        }
        try {
            return JumpNoise::finite(std::move(support));
        } catch (const std::invalid_argument& err) {
            throw ConfigError(doc.origin() + ": [noise] " + err.what());
        }
    }
    if (kind == "uniform") {
        const double lo = doc.number("noise", "lo", -1.0);
        const double hi = doc.number("noise", "hi", 1.0);
        if (!(lo < hi)) {
            throw ConfigError(doc.origin() + ": [noise] uniform needs lo < hi");
        }
        return JumpNoise::sampler(m, [lo, hi, m](DrawStream& s) {
            Vec v(m);
            for (auto& c : v) {
                c = lo + (hi - lo) * s.uniform();
            }
            return v;
        });
    }
    if (kind == "normal") {
        const double mean = doc.number("noise", "mean", 0.0);
        const double sd = doc.number("noise", "stddev", 1.0);
        if (!(sd >= 0.0)) {
            throw ConfigError(doc.origin() + ": [noise] normal needs stddev >= 0");
        }
        return JumpNoise::sampler(m, [mean, sd, m](DrawStream& s) {
            Vec v(m);
            for (auto& c : v) {
                c = mean + sd * s.normal();
            }
            return v;
        });
    }
    throw ConfigError(doc.origin() + ": [noise] unknown kind \"" + kind + "\" (finite, uniform, normal)");
}

std::size_t dimension(const ConfigDocument& doc, std::string_view key, bool required) {
    const auto* sec = doc.section("system");
    const auto* e = sec->find(key);
    if (e == nullptr) {
        if (required) {
            throw ConfigError(doc.origin() + ": [system] missing " + std::string(key));
        }
        return 0;
    }
    const auto v = doc.integer("system", key, 0);
    if (v < 0) {
        doc.fail(*e, "dimension must be nonnegative");
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

SetDescriptor parse_set(const ConfigDocument& doc, const ConfigEntry& entry, std::size_t dim) {
    const std::string_view text(entry.value);
    if (trim_view(text) == "empty") {
        return SetDescriptor::union_of({});
    }
    std::vector<Box> boxes;
    std::size_t pos = 0;
    Box current;
    bool expect_factor = true;
    auto finish_box = [&] {
        if (current.dim() != dim) {
            std::ostringstream os;
            os << "set has dimension " << current.dim() << ", expected " << dim;
            doc.fail(entry, os.str());
        }
        boxes.push_back(std::move(current));
        current = Box{};
    };
    while (pos < text.size()) {
        const char c = text[pos];
        if (c == ' ' || c == '\t') {
            ++pos;
            continue;
        }
        if (expect_factor) {
            if (c != '[' && c != '{') {
                doc.fail(entry, "expected '[' or '{' in set expression");
            }
            const char close = c == '[' ? ']' : '}';
            const auto end = text.find(close, pos);
            if (end == std::string_view::npos) {
                doc.fail(entry, std::string("unterminated '") + c + "'");
            }
            ConfigEntry inner = entry;
            inner.value = std::string(text.substr(pos + 1, end - pos - 1));
            inner.value_column = entry.value_column + pos + 1;
            const auto vals = doc.numbers(inner);
            if (c == '[') {
                if (vals.size() != 2 || !(vals[0] <= vals[1])) {
                    doc.fail(entry, "interval must be [lo, hi] with lo <= hi");
                }
                current.bounds.push_back({vals[0], vals[1]});
            } else {
                for (double v : vals) {
                    current.bounds.push_back({v, v});
                }
            }
            pos = end + 1;
            expect_factor = false;
        } else if (c == 'x') {
            ++pos;
            expect_factor = true;
        } else if (c == '|') {
            ++pos;
            finish_box();
            expect_factor = true;
        } else {
            doc.fail(entry, std::string("unexpected '") + c + "' in set expression");
        }
    }
    if (expect_factor) {
        doc.fail(entry, "set expression ends early");
    }
    finish_box();
    try {
        return SetDescriptor::union_of(std::move(boxes));
    } catch (const std::invalid_argument& err) {
        doc.fail(entry, err.what());
    }
}

SystemSpec load_system(const ConfigDocument& doc) {
    const auto& sec = doc.require("system");
    sec.allow_only({"name", "n", "p", "m", "epsilon", "C", "D"}, {"flow.x_", "flow.r_", "jump.x_", "jump.r_"});

    SystemSpec spec;
    spec.name = doc.string("system", "name", "system");
    spec.n = dimension(doc, "n", true);
    spec.p = dimension(doc, "p", false);
    spec.m = dimension(doc, "m", false);
    if (spec.n == 0) {
        throw ConfigError(doc.origin() + ": [system] n must be at least 1");
    }
    const auto eps = doc.maybe_number("system", "epsilon");
    if (!eps || !(*eps > 0.0)) {
        throw ConfigError(doc.origin() + ": [system] epsilon must be given and positive");
    }
    spec.epsilon = *eps;

    ExprScope flow_scope{spec.n, spec.p, 0, true, true, doc.constants()};
    ExprScope aux_flow_scope{0, spec.p, 0, false, false, doc.constants()};
    ExprScope jump_scope{spec.n, spec.p, spec.m, false, false, doc.constants()};
    ExprScope aux_jump_scope{0, spec.p, spec.m, false, false, doc.constants()};

    const ExprList fx = compile_components(doc, sec, "flow.x_", spec.n, flow_scope);
    const ExprList fr = compile_components(doc, sec, "flow.r_", spec.p, aux_flow_scope);
    const ExprList gx = compile_components(doc, sec, "jump.x_", spec.n, jump_scope);
    const ExprList gr = compile_components(doc, sec, "jump.r_", spec.p, aux_jump_scope);

    spec.fast_time = std::any_of(fx->begin(), fx->end(), [](const Expression& e) { return e.uses_tau(); });
    spec.f = [fx](ConstVecRef x, ConstVecRef r, double tau, double eps_, VecRef out) {
        const ExprArgs args{x, r, {}, tau, eps_};
        for (std::size_t i = 0; i < fx->size(); ++i) {
            out[i] = (*fx)[i].eval(args);
        }
    };
    spec.w = [fr](ConstVecRef r, VecRef out) {
        const ExprArgs args{{}, r, {}, 0.0, 0.0};
        for (std::size_t i = 0; i < fr->size(); ++i) {
            out[i] = (*fr)[i].eval(args);
        }
    };
    spec.g = [gx](ConstVecRef x, ConstVecRef r, ConstVecRef v, VecRef out) {
        const ExprArgs args{x, r, v, 0.0, 0.0};
        for (std::size_t i = 0; i < gx->size(); ++i) {
            out[i] = (*gx)[i].eval(args);
        }
    };
    spec.h = [gr](ConstVecRef r, ConstVecRef v, VecRef out) {
        const ExprArgs args{{}, r, v, 0.0, 0.0};
        for (std::size_t i = 0; i < gr->size(); ++i) {
            out[i] = (*gr)[i].eval(args);
        }
    };

    const auto* c_entry = sec.find("C");
    const auto* d_entry = sec.find("D");
    if (c_entry == nullptr || d_entry == nullptr) {
        throw ConfigError(doc.origin() + ": [system] needs both C and D");
    }
    spec.flow_set = parse_set(doc, *c_entry, spec.p);
    spec.jump_set = parse_set(doc, *d_entry, spec.p);
    spec.noise = load_noise(doc, spec.m);
    try {
        spec.check();
    } catch (const std::invalid_argument& err) {
        throw ConfigError(doc.origin() + ": " + err.what());
    }
    return spec;
}

std::optional<AverageMap> load_average_map(const ConfigDocument& doc, const SystemSpec& spec) {
    const auto* sec = doc.section("average");
    if (sec == nullptr) {
        return std::nullopt;
    }
    bool any = false;
    for (const auto& e : sec->entries) {
        any = any || e.key.starts_with("f_ave.x_");
    }
    if (!any) {
        return std::nullopt;
    }
    ExprScope scope{spec.n, spec.p, 0, false, false, doc.constants()};
    const ExprList fa = compile_components(doc, *sec, "f_ave.x_", spec.n, scope);
    return AverageMap([fa](ConstVecRef x, ConstVecRef r, VecRef out) {
        const ExprArgs args{x, r, {}, 0.0, 0.0};
        for (std::size_t i = 0; i < fa->size(); ++i) {
            out[i] = (*fa)[i].eval(args);
        }
    });
}

LyapunovFunction load_lyapunov(const ConfigDocument& doc, const SystemSpec& spec) {
    const auto* sec = doc.section("certify");
    const auto* e = sec != nullptr ? sec->find("V") : nullptr;
    if (e == nullptr) {
        throw ConfigError(doc.origin() + ": no Lyapunov function registered ([certify] V)");
    }
    if (e->value == "quadratic") {
        return quadratic_lyapunov();
    }
    ExprScope scope{spec.n, spec.p, 0, false, false, doc.constants()};
    auto expr = std::make_shared<const Expression>(compile_entry(doc, *e, scope));
    LyapunovFunction v;
    v.name = e->value;
    v.value = [expr](ConstVecRef x, ConstVecRef r) { return expr->eval({x, r, {}, 0.0, 0.0}); };
    return v;
}

std::vector<StateVec> load_inits(const ConfigDocument& doc, const SystemSpec& spec) {
    std::vector<StateVec> inits;
    const auto* sec = doc.section("simulate");
    if (sec == nullptr) {
        return inits;
    }
    for (const auto* e : sec->all("init")) {
        const auto semi = e->value.find(';');
        ConfigEntry xs = *e;
        xs.value = std::string(trim_view(std::string_view(e->value).substr(0, semi)));
        StateVec s;
        s.x = doc.numbers(xs);
        if (semi != std::string::npos) {
            ConfigEntry rs = *e;
            rs.value = std::string(trim_view(std::string_view(e->value).substr(semi + 1)));
            rs.value_column = e->value_column + semi + 1;
            s.r = doc.numbers(rs);
        }
        if (s.x.size() != spec.n || s.r.size() != spec.p) {
            std::ostringstream os;
            os << "init has dimensions (" << s.x.size() << ", " << s.r.size() << "), expected (" << spec.n << ", "
               << spec.p << ")";
            doc.fail(*e, os.str());
        }
        inits.push_back(std::move(s));
    }
    return inits;
}

}  // namespace shds
