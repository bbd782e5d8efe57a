#include "shds/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "shds/core.hpp"
#include "shds/expr.hpp"

namespace shds {

namespace {

constexpr std::string_view kWhitespace = " \t\r";

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(kWhitespace);
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(kWhitespace);
    return s.substr(b, e - b + 1);
}

const std::vector<std::string_view> kSections{"params", "system", "noise",  "simulate",
                                              "average", "certify", "recur", "sweep"};

bool is_identifier(std::string_view s) {
    if (s.empty() || (std::isalpha(static_cast<unsigned char>(s[0])) == 0 && s[0] != '_')) {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; });
}

std::string location(const std::string& origin, std::size_t line) {
    std::ostringstream os;
    os << origin << ":" << line;
    return os.str();
}

}  // namespace

const ConfigEntry* ConfigSection::find(std::string_view key) const {
    const ConfigEntry* found = nullptr;
    for (const auto& e : entries) {
        if (e.key == key) {
            found = &e;
        }
    }
    return found;
}

std::vector<const ConfigEntry*> ConfigSection::all(std::string_view key) const {
    std::vector<const ConfigEntry*> out;
    for (const auto& e : entries) {
        if (e.key == key) {
            out.push_back(&e);
        }
    }
    return out;
}

void ConfigSection::allow_only(const std::vector<std::string_view>& keys,
                               const std::vector<std::string_view>& prefixes) const {
    for (const auto& e : entries) {
        const bool listed = std::find(keys.begin(), keys.end(), e.key) != keys.end();
        const bool prefixed = std::any_of(prefixes.begin(), prefixes.end(),
                                          [&](std::string_view p) { return e.key.starts_with(p); });
        if (!listed && !prefixed) {
            std::ostringstream os;
            os << "line " << e.line << ": unknown key \"" << e.key << "\" in [" << name << "]";
            throw ConfigError(os.str());
        }
    }
}

ConfigDocument ConfigDocument::parse(std::string text, std::string origin) {
    ConfigDocument doc;
    doc.text_ = std::move(text);
    doc.origin_ = std::move(origin);

    std::istringstream in(doc.text_);
    std::string raw;
    std::size_t line_no = 0;
    std::optional<std::size_t> current;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const std::string_view body = trim(line);
        if (body.empty()) {
            continue;
        }
        if (body.front() == '[') {
            if (body.back() != ']') {
                throw ConfigError(location(doc.origin_, line_no) + ": malformed section header");
            }
            const std::string name(trim(body.substr(1, body.size() - 2)));
            if (std::find(kSections.begin(), kSections.end(), name) == kSections.end()) {
                throw ConfigError(location(doc.origin_, line_no) + ": unknown section [" + name + "]");
            }
            if (doc.section(name) != nullptr) {
                throw ConfigError(location(doc.origin_, line_no) + ": duplicate section [" + name + "]");
            }
            doc.sections_.push_back({name, line_no, {}});
            current = doc.sections_.size() - 1;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(location(doc.origin_, line_no) + ": expected `key = value`");
        }
        if (!current) {
            throw ConfigError(location(doc.origin_, line_no) + ": entry before any section header");
        }
        ConfigEntry entry;
        entry.key = std::string(trim(line.substr(0, eq)));
        const std::string_view rest = line.substr(eq + 1);
        const std::string_view value = trim(rest);
        entry.value = std::string(value);
        entry.value_column = value.empty() ? eq + 1 : static_cast<std::size_t>(value.data() - raw.data());
        entry.line = line_no;
        if (entry.key.empty()) {
            throw ConfigError(location(doc.origin_, line_no) + ": empty key");
        }
        if (entry.value.empty()) {
            throw ConfigError(location(doc.origin_, line_no) + ": empty value for \"" + entry.key + "\"");
        }
        doc.sections_[*current].entries.push_back(std::move(entry));
    }

    if (const auto* params = doc.section("params")) {
        for (const auto& e : params->entries) {
            if (!is_identifier(e.key)) {
                doc.fail(e, "parameter name \"" + e.key + "\" is not an identifier");
            }
            if (doc.constants_.contains(e.key)) {
                doc.fail(e, "parameter \"" + e.key + "\" defined twice");
            }
            doc.constants_[e.key] = doc.number(e);
        }
    }
    return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

const ConfigSection* ConfigDocument::section(std::string_view name) const {
    for (const auto& s : sections_) {
        if (s.name == name) {
            return &s;
        }
    }
    return nullptr;
}

const ConfigSection& ConfigDocument::require(std::string_view name) const {
    const auto* s = section(name);
    if (s == nullptr) {
        throw ConfigError(origin_ + ": missing section [" + std::string(name) + "]");
    }
    return *s;
}

void ConfigDocument::fail(const ConfigEntry& entry, const std::string& message) const {
    throw ConfigError(location(origin_, entry.line) + ": " + entry.key + ": " + message);
}

double ConfigDocument::number(const ConfigEntry& entry) const {
    try {
        return eval_constant(entry.value, constants_, entry.line, entry.value_column);
    } catch (const ExprError& e) {
        throw ConfigError(origin_ + ": " + e.what());
    }
}

double ConfigDocument::number(std::string_view section_name, std::string_view key, double fallback) const {
    return maybe_number(section_name, key).value_or(fallback);
}

std::optional<double> ConfigDocument::maybe_number(std::string_view section_name, std::string_view key) const {
    const auto* s = section(section_name);
    if (s == nullptr) {
        return std::nullopt;
    }
    const auto* e = s->find(key);
    if (e == nullptr) {
        return std::nullopt;
    }
    return number(*e);
}

std::int64_t ConfigDocument::integer(std::string_view section_name, std::string_view key,
                                     std::int64_t fallback) const {
    const auto* s = section(section_name);
    const auto* e = s != nullptr ? s->find(key) : nullptr;
    if (e == nullptr) {
        return fallback;
    }
    const double v = number(*e);
    if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 9.0e15) {
        fail(*e, "expected an integer, got \"" + e->value + "\"");
    }
    return static_cast<std::int64_t>(v);
}

std::string ConfigDocument::string(std::string_view section_name, std::string_view key, std::string fallback) const {
    const auto* s = section(section_name);
    const auto* e = s != nullptr ? s->find(key) : nullptr;
    return e != nullptr ? e->value : fallback;
}

std::vector<double> ConfigDocument::numbers(const ConfigEntry& entry, char separator) const {
    const std::string_view value(entry.value);
    if (separator == ',' && value.find(':') != std::string_view::npos) {
        std::vector<std::string_view> parts;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= value.size(); ++i) {
            if (i == value.size() || value[i] == ':') {
                parts.push_back(value.substr(start, i - start));
                start = i + 1;
            }
        }
        if (parts.size() != 3) {
            fail(entry, "expected lo:hi:count");
        }
        ConfigEntry piece = entry;
        std::array<double, 3> v{};
        for (std::size_t k = 0; k < 3; ++k) {
            piece.value = std::string(trim(parts[k]));
            v[k] = number(piece);
        }
        if (v[2] < 1 || v[2] != std::floor(v[2])) {
            fail(entry, "count in lo:hi:count must be a positive integer");
        }
        return linspace(v[0], v[1], static_cast<std::size_t>(v[2]));
    }
    std::vector<double> out;
    std::size_t start = 0;
    int depth = 0;
    for (std::size_t i = 0; i <= value.size(); ++i) {
        if (i < value.size() && value[i] == '(') {
            ++depth;
        } else if (i < value.size() && value[i] == ')') {
            --depth;
        }
        if (i == value.size() || (value[i] == separator && depth == 0)) {
            const std::string_view piece_text = value.substr(start, i - start);
            ConfigEntry piece = entry;
            piece.value = std::string(trim(piece_text));
            const auto lead = piece_text.find_first_not_of(kWhitespace);
            piece.value_column = entry.value_column + start + (lead == std::string_view::npos ? 0 : lead);
            out.push_back(number(piece));
            start = i + 1;
        }
    }
    return out;
}

std::optional<std::vector<double>> ConfigDocument::numbers(std::string_view section_name, std::string_view key) const {
    const auto* s = section(section_name);
    const auto* e = s != nullptr ? s->find(key) : nullptr;
    if (e == nullptr) {
        return std::nullopt;
    }
    return numbers(*e);
}

}  // namespace shds
