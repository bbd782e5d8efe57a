#pragma once

// Sectioned `key = value` documents. Lines starting with '#' are comments;
// keys may repeat (e.g. `outcome`, `init`). Numeric values are constant
// expressions over [params], which are evaluated top to bottom.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shds {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConfigEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
    std::size_t value_column = 0;  // 0-based offset of value within the line
};

struct ConfigSection {
    std::string name;
    std::size_t line = 0;
    std::vector<ConfigEntry> entries;

    [[nodiscard]] const ConfigEntry* find(std::string_view key) const;
    [[nodiscard]] std::vector<const ConfigEntry*> all(std::string_view key) const;
    // Throws ConfigError for keys that are not listed and match no prefix.
    void allow_only(const std::vector<std::string_view>& keys,
                    const std::vector<std::string_view>& prefixes = {}) const;
};

using ConstantTable = std::map<std::string, double, std::less<>>;

class ConfigDocument {
public:
    [[nodiscard]] static ConfigDocument parse(std::string text, std::string origin = "<config>");
    [[nodiscard]] static ConfigDocument load(const std::filesystem::path& path);

    [[nodiscard]] const std::string& text() const { return text_; }
    [[nodiscard]] const std::string& origin() const { return origin_; }
    [[nodiscard]] const ConfigSection* section(std::string_view name) const;
    [[nodiscard]] const ConfigSection& require(std::string_view name) const;
    [[nodiscard]] const ConstantTable& constants() const { return constants_; }

    // Evaluates an entry as a constant expression.
    [[nodiscard]] double number(const ConfigEntry& entry) const;
    [[nodiscard]] double number(std::string_view section, std::string_view key, double fallback) const;
    [[nodiscard]] std::optional<double> maybe_number(std::string_view section, std::string_view key) const;
    [[nodiscard]] std::int64_t integer(std::string_view section, std::string_view key, std::int64_t fallback) const;
    [[nodiscard]] std::string string(std::string_view section, std::string_view key, std::string fallback) const;
    // Comma-separated constant expressions, or `lo:hi:count` for a linspace.
    [[nodiscard]] std::optional<std::vector<double>> numbers(std::string_view section, std::string_view key) const;
    [[nodiscard]] std::vector<double> numbers(const ConfigEntry& entry, char separator = ',') const;

    [[noreturn]] void fail(const ConfigEntry& entry, const std::string& message) const;

private:
    std::string text_;
    std::string origin_;
    std::vector<ConfigSection> sections_;
    ConstantTable constants_;
};

}  // namespace shds
