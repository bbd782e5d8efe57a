#pragma once

// Locale-independent text output: CSV rows, run manifests, content digests.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace shds::cli {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

// Shortest representation that round-trips; "inf", "-inf", "nan" otherwise.
[[nodiscard]] std::string format_double(double v);
// Fixed notation with `decimals` digits after the point.
[[nodiscard]] std::string format_fixed(double v, int decimals);

[[nodiscard]] std::string sha256_hex(std::string_view bytes);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& cell(std::string_view text);
    CsvWriter& cell(double v);
    CsvWriter& cell(std::int64_t v);
    CsvWriter& cell(std::size_t v);
    void end_row();
    void close();

private:
    std::ofstream out_;
    std::size_t columns_ = 0;
    std::size_t filled_ = 0;
    std::filesystem::path path_;
};

struct RunManifest {
    std::string command;
    std::string config_digest;
    std::uint64_t seed_base = 0;
    std::string version = std::string(kToolkitVersion);
    double duration_seconds = 0.0;
    std::vector<std::filesystem::path> outputs;
};

// Writes manifest.json into `dir` and returns its path.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

// Opens a text file for writing, creating parent directories; throws
// std::runtime_error on failure.
[[nodiscard]] std::ofstream open_output(const std::filesystem::path& path);

class Stopwatch {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace shds::cli
