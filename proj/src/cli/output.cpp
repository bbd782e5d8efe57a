#include "shds/cli/output.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace shds::cli {

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return {buf.data(), ptr};
}

std::string format_fixed(double v, int decimals) {
    if (!std::isfinite(v)) {
        return format_double(v);
    }
    std::array<char, 128> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, decimals);
    if (ec != std::errc()) {
        throw std::runtime_error("format_fixed: conversion failed");
    }
    std::string s(buf.data(), ptr);
    if (s.starts_with('-') && s.find_first_not_of("-0.") == std::string::npos) {
        s.erase(0, 1);
    }
    return s;
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0xf]);
    }
    return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open output file " + path.string());
    }
    return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(open_output(path)), columns_(header.size()), path_(path) {
    for (const auto& h : header) {
        cell(h);
    }
    end_row();
}

CsvWriter& CsvWriter::cell(std::string_view text) {
    if (filled_ > 0) {
        out_ << ',';
    }
    out_ << text;
    ++filled_;
    return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }
CsvWriter& CsvWriter::cell(std::int64_t v) { return cell(std::to_string(v)); }
CsvWriter& CsvWriter::cell(std::size_t v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
    if (filled_ != columns_) {
        throw std::logic_error("csv row in " + path_.string() + " has " + std::to_string(filled_) +
                               " cells, expected " + std::to_string(columns_));
    }
    out_ << '\n';
    filled_ = 0;
}

void CsvWriter::close() {
    out_.close();
    if (!out_) {
        throw std::runtime_error("error writing " + path_.string());
    }
}

std::filesystem::path write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
    nlohmann::ordered_json j;
    j["command"] = manifest.command;
    j["config_digest"] = "sha256:" + manifest.config_digest;
    j["seed_base"] = manifest.seed_base;
    j["version"] = manifest.version;
    j["duration_seconds"] = manifest.duration_seconds;
    auto outputs = nlohmann::ordered_json::array();
    for (const auto& p : manifest.outputs) {
        outputs.push_back(p.filename().string());
    }
    j["outputs"] = outputs;
    const auto path = dir / "manifest.json";
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("error writing " + path.string());
    }
    return path;
}

}  // namespace shds::cli
