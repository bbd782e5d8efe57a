#pragma once

// Command implementations behind the `shds` executable. Each command writes
// its outputs plus manifest.json into `out_dir` and returns an exit code:
// 0 success or pass, 2 analysis verdict fail. Configuration problems surface
// as ConfigError and usage problems as std::invalid_argument (exit code 1 in
// the executable).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shds/config.hpp"
#include "shds/core.hpp"
#include "shds/solver.hpp"

namespace shds::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitVerdictFail = 2;

struct CommonOptions {
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 0;
};

// [simulate] settings with command-line overrides applied.
struct RunSettings {
    std::vector<StateVec> inits;
    Horizon horizon;
    IntegratorConfig integrator;
    std::size_t n_paths = 10;
};

struct RunOverrides {
    std::optional<std::size_t> n_paths;
    std::optional<double> t_max;
    std::optional<std::int64_t> j_max;
    std::optional<std::size_t> record_every;
};

[[nodiscard]] RunSettings load_run_settings(const ConfigDocument& doc, const SystemSpec& spec,
                                            const RunOverrides& overrides = {});

// Rows `path_id,t,j,x_1..,r_1..,tau,event`; the first sample after a jump is
// tagged `jump`, the final state `terminal`.
void write_trajectory_csv(const std::filesystem::path& path, const std::vector<HybridArc>& arcs,
                          const std::vector<std::size_t>& path_ids, std::size_t n, std::size_t p);

int cmd_simulate(const ConfigDocument& doc, const CommonOptions& common, const RunOverrides& overrides,
                 std::ostream& log);

struct AverageOptions {
    std::optional<std::vector<double>> windows;
};

int cmd_average(const ConfigDocument& doc, const CommonOptions& common, const AverageOptions& opts,
                std::ostream& log);

struct CertifyOptions {
    std::optional<double> margin;
};

int cmd_certify(const ConfigDocument& doc, const CommonOptions& common, const CertifyOptions& opts,
                std::ostream& log);

struct RecurOptions {
    std::optional<double> radius;
    std::optional<double> rho;
    std::optional<double> R;
    std::optional<double> horizon;  // time budget; 0 allowed
    RunOverrides run;
};

int cmd_recur(const ConfigDocument& doc, const CommonOptions& common, const RecurOptions& opts, std::ostream& log);

struct SweepOptions {
    std::optional<std::vector<double>> epsilons;
    RunOverrides run;
};

int cmd_sweep(const ConfigDocument& doc, const CommonOptions& common, const SweepOptions& opts, std::ostream& log);

struct Fig1Options {
    double T = 1.0;
    double p = 0.1;
    double epsilon = 0.01;
    double delta = 0.1;
    double t_max = 10.0;
    std::size_t n_paths = 100;
    std::size_t record_every = 10;
};

int cmd_fig1(const CommonOptions& common, const Fig1Options& opts, std::ostream& log);

}  // namespace shds::cli
