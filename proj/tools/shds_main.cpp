#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shds/cli/commands.hpp"
#include "shds/cli/output.hpp"
#include "shds/config.hpp"

namespace {

using namespace shds;
using namespace shds::cli;

struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    std::string out = ".";
    std::optional<std::size_t> paths;
    std::optional<double> t_max;
    std::optional<std::int64_t> j_max;
    std::optional<std::size_t> record_every;
};

void add_common(CLI::App* cmd, Flags& f, bool config_required) {
    auto* opt = cmd->add_option("--config", f.config, "configuration file");
    if (config_required) {
        opt->required();
    }
    cmd->add_option("--seed", f.seed, "seed base (path i uses seed + i)");
    cmd->add_option("--out", f.out, "output directory");
}

void add_run(CLI::App* cmd, Flags& f) {
    cmd->add_option("--paths", f.paths, "number of sample paths")->check(CLI::PositiveNumber);
    cmd->add_option("--t-max", f.t_max, "flow-time horizon");
    cmd->add_option("--j-max", f.j_max, "jump horizon");
    cmd->add_option("--record-every", f.record_every, "keep every k-th flow sample")->check(CLI::PositiveNumber);
}

RunOverrides overrides(const Flags& f) { return {f.paths, f.t_max, f.j_max, f.record_every}; }

CommonOptions common(const Flags& f) { return {f.out, f.seed}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic hybrid systems with fast-oscillating flows: simulation, averaging, certificates"};
    app.set_version_flag("--version", std::string(kToolkitVersion));
    app.require_subcommand(1);

    Flags f;
    std::optional<std::vector<double>> windows;
    std::optional<double> margin;
    RecurOptions recur;
    std::optional<std::vector<double>> eps;
    Fig1Options fig;

    auto* sim = app.add_subcommand("simulate", "simulate an ensemble and write trajectories.csv");
    add_common(sim, f, true);
    add_run(sim, f);

    auto* avg = app.add_subcommand("average", "estimate the average map and the convergence function");
    add_common(avg, f, true);
    avg->add_option("--windows", windows, "averaging windows T (increasing)")->delimiter(',');

    auto* cert = app.add_subcommand("certify", "grid-certify a Lyapunov-Foster function for the average system");
    add_common(cert, f, true);
    cert->add_option("--margin", margin, "tighten the gate to lambda < 1/2 - margin")->check(CLI::NonNegativeNumber);

    auto* rec = app.add_subcommand("recur", "estimate recurrence of a ball around the target set");
    add_common(rec, f, true);
    add_run(rec, f);
    rec->add_option("--radius", recur.radius, "open-ball radius")->check(CLI::PositiveNumber);
    rec->add_option("--rho", recur.rho, "allowed failure probability");
    rec->add_option("--R", recur.R, "radius bounding the initial conditions");
    rec->add_option("--horizon", recur.horizon, "time budget for hits (0 allowed)");

    auto* sweep = app.add_subcommand("sweep", "smallest certified recurrent radius over epsilon");
    add_common(sweep, f, true);
    add_run(sweep, f);
    sweep->add_option("--eps", eps, "epsilon values, strictly decreasing")->delimiter(',');

    auto* fig1 = app.add_subcommand("fig1", "jammed extremum-seeking ensemble plus nominal path, CSV and SVG");
    add_common(fig1, f, false);
    fig1->add_option("--T", fig.T, "jamming period");
    fig1->add_option("--p", fig.p, "probability of v = 0.75");
    fig1->add_option("--epsilon", fig.epsilon, "time-scale separation");
    fig1->add_option("--delta", fig.delta, "regularization radius");
    fig1->add_option("--t-max", fig.t_max, "flow-time horizon");
    fig1->add_option("--paths", fig.n_paths, "jammed sample paths")->check(CLI::PositiveNumber);
    fig1->add_option("--record-every", fig.record_every, "keep every k-th flow sample")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (fig1->parsed()) {
            return cmd_fig1(common(f), fig, std::cout);
        }
        const ConfigDocument doc = ConfigDocument::load(f.config);
        if (sim->parsed()) {
            return cmd_simulate(doc, common(f), overrides(f), std::cout);
        }
        if (avg->parsed()) {
            return cmd_average(doc, common(f), {windows}, std::cout);
        }
        if (cert->parsed()) {
            return cmd_certify(doc, common(f), {margin}, std::cout);
        }
        if (rec->parsed()) {
            recur.run = overrides(f);
            return cmd_recur(doc, common(f), recur, std::cout);
        }
        if (sweep->parsed()) {
            return cmd_sweep(doc, common(f), {eps, overrides(f)}, std::cout);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
