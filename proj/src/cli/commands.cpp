#include "shds/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "shds/averaging.hpp"
#include "shds/certificates.hpp"
#include "shds/cli/output.hpp"
#include "shds/cli/svg.hpp"
#include "shds/stats.hpp"
#include "shds/systems.hpp"

namespace shds::cli {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void finish(const ConfigDocument& doc, const CommonOptions& common, const std::string& command,
            std::vector<std::filesystem::path> outputs, const Stopwatch& sw, std::ostream& log) {
    RunManifest m;
    m.command = command;
    m.config_digest = sha256_hex(doc.text());
    m.seed_base = common.seed;
    m.outputs = std::move(outputs);
    m.duration_seconds = sw.seconds();
    const auto path = write_manifest(common.out_dir, m);
    for (const auto& o : m.outputs) {
        log << "wrote " << o.string() << '\n';
    }
    log << "wrote " << path.string() << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
    if (!out) {
        throw std::runtime_error("error writing " + path.string());
    }
}

std::string join(ConstVecRef v, char sep = ';') {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
            s += sep;
        }
        s += format_double(v[i]);
    }
    return s;
}

// Grid points of each dimension of the bounding box of C.
std::vector<std::vector<double>> flow_set_axes(const SystemSpec& spec, std::size_t points) {
    std::vector<std::vector<double>> axes(spec.p);
    const auto& boxes = spec.flow_set.boxes();
    for (std::size_t k = 0; k < spec.p; ++k) {
        double lo = 0.0;
        double hi = 0.0;
        bool first = true;
        for (const auto& b : boxes) {
            lo = first ? b.bounds[k].lo : std::min(lo, b.bounds[k].lo);
            hi = first ? b.bounds[k].hi : std::max(hi, b.bounds[k].hi);
            first = false;
        }
        axes[k] = lo == hi ? std::vector<double>{lo} : linspace(lo, hi, points);
    }
    return axes;
}

std::vector<double> periodic_points(std::size_t count) {
    std::vector<double> pts(count);
    for (std::size_t k = 0; k < count; ++k) {
        pts[k] = kTwoPi * static_cast<double>(k) / static_cast<double>(count);
    }
    return pts;
}

std::size_t positive_count(const ConfigDocument& doc, std::string_view section, std::string_view key,
                           std::int64_t fallback) {
    const auto v = doc.integer(section, key, fallback);
    if (v < 1) {
        throw ConfigError(doc.origin() + ": [" + std::string(section) + "] " + std::string(key) + " must be >= 1");
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

RunSettings load_run_settings(const ConfigDocument& doc, const SystemSpec& spec, const RunOverrides& overrides) {
    if (const auto* sec = doc.section("simulate")) {
        sec->allow_only({"t_max", "j_max", "n_paths", "base_step", "substep_per_epsilon", "record_every", "init"});
    }
    RunSettings s;
    s.inits = load_inits(doc, spec);
    if (s.inits.empty()) {
        throw ConfigError(doc.origin() + ": [simulate] needs at least one `init` line");
    }
    const double t_max = overrides.t_max.value_or(doc.number("simulate", "t_max", 10.0));
    const std::int64_t j_max = overrides.j_max.value_or(doc.integer("simulate", "j_max", 100000));
    s.horizon = Horizon(t_max, j_max);
    s.n_paths = overrides.n_paths.value_or(positive_count(doc, "simulate", "n_paths", 10));
    if (s.n_paths == 0) {
        throw std::invalid_argument("--paths must be >= 1");
    }
    s.integrator.base_step = doc.number("simulate", "base_step", s.integrator.base_step);
    s.integrator.substep_per_epsilon = doc.number("simulate", "substep_per_epsilon", s.integrator.substep_per_epsilon);
    s.integrator.record_every =
        overrides.record_every.value_or(positive_count(doc, "simulate", "record_every", 1));
    s.integrator.check();
    return s;
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<HybridArc>& arcs,
                          const std::vector<std::size_t>& path_ids, std::size_t n, std::size_t p) {
    std::vector<std::string> header{"path_id", "t", "j"};
    for (std::size_t i = 1; i <= n; ++i) {
        header.push_back("x_" + std::to_string(i));
    }
    for (std::size_t i = 1; i <= p; ++i) {
        header.push_back("r_" + std::to_string(i));
    }
    header.emplace_back("tau");
    header.emplace_back("event");
    CsvWriter csv(path, header);

    auto row = [&](std::size_t id, const FlowSegment& seg, std::size_t i, std::string_view event) {
        csv.cell(id).cell(seg.t(i)).cell(seg.j());
        for (double v : seg.x(i)) {
            csv.cell(v);
        }
        for (double v : seg.r(i)) {
            csv.cell(v);
        }
        csv.cell(seg.tau(i)).cell(event);
        csv.end_row();
    };

    for (std::size_t k = 0; k < arcs.size(); ++k) {
        const auto& arc = arcs[k];
        const std::size_t id = path_ids[k];
        for (std::size_t s = 0; s < arc.segments.size(); ++s) {
            const auto& seg = arc.segments[s];
            const bool last_segment = s + 1 == arc.segments.size();
            for (std::size_t i = 0; i < seg.size(); ++i) {
                const bool post_jump = s > 0 && i == 0;
                const bool last_sample = last_segment && i + 1 == seg.size();
                if (post_jump) {
                    row(id, seg, i, "jump");
                    if (last_sample) {
                        row(id, seg, i, "terminal");
                    }
                } else {
                    row(id, seg, i, last_sample ? "terminal" : "flow");
                }
            }
        }
    }
    csv.close();
}

int cmd_simulate(const ConfigDocument& doc, const CommonOptions& common, const RunOverrides& overrides,
                 std::ostream& log) {
    const Stopwatch sw;
    const SystemSpec spec = load_system(doc);
    const RunSettings rs = load_run_settings(doc, spec, overrides);
    const auto arcs = simulate_ensemble(spec, rs.inits, rs.n_paths, common.seed, rs.horizon, rs.integrator);
    std::vector<std::size_t> ids(arcs.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ids[i] = i;
    }
    const auto csv_path = common.out_dir / "trajectories.csv";
    write_trajectory_csv(csv_path, arcs, ids, spec.n, spec.p);

    std::size_t jumps = 0;
    for (const auto& a : arcs) {
        jumps += a.jumps.size();
    }
    log << "system: " << spec.name << "\npaths: " << arcs.size() << "\nstep: "
        << format_double(rs.integrator.effective_step(spec)) << "\ntotal jumps: " << jumps << '\n';
    finish(doc, common, "simulate", {csv_path}, sw, log);
    return kExitOk;
}

int cmd_average(const ConfigDocument& doc, const CommonOptions& common, const AverageOptions& opts,
                std::ostream& log) {
    const Stopwatch sw;
    const SystemSpec spec = load_system(doc);
    const auto& sec = doc.require("average");
    sec.allow_only({"windows", "x", "r", "tau_points", "min_panels", "map_x", "map_r", "map_window", "tolerance"},
                   {"f_ave.x_"});
    const auto closed = load_average_map(doc, spec);

    const auto x_axis = doc.numbers("average", "x").value_or(linspace(-2.0, 2.0, 5));
    std::vector<Vec> x_points;
    for (auto& x : cartesian(std::vector<std::vector<double>>(spec.n, x_axis))) {
        if (norm(x) > 0.0) {
            x_points.push_back(std::move(x));
        }
    }
    if (x_points.empty()) {
        throw ConfigError(doc.origin() + ": [average] x grid has no nonzero point");
    }
    std::vector<std::vector<double>> r_axes = flow_set_axes(spec, 3);
    if (auto r_axis = doc.numbers("average", "r")) {
        r_axes.assign(spec.p, *r_axis);
    }

    AveragingGrid grid;
    grid.x_points = x_points;
    grid.r_points = cartesian(r_axes);
    grid.tau_points = periodic_points(positive_count(doc, "average", "tau_points", 64));
    grid.windows = opts.windows.value_or(
        doc.numbers("average", "windows").value_or(linspace(std::numbers::pi / 2, 20 * std::numbers::pi, 40)));
    grid.min_panels = positive_count(doc, "average", "min_panels", 8);

    const auto map_x = doc.numbers("average", "map_x").value_or(linspace(-2.0, 2.0, 9));
    std::vector<std::vector<double>> map_r_axes = r_axes;
    if (auto mr = doc.numbers("average", "map_r")) {
        map_r_axes.assign(spec.p, *mr);
    }
    const double map_window = doc.number("average", "map_window", 20 * kTwoPi);
    const double tolerance = doc.number("average", "tolerance", 1e-6);

    const auto estimate =
        estimate_average_map(spec, std::vector<std::vector<double>>(spec.n, map_x), map_r_axes, map_window, closed,
                             std::numeric_limits<double>::infinity());
    const AverageMap& f_ave = estimate.average.f_ave;
    const JacobianCheck jac = check_jacobian_average(spec, f_ave, grid);
    const GammaCurve& gamma = jac.state;

    const auto gamma_path = common.out_dir / "gamma.csv";
    {
        CsvWriter csv(gamma_path,
                      {"T", "gamma_raw", "gamma_envelope", "jac_gamma_raw", "witness_x", "witness_r", "witness_tau"});
        for (std::size_t k = 0; k < gamma.windows.size(); ++k) {
            const auto& w = gamma.witnesses[k];
            csv.cell(gamma.windows[k])
                .cell(gamma.values[k])
                .cell(gamma.envelope[k])
                .cell(jac.residual.values[k])
                .cell(join(w.x))
                .cell(join(w.r))
                .cell(w.tau);
            csv.end_row();
        }
        csv.close();
    }

    const auto map_path = common.out_dir / "average_map.csv";
    {
        std::vector<std::string> header;
        for (std::size_t i = 1; i <= spec.n; ++i) {
            header.push_back("x_" + std::to_string(i));
        }
        for (std::size_t i = 1; i <= spec.p; ++i) {
            header.push_back("r_" + std::to_string(i));
        }
        for (std::size_t i = 1; i <= spec.n; ++i) {
            header.push_back("f_ave_" + std::to_string(i));
        }
        CsvWriter csv(map_path, header);
        for (std::size_t k = 0; k < estimate.nodes.size(); ++k) {
            for (double v : estimate.nodes[k]) {
                csv.cell(v);
            }
            for (double v : estimate.node_values[k]) {
                csv.cell(v);
            }
            csv.end_row();
        }
        csv.close();
    }

    std::ostringstream report;
    report << "system: " << spec.name << '\n';
    report << "average map window: " << format_double(map_window) << '\n';
    report << "nodal residual: " << format_double(estimate.nodal_residual) << '\n';
    report << "midpoint residual: " << format_double(estimate.midpoint_residual) << '\n';
    bool pass = true;
    if (estimate.closed_form_deviation) {
        pass = *estimate.closed_form_deviation <= tolerance;
        report << "closed-form deviation: " << format_double(*estimate.closed_form_deviation) << " (tolerance "
               << format_double(tolerance) << ") " << (pass ? "ok" : "EXCEEDED") << '\n';
    } else {
        report << "closed form: none registered; tabulated map used\n";
    }
    report << "gamma windows: " << gamma.windows.size() << ", last envelope value "
           << format_double(gamma.envelope.back()) << '\n';
    const auto report_path = common.out_dir / "average_report.txt";
    write_text(report_path, report.str());
    log << report.str();
    finish(doc, common, "average", {gamma_path, map_path, report_path}, sw, log);
    return pass ? kExitOk : kExitVerdictFail;
}

int cmd_certify(const ConfigDocument& doc, const CommonOptions& common, const CertifyOptions& opts,
                std::ostream& log) {
    const Stopwatch sw;
    const SystemSpec spec = load_system(doc);
    const LyapunovFunction v = load_lyapunov(doc, spec);
    doc.require("certify").allow_only(
        {"V", "r_min", "r_max", "radial_points", "aux_points", "margin", "mc_samples", "flow_on_jump_set"});

    AverageSpec avg;
    if (auto closed = load_average_map(doc, spec)) {
        avg = build_average_system(spec, *closed);
    } else {
        const auto map_x = doc.numbers("average", "map_x").value_or(linspace(-2.0, 2.0, 9));
        std::vector<std::vector<double>> r_axes = flow_set_axes(spec, 5);
        const double window = doc.number("average", "map_window", 20 * kTwoPi);
        avg = estimate_average_map(spec, std::vector<std::vector<double>>(spec.n, map_x), r_axes, window).average;
    }

    CertificateGridOptions gopts;
    gopts.r_min = doc.number("certify", "r_min", gopts.r_min);
    gopts.r_max = doc.number("certify", "r_max", gopts.r_max);
    gopts.radial_points = positive_count(doc, "certify", "radial_points", static_cast<std::int64_t>(gopts.radial_points));
    gopts.aux_points = positive_count(doc, "certify", "aux_points", static_cast<std::int64_t>(gopts.aux_points));
    const CertificateGrid grid = make_certificate_grid(avg, gopts);

    CertificateOptions copts;
    copts.margin = opts.margin.value_or(doc.number("certify", "margin", 0.0));
    copts.mc_samples = positive_count(doc, "certify", "mc_samples", static_cast<std::int64_t>(copts.mc_samples));
    copts.flow_on_jump_set = doc.integer("certify", "flow_on_jump_set", 0) != 0;
    copts.seed = common.seed;
    const FosterCertificate cert = foster_certificate(v, avg, grid, spec.noise, copts);

    auto witness = [](const GridWitness& w) { return "x=(" + join(w.x, ',') + ") r=(" + join(w.r, ',') + ")"; };
    std::ostringstream report;
    report << "system: " << spec.name << '\n';
    report << "V: " << v.name << '\n';
    report << "grid: " << cert.grid_description << '\n';
    report << "c1: " << format_double(cert.c1) << "  at " << witness(cert.sandwich.argmin) << '\n';
    report << "c2: " << format_double(cert.c2) << "  at " << witness(cert.sandwich.argmax) << '\n';
    report << "c3: " << format_double(cert.c3) << "  at " << witness(cert.gradient.argmax) << '\n';
    report << "c4: " << format_double(cert.c4) << "  at " << witness(cert.flow.argmin) << '\n';
    report << "c5: " << format_double(cert.c5) << "  at " << witness(cert.jump.argmax);
    if (cert.jump.max_std_error > 0.0) {
        report << "  (Monte Carlo std error " << format_double(cert.jump.max_std_error) << ")";
    }
    report << '\n';
    report << "lambda: " << format_double(cert.lambda) << '\n';
    report << "gate: lambda < " << format_double(0.5 - copts.margin) << '\n';
    for (const auto& f : cert.failures) {
        report << "failure: " << f << '\n';
    }
    report << "verdict: " << (cert.pass ? "PASS" : "FAIL") << " (grid-certified)\n";
    const auto path = common.out_dir / "certificate.txt";
    write_text(path, report.str());
    log << report.str();
    finish(doc, common, "certify", {path}, sw, log);
    return cert.pass ? kExitOk : kExitVerdictFail;
}

int cmd_recur(const ConfigDocument& doc, const CommonOptions& common, const RecurOptions& opts, std::ostream& log) {
    const Stopwatch sw;
    const SystemSpec spec = load_system(doc);
    if (const auto* sec = doc.section("recur")) {
        sec->allow_only({"radius", "rho", "R", "horizon", "j_budget", "n_paths"});
    }
    RunOverrides run = opts.run;
    if (!run.n_paths && doc.section("recur") != nullptr && doc.section("recur")->find("n_paths") != nullptr) {
        run.n_paths = positive_count(doc, "recur", "n_paths", 200);
    }
    RunSettings rs = load_run_settings(doc, spec, run);

    RecurrenceParams params;
    params.radius = opts.radius.value_or(doc.number("recur", "radius", 1.0));
    params.rho = opts.rho.value_or(doc.number("recur", "rho", 0.05));
    params.t_budget = opts.horizon.value_or(doc.number("recur", "horizon", rs.horizon.t_max));
    params.j_budget = doc.integer("recur", "j_budget", rs.horizon.j_max);
    double max_init = 0.0;
    for (const auto& s : rs.inits) {
        max_init = std::max(max_init, dist_to_target(s, spec));
    }
    params.R = opts.R.value_or(doc.number("recur", "R", std::max(max_init, 1.0)));
    if (params.t_budget < 0.0) {
        throw std::invalid_argument("--horizon must be >= 0");
    }
    const double sim_t = params.t_budget > 0.0 ? params.t_budget : rs.integrator.effective_step(spec);
    rs.horizon = Horizon(sim_t, std::max<std::int64_t>(params.j_budget, 1));

    const auto arcs = simulate_ensemble(spec, rs.inits, rs.n_paths, common.seed, rs.horizon, rs.integrator);
    const RecurrenceReport rep = recurrence_estimate(arcs, spec, params);

    const auto csv_path = common.out_dir / "recur.csv";
    {
        CsvWriter csv(csv_path, {"path_id", "hit", "hit_t", "hit_j", "terminal", "end_t", "end_j", "counted"});
        for (std::size_t i = 0; i < rep.paths.size(); ++i) {
            const auto& o = rep.paths[i];
            csv.cell(i).cell(o.hit ? "1" : "0");
            if (o.hit) {
                csv.cell(o.hit->t).cell(o.hit->j);
            } else {
                csv.cell("").cell("");
            }
            csv.cell(to_string(o.terminal)).cell(o.end.t).cell(o.end.j).cell(o.counted ? "1" : "0");
            csv.end_row();
        }
        csv.close();
    }

    std::ostringstream report;
    report << "system: " << spec.name << '\n';
    report << "radius: " << format_double(params.radius) << "  rho: " << format_double(params.rho)
           << "  R: " << format_double(params.R) << '\n';
    report << "budget: t <= " << format_double(params.t_budget) << ", j <= " << params.j_budget << '\n';
    report << "paths: " << rep.n_paths << "  hits: " << rep.hits << "  early stops: " << rep.early_stops << '\n';
    report << "terminal: time " << rep.terminal_time << ", jumps " << rep.terminal_jump << ", left sets "
           << rep.terminal_left << '\n';
    report << "hit_fraction: " << format_double(rep.hit_fraction) << "  Wilson 95%: ["
           << format_double(rep.interval.lower) << ", " << format_double(rep.interval.upper) << "]\n";
    report << "tau_hat: " << (rep.tau_hat ? format_double(*rep.tau_hat) : std::string("none")) << '\n';
    report << "verdict: " << (rep.certified() ? "RECURRENT" : "NOT CERTIFIED") << '\n';
    const auto summary_path = common.out_dir / "recur_summary.txt";
    write_text(summary_path, report.str());
    log << report.str();
    finish(doc, common, "recur", {csv_path, summary_path}, sw, log);
    return rep.certified() ? kExitOk : kExitVerdictFail;
}

int cmd_sweep(const ConfigDocument& doc, const CommonOptions& common, const SweepOptions& opts, std::ostream& log) {
    const Stopwatch sw;
    const SystemSpec spec = load_system(doc);
    if (const auto* sec = doc.section("sweep")) {
        sec->allow_only({"epsilons", "n_paths", "rho", "R", "radius_floor", "relative_tolerance"});
    }
    RunOverrides run = opts.run;
    if (!run.n_paths) {
        run.n_paths = positive_count(doc, "sweep", "n_paths", 200);
    }
    const RunSettings rs = load_run_settings(doc, spec, run);
    const auto eps_list = opts.epsilons ? *opts.epsilons : doc.numbers("sweep", "epsilons").value_or(std::vector<double>{});
    if (eps_list.empty()) {
        throw ConfigError(doc.origin() + ": no epsilon list ([sweep] epsilons or --eps)");
    }

    SweepParams params;
    params.inits = rs.inits;
    params.n_paths = rs.n_paths;
    params.seed_base = common.seed;
    params.horizon = rs.horizon;
    params.integrator = rs.integrator;
    params.rho = doc.number("sweep", "rho", params.rho);
    double max_init = 0.0;
    for (const auto& s : rs.inits) {
        max_init = std::max(max_init, dist_to_target(s, spec));
    }
    params.R = doc.number("sweep", "R", std::max(max_init, 1.0));
    params.radius_floor = doc.number("sweep", "radius_floor", params.radius_floor);
    params.relative_tolerance = doc.number("sweep", "relative_tolerance", params.relative_tolerance);

    const SpecFamily family = [&spec](double eps) {
        SystemSpec s = spec;
        s.epsilon = eps;
        return s;
    };
    const SweepResult result = epsilon_sweep(family, eps_list, params);

    const auto csv_path = common.out_dir / "sweep.csv";
    {
        CsvWriter csv(csv_path, {"epsilon", "certified_radius", "hit_fraction", "n_paths"});
        for (const auto& e : result.entries) {
            csv.cell(e.epsilon).cell(e.radius).cell(e.hit_fraction).cell(e.n_paths);
            csv.end_row();
        }
        csv.close();
    }
    std::ostringstream report;
    report << "system: " << spec.name << '\n';
    for (const auto& e : result.entries) {
        report << "epsilon " << format_double(e.epsilon) << ": ";
        if (e.certified) {
            report << "radius " << format_double(e.radius) << " (bracket " << format_double(e.bracket) << ")";
        } else {
            report << "not certified at horizon";
        }
        report << ", hit_fraction " << format_double(e.hit_fraction) << '\n';
    }
    report << "monotone: " << (result.monotone ? "yes" : "no") << '\n';
    const auto summary_path = common.out_dir / "sweep_summary.txt";
    write_text(summary_path, report.str());
    log << report.str();
    finish(doc, common, "sweep", {csv_path, summary_path}, sw, log);
    return result.monotone ? kExitOk : kExitVerdictFail;
}

namespace {

// Samples of one component, thinned to about max_points but keeping both ends
// of every flow segment so jumps stay sharp.
Trace arc_trace(const HybridArc& arc, bool aux, std::size_t component, std::size_t max_points, TraceStyle style) {
    Trace tr;
    tr.style = std::move(style);
    std::size_t total = 0;
    for (const auto& seg : arc.segments) {
        total += seg.size();
    }
    const std::size_t stride = std::max<std::size_t>(1, (total + max_points - 1) / max_points);
    std::size_t global = 0;
    for (const auto& seg : arc.segments) {
        for (std::size_t i = 0; i < seg.size(); ++i, ++global) {
            if (i == 0 || i + 1 == seg.size() || global % stride == 0) {
                tr.t.push_back(seg.t(i));
                tr.y.push_back(aux ? seg.r(i)[component] : seg.x(i)[component]);
            }
        }
    }
    return tr;
}

}  // namespace

int cmd_fig1(const CommonOptions& common, const Fig1Options& opts, std::ostream& log) {
    const Stopwatch sw;
    const JamParams jp{opts.T, opts.p, opts.epsilon};
    const SystemSpec es = jammed_es(jp, opts.delta);
    SystemSpec nominal = es;
    nominal.name = "es-nominal";
    nominal.g = [](ConstVecRef x, ConstVecRef, ConstVecRef, VecRef out) { out[0] = x[0]; };

    if (opts.n_paths == 0 || opts.record_every == 0) {
        throw std::invalid_argument("fig1: --paths and --record-every must be >= 1");
    }
    IntegratorConfig cfg;
    cfg.record_every = opts.record_every;
    const Horizon horizon(opts.t_max, std::numeric_limits<std::int64_t>::max() / 4);
    const std::vector<StateVec> inits{{{-2.0}, {0.0}, 0.0}, {{2.0}, {0.0}, 0.0}};
    auto arcs = simulate_ensemble(es, inits, opts.n_paths, common.seed, horizon, cfg);
    arcs.push_back(simulate_path(nominal, inits[1], common.seed + opts.n_paths, horizon, cfg));

    std::vector<std::size_t> ids(arcs.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ids[i] = i;
    }
    const auto csv_path = common.out_dir / "fig1_trajectories.csv";
    write_trajectory_csv(csv_path, arcs, ids, 1, 1);

    constexpr std::size_t kPointsPerTrace = 400;
    Panel states{"x(t) under random jamming (" + std::to_string(opts.n_paths) + " paths) and nominal flow", "t",
                 "x", {}};
    for (std::size_t i = 0; i < opts.n_paths; ++i) {
        states.traces.push_back(arc_trace(arcs[i], false, 0, kPointsPerTrace, {"#1f77b4", 0.8, 0.35}));
    }
    states.traces.push_back(arc_trace(arcs.back(), false, 0, kPointsPerTrace, {"#000000", 2.0, 1.0}));
    Panel timer{"timer r(t)", "t", "r", {}};
    timer.traces.push_back(arc_trace(arcs.front(), true, 0, 4 * kPointsPerTrace, {"#d62728", 1.2, 1.0}));
    SvgLayout layout;
    layout.max_points = std::numeric_limits<std::size_t>::max();
    const auto svg_path = common.out_dir / "fig1.svg";
    write_text(svg_path, render_svg({states, timer}, layout));

    std::ostringstream params;
    params << "fig1 T=" << format_double(opts.T) << " p=" << format_double(opts.p)
           << " epsilon=" << format_double(opts.epsilon) << " delta=" << format_double(opts.delta)
           << " t_max=" << format_double(opts.t_max) << " paths=" << opts.n_paths
           << " record_every=" << opts.record_every << '\n';
    const ConfigDocument builtin = ConfigDocument::parse(params.str().insert(0, "# "), "<fig1>");

    double inside = 0.0;
    for (std::size_t i = 0; i < opts.n_paths; ++i) {
        if (std::abs(arcs[i].final_state().x[0]) < opts.delta) {
            inside += 1.0;
        }
    }
    log << params.str();
    log << "trajectories: " << arcs.size() << " (" << opts.n_paths << " jammed + 1 nominal)\n";
    log << "final |x| < delta: " << format_double(inside / static_cast<double>(opts.n_paths)) << " of jammed paths\n";
    finish(builtin, common, "fig1", {csv_path, svg_path}, sw, log);
    return kExitOk;
}

}  // namespace shds::cli
