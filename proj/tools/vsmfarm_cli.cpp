#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>
#include <openssl/evp.h>

#include "vsmfarm/baseline.hpp"
#include "vsmfarm/interaction.hpp"
#include "vsmfarm/io.hpp"
#include "vsmfarm/redesign.hpp"
#include "vsmfarm/sim.hpp"

#ifndef VSMFARM_VERSION
#define VSMFARM_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace vsmfarm;

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kParse = 2,
    kTrim = 3,
    kMissing = 4,
    kSynthesis = 5,
    kGate = 6,
};

struct CliError : std::runtime_error {
    CliError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
    int code;
};

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

struct Options {
    std::string config, controllers, op, out, stage_label, compare, scenario, sequence;
    int iterations = 2;
    double dt = 0.0;
    double tf = 0.0;
    bool decoupled = false;
};

/// Collects artifacts in memory; nothing touches the output directory until commit().
class Run {
public:
    Run(std::string command, const Options& o) : command_(std::move(command)), o_(o) {}

    void input(const std::string& role, const std::string& path, const std::string& bytes) {
        inputs_.push_back({{"role", role}, {"path", path}, {"sha256", sha256_hex(bytes)}});
    }
    void option(const std::string& key, Json value) { options_[key] = std::move(value); }
    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
    template <class Fn>
    void add_stream(const std::string& name, Fn&& fn) {
        std::ostringstream ss;
        fn(ss);
        add(name, ss.str());
    }
    void stage(std::string label) { stage_ = std::move(label); }

    void commit() {
        if (o_.out.empty()) throw CliError(kParse, "--out is required");
        fs::create_directories(o_.out);
        Json outputs = Json::array();
        for (const auto& [name, content] : files_) {
            write_atomic(name, content);
            outputs.push_back({{"file", name}, {"sha256", sha256_hex(content)}});
        }
        const char* sde = std::getenv("SOURCE_DATE_EPOCH");
        const long long stamp = sde ? std::atoll(sde) : 0;
        Json m{{"tool", "vsmfarm"},
               {"tool_version", VSMFARM_VERSION},
               {"command", command_},
               {"stage_label", stage_},
               {"config", o_.config.empty() ? std::string("builtin:benchmark") : o_.config},
               {"output_dir", o_.out},
               {"timestamp", stamp},
               {"options", options_},
               {"inputs", inputs_},
               {"outputs", outputs}};
        write_atomic("manifest.json", dump(m));
    }

private:
    void write_atomic(const std::string& name, const std::string& content) const {
        const fs::path final_path = fs::path(o_.out) / name;
        const fs::path tmp = fs::path(o_.out) / ("." + name + ".tmp");
        {
            std::ofstream f(tmp, std::ios::binary);
            if (!f) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
            f << content;
            if (!f) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
        }
        fs::rename(tmp, final_path);
    }

    std::string command_;
    const Options& o_;
    std::string stage_ = "custom";
    Json inputs_ = Json::array();
    Json options_ = Json::object();
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string read_input(Run& run, const std::string& role, const std::string& path) {
    if (path.empty()) throw CliError(kParse, fmt::format("--{} is required", role));
    if (!fs::is_regular_file(path))
        throw CliError(kMissing, fmt::format("missing artifact: {} file '{}'", role, path));
    std::string bytes = read_file(path);
    run.input(role, path, bytes);
    return bytes;
}

template <class Fn>
auto parse_or_exit(const std::string& path, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        throw CliError(kParse, e.what());
    } catch (const nlohmann::json::exception& e) {
        throw CliError(kParse, fmt::format("{}: {}", path, e.what()));
    }
}

FarmConfig get_config(Run& run, const Options& o) {
    if (o.config.empty()) return FarmConfig::benchmark();
    const auto bytes = read_input(run, "config", o.config);
    return parse_or_exit(o.config, [&] { return config_from_json(parse_json_text(bytes, o.config)); });
}

ControllerSet get_controllers(Run& run, const std::string& role, const std::string& path,
                              std::size_t n_units) {
    const auto bytes = read_input(run, role, path);
    auto set = parse_or_exit(path, [&] { return controllers_from_json(parse_json_text(bytes, path)); });
    if (set.machines.size() != n_units)
        throw CliError(kParse, fmt::format("{}: {} machines, config has {}", path, set.machines.size(), n_units));
    return set;
}

OperatingPoint get_op(Run& run, const Options& o, const FarmOde& ode) {
    const auto bytes = read_input(run, "op", o.op);
    std::istringstream is(bytes);
    OperatingPoint op;
    try {
        op = OperatingPoint::load(is);
    } catch (const std::exception& e) {
        throw CliError(kParse, fmt::format("{}: {}", o.op, e.what()));
    }
    if (op.state_names != ode.state_names() || op.input_names != ode.input_names())
        throw CliError(kParse, fmt::format("{}: operating point does not match the configured farm", o.op));
    return op;
}

OperatingPoint trim(const FarmOde& ode, const OperatingPoint* start) {
    TrimOptions to;
    to.initial = start;
    try {
        return find_operating_point(ode, to);
    } catch (const TrimError& e) {
        throw CliError(kTrim, fmt::format("trim failed: {} (best residual {:.3e})", e.what(), e.best_residual()));
    } catch (const std::domain_error& e) {
        throw CliError(kTrim, fmt::format("trim failed: {}", e.what()));
    }
}

std::string op_text(const OperatingPoint& op) {
    std::ostringstream ss;
    op.save(ss);
    return ss.str();
}

std::vector<std::size_t> all_machines(const FarmConfig& cfg) {
    std::vector<std::size_t> v(cfg.num_units());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = k;
    return v;
}

std::vector<std::size_t> representatives(const FarmConfig& cfg) {
    const auto twins = twin_representatives(cfg);
    std::vector<std::size_t> v;
    for (std::size_t k = 0; k < twins.size(); ++k)
        if (twins[k] == k) v.push_back(k);
    return v;
}

std::string label_or(const Options& o, const std::string& fallback) {
    return o.stage_label.empty() ? fallback : o.stage_label;
}

std::vector<LoopId> parse_sequence(const std::string& text, const std::string& origin) {
    std::vector<LoopId> seq;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
        try {
            seq.push_back(parse_loop(tok));
        } catch (const std::invalid_argument& e) {
            throw CliError(kParse, fmt::format("{}: {}", origin, e.what()));
        }
    }
    std::array<int, 7> seen{};
    for (LoopId id : seq) ++seen[loop_index(id)];
    for (int s : seen)
        if (s != 1) throw CliError(kParse, fmt::format("{}: sequence must list each of the 7 loops once", origin));
    return seq;
}

void add_interaction(Run& run, const InteractionAnalysis& a, const std::vector<std::size_t>& machines) {
    for (std::size_t i = 0; i < machines.size(); ++i) {
        run.add_stream(fmt::format("rho_dfig{}.csv", machines[i] + 1),
                       [&](std::ostream& os) { write_rho_csv(os, a.matrices[i]); });
        run.add_stream(fmt::format("heatmap_dfig{}.txt", machines[i] + 1),
                       [&](std::ostream& os) { write_heatmap(os, a.matrices[i]); });
    }
    run.add_stream("rho_farm.csv", [&](std::ostream& os) { write_rho_csv(os, a.farm); });
    run.add_stream("heatmap_farm.txt", [&](std::ostream& os) { write_heatmap(os, a.farm); });
    run.add_stream("indices.csv", [&](std::ostream& os) { write_indices_csv(os, a.indices); });
    run.add_stream("sequence.txt", [&](std::ostream& os) { write_sequence(os, a.sequence); });
}

ImpulseOptions impulse_options(const Options& o) {
    ImpulseOptions io;
    if (o.tf > 0) io.t_f = o.tf;
    if (o.dt > 0) io.dt = o.dt;
    return io;
}

double max_error(const std::vector<LoopMarginRow>& rows) {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, r.error.max());
    return m;
}

Scenario get_scenario(Run& run, const Options& o) {
    Scenario sc;
    if (o.scenario == "pref_step") {
        sc = Scenario::pref_step();
    } else if (o.scenario == "voltage_dip") {
        sc = Scenario::voltage_dip();
    } else {
        const auto bytes = read_input(run, "scenario", o.scenario);
        sc = parse_or_exit(o.scenario, [&] { return scenario_from_json(parse_json_text(bytes, o.scenario)); });
    }
    if (o.dt > 0) sc.dt = o.dt;
    if (o.tf > 0) sc.duration = o.tf;
    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw CliError(kParse, e.what());
    }
    return sc;
}

TimeSeries simulate(const FarmConfig& cfg, const ControllerSet& ctl, const OperatingPoint& base,
                    const Scenario& sc) {
    FarmOde ode(cfg, ctl);
    const auto op = trim(ode, &base);
    try {
        return integrate(ode, op, sc);
    } catch (const std::invalid_argument& e) {
        throw CliError(kParse, fmt::format("scenario '{}': {}", sc.name, e.what()));
    }
}

void write_metrics(std::ostream& os, const std::vector<std::pair<std::string, ScenarioMetrics>>& rows) {
    fmt::print(os, "run,peak_wr_minus_wt,udc_amplitude,speed_settling_time\n");
    for (const auto& [name, m] : rows)
        fmt::print(os, "{},{:.10g},{:.10g},{:.6g}\n", name, m.peak_speed_deviation, m.udc_amplitude,
                   m.speed_settling_time);
}

// ---------------------------------------------------------------------------

int cmd_trim(const Options& o) {
    Run run("trim", o);
    const auto cfg = get_config(run, o);
    const auto ctl = o.controllers.empty() ? initial_controllers(cfg)
                                           : get_controllers(run, "controllers", o.controllers, cfg.num_units());
    FarmOde ode(cfg, ctl);
    const auto op = trim(ode, nullptr);
    run.stage(label_or(o, ctl.label));
    run.add("operating_point.txt", op_text(op));
    run.commit();
    fmt::print("trim: residual {:.3e} after {} iterations\n", op.residual, op.iterations);
    return kOk;
}

int cmd_baseline(const Options& o) {
    Run run("baseline", o);
    const auto cfg = get_config(run, o);
    FarmOde ode(cfg, initial_controllers(cfg));
    const auto op = get_op(run, o, ode);
    auto a = stage_a_controllers(ode, op);
    a.label = label_or(o, "A");
    run.stage(a.label);
    run.add("controllers.json", dump(to_json(a)));
    run.commit();
    fmt::print("baseline: stage {} controllers for {} machines\n", a.label, a.machines.size());
    return kOk;
}

int cmd_margins(const Options& o) {
    Run run("margins", o);
    const auto cfg = get_config(run, o);
    const auto ctl = get_controllers(run, "controllers", o.controllers, cfg.num_units());
    FarmOde ode(cfg, ctl);
    const auto base = get_op(run, o, ode);
    const auto op = trim(ode, &base);
    const auto specs = default_loop_specs();
    const std::string label = label_or(o, ctl.label);
    run.stage(label);
    run.option("decoupled", o.decoupled);
    const auto rows = o.decoupled ? measure_decoupled_margins(ode, op, all_machines(cfg), specs)
                                  : measure_margins(jacobian_linearize(ode, op), all_machines(cfg), specs);
    run.add_stream("margins.csv", [&](std::ostream& os) { write_margins_csv(os, label, rows); });
    run.commit();
    fmt::print("margins: {} loops, max spec error {:.2f} %\n", rows.size(), 100.0 * max_error(rows));
    return kOk;
}

int cmd_interact(const Options& o) {
    Run run("interact", o);
    const auto cfg = get_config(run, o);
    const auto ctl = get_controllers(run, "controllers", o.controllers, cfg.num_units());
    FarmOde ode(cfg, ctl);
    const auto base = get_op(run, o, ode);
    const auto op = trim(ode, &base);
    const auto io = impulse_options(o);
    run.option("t_f", io.t_f);
    run.option("dt", io.dt);
    run.stage(label_or(o, ctl.label));
    const auto machines = all_machines(cfg);
    InteractionAnalysis a;
    try {
        a = analyze_interaction(jacobian_linearize(ode, op), machines, io, representatives(cfg));
    } catch (const std::invalid_argument& e) {
        throw CliError(kParse, e.what());
    }
    add_interaction(run, a, machines);
    run.commit();
    std::string seq;
    for (LoopId id : a.sequence) seq += fmt::format("{}{}", seq.empty() ? "" : " ", loop_name(id));
    fmt::print("interact: sequence {}{}\n", seq, a.unstable ? " (linear model unstable)" : "");
    return kOk;
}

int cmd_redesign(const Options& o) {
    Run run("redesign", o);
    const auto cfg = get_config(run, o);
    const auto ctl = get_controllers(run, "controllers", o.controllers, cfg.num_units());
    FarmOde ode(cfg, ctl);
    const auto base = get_op(run, o, ode);
    if (o.iterations < 0) throw CliError(kParse, "--iterations must be >= 0");
    RedesignOptions ro;
    ro.iterations = o.iterations;
    if (!o.sequence.empty()) {
        ro.sequence = parse_sequence(read_input(run, "sequence", o.sequence), o.sequence);
    } else {
        const auto op = trim(ode, &base);
        ro.sequence = analyze_interaction(jacobian_linearize(ode, op), all_machines(cfg), {}, representatives(cfg)).sequence;
    }
    run.option("iterations", o.iterations);
    RedesignResult res;
    try {
        res = coordinated_redesign(cfg, ctl, base, ro);
    } catch (const SynthesisError& e) {
        throw CliError(kSynthesis, fmt::format("synthesis failed: {}", e.what()));
    } catch (const TrimError& e) {
        throw CliError(kTrim, fmt::format("trim failed: {} (best residual {:.3e})", e.what(), e.best_residual()));
    }
    if (!o.stage_label.empty()) res.controllers.label = o.stage_label;
    run.stage(res.controllers.label);
    run.add("controllers.json", dump(to_json(res.controllers)));
    run.add("operating_point.txt", op_text(res.op));
    run.add_stream("sequence.txt", [&](std::ostream& os) { write_sequence(os, ro.sequence); });
    run.add_stream("redesign_report.csv", [&](std::ostream& os) { write_report_csv(os, res.report, ro.specs); });
    run.add_stream("redesign_steps.csv", [&](std::ostream& os) { write_steps_csv(os, res.report); });
    run.commit();
    const double final_err = max_error(res.report.passes.back());
    fmt::print("redesign: {} pass(es), max spec error {:.2f} %\n", o.iterations, 100.0 * final_err);
    if (o.iterations > 0 && !(final_err <= 0.10)) {
        fmt::print(std::cerr, "redesign: hard gate failed (max spec error above 10 %)\n");
        return kGate;
    }
    return kOk;
}

int cmd_simulate(const Options& o) {
    Run run("simulate", o);
    const auto cfg = get_config(run, o);
    const auto ctl = get_controllers(run, "controllers", o.controllers, cfg.num_units());
    FarmOde ode(cfg, ctl);
    const auto base = get_op(run, o, ode);
    const auto sc = get_scenario(run, o);
    run.option("scenario", sc.name);
    run.option("dt", sc.dt);
    run.option("duration", sc.duration);
    run.option("sample_dt", sc.sample_dt);
    run.stage(label_or(o, ctl.label));
    try {
        const auto frd = simulate(cfg, ctl, base, sc);
        if (o.compare.empty()) {
            run.add_stream("timeseries.csv", [&](std::ostream& os) { frd.write_csv(os); });
            run.add_stream("metrics.csv", [&](std::ostream& os) { write_metrics(os, {{ctl.label, scenario_metrics(frd, sc)}}); });
        } else {
            const auto trd_ctl = get_controllers(run, "compare", o.compare, cfg.num_units());
            const auto trd = simulate(cfg, trd_ctl, base, sc);
            run.add_stream("compare.csv", [&](std::ostream& os) { merge_compare(trd, frd).write_csv(os); });
            run.add_stream("metrics.csv", [&](std::ostream& os) {
                write_metrics(os, {{"trd", scenario_metrics(trd, sc)}, {"frd", scenario_metrics(frd, sc)}});
            });
        }
    } catch (const SimulationError& e) {
        throw CliError(kFailure, fmt::format("simulation aborted at t = {} s: {}", e.last_time(), e.what()));
    }
    run.commit();
    fmt::print("simulate: {} ({} s at dt = {} s)\n", sc.name, sc.duration, sc.dt);
    return kOk;
}

int cmd_reproduce(const Options& o) {
    Run run("reproduce-paper", o);
    const auto cfg = get_config(run, o);
    const auto specs = default_loop_specs();
    const auto machines = all_machines(cfg);

    FarmOde ode0(cfg, initial_controllers(cfg));
    const auto op0 = trim(ode0, nullptr);
    run.add("operating_point.txt", op_text(op0));

    const auto A = stage_a_controllers(ode0, op0);
    run.add("controllers_A.json", dump(to_json(A)));
    FarmOde odeA(cfg, A);
    const auto opA = trim(odeA, &op0);
    const auto linA = jacobian_linearize(odeA, opA);
    const auto table1 = measure_decoupled_margins(odeA, opA, machines, specs);
    run.add_stream("table1_decoupled.csv", [&](std::ostream& os) { write_margins_csv(os, "A", table1); });

    const auto inter = analyze_interaction(linA, machines, {}, representatives(cfg));
    add_interaction(run, inter, machines);

    RedesignOptions ro;
    ro.iterations = o.iterations;
    ro.sequence = inter.sequence;
    RedesignResult res;
    try {
        res = coordinated_redesign(cfg, A, op0, ro);
    } catch (const SynthesisError& e) {
        throw CliError(kSynthesis, fmt::format("synthesis failed: {}", e.what()));
    }
    run.add("controllers_Gamma.json", dump(to_json(res.controllers)));
    run.add_stream("table2.csv", [&](std::ostream& os) { write_report_csv(os, res.report, specs); });
    run.add_stream("redesign_steps.csv", [&](std::ostream& os) { write_steps_csv(os, res.report); });

    const auto linG = jacobian_linearize(FarmOde(cfg, res.controllers), res.op);
    std::ostringstream env;
    fmt::print(env, "loop,template_settling_s,worst_deviation,t_worst_s,inside_10pct\n");
    for (LoopId id : kAllLoops) {
        const auto& sp = spec_for(specs, id);
        if (!(sp.zeta > 0)) continue;
        const auto st = step_envelope(linG, 0, sp);
        run.add_stream(fmt::format("step_{}.csv", loop_name(id)), [&](std::ostream& os) { st.series.write_csv(os); });
        fmt::print(env, "{},{:.6g},{:.6g},{:.6g},{}\n", loop_name(id), st.template_settling, st.result.worst,
                   st.result.t_worst, st.result.inside ? 1 : 0);
    }
    run.add("step_envelopes.csv", env.str());

    std::vector<std::pair<std::string, ScenarioMetrics>> metrics;
    for (Scenario sc : {Scenario::pref_step(), Scenario::voltage_dip()}) {
        if (o.dt > 0) sc.dt = o.dt;
        try {
            const auto trd = simulate(cfg, A, op0, sc);
            const auto frd = simulate(cfg, res.controllers, op0, sc);
            run.add_stream(sc.name + "_compare.csv", [&](std::ostream& os) { merge_compare(trd, frd).write_csv(os); });
            metrics.emplace_back(sc.name + ".trd", scenario_metrics(trd, sc));
            metrics.emplace_back(sc.name + ".frd", scenario_metrics(frd, sc));
        } catch (const SimulationError& e) {
            throw CliError(kFailure, fmt::format("{} aborted at t = {} s: {}", sc.name, e.last_time(), e.what()));
        }
    }
    run.add_stream("large_signal_metrics.csv", [&](std::ostream& os) { write_metrics(os, metrics); });
    run.option("iterations", o.iterations);
    run.stage("Gamma");
    run.commit();
    fmt::print("reproduce-paper: artifacts written to {}\n", o.out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coordinated controller redesign for grid-forming DFIG wind farms"};
    app.require_subcommand(1);
    app.set_version_flag("--version", VSMFARM_VERSION);
    Options o;

    auto common = [&](CLI::App* c, bool needs_out = true) {
        c->add_option("--config", o.config, "Farm configuration (JSON); built-in benchmark when omitted");
        auto* out = c->add_option("--out", o.out, "Output directory");
        if (needs_out) out->required();
        c->add_option("--stage-label", o.stage_label, "Stage label recorded in outputs");
    };
    auto with_artifacts = [&](CLI::App* c) {
        c->add_option("--controllers", o.controllers, "Controller set (JSON)")->required();
        c->add_option("--op", o.op, "Operating point file")->required();
    };

    auto* trim_cmd = app.add_subcommand("trim", "Find the operating point");
    common(trim_cmd);
    trim_cmd->add_option("--controllers", o.controllers, "Controller set (default: initial gains)");

    auto* base_cmd = app.add_subcommand("baseline", "Decoupled (stage A) controller design");
    common(base_cmd);
    base_cmd->add_option("--op", o.op, "Operating point file")->required();

    auto* marg_cmd = app.add_subcommand("margins", "Phase margins and crossovers of every loop");
    common(marg_cmd);
    with_artifacts(marg_cmd);
    marg_cmd->add_flag("--decoupled", o.decoupled, "Close each loop around its decoupled design plant");

    auto* int_cmd = app.add_subcommand("interact", "Impulse interaction analysis and redesign sequence");
    common(int_cmd);
    with_artifacts(int_cmd);
    int_cmd->add_option("--tf", o.tf, "Impulse horizon, s (default 1)");
    int_cmd->add_option("--dt", o.dt, "Impulse sample step, s (default 1e-4)");

    auto* red_cmd = app.add_subcommand("redesign", "Coordinated loop-shaping redesign");
    common(red_cmd);
    with_artifacts(red_cmd);
    red_cmd->add_option("--iterations", o.iterations, "Full passes over the sequence (default 2)");
    red_cmd->add_option("--sequence", o.sequence, "Sequence file (default: derived by interaction analysis)");

    auto* sim_cmd = app.add_subcommand("simulate", "Nonlinear time-domain scenario");
    common(sim_cmd);
    with_artifacts(sim_cmd);
    sim_cmd->add_option("--scenario", o.scenario, "Scenario file, or pref_step / voltage_dip")->required();
    sim_cmd->add_option("--compare", o.compare, "Second controller set, overlaid with trd_ prefixes");
    sim_cmd->add_option("--dt", o.dt, "Override the RK4 step, s");
    sim_cmd->add_option("--tf", o.tf, "Override the duration, s");

    auto* rep_cmd = app.add_subcommand("reproduce-paper", "Run the full pipeline and emit all tables and series");
    common(rep_cmd);
    rep_cmd->add_option("--iterations", o.iterations, "Redesign passes (default 2)");
    rep_cmd->add_option("--dt", o.dt, "Override the RK4 step of the scenarios, s");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kParse;
    }

    try {
        if (*trim_cmd) return cmd_trim(o);
        if (*base_cmd) return cmd_baseline(o);
        if (*marg_cmd) return cmd_margins(o);
        if (*int_cmd) return cmd_interact(o);
        if (*red_cmd) return cmd_redesign(o);
        if (*sim_cmd) return cmd_simulate(o);
        if (*rep_cmd) return cmd_reproduce(o);
    } catch (const CliError& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return e.code;
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kFailure;
    }
    return kFailure;
}
