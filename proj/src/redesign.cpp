#include "vsmfarm/redesign.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "vsmfarm/baseline.hpp"

namespace vsmfarm {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;

double wrap_deg(double a) {
    while (a > 180.0) a -= 360.0;
    while (a <= -180.0) a += 360.0;
    return a;
}
}  // namespace

ShapingReadout make_readout(double A_p_db, double phi_p_deg, const LoopSpec& spec) {
    ShapingReadout r;
    r.A_p = A_p_db;
    r.phi_p = phi_p_deg;
    r.dA = -A_p_db;
    r.dphi = wrap_deg(spec.phi_m - (180.0 + phi_p_deg));
    return r;
}

ShapingReadout make_readout(Complex plant, const LoopSpec& spec) {
    if (!(std::abs(plant) > 0) || !std::isfinite(std::abs(plant)))
        throw SynthesisError(fmt::format("{}: no valid plant readout at {} rad/s",
                                         loop_name(spec.loop), spec.omega_o));
    return make_readout(20.0 * std::log10(std::abs(plant)), std::arg(plant) / kDeg, spec);
}

PiGains pi_loopshape(const ShapingReadout& r, const LoopSpec& spec) {
    if (r.dphi > 0.0)
        throw SynthesisError(fmt::format("{}: PI cannot provide phase lead (dphi = {:.3f} deg)",
                                         loop_name(spec.loop), r.dphi));
    if (r.dphi <= -90.0)
        throw SynthesisError(fmt::format("{}: target unreachable with PI (dphi = {:.3f} deg)",
                                         loop_name(spec.loop), r.dphi));
    const double mag = std::pow(10.0, r.dA / 20.0);
    const double ph = r.dphi * kDeg;
    return {mag * std::cos(ph), -spec.omega_o * mag * std::sin(ph)};
}

VsmpParams vsmp_loopshape(const ShapingReadout& r, const LoopSpec& spec, const VsmpParams& current,
                          double H_floor) {
    const double M = std::pow(10.0, r.dA / 20.0);
    const double ph = r.dphi * kDeg;
    const double w = spec.omega_o;
    VsmpParams out = current;
    if (std::abs(std::sin(ph)) < 1e-12) {
        if (std::abs(M - 1.0) > 1e-9)
            throw SynthesisError(fmt::format(
                "VSMP: zero phase change needs unit gain, got {:.6g} dB", r.dA));
        out.H = H_floor;
        out.D_d = 2.0 * out.H / out.D_p;
        return out;
    }
    // (1 + j a)/(1 + j b) = M e^{j ph}, a = w D_d, b = w 2H/D_p.
    const double b = (std::cos(ph) - 1.0 / M) / std::sin(ph);
    const double a = M * (std::sin(ph) + b * std::cos(ph));
    if (!(b > 0))
        throw SynthesisError(fmt::format("VSMP: readout requires H <= 0 (2H/D_p = {:.6g} s)", b / w));
    if (a < 0)
        throw SynthesisError(fmt::format("VSMP: readout requires D_d < 0 (D_d = {:.6g} s)", a / w));
    out.H = b * out.D_p / (2.0 * w);
    out.D_d = a / w;
    return out;
}

double vsmq_loopshape(Complex plant, const LoopSpec& spec) {
    const double m = std::abs(plant);
    if (!(m > 0) || !std::isfinite(m))
        throw SynthesisError(fmt::format("VSMQ: no valid plant readout at {} rad/s", spec.omega_o));
    return 1.0 / m;
}

SpecError spec_error(const LoopMargins& m, const LoopSpec& spec) {
    if (!m.has_crossover) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {inf, inf};
    }
    return {std::abs(m.phi_m - spec.phi_m) / spec.phi_m,
            std::abs(m.omega_o - spec.omega_o) / spec.omega_o};
}

std::vector<std::size_t> twin_representatives(const FarmConfig& cfg) {
    const auto& f = cfg.network.feeders;
    std::vector<std::size_t> rep(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        rep[k] = k;
        for (std::size_t m = 0; m < k; ++m)
            if (f[m].r == f[k].r && f[m].x == f[k].x) {
                rep[k] = rep[m];
                break;
            }
    }
    return rep;
}

std::vector<LoopMarginRow> measure_margins(const LinearModel& lin, const std::vector<std::size_t>& machines,
                                           const std::array<LoopSpec, 7>& specs,
                                           const std::vector<double>& grid) {
    std::vector<LoopMarginRow> rows;
    for (std::size_t k : machines)
        for (LoopId id : kAllLoops) {
            const auto m = channel_margins(extract_channel(lin, k, id), grid);
            rows.push_back({{k, id}, m, spec_error(m, spec_for(specs, id))});
        }
    return rows;
}

std::vector<LoopMarginRow> measure_decoupled_margins(const FarmOde& model, const OperatingPoint& op,
                                                     const std::vector<std::size_t>& machines,
                                                     const std::array<LoopSpec, 7>& specs,
                                                     const std::vector<double>& grid) {
    const auto qs = quasi_static_gains(model, op);
    std::vector<LoopMarginRow> rows;
    for (std::size_t k : machines)
        for (LoopId id : kAllLoops) {
            const RationalTf C = reconfigure_one_dof(id, model.controllers().machines.at(k));
            const RationalTf P = decoupled_plant(model, qs, k, id);
            const auto m = stability_margins([&](double w) { return C.at(w) * P.at(w); }, grid);
            rows.push_back({{k, id}, m, spec_error(m, spec_for(specs, id))});
        }
    return rows;
}

namespace {

struct Workspace {
    const FarmConfig& cfg;
    ControllerSet ctl;
    OperatingPoint op;
    LinearModel lin;

    void refresh() {
        FarmOde ode(cfg, ctl);
        TrimOptions to;
        to.initial = &op;
        op = find_operating_point(ode, to);
        lin = jacobian_linearize(ode, op);
    }
};

std::string describe(LoopId id, const MachineControllers& m) {
    switch (id) {
        case LoopId::VSMP:
            return fmt::format("H={:.10g} D_p={:.10g} D_d={:.10g}", m.vsmp.H, m.vsmp.D_p, m.vsmp.D_d);
        case LoopId::VSMQ:
            return fmt::format("K_q={:.10g}", m.vsmq.K_q);
        default:
            return fmt::format("K_p={:.10g} K_i={:.10g}", m.pi(id).K_p, m.pi(id).K_i);
    }
}

}  // namespace

RedesignResult coordinated_redesign(const FarmConfig& cfg, const ControllerSet& start,
                                    const OperatingPoint& op, const RedesignOptions& opt) {
    const std::size_t n = cfg.num_units();
    start.validate(n);
    const auto twins = twin_representatives(cfg);
    std::vector<std::size_t> reps = opt.representatives;
    if (reps.empty())
        for (std::size_t k = 0; k < n; ++k)
            if (twins[k] == k) reps.push_back(k);
    std::vector<std::size_t> all(n);
    for (std::size_t k = 0; k < n; ++k) all[k] = k;

    Workspace ws{cfg, start, op, {}};
    ws.refresh();
    RedesignReport rep;
    rep.passes.push_back(measure_margins(ws.lin, all, opt.specs, opt.grid));

    for (int pass = 1; pass <= opt.iterations; ++pass) {
        for (LoopId id : opt.sequence) {
            const auto& spec = spec_for(opt.specs, id);
            for (std::size_t k : reps) {
                RedesignStep step;
                step.pass = pass;
                step.loop = {k, id};
                const auto ch = extract_channel(ws.lin, k, id);
                step.before = channel_margins(ch, opt.grid);
                auto& mc = ws.ctl.machines[k];
                const Complex G = ChannelEvaluator(ch).G(spec.omega_o);
                const Complex P = G / reconfigure_one_dof(id, mc).at(spec.omega_o);
                try {
                    step.readout = make_readout(P, spec);
                    switch (id) {
                        case LoopId::VSMP:
                            mc.vsmp = vsmp_loopshape(step.readout, spec, mc.vsmp, opt.H_floor);
                            break;
                        case LoopId::VSMQ:
                            mc.vsmq.K_q = vsmq_loopshape(P, spec);
                            break;
                        default: {
                            const auto g = pi_loopshape(step.readout, spec);
                            mc.pi(id).K_p = g.K_p;
                            mc.pi(id).K_i = g.K_i;
                        }
                    }
                } catch (const SynthesisError& e) {
                    throw SynthesisError(fmt::format(
                        "pass {}, {}: {} (A_p = {:.4f} dB, phi_p = {:.4f} deg)", pass,
                        step.loop.label(), e.what(), step.readout.A_p, step.readout.phi_p));
                }
                for (std::size_t m = 0; m < n; ++m)
                    if (m != k && twins[m] == k) ws.ctl.machines[m] = mc;
                step.parameters = describe(id, mc);
                ws.refresh();
                step.after = channel_margins(extract_channel(ws.lin, k, id), opt.grid);
                step.error_after = spec_error(step.after, spec);
                rep.steps.push_back(step);
            }
        }
        rep.passes.push_back(measure_margins(ws.lin, all, opt.specs, opt.grid));
    }
    ws.ctl.label = opt.iterations > 0 ? "Gamma" : start.label;
    return {ws.ctl, ws.op, rep};
}

namespace {

void margins_header(std::ostream& os) {
    fmt::print(os, "stage,machine,quantity");
    for (LoopId id : kAllLoops) fmt::print(os, ",{}", loop_name(id));
    fmt::print(os, "\n");
}

void margins_rows(std::ostream& os, const std::string& stage, const std::vector<LoopMarginRow>& rows) {
    for (std::size_t r0 = 0; r0 + 7 <= rows.size(); r0 += 7) {
        const auto machine = rows[r0].loop.machine + 1;
        auto line = [&](const char* q, auto get) {
            fmt::print(os, "{},dfig{},{}", stage, machine, q);
            for (std::size_t i = 0; i < 7; ++i) fmt::print(os, ",{:.6g}", get(rows[r0 + i]));
            fmt::print(os, "\n");
        };
        line("phi_m", [](const LoopMarginRow& r) { return r.margins.phi_m; });
        line("omega_o", [](const LoopMarginRow& r) { return r.margins.omega_o; });
        line("err_phi_pct", [](const LoopMarginRow& r) { return 100.0 * r.error.phi; });
        line("err_omega_pct", [](const LoopMarginRow& r) { return 100.0 * r.error.omega; });
    }
}

}  // namespace

void write_margins_csv(std::ostream& os, const std::string& stage, const std::vector<LoopMarginRow>& rows) {
    margins_header(os);
    margins_rows(os, stage, rows);
}

void write_report_csv(std::ostream& os, const RedesignReport& report,
                      const std::array<LoopSpec, 7>& specs) {
    margins_header(os);
    fmt::print(os, "A,all,phi_m");
    for (LoopId id : kAllLoops) fmt::print(os, ",{:.6g}", spec_for(specs, id).phi_m);
    fmt::print(os, "\nA,all,omega_o");
    for (LoopId id : kAllLoops) fmt::print(os, ",{:.6g}", spec_for(specs, id).omega_o);
    fmt::print(os, "\n");
    for (std::size_t p = 0; p < report.passes.size(); ++p)
        margins_rows(os, p == 0 ? "B" : fmt::format("Gamma{}", p), report.passes[p]);
}

void write_steps_csv(std::ostream& os, const RedesignReport& report) {
    fmt::print(os,
               "pass,loop,phi_m_before,omega_o_before,A_p_db,phi_p_deg,dA_db,dphi_deg,"
               "phi_m_after,omega_o_after,err_phi_pct,err_omega_pct,parameters\n");
    for (const auto& s : report.steps)
        fmt::print(os, "{},{},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.4g},{:.4g},{}\n",
                   s.pass, s.loop.label(), s.before.phi_m, s.before.omega_o, s.readout.A_p,
                   s.readout.phi_p, s.readout.dA, s.readout.dphi, s.after.phi_m, s.after.omega_o,
                   100.0 * s.error_after.phi, 100.0 * s.error_after.omega, s.parameters);
}

}  // namespace vsmfarm
