#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "vsmfarm/control.hpp"
#include "vsmfarm/freqresp.hpp"
#include "vsmfarm/interaction.hpp"
#include "vsmfarm/linearize.hpp"

namespace vsmfarm {

class SynthesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Plant readout at the target crossover and the compensation it demands.
struct ShapingReadout {
    double A_p = 0.0;    // dB
    double phi_p = 0.0;  // deg
    double dA = 0.0;     // dB, = -A_p
    double dphi = 0.0;   // deg, phi_m - (180 + phi_p), wrapped to (-180, 180]
};

ShapingReadout make_readout(double A_p_db, double phi_p_deg, const LoopSpec& spec);
ShapingReadout make_readout(Complex plant, const LoopSpec& spec);

struct PiGains {
    double K_p;
    double K_i;
};

/// C(j omega_o) = 10^(dA/20) exp(j dphi) with a PI. Requires dphi in (-90, 0].
PiGains pi_loopshape(const ShapingReadout& r, const LoopSpec& spec);

/// (H, D_d) of (1 + s D_d)/(1 + s 2H/D_p) matching the readout at fixed D_p.
VsmpParams vsmp_loopshape(const ShapingReadout& r, const LoopSpec& spec, const VsmpParams& current,
                          double H_floor = 0.1);

/// K_q = 1/|P(j omega_o)|.
double vsmq_loopshape(Complex plant, const LoopSpec& spec);

/// Relative spec errors |achieved - target| / target.
struct SpecError {
    double phi = 0.0;
    double omega = 0.0;
    double max() const { return phi > omega ? phi : omega; }
};
SpecError spec_error(const LoopMargins& m, const LoopSpec& spec);

/// Machines whose feeder impedance equals that of an earlier machine share its gains.
std::vector<std::size_t> twin_representatives(const FarmConfig& cfg);

struct LoopMarginRow {
    LoopRef loop;
    LoopMargins margins;
    SpecError error;
};

/// Margins of every loop of the given machines, from one linearization.
std::vector<LoopMarginRow> measure_margins(const LinearModel& lin, const std::vector<std::size_t>& machines,
                                           const std::array<LoopSpec, 7>& specs,
                                           const std::vector<double>& grid = log_grid());

/// Same table with every loop closed around its decoupled design plant.
std::vector<LoopMarginRow> measure_decoupled_margins(const FarmOde& model, const OperatingPoint& op,
                                                     const std::vector<std::size_t>& machines,
                                                     const std::array<LoopSpec, 7>& specs,
                                                     const std::vector<double>& grid = log_grid());

struct RedesignStep {
    int pass = 0;
    LoopRef loop;
    LoopMargins before;
    LoopMargins after;
    ShapingReadout readout;
    std::string parameters;  // e.g. "K_p=... K_i=..."
    SpecError error_after;
};

struct RedesignReport {
    std::vector<RedesignStep> steps;
    /// Stage-B style table before the first pass, then one per completed pass.
    std::vector<std::vector<LoopMarginRow>> passes;
};

struct RedesignOptions {
    int iterations = 1;
    std::vector<LoopId> sequence{kTieBreakOrder.begin(), kTieBreakOrder.end()};
    std::array<LoopSpec, 7> specs = default_loop_specs();
    /// Representative machines; empty means one per twin class.
    std::vector<std::size_t> representatives;
    std::vector<double> grid = log_grid();
    double H_floor = 0.1;
};

struct RedesignResult {
    ControllerSet controllers;
    OperatingPoint op;
    RedesignReport report;
};

/// Walks the sequence once per iteration. For every loop of every representative
/// the full model is re-trimmed and re-linearized, the plant P = G/C is read at
/// the target crossover, and the synthesized controller is copied to the twins.
RedesignResult coordinated_redesign(const FarmConfig& cfg, const ControllerSet& start,
                                    const OperatingPoint& op, const RedesignOptions& opt = {});

/// stage, machine, quantity, then one column per loop (phi_m, omega_o and errors).
void write_margins_csv(std::ostream& os, const std::string& stage, const std::vector<LoopMarginRow>& rows);

/// Table-style CSV: stage, machine, quantity, then one column per loop.
void write_report_csv(std::ostream& os, const RedesignReport& report,
                      const std::array<LoopSpec, 7>& specs);
/// One line per synthesis step.
void write_steps_csv(std::ostream& os, const RedesignReport& report);

}  // namespace vsmfarm
