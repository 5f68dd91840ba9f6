#pragma once

#include <vector>

#include "vsmfarm/control.hpp"
#include "vsmfarm/linearize.hpp"

namespace vsmfarm {

/// Sensitivities of the quasi-static phasor model (each VSM as an emf
/// j*psi_vd*e^{j delta} behind its virtual impedance, GSC currents frozen).
struct QuasiStaticGains {
    std::vector<double> dp_ddelta;  // dP_s/d delta of the own machine
    std::vector<double> dq_dpsi;    // d(|psi_s| + D_q Q_s)/d psi_vd of the own machine
};

QuasiStaticGains quasi_static_gains(const FarmOde& ode, const OperatingPoint& op);

/// Decoupled plant approximations b/(s + a) used for pole placement.
struct PiPlant {
    double a;
    double b;
};
PiPlant rsc_plant(const FarmConfig& cfg);
PiPlant gsc_plant(const FarmConfig& cfg);
PiPlant vdc_plant(const FarmConfig& cfg);

/// Decoupled single-loop plant of a machine's loop: b/(s + a) for the PI
/// loops, omega_b K_s/(D_p s) for VSMP and omega_b g/s for VSMQ.
RationalTf decoupled_plant(const FarmOde& model, const QuasiStaticGains& qs, std::size_t machine,
                           LoopId id);

/// Loop gain K of K (1 + s D_d) / (s (1 + s tau)) whose pole-placed design at
/// (zeta, omega_n) crosses over at omega_o.
double vsmp_loop_gain_for_crossover(double zeta, double omega_n, double omega_o);

/// (H, D_d) for a given droop D_p and loop gain K = omega_b K_s / D_p.
VsmpParams vsmp_pole_place(double loop_gain, double D_p, double zeta, double omega_n);

/// Controllers whose PI gains come from pole placement and whose VSM blocks
/// hold neutral placeholders. Adequate for trimming (steady state does not
/// depend on the dynamic gains).
ControllerSet initial_controllers(const FarmConfig& cfg);

/// Sequential (decoupled) design of all seven loops around a trimmed point.
ControllerSet stage_a_controllers(const FarmOde& trimmed_model, const OperatingPoint& op);

}  // namespace vsmfarm
