#pragma once

#include <array>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vsmfarm {

/// The seven loops of one machine, in canonical (table) order.
enum class LoopId { VSMP, VSMQ, RSCd, RSCq, VDC, GSCd, GSCq };

inline constexpr std::array<LoopId, 7> kAllLoops = {LoopId::VSMP, LoopId::VSMQ, LoopId::RSCd,
                                                    LoopId::RSCq, LoopId::VDC,  LoopId::GSCd,
                                                    LoopId::GSCq};

/// Order used to break ties when sorting loops by influence.
inline constexpr std::array<LoopId, 7> kTieBreakOrder = {LoopId::GSCq, LoopId::GSCd, LoopId::RSCd,
                                                         LoopId::RSCq, LoopId::VSMP, LoopId::VSMQ,
                                                         LoopId::VDC};

std::string_view loop_name(LoopId id);
/// Parses "VSMP", "RSCq", ... (case-sensitive). Throws std::invalid_argument.
LoopId parse_loop(std::string_view name);
std::size_t loop_index(LoopId id);
bool is_pi_loop(LoopId id);

/// 2-DOF PI: u = K_p (b r - y) + x,  dx/dt = K_i (r - y).
struct TwoDofPi {
    double K_p = 0.0;
    double K_i = 0.0;
    double b = 1.0;
    /// Integrator clamp; <= 0 disables it.
    double integrator_limit = 0.0;

    double output(double r, double y, double integrator) const {
        return K_p * (b * r - y) + integrator;
    }
    double integrator_rate(double r, double y, double integrator) const;
};

enum class DampingPath { ErrorFed, PowerFed };

/// Virtual shaft. Power error to speed deviation is C(s)/D_p with
/// C(s) = (1 + s D_d) / (1 + s 2H/D_p).
struct VsmpParams {
    double H = 1.0;
    double D_p = 10.0;
    double D_d = 0.0;
    double omega_s0 = 1.0;
    DampingPath path = DampingPath::ErrorFed;

    void validate() const;
};

struct VsmpSignals {
    double omega_v;        // speed deviation of the virtual shaft
    double output;         // D_p * omega_v
    double integrator_rate;
};

/// Virtual-shaft block evaluated from its state `x` and the measured power.
VsmpSignals vsmp_dynamics(const VsmpParams& p, double x, double p_star, double p_meas);

/// Virtual flux: d(psi_vd)/dt = omega_b (K_q e + d) with
/// e = psi* - |psi_s| + D_q (Q* - Q).
struct VsmqParams {
    double K_q = 0.01;
    double D_q = 0.05;

    void validate() const;
};

double vsmq_dynamics(const VsmqParams& p, double error, double omega_b);

struct VirtualImpedance {
    double r_v = 0.0;
    double l_v = 0.2;
};

struct MachineControllers {
    VsmpParams vsmp;
    VsmqParams vsmq;
    TwoDofPi rsc_d;
    TwoDofPi rsc_q;
    TwoDofPi vdc;
    TwoDofPi gsc_d;
    TwoDofPi gsc_q;
    VirtualImpedance zv;

    TwoDofPi& pi(LoopId id);
    const TwoDofPi& pi(LoopId id) const;
    void validate() const;
};

struct ControllerSet {
    std::string label = "custom";
    std::vector<MachineControllers> machines;

    void validate(std::size_t n_units) const;
};

/// Rational transfer function with coefficients in ascending powers of s.
struct RationalTf {
    std::vector<double> num;
    std::vector<double> den;

    std::complex<double> eval(std::complex<double> s) const;
    std::complex<double> at(double omega) const { return eval({0.0, omega}); }
};

/// Analytic 1-DOF controller of a loop: PI (b = 1), C_VSMP or K_q.
RationalTf reconfigure_one_dof(LoopId id, const MachineControllers& c);

/// Second-order closed-loop requirement and the open-loop targets it implies.
struct LoopSpec {
    LoopId loop = LoopId::VSMP;
    double settling_time = 0.0;  // s, 2 %
    double zeta = 0.0;           // 0 when not applicable
    double omega_n = 0.0;
    double phi_m = 0.0;    // deg
    double omega_o = 0.0;  // rad/s
};

/// Design targets of every loop (decoupled design).
std::array<LoopSpec, 7> default_loop_specs();
const LoopSpec& spec_for(const std::array<LoopSpec, 7>& specs, LoopId id);

/// PI gains placing the poles of K_p, K_i against b/(s + a) at (zeta, omega_n).
TwoDofPi pole_place_pi(double a, double b, double zeta, double omega_n);

}  // namespace vsmfarm
