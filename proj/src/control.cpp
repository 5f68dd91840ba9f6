#include "vsmfarm/control.hpp"

#include <cmath>

#include <fmt/core.h>

#include "vsmfarm/units.hpp"

namespace vsmfarm {

std::string_view loop_name(LoopId id) {
    switch (id) {
        case LoopId::VSMP: return "VSMP";
        case LoopId::VSMQ: return "VSMQ";
        case LoopId::RSCd: return "RSCd";
        case LoopId::RSCq: return "RSCq";
        case LoopId::VDC: return "VDC";
        case LoopId::GSCd: return "GSCd";
        case LoopId::GSCq: return "GSCq";
    }
    return "?";
}

LoopId parse_loop(std::string_view name) {
    for (LoopId id : kAllLoops)
        if (loop_name(id) == name) return id;
    throw std::invalid_argument(fmt::format("unknown loop id '{}'", name));
}

std::size_t loop_index(LoopId id) { return static_cast<std::size_t>(id); }

bool is_pi_loop(LoopId id) { return id != LoopId::VSMP && id != LoopId::VSMQ; }

double TwoDofPi::integrator_rate(double r, double y, double integrator) const {
    const double rate = K_i * (r - y);
    if (integrator_limit > 0.0) {
        if (integrator >= integrator_limit && rate > 0.0) return 0.0;
        if (integrator <= -integrator_limit && rate < 0.0) return 0.0;
    }
    return rate;
}

void VsmpParams::validate() const {
    if (!(H > 0)) throw ConfigError("vsmp.H must be > 0");
    if (!(D_p > 0)) throw ConfigError("vsmp.D_p must be > 0");
    if (!(D_d >= 0)) throw ConfigError("vsmp.D_d must be >= 0");
    if (!(omega_s0 > 0)) throw ConfigError("vsmp.omega_s0 must be > 0");
}

VsmpSignals vsmp_dynamics(const VsmpParams& p, double x, double p_star, double p_meas) {
    const double e_t = (p_star - p_meas) / p.omega_s0;
    const double e_ff = p.path == DampingPath::ErrorFed ? e_t : -p_meas / p.omega_s0;
    const double omega_v = x + p.D_d / (2.0 * p.H) * e_ff;
    return {omega_v, p.D_p * omega_v, (e_t - p.D_p * omega_v) / (2.0 * p.H)};
}

void VsmqParams::validate() const {
    if (!(K_q > 0)) throw ConfigError("vsmq.K_q must be > 0");
    if (!(D_q >= 0)) throw ConfigError("vsmq.D_q must be >= 0");
}

double vsmq_dynamics(const VsmqParams& p, double error, double omega_b) {
    return omega_b * p.K_q * error;
}

TwoDofPi& MachineControllers::pi(LoopId id) {
    return const_cast<TwoDofPi&>(static_cast<const MachineControllers&>(*this).pi(id));
}

const TwoDofPi& MachineControllers::pi(LoopId id) const {
    switch (id) {
        case LoopId::RSCd: return rsc_d;
        case LoopId::RSCq: return rsc_q;
        case LoopId::VDC: return vdc;
        case LoopId::GSCd: return gsc_d;
        case LoopId::GSCq: return gsc_q;
        default: break;
    }
    throw std::invalid_argument(fmt::format("loop {} is not a PI loop", loop_name(id)));
}

void MachineControllers::validate() const {
    vsmp.validate();
    vsmq.validate();
    for (LoopId id : kAllLoops) {
        if (!is_pi_loop(id)) continue;
        const auto& c = pi(id);
        if (!std::isfinite(c.K_p) || !std::isfinite(c.K_i) || !std::isfinite(c.b))
            throw ConfigError(fmt::format("{} gains must be finite", loop_name(id)));
    }
    if (zv.r_v < 0 || zv.l_v < 0 || (zv.r_v == 0 && zv.l_v == 0))
        throw ConfigError("virtual impedance must be nonnegative and nonzero");
}

void ControllerSet::validate(std::size_t n_units) const {
    if (machines.size() != n_units)
        throw ConfigError(fmt::format("controller set has {} machines, config has {}",
                                      machines.size(), n_units));
    for (const auto& m : machines) m.validate();
}

std::complex<double> RationalTf::eval(std::complex<double> s) const {
    auto horner = [s](const std::vector<double>& c) {
        std::complex<double> acc{0.0, 0.0};
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
        return acc;
    };
    return horner(num) / horner(den);
}

RationalTf reconfigure_one_dof(LoopId id, const MachineControllers& c) {
    switch (id) {
        case LoopId::VSMP:
            return {{1.0, c.vsmp.D_d}, {1.0, 2.0 * c.vsmp.H / c.vsmp.D_p}};
        case LoopId::VSMQ:
            return {{c.vsmq.K_q}, {1.0}};
        default: {
            const auto& pi = c.pi(id);
            return {{pi.K_i, pi.K_p}, {0.0, 1.0}};
        }
    }
}

std::array<LoopSpec, 7> default_loop_specs() {
    return {{
        {LoopId::VSMP, 1.0, 0.707, 5.65, 67.2, 8.07},
        {LoopId::VSMQ, 2.0, 0.0, 0.0, 90.0, 2.0},
        {LoopId::RSCd, 4e-3, 0.707, 1414.0, 65.7, 2184.0},
        {LoopId::RSCq, 4e-3, 0.707, 1414.0, 65.7, 2184.0},
        {LoopId::VDC, 80e-3, 0.707, 70.4, 65.5, 109.9},
        {LoopId::GSCd, 4e-3, 0.707, 1414.0, 65.7, 2184.0},
        {LoopId::GSCq, 4e-3, 0.707, 1414.0, 65.7, 2184.0},
    }};
}

const LoopSpec& spec_for(const std::array<LoopSpec, 7>& specs, LoopId id) {
    for (const auto& s : specs)
        if (s.loop == id) return s;
    throw std::invalid_argument(fmt::format("no spec for loop {}", loop_name(id)));
}

TwoDofPi pole_place_pi(double a, double b, double zeta, double omega_n) {
    if (!(b != 0.0)) throw std::invalid_argument("plant gain must be nonzero");
    TwoDofPi pi;
    pi.K_p = (2.0 * zeta * omega_n - a) / b;
    pi.K_i = omega_n * omega_n / b;
    pi.b = 0.0;
    return pi;
}

}  // namespace vsmfarm
