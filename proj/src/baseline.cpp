#include "vsmfarm/baseline.hpp"

#include <cmath>

#include <boost/math/tools/roots.hpp>
#include <fmt/core.h>

namespace vsmfarm {

namespace {

struct Phasors {
    std::vector<Complex> v;  // terminal voltages
    std::vector<Complex> i;  // generated (virtual-impedance) currents
};

Phasors solve_phasors(const FarmConfig& cfg, const std::vector<Complex>& emf,
                      const std::vector<Complex>& i_c, Complex zv, Complex v_src) {
    const std::size_t n = emf.size();
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n + 1),
                                                static_cast<Eigen::Index>(n + 1));
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n + 1));
    const auto N = static_cast<Eigen::Index>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto K = static_cast<Eigen::Index>(k);
        const Complex yf = 1.0 / cfg.network.feeders[k].value();
        Y(K, K) = 1.0 / zv + yf;
        Y(K, N) = -yf;
        Y(N, K) = -yf;
        Y(N, N) += yf;
        rhs[K] = emf[k] / zv + i_c[k];
    }
    const Complex yg = 1.0 / cfg.network.grid.value();
    Y(N, N) += yg;
    rhs[N] = yg * v_src;
    const Eigen::VectorXcd v = Y.partialPivLu().solve(rhs);
    Phasors out;
    for (std::size_t k = 0; k < n; ++k) {
        out.v.push_back(v[static_cast<Eigen::Index>(k)]);
        out.i.push_back((emf[k] - out.v.back()) / zv);
    }
    return out;
}

}  // namespace

QuasiStaticGains quasi_static_gains(const FarmOde& ode, const OperatingPoint& op) {
    const auto& cfg = ode.config();
    const std::size_t n = ode.num_units();
    const Complex j{0.0, 1.0};
    std::vector<double> delta(n), psi(n);
    std::vector<Complex> i_c(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto o = FarmOde::dfig_state_offset(k);
        delta[k] = op.x[o + dfig_state::delta];
        psi[k] = op.x[o + dfig_state::psi_vd];
        i_c[k] = {op.x[o + dfig_state::icd], op.x[o + dfig_state::icq]};
    }
    const Complex v_src{op.u[grid_input::vg], 0.0};

    QuasiStaticGains g;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& c = ode.controllers().machines[k];
        const double w0 = c.vsmp.omega_s0;
        const Complex zv{c.zv.r_v, w0 * c.zv.l_v};
        auto eval = [&](double dd, double dpsi) {
            std::vector<Complex> emf(n);
            for (std::size_t m = 0; m < n; ++m) {
                const double d = delta[m] + (m == k ? dd : 0.0);
                const double p = psi[m] + (m == k ? dpsi : 0.0);
                emf[m] = j * w0 * p * std::polar(1.0, d);
            }
            const auto ph = solve_phasors(cfg, emf, i_c, zv, v_src);
            const Complex s = ph.v[k] * std::conj(ph.i[k]);
            // Stator flux magnitude follows the terminal voltage at nominal frequency.
            return std::pair{kPowerScale * s.real(),
                             std::abs(ph.v[k]) + c.vsmq.D_q * kPowerScale * s.imag()};
        };
        const double h = 1e-6;
        g.dp_ddelta.push_back((eval(h, 0).first - eval(-h, 0).first) / (2 * h));
        g.dq_dpsi.push_back((eval(0, h).second - eval(0, -h).second) / (2 * h));
    }
    return g;
}

PiPlant rsc_plant(const FarmConfig& cfg) {
    const auto& p = cfg.dfig;
    const double sigma_r = p.L_r - p.L_M * p.L_M / p.L_s;
    const double wb = cfg.bases.omega_b;
    return {wb * p.r_r / sigma_r, wb / sigma_r};
}

PiPlant gsc_plant(const FarmConfig& cfg) {
    const auto& p = cfg.dfig;
    const double wb = cfg.bases.omega_b;
    return {wb * p.r_filter / p.l_filter, wb / p.l_filter};
}

PiPlant vdc_plant(const FarmConfig& cfg) {
    const auto& p = cfg.dfig;
    return {0.0, cfg.bases.omega_b * kPowerScale * cfg.targets.v_grid / (p.C_dc * p.u_dc_nom)};
}

RationalTf decoupled_plant(const FarmOde& model, const QuasiStaticGains& qs, std::size_t machine,
                           LoopId id) {
    const auto& cfg = model.config();
    const double wb = cfg.bases.omega_b;
    auto first_order = [](PiPlant p) { return RationalTf{{p.b}, {p.a, 1.0}}; };
    switch (id) {
        case LoopId::VSMP:
            return {{wb * qs.dp_ddelta.at(machine) / model.controllers().machines.at(machine).vsmp.D_p},
                    {0.0, 1.0}};
        case LoopId::VSMQ:
            return {{wb * qs.dq_dpsi.at(machine)}, {0.0, 1.0}};
        case LoopId::RSCd:
        case LoopId::RSCq:
            return first_order(rsc_plant(cfg));
        case LoopId::VDC:
            return first_order(vdc_plant(cfg));
        default:
            return first_order(gsc_plant(cfg));
    }
}

VsmpParams vsmp_pole_place(double loop_gain, double D_p, double zeta, double omega_n) {
    VsmpParams v;
    const double tau = loop_gain / (omega_n * omega_n);
    v.D_p = D_p;
    v.H = tau * D_p / 2.0;
    v.D_d = (2.0 * zeta * omega_n * tau - 1.0) / loop_gain;
    v.path = DampingPath::PowerFed;
    if (v.D_d < 0)
        throw std::domain_error("loop gain too small for the requested damping with D_d >= 0");
    return v;
}

double vsmp_loop_gain_for_crossover(double zeta, double omega_n, double omega_o) {
    auto mag = [&](double K) {
        const double tau = K / (omega_n * omega_n);
        const double dd = (2.0 * zeta * omega_n * tau - 1.0) / K;
        const Complex s{0.0, omega_o};
        return std::abs(K * (1.0 + s * dd) / (s * (1.0 + s * tau))) - 1.0;
    };
    const double lo = 1.0 / (2.0 * zeta * omega_n) * omega_n * omega_n * 1.000001;
    double hi = 1e6;
    if (mag(lo) > 0 || mag(hi) < 0)
        throw std::domain_error(
            fmt::format("no VSMP loop gain reaches crossover {} rad/s", omega_o));
    boost::uintmax_t it = 200;
    auto r = boost::math::tools::toms748_solve(mag, lo, hi,
                                               boost::math::tools::eps_tolerance<double>(50), it);
    return 0.5 * (r.first + r.second);
}

ControllerSet initial_controllers(const FarmConfig& cfg) {
    const auto specs = default_loop_specs();
    MachineControllers m;
    auto place = [&](LoopId id, PiPlant p) {
        const auto& s = spec_for(specs, id);
        return pole_place_pi(p.a, p.b, s.zeta, s.omega_n);
    };
    m.rsc_d = place(LoopId::RSCd, rsc_plant(cfg));
    m.rsc_q = place(LoopId::RSCq, rsc_plant(cfg));
    m.gsc_d = place(LoopId::GSCd, gsc_plant(cfg));
    m.gsc_q = place(LoopId::GSCq, gsc_plant(cfg));
    m.vdc = place(LoopId::VDC, vdc_plant(cfg));
    m.vsmp = VsmpParams{2.0, 20.0, 0.5, 1.0, DampingPath::PowerFed};
    m.vsmq = VsmqParams{0.003, 0.05};
    ControllerSet set;
    set.label = "initial";
    set.machines.assign(cfg.num_units(), m);
    return set;
}

ControllerSet stage_a_controllers(const FarmOde& model, const OperatingPoint& op) {
    const auto& cfg = model.config();
    const auto specs = default_loop_specs();
    const auto qs = quasi_static_gains(model, op);
    ControllerSet set = initial_controllers(cfg);
    set.label = "A";
    const auto& sp = spec_for(specs, LoopId::VSMP);
    const auto& sq = spec_for(specs, LoopId::VSMQ);
    const double K = vsmp_loop_gain_for_crossover(sp.zeta, sp.omega_n, sp.omega_o);
    const double wb = cfg.bases.omega_b;
    for (std::size_t k = 0; k < set.machines.size(); ++k) {
        auto& m = set.machines[k];
        const auto& old = model.controllers().machines[k];
        m.zv = old.zv;
        m.vsmq.D_q = old.vsmq.D_q;
        if (!(qs.dp_ddelta[k] > 0) || !(qs.dq_dpsi[k] > 0))
            throw std::domain_error(fmt::format("DFIG{}: quasi-static gains are not positive", k + 1));
        m.vsmp = vsmp_pole_place(K, wb * qs.dp_ddelta[k] / K, sp.zeta, sp.omega_n);
        m.vsmp.omega_s0 = old.vsmp.omega_s0;
        m.vsmq.K_q = sq.omega_o / (wb * qs.dq_dpsi[k]);
    }
    return set;
}

}  // namespace vsmfarm
