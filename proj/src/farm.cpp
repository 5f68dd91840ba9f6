#include "vsmfarm/farm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace vsmfarm {

namespace {

constexpr const char* kDfigStateNames[] = {
    "psi_sd", "psi_sq", "psi_rd", "psi_rq", "icd",    "icq",    "udc",    "delta",  "wt",
    "ttg",    "wr",     "vsmp_x", "psi_vd", "rsc_xd", "rsc_xq", "vdc_x",  "gsc_xd", "gsc_xq"};
constexpr const char* kGridStateNames[] = {"df", "p_gov", "p_turb", "p_turb_rate"};
constexpr const char* kDfigInputNames[] = {"wind",   "p_star", "q_star", "v_star",
                                           "udc_star", "r_rscd", "r_rscq", "r_gscd",
                                           "r_gscq"};
constexpr const char* kMonitorNames[] = {"p_s", "q_s",  "v_t",     "wr_minus_wt", "udc",
                                         "icd", "icq", "omega_s", "te"};
constexpr const char* kGridOutputNames[] = {"p_pcc", "v_pcc", "freq"};

static_assert(std::size(kDfigStateNames) == dfig_state::count);
static_assert(std::size(kDfigInputNames) == dfig_input::d_first);
static_assert(std::size(kMonitorNames) == dfig_output::count - dfig_output::p_s);

void add_name(std::vector<std::string>& names, std::map<std::string, std::size_t>& map,
              std::string name) {
    if (!map.emplace(name, names.size()).second)
        throw std::logic_error(fmt::format("index-map collision on '{}'", name));
    names.push_back(std::move(name));
}

std::size_t lookup(const std::map<std::string, std::size_t>& map, const std::string& name,
                   const char* kind) {
    auto it = map.find(name);
    if (it == map.end()) throw std::out_of_range(fmt::format("unknown {} '{}'", kind, name));
    return it->second;
}

}  // namespace

std::string loop_tag(LoopId id) {
    std::string s{loop_name(id)};
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

FarmOde::FarmOde(FarmConfig config, ControllerSet controllers)
    : config_(std::move(config)), controllers_(std::move(controllers)), n_(config_.num_units()) {
    config_.validate();
    controllers_.validate(n_);
    mech_ = config_.drivetrain.per_unit(config_.bases);

    // Node equations of the terminals and the PCC (see evaluate()).
    const auto& p = config_.dfig;
    const auto& net = config_.network;
    MatrixXd m = MatrixXd::Zero(n_ + 1, n_ + 1);
    double sum_inv_x = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
        const double xk = net.feeders[k].x;
        m(k, k) = 1.0 + xk * (1.0 / p.l_filter + p.L_r / p.sigma());
        m(k, n_) = -1.0;
        m(n_, k) = -net.grid.x / xk;
        sum_inv_x += 1.0 / xk;
    }
    m(n_, n_) = 1.0 + net.grid.x * sum_inv_x;
    network_lu_ = m.partialPivLu();
    if (!(std::abs(network_lu_.determinant()) > 1e-12))
        throw std::runtime_error("network admittance matrix is singular");

    for (const char* s : kGridStateNames) add_name(state_names_, state_map_, fmt::format("grid.{}", s));
    add_name(input_names_, input_map_, "grid.vg");
    add_name(input_names_, input_map_, "grid.pm_star");
    for (const char* s : kGridOutputNames) add_name(output_names_, output_map_, s);
    for (std::size_t k = 0; k < n_; ++k) {
        const std::string pre = fmt::format("dfig{}.", k + 1);
        for (const char* s : kDfigStateNames) add_name(state_names_, state_map_, pre + s);
        for (const char* s : kDfigInputNames) add_name(input_names_, input_map_, pre + s);
        for (LoopId id : kAllLoops) add_name(input_names_, input_map_, pre + "d_" + loop_tag(id));
        for (LoopId id : kAllLoops) {
            add_name(output_names_, output_map_, pre + "s_" + loop_tag(id));
            add_name(output_names_, output_map_, pre + "t_" + loop_tag(id));
            add_name(output_names_, output_map_, pre + "y_" + loop_tag(id));
        }
        for (const char* s : kMonitorNames) add_name(output_names_, output_map_, pre + s);
    }
}

std::size_t FarmOde::state_index(const std::string& name) const {
    return lookup(state_map_, name, "state");
}
std::size_t FarmOde::input_index(const std::string& name) const {
    return lookup(input_map_, name, "input");
}
std::size_t FarmOde::output_index(const std::string& name) const {
    return lookup(output_map_, name, "output");
}

LoopChannels FarmOde::channels(std::size_t machine, LoopId loop) const {
    if (machine >= n_) throw std::out_of_range(fmt::format("no machine {}", machine + 1));
    const std::size_t li = loop_index(loop);
    const std::size_t in = dfig_input_offset(machine);
    const std::size_t out = dfig_output_offset(machine) + 3 * li;
    std::size_t r = 0;
    switch (loop) {
        case LoopId::VSMP: r = in + dfig_input::p_star; break;
        case LoopId::VSMQ: r = in + dfig_input::q_star; break;
        case LoopId::RSCd: r = in + dfig_input::r_rscd; break;
        case LoopId::RSCq: r = in + dfig_input::r_rscq; break;
        case LoopId::VDC: r = in + dfig_input::udc_star; break;
        case LoopId::GSCd: r = in + dfig_input::r_gscd; break;
        case LoopId::GSCq: r = in + dfig_input::r_gscq; break;
    }
    return {machine, loop, in + dfig_input::d_first + li, out, out + 1, out + 2, r};
}

std::vector<std::size_t> FarmOde::angle_states() const {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < n_; ++k) idx.push_back(dfig_state_offset(k) + dfig_state::delta);
    return idx;
}

VectorXd FarmOde::nominal_inputs() const {
    VectorXd u = VectorXd::Zero(static_cast<Eigen::Index>(num_inputs()));
    u[grid_input::vg] = config_.targets.v_grid;
    u[grid_input::pm_star] = config_.grid.P_m_star;
    for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t o = dfig_input_offset(k);
        u[o + dfig_input::wind] = 10.0;
        u[o + dfig_input::q_star] = config_.targets.q_star;
        u[o + dfig_input::v_star] = config_.targets.v_star;
        u[o + dfig_input::udc_star] = config_.dfig.u_dc_nom;
    }
    return u;
}

void FarmOde::evaluate(const VectorXd& x, const VectorXd& u, VectorXd* dx, VectorXd* y) const {
    if (static_cast<std::size_t>(x.size()) != num_states() ||
        static_cast<std::size_t>(u.size()) != num_inputs())
        throw std::invalid_argument("state/input dimension mismatch");

    const Complex j{0.0, 1.0};
    const auto& p = config_.dfig;
    const auto& net = config_.network;
    const double wb = config_.bases.omega_b;
    const double sigma = p.sigma();
    const double wg = 1.0 + x[grid_state::df];
    const Complex v_src{u[grid_input::vg], 0.0};

    struct Machine {
        Complex psi_s, psi_r, i_s, i_r, i_c, v_r, v_c, rot, dpsi_r, a_c, i_f;
        double s[7], t[7], yv[7];
    };
    std::vector<Machine> mc(n_);

    Eigen::VectorXcd rhs(static_cast<Eigen::Index>(n_ + 1));
    Complex i_n{0.0, 0.0};
    Complex pcc_sum{0.0, 0.0};

    for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t o = dfig_state_offset(k);
        const std::size_t ui = dfig_input_offset(k);
        const auto& c = controllers_.machines[k];
        Machine& m = mc[k];
        m.psi_s = {x[o + dfig_state::psi_sd], x[o + dfig_state::psi_sq]};
        m.psi_r = {x[o + dfig_state::psi_rd], x[o + dfig_state::psi_rq]};
        m.i_c = {x[o + dfig_state::icd], x[o + dfig_state::icq]};
        const auto cur = currents_from_fluxes(m.psi_s, m.psi_r, p);
        m.i_s = cur.i_s;
        m.i_r = cur.i_r;
        m.rot = std::polar(1.0, -x[o + dfig_state::delta]);
        const double* d = &u[static_cast<Eigen::Index>(ui + dfig_input::d_first)];

        // Rotor current loops around the virtual-impedance reference.
        const Complex psi_sl = m.psi_s * m.rot;
        const Complex i_rl = m.i_r * m.rot;
        const double w0 = c.vsmp.omega_s0;
        const Complex i_v = j * w0 * (x[o + dfig_state::psi_vd] - psi_sl) /
                            Complex{c.zv.r_v, w0 * c.zv.l_v};
        const Complex i_rref = (psi_sl + p.L_s * i_v) / p.L_M;
        const Complex e_r = i_rl - i_rref;
        auto pi_loop = [&](LoopId id, double r, double yv, double xi) {
            const auto li = loop_index(id);
            const auto& pi = c.pi(id);
            m.t[li] = pi.output(r, yv, xi);
            m.s[li] = m.t[li] + d[li];
            m.yv[li] = yv;
        };
        pi_loop(LoopId::RSCd, u[ui + dfig_input::r_rscd], e_r.real(), x[o + dfig_state::rsc_xd]);
        pi_loop(LoopId::RSCq, u[ui + dfig_input::r_rscq], e_r.imag(), x[o + dfig_state::rsc_xq]);
        const Complex v_rl{m.s[loop_index(LoopId::RSCd)], m.s[loop_index(LoopId::RSCq)]};

        // DC link and grid-side current loops; VDC sets the q-axis reference.
        pi_loop(LoopId::VDC, u[ui + dfig_input::udc_star], x[o + dfig_state::udc],
                x[o + dfig_state::vdc_x]);
        const double s_vdc = m.s[loop_index(LoopId::VDC)];
        const Complex i_cl = m.i_c * m.rot;
        pi_loop(LoopId::GSCd, u[ui + dfig_input::r_gscd], i_cl.real(), x[o + dfig_state::gsc_xd]);
        pi_loop(LoopId::GSCq, u[ui + dfig_input::r_gscq], i_cl.imag() + s_vdc,
                x[o + dfig_state::gsc_xq]);
        const Complex v_cl{m.s[loop_index(LoopId::GSCd)], m.s[loop_index(LoopId::GSCq)]};

        const Complex unrot = std::conj(m.rot);
        m.v_r = v_rl * unrot;
        m.v_c = v_cl * unrot;

        const double wr = x[o + dfig_state::wr];
        m.dpsi_r = wb * (m.v_r - p.r_r * m.i_r - j * (wg - wr) * m.psi_r);
        const Complex a_s = (p.L_r * wb / sigma) * (-p.r_s * m.i_s - j * wg * m.psi_s) -
                            (p.L_M / sigma) * m.dpsi_r;
        m.a_c = (wb / p.l_filter) * (-p.r_filter * m.i_c - j * wg * p.l_filter * m.i_c);
        m.i_f = m.i_c - m.i_s;
        const Complex zk{net.feeders[k].r, wg * net.feeders[k].x};
        const double xk = net.feeders[k].x;
        rhs[static_cast<Eigen::Index>(k)] =
            zk * m.i_f + xk * m.v_c / p.l_filter + (xk / wb) * (m.a_c - a_s);
        i_n += m.i_f;
        pcc_sum += zk * m.i_f / xk;
    }
    const Complex zg{net.grid.r, wg * net.grid.x};
    rhs[static_cast<Eigen::Index>(n_)] = v_src + zg * i_n - net.grid.x * pcc_sum;

    Eigen::VectorXcd v(static_cast<Eigen::Index>(n_ + 1));
    if (n_ == 0) {
        v[0] = v_src;
    } else {
        const VectorXd vr = network_lu_.solve(rhs.real());
        const VectorXd vi = network_lu_.solve(rhs.imag());
        v.real() = vr;
        v.imag() = vi;
    }
    const Complex v_p = v[static_cast<Eigen::Index>(n_)];

    const double plant = n_ == 0 ? 1.0 : static_cast<double>(n_);
    const double p_g = -kPowerScale * std::real(v_src * std::conj(i_n)) / plant;

    if (dx) dx->resize(x.size());
    if (y) y->setZero(static_cast<Eigen::Index>(num_outputs()));

    if (dx) {
        GridParams gp = config_.grid;
        gp.P_m_star = u[grid_input::pm_star];
        const GridState gs{x[grid_state::df], x[grid_state::p_gov], x[grid_state::p_turb],
                           x[grid_state::p_turb_rate]};
        const auto gd = grid_derivatives(gs, p_g, gp);
        (*dx)[grid_state::df] = gd.df;
        (*dx)[grid_state::p_gov] = gd.p_gov;
        (*dx)[grid_state::p_turb] = gd.p_turb;
        (*dx)[grid_state::p_turb_rate] = gd.p_turb_rate;
    }
    if (y) {
        (*y)[grid_output::p_pcc] = kPowerScale * std::real(v_p * std::conj(i_n)) / plant;
        (*y)[grid_output::v_pcc] = std::abs(v_p);
        (*y)[grid_output::freq] = wg;
    }

    for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t o = dfig_state_offset(k);
        const std::size_t ui = dfig_input_offset(k);
        const auto& c = controllers_.machines[k];
        Machine& m = mc[k];
        const double* d = &u[static_cast<Eigen::Index>(ui + dfig_input::d_first)];
        const Complex v_t = v[static_cast<Eigen::Index>(k)];

        const Complex s_conj = v_t * std::conj(m.i_s);
        const double p_s = -kPowerScale * s_conj.real();
        const double q_s = -kPowerScale * s_conj.imag();
        const double v_mag = std::abs(v_t);

        // Virtual shaft.
        const auto vs = vsmp_dynamics(c.vsmp, x[o + dfig_state::vsmp_x], u[ui + dfig_input::p_star], p_s);
        const auto lp = loop_index(LoopId::VSMP);
        m.t[lp] = vs.output;
        m.s[lp] = vs.output + d[lp];
        m.yv[lp] = p_s;
        const double omega_s = c.vsmp.omega_s0 + m.s[lp] / c.vsmp.D_p;

        // Virtual flux: stator-flux magnitude with reactive droop.
        const double psi_mag = std::abs(m.psi_s);
        const double dq = u[ui + dfig_input::q_star] - q_s;
        const auto lq = loop_index(LoopId::VSMQ);
        m.t[lq] = c.vsmq.K_q * (u[ui + dfig_input::v_star] - psi_mag + c.vsmq.D_q * dq);
        m.s[lq] = m.t[lq] + d[lq];
        m.yv[lq] = psi_mag - c.vsmq.D_q * dq;

        const double wt = x[o + dfig_state::wt];
        const double wr = x[o + dfig_state::wr];
        const double te = electrical_torque(m.i_s, m.i_r, p.L_M);
        const double udc = x[o + dfig_state::udc];

        if (dx) {
            auto& f = *dx;
            const Complex dpsi_s = wb * (v_t - p.r_s * m.i_s - j * wg * m.psi_s);
            const Complex dic = (wb / p.l_filter) * (m.v_c - v_t) + m.a_c;
            f[o + dfig_state::psi_sd] = dpsi_s.real();
            f[o + dfig_state::psi_sq] = dpsi_s.imag();
            f[o + dfig_state::psi_rd] = m.dpsi_r.real();
            f[o + dfig_state::psi_rq] = m.dpsi_r.imag();
            f[o + dfig_state::icd] = dic.real();
            f[o + dfig_state::icq] = dic.imag();
            const double p_r = kPowerScale * std::real(m.v_r * std::conj(m.i_r));
            const double p_c = kPowerScale * std::real(m.v_c * std::conj(m.i_c));
            f[o + dfig_state::udc] = wb * (-p_r - p_c) / (p.C_dc * udc);
            f[o + dfig_state::delta] = wb * (omega_s - wg);

            const double p_mech =
                mechanical_power(u[ui + dfig_input::wind], wt, config_.turbine, config_.bases);
            const DrivetrainState ds{wt, x[o + dfig_state::ttg], wr};
            const auto dd = drivetrain_derivatives(ds, p_mech / wt, te, mech_, wb);
            f[o + dfig_state::wt] = dd.omega_t;
            f[o + dfig_state::ttg] = dd.T_tg;
            f[o + dfig_state::wr] = dd.omega_r;

            f[o + dfig_state::vsmp_x] = vs.integrator_rate;
            f[o + dfig_state::psi_vd] = wb * m.s[lq];

            auto rate = [&](LoopId id, std::size_t r_in, std::size_t xs) {
                const auto li = loop_index(id);
                return c.pi(id).integrator_rate(u[ui + r_in], m.yv[li], x[o + xs]);
            };
            f[o + dfig_state::rsc_xd] = rate(LoopId::RSCd, dfig_input::r_rscd, dfig_state::rsc_xd);
            f[o + dfig_state::rsc_xq] = rate(LoopId::RSCq, dfig_input::r_rscq, dfig_state::rsc_xq);
            f[o + dfig_state::vdc_x] = rate(LoopId::VDC, dfig_input::udc_star, dfig_state::vdc_x);
            f[o + dfig_state::gsc_xd] = rate(LoopId::GSCd, dfig_input::r_gscd, dfig_state::gsc_xd);
            f[o + dfig_state::gsc_xq] = rate(LoopId::GSCq, dfig_input::r_gscq, dfig_state::gsc_xq);
        }
        if (y) {
            auto& out = *y;
            const std::size_t oo = dfig_output_offset(k);
            for (std::size_t li = 0; li < 7; ++li) {
                out[oo + 3 * li] = m.s[li];
                out[oo + 3 * li + 1] = m.t[li];
                out[oo + 3 * li + 2] = m.yv[li];
            }
            const Complex i_cl = m.i_c * m.rot;
            out[oo + dfig_output::p_s] = p_s;
            out[oo + dfig_output::q_s] = q_s;
            out[oo + dfig_output::v_t] = v_mag;
            out[oo + dfig_output::wr_minus_wt] = wr - wt;
            out[oo + dfig_output::udc] = udc;
            out[oo + dfig_output::icd] = i_cl.real();
            out[oo + dfig_output::icq] = i_cl.imag();
            out[oo + dfig_output::omega_s] = omega_s;
            out[oo + dfig_output::te] = te;
        }
    }
}

VectorXd FarmOde::derivative(const VectorXd& x, const VectorXd& u) const {
    VectorXd dx;
    evaluate(x, u, &dx, nullptr);
    return dx;
}

VectorXd FarmOde::outputs(const VectorXd& x, const VectorXd& u) const {
    VectorXd y;
    evaluate(x, u, nullptr, &y);
    return y;
}

FarmOde assemble_farm_ode(const FarmConfig& config, const ControllerSet& controllers) {
    return FarmOde(config, controllers);
}

}  // namespace vsmfarm
