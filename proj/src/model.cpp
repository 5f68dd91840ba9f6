#include "vsmfarm/model.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace vsmfarm {

void GridParams::validate() const {
    if (!(H_sys > 0)) throw ConfigError("grid.H_sys must be > 0");
    if (!(tau_g > 0)) throw ConfigError("grid.tau_g must be > 0");
    if (!(D_eq >= 0)) throw ConfigError("grid.D_eq must be >= 0");
    if (!(turbine.natural_frequency > 0 && turbine.damping > 0))
        throw ConfigError("grid.turbine lag parameters must be > 0");
}

void DfigParams::validate() const {
    if (r_s < 0 || r_r < 0 || r_filter < 0) throw ConfigError("dfig resistances must be >= 0");
    if (!(sigma() > 0)) throw ConfigError("dfig inductance matrix is singular (L_s L_r - L_M^2 <= 0)");
    if (!(C_dc > 0 && u_dc_nom > 0 && l_filter > 0))
        throw ConfigError("dfig C_dc, u_dc_nom and l_filter must be > 0");
}

DrivetrainParams::PerUnit DrivetrainParams::per_unit(const PuBases& b) const {
    const double wm = b.omega_m_b();
    const double sb = b.S_b();
    return PerUnit{
        .H_t = J_t * wm * wm / (2.0 * sb),
        .H_g = J_g * wm * wm / (2.0 * sb),
        .D_t = D_t_r * wm * wm / sb,
        .D_g = D_g_r * wm * wm / sb,
        .K_tg = K_tg_r * wm / sb,
        .D_tg = D_tg_r * wm * wm / sb,
    };
}

void DrivetrainParams::validate() const {
    if (!(J_t > 0 && J_g > 0)) throw ConfigError("drivetrain inertias must be > 0");
    if (K_tg_r < 0 || D_t_r < 0 || D_tg_r < 0 || D_g_r < 0)
        throw ConfigError("drivetrain stiffness/damping must be >= 0");
}

void TurbineParams::validate() const {
    if (!(air_density > 0 && blade_radius > 0 && gear_ratio > 0 && cut_out_speed > 0))
        throw ConfigError("turbine density, radius, gear ratio and cut-out speed must be > 0");
}

double NetworkTopology::derived_scr(std::size_t n_units) const {
    if (n_units == 0 || grid.magnitude() == 0.0) return 0.0;
    // S_sc in pu of S_b is |v|^2 / (sqrt(3) |Z|); plant base is n S_b.
    return kPowerScale / (grid.magnitude() * static_cast<double>(n_units));
}

void NetworkTopology::validate(std::size_t n_units) const {
    for (std::size_t k = 0; k < feeders.size(); ++k) {
        if (!(feeders[k].x > 0) || feeders[k].r < 0)
            throw ConfigError(fmt::format("feeder {} needs x > 0 and r >= 0", k + 1));
    }
    if (!(grid.x > 0) || grid.r < 0) throw ConfigError("grid impedance needs x > 0 and r >= 0");
    if (n_units > 0) {
        const double scr_z = derived_scr(n_units);
        if (std::abs(scr_z - scr) > 0.01 * scr)
            throw ConfigError(fmt::format("declared SCR {} does not match Z_grid (implies {:.6f})",
                                          scr, scr_z));
    }
}

void FarmConfig::validate() const {
    bases.validate();
    grid.validate();
    dfig.validate();
    drivetrain.validate();
    turbine.validate();
    network.validate(num_units());
    if (targets.p_grid < 0) throw ConfigError("targets.p_grid must be >= 0");
    if (!(targets.v_grid > 0)) throw ConfigError("targets.v_grid must be > 0");
    if (!(targets.omega_r > 0)) throw ConfigError("targets.omega_r must be > 0");
}

FarmConfig FarmConfig::benchmark() {
    FarmConfig cfg;
    auto with_xr = [](double mag, double xr) {
        const double r = mag / std::sqrt(1.0 + xr * xr);
        return Impedance{r, r * xr};
    };
    cfg.network.feeders = {with_xr(0.06, 10.0), with_xr(0.06, 10.0), with_xr(0.12, 10.0),
                           with_xr(0.12, 10.0)};
    cfg.network.scr = 1.0;
    cfg.network.grid = with_xr(kPowerScale / (4.0 * cfg.network.scr), 10.0);
    return cfg;
}

// ---------------------------------------------------------------------------

double cp_coefficient(double lambda) {
    return -0.4958 +
           lambda * (0.2776 + lambda * (-0.02561 + lambda * (8.7047e-4 + lambda * (-1.1331e-5))));
}

double tip_speed_ratio(double wind, double omega_t, const TurbineParams& t, const PuBases& b) {
    return omega_t * b.omega_m_b() * t.blade_radius / (t.gear_ratio * wind);
}

double mechanical_power(double wind, double omega_t, const TurbineParams& t, const PuBases& b) {
    const double lambda = tip_speed_ratio(wind, omega_t, t, b);
    const double area = std::numbers::pi * t.blade_radius * t.blade_radius;
    return 0.5 * t.air_density * area * cp_coefficient(lambda) * wind * wind * wind / b.S_b();
}

double wind_for_power(double power, double omega_t, const TurbineParams& t, const PuBases& b) {
    // Power is monotone in wind speed between lambda = 30 and the cut-out speed.
    const double v_lo = omega_t * b.omega_m_b() * t.blade_radius / (t.gear_ratio * 30.0);
    const double v_hi = t.cut_out_speed;
    auto f = [&](double v) { return mechanical_power(v, omega_t, t, b) - power; };
    if (f(v_hi) < 0)
        throw std::domain_error(fmt::format(
            "infeasible target: {:.4f} pu exceeds the aerodynamic power at cut-out", power));
    if (f(v_lo) > 0)
        throw std::domain_error("infeasible target: power below the aerodynamic range");
    boost::uintmax_t max_iter = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(52);
    auto [a, c] = boost::math::tools::toms748_solve(f, v_lo, v_hi, tol, max_iter);
    return 0.5 * (a + c);
}

double electrical_torque(Complex i_s, Complex i_r, double L_M) {
    return kPowerScale * L_M * std::imag(i_s * std::conj(i_r));
}

MachineCurrents currents_from_fluxes(Complex psi_s, Complex psi_r, const DfigParams& p) {
    const double sigma = p.sigma();
    if (!(sigma > 0)) throw ConfigError("dfig inductance matrix is singular");
    return {(p.L_r * psi_s - p.L_M * psi_r) / sigma, (p.L_s * psi_r - p.L_M * psi_s) / sigma};
}

FluxDerivatives dfig_derivatives(Complex psi_s, Complex psi_r, Complex v_s, Complex v_r,
                                 double omega_frame, double omega_m, const DfigParams& p,
                                 double omega_b) {
    const auto [i_s, i_r] = currents_from_fluxes(psi_s, psi_r, p);
    const Complex j{0.0, 1.0};
    return {omega_b * (v_s - p.r_s * i_s - j * omega_frame * psi_s),
            omega_b * (v_r - p.r_r * i_r - j * (omega_frame - omega_m) * psi_r)};
}

DrivetrainDerivatives drivetrain_derivatives(const DrivetrainState& s, double T_m, double T_e,
                                             const DrivetrainParams::PerUnit& p, double omega_b) {
    const double slip = s.omega_t - s.omega_r;
    return {
        (T_m - p.D_t * s.omega_t - s.T_tg - p.D_tg * slip) / (2.0 * p.H_t),
        omega_b * p.K_tg * slip,
        (s.T_tg + T_e - p.D_g * s.omega_r + p.D_tg * slip) / (2.0 * p.H_g),
    };
}

GridDerivatives grid_derivatives(const GridState& s, double p_g, const GridParams& p) {
    const double damping = 0.5 * p.D_eq * s.df;
    const double wn = p.turbine.natural_frequency;
    const double zeta = p.turbine.damping;
    return {
        (s.p_turb - p_g - damping) / (2.0 * p.H_sys),
        (-s.p_gov + p.P_m_star - damping) / p.tau_g,
        s.p_turb_rate,
        wn * wn * (s.p_gov - s.p_turb) - 2.0 * zeta * wn * s.p_turb_rate,
    };
}

}  // namespace vsmfarm
