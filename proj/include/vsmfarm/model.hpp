#pragma once

#include <complex>
#include <string>
#include <vector>

#include "vsmfarm/units.hpp"

namespace vsmfarm {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Second-order governor-turbine lag G_t(s) = wn^2 / (s^2 + 2 zeta wn s + wn^2).
struct TurbineLag {
    double natural_frequency = 5.0;  // rad/s
    double damping = 0.9;
};

/// Frequency dynamics of the external grid equivalent. Powers on the plant base.
struct GridParams {
    double H_sys = 10.0;   // s
    double tau_g = 0.5;    // s
    double D_eq = 100.0;   // pu
    TurbineLag turbine;
    double P_m_star = 0.0;  // set point; overwritten by trim

    void validate() const;
};

struct GridState {
    double df = 0.0;        // frequency deviation, pu
    double p_gov = 0.0;     // governor output, pu
    double p_turb = 0.0;    // turbine output (P_m seen by the swing equation)
    double p_turb_rate = 0.0;
};

struct GridDerivatives {
    double df = 0.0;
    double p_gov = 0.0;
    double p_turb = 0.0;
    double p_turb_rate = 0.0;
};

/// Electrical parameters of one DFIG, pu on the machine base.
struct DfigParams {
    double r_s = 6.6e-3;
    double r_r = 7.4e-3;
    double L_s = 2.07;
    double L_r = 2.07;
    double L_M = 2.00;
    double C_dc = 0.485;
    double u_dc_nom = 2.00;
    double r_filter = 0.003;  // GSC filter
    double l_filter = 0.1;

    double sigma() const { return L_s * L_r - L_M * L_M; }
    void validate() const;
};

/// Two-mass drivetrain. SI values are the source of truth; pu values are
/// derived through the standard conversion formulas.
struct DrivetrainParams {
    double J_t = 800.0;     // kg m^2
    double D_t_r = 0.1;     // N m s / rad
    double K_tg_r = 12500;  // N m / rad
    double D_tg_r = 130.0;  // N m s / rad
    double J_g = 90.0;      // kg m^2
    double D_g_r = 0.1;     // N m s / rad

    struct PerUnit {
        double H_t, H_g, D_t, D_g, K_tg, D_tg;
    };
    PerUnit per_unit(const PuBases& bases) const;
    void validate() const;
};

struct DrivetrainState {
    double omega_t = 1.0;
    double T_tg = 0.0;
    double omega_r = 1.0;
};

struct DrivetrainDerivatives {
    double omega_t = 0.0;
    double T_tg = 0.0;
    double omega_r = 0.0;
};

/// Aerodynamic rotor. The Cp quartic is fixed; lambda uses the gearbox ratio
/// to map the generator-side speed to the blade speed.
struct TurbineParams {
    double air_density = 1.225;  // kg/m^3
    double blade_radius = 40.0;  // m
    double pitch_deg = 1.0;
    double gear_ratio = 150.0;
    double cut_out_speed = 25.0;  // m/s, upper bound for the trim wind solve

    void validate() const;
};

struct Impedance {
    double r = 0.0;
    double x = 0.0;
    Complex value() const { return {r, x}; }
    double magnitude() const { return std::abs(value()); }
};

/// Collector feeders (one per DFIG) and Thevenin grid impedance, pu on the
/// DFIG base. SCR is declared and checked against Z_grid.
struct NetworkTopology {
    std::vector<Impedance> feeders;
    Impedance grid;
    double scr = 1.0;

    /// SCR implied by Z_grid on the plant base of `n_units` machines.
    double derived_scr(std::size_t n_units) const;
    void validate(std::size_t n_units) const;
};

/// Operating-point targets for trim.
struct TrimTargets {
    double p_grid = 0.7;        // pu of plant rating, exported at the PCC
    double v_grid = 1.0;        // Thevenin source magnitude
    double omega_r = 1.1;       // rotor speed held during trim, pu
    double q_star = 0.0;        // VSM reactive set point, pu
    double v_star = 1.0;        // VSM voltage set point, pu
};

/// Full benchmark description.
struct FarmConfig {
    std::string name = "benchmark";
    PuBases bases;
    GridParams grid;
    DfigParams dfig;
    DrivetrainParams drivetrain;
    TurbineParams turbine;
    NetworkTopology network;
    TrimTargets targets;

    std::size_t num_units() const { return network.feeders.size(); }
    /// Plant base as a multiple of the machine base.
    double plant_base() const { return static_cast<double>(num_units()); }
    void validate() const;

    /// The four-machine benchmark (collector 0.06/0.06/0.12/0.12 pu, SCR 1).
    static FarmConfig benchmark();
};

// ---------------------------------------------------------------------------
// Component equations
// ---------------------------------------------------------------------------

/// Power coefficient quartic in the tip-speed ratio. May be negative.
double cp_coefficient(double lambda);

/// Tip-speed ratio for a generator-side shaft speed (pu) and wind speed.
double tip_speed_ratio(double wind, double omega_t, const TurbineParams& turbine,
                       const PuBases& bases);

/// Aerodynamic power in pu of S_b.
double mechanical_power(double wind, double omega_t, const TurbineParams& turbine,
                        const PuBases& bases);

/// Wind speed that delivers `power` (pu) at shaft speed `omega_t`. Searches up
/// to the cut-out speed; throws std::domain_error when the target is beyond it.
double wind_for_power(double power, double omega_t, const TurbineParams& turbine,
                      const PuBases& bases);

/// Electrical torque (motor sign, positive accelerates omega_r).
double electrical_torque(Complex i_s, Complex i_r, double L_M);

struct MachineCurrents {
    Complex i_s;
    Complex i_r;
};

/// Inverse flux-linkage relation. Motor convention for both windings.
MachineCurrents currents_from_fluxes(Complex psi_s, Complex psi_r, const DfigParams& p);

struct FluxDerivatives {
    Complex psi_s;
    Complex psi_r;
};

/// Stator and rotor voltage equations solved for d(psi)/dt, in a frame
/// rotating at omega_frame (pu). omega_m is the electrical rotor speed.
FluxDerivatives dfig_derivatives(Complex psi_s, Complex psi_r, Complex v_s, Complex v_r,
                                 double omega_frame, double omega_m, const DfigParams& p,
                                 double omega_b);

DrivetrainDerivatives drivetrain_derivatives(const DrivetrainState& s, double T_m, double T_e,
                                             const DrivetrainParams::PerUnit& p, double omega_b);

/// Governor, turbine lag and swing equation. `p_g` is the electrical power
/// drawn from the equivalent machine.
GridDerivatives grid_derivatives(const GridState& s, double p_g, const GridParams& p);

}  // namespace vsmfarm
