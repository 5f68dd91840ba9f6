#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vsmfarm {

/// Raised for invalid or inconsistent configuration data.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Active/reactive power in pu is Re(v i*)/sqrt(3): V_b is phase-to-phase,
/// I_b is a phase current and the dq transform is power-invariant.
inline constexpr double kPowerScale = 0.57735026918962576451;  // 1/sqrt(3)

/// Per-unit bases of one DFIG (also used for the collector network and grid).
struct PuBases {
    double V_b = 690.0;                          // phase-to-phase, V
    double I_b = 1760.0;                         // A
    double omega_b = 2.0 * std::numbers::pi * 50.0;
    double pole_pairs = 1.0;
    double U_dc_b = 1200.0;                      // V

    double S_b() const { return std::sqrt(3.0) * V_b * I_b; }
    double Z_b() const { return V_b / I_b; }
    double psi_b() const { return V_b / omega_b; }
    double L_b() const { return Z_b() / omega_b; }
    double omega_m_b() const { return omega_b / pole_pairs; }
    double T_e_b() const { return S_b() / omega_m_b(); }
    double J_b() const { return T_e_b() / omega_b; }
    double I_dc_b() const { return S_b() / U_dc_b; }
    double Z_dc_b() const { return U_dc_b / I_dc_b(); }
    double C_dc_b() const { return 1.0 / (omega_b * Z_dc_b()); }

    void validate() const {
        if (!(V_b > 0 && I_b > 0 && omega_b > 0 && pole_pairs > 0 && U_dc_b > 0))
            throw ConfigError("pu bases must be strictly positive");
    }
};

}  // namespace vsmfarm
