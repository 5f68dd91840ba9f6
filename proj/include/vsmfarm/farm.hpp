#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vsmfarm/control.hpp"
#include "vsmfarm/model.hpp"

namespace vsmfarm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Per-machine state slots, relative to the machine offset.
namespace dfig_state {
enum : std::size_t {
    psi_sd, psi_sq, psi_rd, psi_rq,
    icd, icq,  // GSC current, common frame
    udc,
    delta,
    wt, ttg, wr,
    vsmp_x, psi_vd,
    rsc_xd, rsc_xq, vdc_x, gsc_xd, gsc_xq,
    count
};
}

namespace grid_state {
enum : std::size_t { df, p_gov, p_turb, p_turb_rate, count };
}

namespace grid_input {
enum : std::size_t { vg, pm_star, count };
}

/// Per-machine inputs. The seven perturbation inputs follow in loop order.
namespace dfig_input {
enum : std::size_t {
    wind, p_star, q_star, v_star, udc_star,
    r_rscd, r_rscq, r_gscd, r_gscq,
    d_first,
    count = d_first + 7
};
}

namespace dfig_output {
enum : std::size_t {
    loops_first = 0,  // s, t, y per loop in loop order
    p_s = 21, q_s, v_t, wr_minus_wt, udc, icd, icq, omega_s, te,
    count
};
}

namespace grid_output {
enum : std::size_t { p_pcc, v_pcc, freq, count };
}

/// Where the three tags of a loop live in the input and output vectors.
struct LoopChannels {
    std::size_t machine;
    LoopId loop;
    std::size_t d;  // input index
    std::size_t s;  // output index, plant input (after the summing node)
    std::size_t t;  // output index, controller output
    std::size_t y;  // output index, controlled variable
    std::size_t r;  // input index of the loop reference
};

/// Closed-loop nonlinear farm: dx/dt = f(x, u), y = g(x, u). Immutable.
class FarmOde {
public:
    FarmOde(FarmConfig config, ControllerSet controllers);

    std::size_t num_units() const { return n_; }
    std::size_t num_states() const { return state_names_.size(); }
    std::size_t num_inputs() const { return input_names_.size(); }
    std::size_t num_outputs() const { return output_names_.size(); }

    const std::vector<std::string>& state_names() const { return state_names_; }
    const std::vector<std::string>& input_names() const { return input_names_; }
    const std::vector<std::string>& output_names() const { return output_names_; }
    std::size_t state_index(const std::string& name) const;
    std::size_t input_index(const std::string& name) const;
    std::size_t output_index(const std::string& name) const;

    static std::size_t dfig_state_offset(std::size_t k) {
        return grid_state::count + k * dfig_state::count;
    }
    static std::size_t dfig_input_offset(std::size_t k) {
        return grid_input::count + k * dfig_input::count;
    }
    static std::size_t dfig_output_offset(std::size_t k) {
        return grid_output::count + k * dfig_output::count;
    }

    LoopChannels channels(std::size_t machine, LoopId loop) const;
    std::vector<std::size_t> angle_states() const;

    /// Inputs with every perturbation at zero and set points from the config.
    VectorXd nominal_inputs() const;

    /// Evaluates the vector field and (optionally) the outputs in one pass.
    void evaluate(const VectorXd& x, const VectorXd& u, VectorXd* dx, VectorXd* y) const;
    VectorXd derivative(const VectorXd& x, const VectorXd& u) const;
    VectorXd outputs(const VectorXd& x, const VectorXd& u) const;

    const FarmConfig& config() const { return config_; }
    const ControllerSet& controllers() const { return controllers_; }

private:
    FarmConfig config_;
    ControllerSet controllers_;
    std::size_t n_;
    DrivetrainParams::PerUnit mech_;
    Eigen::PartialPivLU<MatrixXd> network_lu_;
    std::vector<std::string> state_names_, input_names_, output_names_;
    std::map<std::string, std::size_t> state_map_, input_map_, output_map_;
};

FarmOde assemble_farm_ode(const FarmConfig& config, const ControllerSet& controllers);

/// Lower-case loop label used in channel names ("rscq").
std::string loop_tag(LoopId id);

}  // namespace vsmfarm
