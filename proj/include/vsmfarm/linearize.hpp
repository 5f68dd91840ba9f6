#pragma once

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vsmfarm/farm.hpp"

namespace vsmfarm {

class TrimError : public std::runtime_error {
public:
    TrimError(const std::string& what, double best_residual)
        : std::runtime_error(what), best_residual_(best_residual) {}
    double best_residual() const { return best_residual_; }

private:
    double best_residual_;
};

struct OperatingPoint {
    VectorXd x;
    VectorXd u;
    std::vector<std::string> state_names;
    std::vector<std::string> input_names;
    double residual = 0.0;
    double p_grid = 0.0;
    double v_grid = 1.0;
    double scr = 1.0;
    int iterations = 0;

    void save(std::ostream& os) const;
    static OperatingPoint load(std::istream& is);
    void save_file(const std::string& path) const;
    static OperatingPoint load_file(const std::string& path);
};

struct TrimOptions {
    double tolerance = 1e-8;       // on ||f(x, u)||_2
    int max_iterations = 60;       // per homotopy stage
    int homotopy_stages = 7;
    /// Optional starting point (skips homotopy when given).
    const OperatingPoint* initial = nullptr;
};

/// Damped Newton on (states, wind speeds, common P*, grid P_m*) so that
/// dx/dt = 0, omega_r = target, P_pcc = P_grid and the grid frequency is nominal.
OperatingPoint find_operating_point(const FarmOde& ode, const TrimOptions& opt = {});

/// Generic vector field with outputs, as used by the linearizer and the integrator.
using VectorField = std::function<void(const VectorXd& x, const VectorXd& u, VectorXd* dx,
                                       VectorXd* y)>;

struct SisoSystem {
    MatrixXd A;
    VectorXd b;
    Eigen::RowVectorXd c;
    double d = 0.0;
};

struct LinearModel {
    MatrixXd A, B, C, D;
    std::vector<std::string> state_names, input_names, output_names;

    std::size_t input_index(const std::string& name) const;
    std::size_t output_index(const std::string& name) const;
    SisoSystem siso(std::size_t input, std::size_t output) const;
    SisoSystem siso(const std::string& input, const std::string& output) const;

    /// Dense row-major matrices preceded by a tag header.
    void export_text(std::ostream& os) const;
};

struct FdOptions {
    double rel_step = 1e-5;
    double min_step = 1e-5;
    std::vector<std::size_t> angle_states;
};

/// Central-difference Jacobians of (f, g) around (x, u).
LinearModel linearize(const VectorField& f, const VectorXd& x, const VectorXd& u,
                      std::size_t n_outputs, const FdOptions& opt = {});

LinearModel jacobian_linearize(const FarmOde& ode, const OperatingPoint& op);

VectorField vector_field(const FarmOde& ode);

/// Largest relative change of any Jacobian entry when the FD step is halved,
/// measured as |dJ| / max(|J|, 1).
double step_halving_change(const VectorField& f, const VectorXd& x, const VectorXd& u,
                           std::size_t n_outputs, const FdOptions& opt = {});

struct AnalysisChannel {
    std::string label;  // "dfig1.RSCq"
    std::size_t machine = 0;
    LoopId loop = LoopId::VSMP;
    SisoSystem to_s;  // d -> s
    SisoSystem to_t;  // d -> t
};

AnalysisChannel extract_channel(const LinearModel& lin, std::size_t machine, LoopId loop);

/// Wraps angles into (-pi, pi].
double wrap_angle(double a);

}  // namespace vsmfarm
