#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vsmfarm/control.hpp"
#include "vsmfarm/linearize.hpp"

namespace vsmfarm {

/// `n` log-spaced points over [lo, hi] (rad/s).
std::vector<double> log_grid(double lo = 1e-2, double hi = 1e5, std::size_t n = 2000);

struct FrequencyResponse {
    std::string label;
    std::string kind;  // "S", "T", "G", "P", "C" or free text
    std::vector<double> omega;
    std::vector<Complex> value;
    std::vector<std::size_t> flagged;  // grid indices perturbed or excluded
};

/// (j omega I - A)^{-1} evaluated through one Hessenberg reduction of A.
class Resolvent {
public:
    explicit Resolvent(const MatrixXd& A);

    /// Solves (j omega I - A) z = b. When the matrix is singular to working
    /// precision, omega is nudged by a relative 1e-9 and `perturbed` is set.
    Eigen::VectorXcd solve(double omega, const VectorXd& b, bool* perturbed = nullptr) const;

    /// c (j omega I - A)^{-1} b + d.
    Complex siso(double omega, const VectorXd& b, const Eigen::RowVectorXd& c, double d,
                 bool* perturbed = nullptr) const;

    Eigen::Index size() const { return H_.rows(); }

private:
    MatrixXd H_;
    MatrixXd Q_;
    Eigen::VectorXcd solve_hessenberg(Complex jw, const Eigen::VectorXcd& rhs, bool* singular) const;
};

FrequencyResponse frequency_response(const SisoSystem& sys, const std::vector<double>& grid,
                                     std::string label = {}, std::string kind = {});

/// Sensitivity, complementary sensitivity and local loop of one channel,
/// sharing one resolvent solve per frequency.
class ChannelEvaluator {
public:
    explicit ChannelEvaluator(const AnalysisChannel& ch);

    struct Point {
        Complex s;  // d -> s
        Complex t;  // d -> t
        Complex S() const { return s; }
        Complex T() const { return -t; }
        Complex G() const { return -t / s; }
    };
    Point at(double omega) const;
    Complex G(double omega) const { return at(omega).G(); }

private:
    AnalysisChannel ch_;
    Resolvent res_;
};

struct Crossover {
    double omega;
    double phi_m;
};

struct LoopMargins {
    bool has_crossover = false;
    double phi_m = 0.0;    // deg, (-180, 180]
    double omega_o = 0.0;  // rad/s
    bool multiple = false;
    std::vector<Crossover> crossovers;
    std::optional<double> gain_margin_db;
    std::optional<double> omega_pc;  // phase crossover of the reported gain margin
};

/// Phase margin in (-180, 180] of a loop value at its gain crossover.
double phase_margin_deg(Complex g);

/// Gain crossovers by sign change of |G| - 1 on the grid, refined by bisection.
/// The reported margin is the crossover with the smallest phase margin.
LoopMargins stability_margins(const std::function<Complex(double)>& G,
                              const std::vector<double>& grid = log_grid());

/// Same, from sampled data only (log-log interpolation between samples).
LoopMargins stability_margins(const FrequencyResponse& resp);

/// Margins of G = -t/s of one extracted channel.
LoopMargins channel_margins(const AnalysisChannel& ch, const std::vector<double>& grid = log_grid());

struct LoopFunctions {
    FrequencyResponse S, T, G, P;
    std::vector<std::size_t> excluded;  // |S| ~ 0
};

LoopFunctions loop_functions(const AnalysisChannel& ch, const RationalTf& C,
                             const std::vector<double>& grid = log_grid());

/// Phase unwrapped in degrees, continuous along the grid.
std::vector<double> unwrapped_phase_deg(const std::vector<Complex>& v);

struct NicholsRow {
    double phase_deg;
    double mag_db;
    double omega;
};
std::vector<NicholsRow> nichols_export(const FrequencyResponse& resp);

void write_response_csv(std::ostream& os, const FrequencyResponse& resp);
void write_bode_csv(std::ostream& os, const FrequencyResponse& resp);
void write_nichols_csv(std::ostream& os, const FrequencyResponse& resp);

}  // namespace vsmfarm
