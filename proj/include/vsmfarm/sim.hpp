#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsmfarm/control.hpp"
#include "vsmfarm/linearize.hpp"

namespace vsmfarm {

class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, double last_time)
        : std::runtime_error(what), last_time_(last_time) {}
    double last_time() const { return last_time_; }

private:
    double last_time_;
};

struct ScenarioEvent {
    enum class Mode { Set, Add };
    double time = 0.0;
    std::string target;  // input name, e.g. "dfig1.p_star" or "grid.vg"
    Mode mode = Mode::Add;
    double value = 0.0;
};

struct Scenario {
    std::string name = "free";
    double duration = 2.0;   // s
    double dt = 50e-6;       // s, RK4 step
    double sample_dt = 2e-4; // s, recording interval (multiple of dt)
    std::vector<ScenarioEvent> events;
    std::vector<std::string> outputs;  // output, state or input names

    void validate() const;

    /// +0.2 pu on DFIG1's power set point at 1 s.
    static Scenario pref_step();
    /// Grid source magnitude 1 -> 0.8 pu from 1 s to 1.5 s.
    static Scenario voltage_dip();
};

struct TimeSeries {
    std::vector<double> time;
    std::vector<std::string> names;
    std::vector<std::vector<double>> data;  // one vector per channel

    const std::vector<double>& channel(const std::string& name) const;
    void add_channel(std::string name, std::vector<double> values);
    void write_csv(std::ostream& os) const;
};

/// Fixed-step RK4. The step is shortened only to land on event times, which
/// split the horizon into segments integrated with equal sub-steps.
TimeSeries integrate(const VectorField& f, const VectorXd& x0, const VectorXd& u0,
                     std::size_t n_outputs, const std::vector<std::string>& state_names,
                     const std::vector<std::string>& input_names,
                     const std::vector<std::string>& output_names, const Scenario& sc);

TimeSeries integrate(const FarmOde& ode, const OperatingPoint& op, const Scenario& sc);

/// Terminal state only (no recording), for convergence checks.
VectorXd integrate_final(const VectorField& f, const VectorXd& x0, const VectorXd& u0,
                         double duration, double dt);

/// Exact (zero-order-hold) unit step response of a SISO system, scaled by `amplitude`.
TimeSeries step_response_linear(const SisoSystem& sys, double amplitude, double T, double dt);

/// Step response of wn^2 / (s^2 + 2 zeta wn s + wn^2).
TimeSeries second_order_template(double zeta, double omega_n, double T, double dt);

/// 2 % settling time of a step response toward `final_value` (last exit of the band).
double settling_time(const std::vector<double>& t, const std::vector<double>& y,
                     double final_value, double band = 0.02);

struct EnvelopeResult {
    bool inside = true;
    double worst = 0.0;    // max |y - template| / step for t >= t_from
    double t_worst = 0.0;
};

EnvelopeResult envelope_check(const std::vector<double>& t, const std::vector<double>& y,
                              const std::vector<double>& tmpl, double step, double band,
                              double t_from);

/// Overlays two runs with trd_/frd_ channel prefixes. Time grids must match.
TimeSeries merge_compare(const TimeSeries& trd, const TimeSeries& frd);

/// max |y| over t >= t_from.
double peak_abs(const TimeSeries& ts, const std::string& channel, double t_from = 0.0);
/// Half peak-to-peak over t >= t_from.
double oscillation_amplitude(const TimeSeries& ts, const std::string& channel, double t_from);

/// Large-signal figures of merit of one run of DFIG1.
struct ScenarioMetrics {
    double peak_speed_deviation = 0.0;  // max |omega_r - omega_t| after the first event
    double udc_amplitude = 0.0;         // half peak-to-peak of u_dc after the first event
    double speed_settling_time = 0.0;   // last exit from a 2 % (of peak) band, absolute time
};

ScenarioMetrics scenario_metrics(const TimeSeries& ts, const Scenario& sc, std::size_t machine = 0);

/// Reference input name of a loop ("dfig1.r_rscd", "dfig1.p_star", ...).
std::string reference_input(std::size_t machine, LoopId id);

/// Closed-loop reference-step response of a loop against its second-order template.
struct StepEnvelope {
    LoopId loop = LoopId::VSMP;
    double template_settling = 0.0;  // s
    EnvelopeResult result;
    TimeSeries series;  // channels "response", "template"
};

/// Unit step on the loop reference, horizon 5 template settling times; the
/// envelope is checked from 20 % of the template settling time on.
StepEnvelope step_envelope(const LinearModel& lin, std::size_t machine, const LoopSpec& spec,
                           double band = 0.1);

}  // namespace vsmfarm
