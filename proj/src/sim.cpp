#include "vsmfarm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/core.h>
#include <fmt/ostream.h>
#include <unsupported/Eigen/MatrixFunctions>

namespace vsmfarm {

namespace {

bool on_grid(double t, double step) {
    const double r = t / step;
    return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

std::size_t count_of(double t, double step) { return static_cast<std::size_t>(std::llround(t / step)); }

}  // namespace

void Scenario::validate() const {
    if (!(duration > 0) || !std::isfinite(duration))
        throw std::invalid_argument(fmt::format("scenario '{}': duration must be > 0", name));
    if (!(dt > 0) || !(sample_dt > 0))
        throw std::invalid_argument(fmt::format("scenario '{}': dt and sample_dt must be > 0", name));
    if (sample_dt < dt || !on_grid(sample_dt, dt))
        throw std::invalid_argument(
            fmt::format("scenario '{}': sample_dt must be an integer multiple of dt", name));
    if (!on_grid(duration, sample_dt))
        throw std::invalid_argument(
            fmt::format("scenario '{}': duration must be an integer multiple of sample_dt", name));
    double last = 0.0;
    for (const auto& e : events) {
        if (!(e.time >= 0) || !std::isfinite(e.value))
            throw std::invalid_argument(fmt::format("scenario '{}': invalid event on '{}'", name, e.target));
        if (e.time < last)
            throw std::invalid_argument(fmt::format("scenario '{}': events are not time-ordered", name));
        if (e.time > duration)
            throw std::invalid_argument(
                fmt::format("scenario '{}': event at {} s is past the duration", name, e.time));
        last = e.time;
    }
}

Scenario Scenario::pref_step() {
    Scenario s;
    s.name = "pref_step";
    s.duration = 8.0;
    s.events = {{1.0, "dfig1.p_star", ScenarioEvent::Mode::Add, 0.2}};
    s.outputs = {"dfig1.p_star", "dfig1.wr_minus_wt", "dfig1.p_s", "dfig1.q_s", "dfig1.udc", "dfig1.icq",
                 "dfig2.wr_minus_wt", "dfig3.wr_minus_wt", "p_pcc", "freq"};
    return s;
}

Scenario Scenario::voltage_dip() {
    Scenario s;
    s.name = "voltage_dip";
    s.duration = 4.0;
    s.events = {{1.0, "grid.vg", ScenarioEvent::Mode::Add, -0.2},
                {1.5, "grid.vg", ScenarioEvent::Mode::Add, 0.2}};
    s.outputs = {"grid.vg", "dfig1.udc", "dfig1.icd", "dfig1.icq", "dfig1.wr_minus_wt", "dfig1.p_s",
                 "dfig1.q_s", "dfig1.v_t", "v_pcc", "p_pcc", "freq"};
    return s;
}

const std::vector<double>& TimeSeries::channel(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return data[i];
    throw std::out_of_range(fmt::format("no channel '{}'", name));
}

void TimeSeries::add_channel(std::string name, std::vector<double> values) {
    if (values.size() != time.size())
        throw std::invalid_argument(fmt::format("channel '{}' length mismatch", name));
    names.push_back(std::move(name));
    data.push_back(std::move(values));
}

void TimeSeries::write_csv(std::ostream& os) const {
    fmt::print(os, "time");
    for (const auto& n : names) fmt::print(os, ",{}", n);
    fmt::print(os, "\n");
    for (std::size_t k = 0; k < time.size(); ++k) {
        fmt::print(os, "{:.9g}", time[k]);
        for (const auto& d : data) fmt::print(os, ",{:.12g}", d[k]);
        fmt::print(os, "\n");
    }
}

namespace {

struct Rk4 {
    const VectorField& f;
    VectorXd k1, k2, k3, k4, tmp;

    void step(VectorXd& x, const VectorXd& u, double h) {
        f(x, u, &k1, nullptr);
        tmp = x + 0.5 * h * k1;
        f(tmp, u, &k2, nullptr);
        tmp = x + 0.5 * h * k2;
        f(tmp, u, &k3, nullptr);
        tmp = x + h * k3;
        f(tmp, u, &k4, nullptr);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    /// Equal sub-steps no longer than dt covering [a, b].
    void advance(VectorXd& x, const VectorXd& u, double a, double b, double dt) {
        const double len = b - a;
        if (len <= 0) return;
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(len / dt - 1e-9)));
        const double h = len / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            step(x, u, h);
            if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > 1e6)
                throw SimulationError(
                    fmt::format("state blow-up near t = {:.6g} s", a + static_cast<double>(i) * h),
                    a + static_cast<double>(i) * h);
        }
    }
};

struct Probe {
    enum Kind { Output, State, Input } kind;
    std::size_t index;
};

void apply(const ScenarioEvent& e, VectorXd& u, const std::vector<std::string>& input_names) {
    const auto it = std::find(input_names.begin(), input_names.end(), e.target);
    if (it == input_names.end()) throw std::invalid_argument(fmt::format("unknown input '{}'", e.target));
    auto& v = u[it - input_names.begin()];
    v = e.mode == ScenarioEvent::Mode::Set ? e.value : v + e.value;
}

}  // namespace

TimeSeries integrate(const VectorField& f, const VectorXd& x0, const VectorXd& u0,
                     std::size_t n_outputs, const std::vector<std::string>& state_names,
                     const std::vector<std::string>& input_names,
                     const std::vector<std::string>& output_names, const Scenario& sc) {
    sc.validate();
    std::vector<Probe> probes;
    TimeSeries ts;
    const auto& wanted = sc.outputs.empty() ? output_names : sc.outputs;
    for (const auto& name : wanted) {
        auto pos = [&](const std::vector<std::string>& v) {
            return static_cast<std::size_t>(std::find(v.begin(), v.end(), name) - v.begin());
        };
        if (const auto o = pos(output_names); o < output_names.size())
            probes.push_back({Probe::Output, o});
        else if (const auto s = pos(state_names); s < state_names.size())
            probes.push_back({Probe::State, s});
        else if (const auto i = pos(input_names); i < input_names.size())
            probes.push_back({Probe::Input, i});
        else
            throw std::invalid_argument(fmt::format("unknown output channel '{}'", name));
        ts.names.push_back(name);
    }
    for (const auto& e : sc.events)
        if (std::find(input_names.begin(), input_names.end(), e.target) == input_names.end())
            throw std::invalid_argument(fmt::format("unknown input '{}'", e.target));

    const std::size_t n_samples = count_of(sc.duration, sc.sample_dt) + 1;
    ts.time.reserve(n_samples);
    ts.data.assign(probes.size(), {});
    for (auto& d : ts.data) d.reserve(n_samples);

    VectorXd x = x0, u = u0, y(static_cast<Eigen::Index>(n_outputs)), dx;
    Rk4 rk{f, {}, {}, {}, {}, {}};
    std::size_t next_event = 0;
    auto fire_until = [&](double t) {
        while (next_event < sc.events.size() && sc.events[next_event].time <= t + 1e-12) {
            apply(sc.events[next_event], u, input_names);
            ++next_event;
        }
    };
    auto record = [&](double t) {
        f(x, u, &dx, &y);
        ts.time.push_back(t);
        for (std::size_t j = 0; j < probes.size(); ++j) {
            const auto i = static_cast<Eigen::Index>(probes[j].index);
            const double v = probes[j].kind == Probe::Output ? y[i] : probes[j].kind == Probe::State ? x[i] : u[i];
            if (!std::isfinite(v)) throw SimulationError("non-finite output", t);
            ts.data[j].push_back(v);
        }
    };

    fire_until(0.0);
    record(0.0);
    for (std::size_t k = 1; k < n_samples; ++k) {
        const double a = static_cast<double>(k - 1) * sc.sample_dt;
        const double b = static_cast<double>(k) * sc.sample_dt;
        double t = a;
        while (next_event < sc.events.size() && sc.events[next_event].time < b - 1e-12) {
            const double te = sc.events[next_event].time;
            rk.advance(x, u, t, te, sc.dt);
            t = te;
            fire_until(te);
        }
        rk.advance(x, u, t, b, sc.dt);
        fire_until(b);
        record(b);
    }
    return ts;
}

TimeSeries integrate(const FarmOde& ode, const OperatingPoint& op, const Scenario& sc) {
    if (static_cast<std::size_t>(op.x.size()) != ode.num_states() ||
        static_cast<std::size_t>(op.u.size()) != ode.num_inputs())
        throw std::invalid_argument("operating point does not match the model dimensions");
    return integrate(vector_field(ode), op.x, op.u, ode.num_outputs(), ode.state_names(),
                     ode.input_names(), ode.output_names(), sc);
}

VectorXd integrate_final(const VectorField& f, const VectorXd& x0, const VectorXd& u0,
                         double duration, double dt) {
    VectorXd x = x0;
    Rk4 rk{f, {}, {}, {}, {}, {}};
    rk.advance(x, u0, 0.0, duration, dt);
    return x;
}

TimeSeries step_response_linear(const SisoSystem& sys, double amplitude, double T, double dt) {
    if (!(dt > 0) || !(T > 0)) throw std::invalid_argument("T and dt must be > 0");
    const Eigen::Index n = sys.A.rows();
    MatrixXd aug = MatrixXd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = sys.A;
    aug.topRightCorner(n, 1) = sys.b;
    const MatrixXd E = (aug * dt).exp();
    const MatrixXd Phi = E.topLeftCorner(n, n);
    const VectorXd Gam = E.topRightCorner(n, 1) * amplitude;
    const std::size_t steps = count_of(T, dt);
    TimeSeries ts;
    std::vector<double> y;
    VectorXd x = VectorXd::Zero(n);
    for (std::size_t k = 0; k <= steps; ++k) {
        ts.time.push_back(static_cast<double>(k) * dt);
        y.push_back((n > 0 ? sys.c.dot(x) : 0.0) + sys.d * amplitude);
        x = Phi * x + Gam;
    }
    ts.add_channel("y", std::move(y));
    return ts;
}

TimeSeries second_order_template(double zeta, double omega_n, double T, double dt) {
    if (!(zeta > 0) || !(zeta < 1) || !(omega_n > 0))
        throw std::invalid_argument("template needs 0 < zeta < 1 and omega_n > 0");
    const double wd = omega_n * std::sqrt(1.0 - zeta * zeta);
    const double k = zeta / std::sqrt(1.0 - zeta * zeta);
    const std::size_t steps = count_of(T, dt);
    TimeSeries ts;
    std::vector<double> y;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        ts.time.push_back(t);
        y.push_back(1.0 - std::exp(-zeta * omega_n * t) * (std::cos(wd * t) + k * std::sin(wd * t)));
    }
    ts.add_channel("y", std::move(y));
    return ts;
}

double settling_time(const std::vector<double>& t, const std::vector<double>& y, double final_value,
                     double band) {
    const double tol = band * std::max(std::abs(final_value), std::numeric_limits<double>::min());
    for (std::size_t i = y.size(); i-- > 0;)
        if (std::abs(y[i] - final_value) > tol)
            return i + 1 < t.size() ? t[i + 1] : std::numeric_limits<double>::infinity();
    return t.empty() ? 0.0 : t.front();
}

EnvelopeResult envelope_check(const std::vector<double>& t, const std::vector<double>& y,
                              const std::vector<double>& tmpl, double step, double band,
                              double t_from) {
    if (y.size() != t.size() || tmpl.size() != t.size())
        throw std::invalid_argument("envelope inputs differ in length");
    EnvelopeResult r;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_from) continue;
        const double e = std::abs(y[i] - tmpl[i] * step) / std::abs(step);
        if (e > r.worst) {
            r.worst = e;
            r.t_worst = t[i];
        }
    }
    r.inside = r.worst <= band;
    return r;
}

TimeSeries merge_compare(const TimeSeries& trd, const TimeSeries& frd) {
    if (trd.time != frd.time) throw std::invalid_argument("runs have different time grids");
    TimeSeries out;
    out.time = trd.time;
    for (std::size_t i = 0; i < trd.names.size(); ++i) out.add_channel("trd_" + trd.names[i], trd.data[i]);
    for (std::size_t i = 0; i < frd.names.size(); ++i) out.add_channel("frd_" + frd.names[i], frd.data[i]);
    return out;
}

double peak_abs(const TimeSeries& ts, const std::string& channel, double t_from) {
    const auto& y = ts.channel(channel);
    double m = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (ts.time[i] >= t_from) m = std::max(m, std::abs(y[i]));
    return m;
}

double oscillation_amplitude(const TimeSeries& ts, const std::string& channel, double t_from) {
    const auto& y = ts.channel(channel);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (ts.time[i] >= t_from) {
            lo = std::min(lo, y[i]);
            hi = std::max(hi, y[i]);
        }
    return hi >= lo ? 0.5 * (hi - lo) : 0.0;
}

ScenarioMetrics scenario_metrics(const TimeSeries& ts, const Scenario& sc, std::size_t machine) {
    const double t0 = sc.events.empty() ? 0.0 : sc.events.front().time;
    const std::string pre = fmt::format("dfig{}.", machine + 1);
    ScenarioMetrics m;
    m.peak_speed_deviation = peak_abs(ts, pre + "wr_minus_wt", t0);
    m.udc_amplitude = oscillation_amplitude(ts, pre + "udc", t0);
    const auto& y = ts.channel(pre + "wr_minus_wt");
    const double tol = 0.02 * m.peak_speed_deviation;
    m.speed_settling_time = t0;
    for (std::size_t i = y.size(); i-- > 0;)
        if (std::abs(y[i] - y.back()) > tol) {
            m.speed_settling_time = i + 1 < y.size() ? ts.time[i + 1] : std::numeric_limits<double>::infinity();
            break;
        }
    return m;
}

std::string reference_input(std::size_t machine, LoopId id) {
    static constexpr const char* names[] = {"p_star", "q_star", "r_rscd", "r_rscq", "udc_star", "r_gscd", "r_gscq"};
    return fmt::format("dfig{}.{}", machine + 1, names[loop_index(id)]);
}

StepEnvelope step_envelope(const LinearModel& lin, std::size_t machine, const LoopSpec& spec, double band) {
    StepEnvelope out;
    out.loop = spec.loop;
    const double ts_guess = 4.0 / (spec.zeta * spec.omega_n);
    const double dt = ts_guess / 1000.0;
    const double T = 5.0 * ts_guess;
    const auto tmpl = second_order_template(spec.zeta, spec.omega_n, T, dt);
    out.template_settling = settling_time(tmpl.time, tmpl.channel("y"), 1.0);
    const auto resp = step_response_linear(
        lin.siso(reference_input(machine, spec.loop), fmt::format("dfig{}.y_{}", machine + 1, loop_tag(spec.loop))),
        1.0, T, dt);
    out.result = envelope_check(tmpl.time, resp.channel("y"), tmpl.channel("y"), 1.0, band,
                                0.2 * out.template_settling);
    out.series.time = tmpl.time;
    out.series.add_channel("response", resp.channel("y"));
    out.series.add_channel("template", tmpl.channel("y"));
    return out;
}

}  // namespace vsmfarm
