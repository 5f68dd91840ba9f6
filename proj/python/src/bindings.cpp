#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vsmfarm/baseline.hpp"
#include "vsmfarm/interaction.hpp"
#include "vsmfarm/io.hpp"
#include "vsmfarm/redesign.hpp"
#include "vsmfarm/sim.hpp"

namespace py = pybind11;
using namespace vsmfarm;

namespace {

// Configuration and controller sets cross the boundary as JSON text.
FarmConfig config_of(const std::string& text) {
    return text.empty() ? FarmConfig::benchmark() : config_from_json(parse_json_text(text, "config"));
}

ControllerSet controllers_of(const std::string& text, const FarmConfig& cfg) {
    return text.empty() ? initial_controllers(cfg) : controllers_from_json(parse_json_text(text, "controllers"));
}

py::dict margins_dict(const std::vector<LoopMarginRow>& rows) {
    py::list loops, phi, omega, err_phi, err_omega, has;
    for (const auto& r : rows) {
        loops.append(r.loop.label());
        has.append(r.margins.has_crossover);
        phi.append(r.margins.phi_m);
        omega.append(r.margins.omega_o);
        err_phi.append(r.error.phi);
        err_omega.append(r.error.omega);
    }
    py::dict d;
    d["loop"] = loops;
    d["has_crossover"] = has;
    d["phi_m"] = phi;
    d["omega_o"] = omega;
    d["err_phi"] = err_phi;
    d["err_omega"] = err_omega;
    return d;
}

py::dict series_dict(const TimeSeries& ts) {
    py::dict d;
    d["time"] = py::cast(ts.time);
    for (std::size_t k = 0; k < ts.names.size(); ++k) d[py::str(ts.names[k])] = py::cast(ts.data[k]);
    return d;
}

std::vector<std::string> loop_names(const std::vector<LoopId>& seq) {
    std::vector<std::string> out;
    for (LoopId id : seq) out.emplace_back(loop_name(id));
    return out;
}

std::vector<LoopId> loop_ids(const std::vector<std::string>& names) {
    std::vector<LoopId> out;
    for (const auto& n : names) out.push_back(parse_loop(n));
    return out;
}

Scenario scenario_of(const std::string& name_or_json) {
    if (name_or_json == "pref_step") return Scenario::pref_step();
    if (name_or_json == "voltage_dip") return Scenario::voltage_dip();
    return scenario_from_json(parse_json_text(name_or_json, "scenario"));
}

}  // namespace

PYBIND11_MODULE(_vsmfarm, m) {
    m.doc() = "Small-signal analysis and coordinated redesign of a DFIG wind farm";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<TrimError>(m, "TrimError", PyExc_RuntimeError);
    py::register_exception<SynthesisError>(m, "SynthesisError", PyExc_RuntimeError);
    py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);

    m.def("benchmark_config_json", [] { return dump(to_json(FarmConfig::benchmark())); });
    m.def("initial_controllers_json",
          [](const std::string& cfg) { return dump(to_json(initial_controllers(config_of(cfg)))); },
          py::arg("config") = "");
    m.def("cp_coefficient", &cp_coefficient, py::arg("lam"));

    py::class_<OperatingPoint>(m, "OperatingPoint")
        .def_readonly("x", &OperatingPoint::x)
        .def_readonly("u", &OperatingPoint::u)
        .def_readonly("state_names", &OperatingPoint::state_names)
        .def_readonly("input_names", &OperatingPoint::input_names)
        .def_readonly("residual", &OperatingPoint::residual)
        .def_readonly("p_grid", &OperatingPoint::p_grid)
        .def_readonly("iterations", &OperatingPoint::iterations)
        .def("to_text", [](const OperatingPoint& op) {
            std::ostringstream os;
            op.save(os);
            return os.str();
        })
        .def_static("from_text", [](const std::string& text) {
            std::istringstream is(text);
            return OperatingPoint::load(is);
        });

    py::class_<LinearModel>(m, "LinearModel")
        .def_readonly("A", &LinearModel::A)
        .def_readonly("B", &LinearModel::B)
        .def_readonly("C", &LinearModel::C)
        .def_readonly("D", &LinearModel::D)
        .def_readonly("state_names", &LinearModel::state_names)
        .def_readonly("input_names", &LinearModel::input_names)
        .def_readonly("output_names", &LinearModel::output_names);

    m.def("trim",
          [](const std::string& cfg_text, const std::string& ctl_text, const OperatingPoint* initial) {
              const auto cfg = config_of(cfg_text);
              FarmOde ode(cfg, controllers_of(ctl_text, cfg));
              TrimOptions to;
              to.initial = initial;
              return find_operating_point(ode, to);
          },
          py::arg("config") = "", py::arg("controllers") = "", py::arg("initial") = nullptr);

    m.def("stage_a_controllers_json",
          [](const std::string& cfg_text, const OperatingPoint& op) {
              const auto cfg = config_of(cfg_text);
              return dump(to_json(stage_a_controllers(FarmOde(cfg, initial_controllers(cfg)), op)));
          },
          py::arg("config"), py::arg("op"));

    m.def("linearize",
          [](const std::string& cfg_text, const std::string& ctl_text, const OperatingPoint& op) {
              const auto cfg = config_of(cfg_text);
              return jacobian_linearize(FarmOde(cfg, controllers_of(ctl_text, cfg)), op);
          },
          py::arg("config"), py::arg("controllers"), py::arg("op"));

    m.def("margins",
          [](const LinearModel& lin, const std::vector<std::size_t>& machines) {
              return margins_dict(measure_margins(lin, machines, default_loop_specs()));
          },
          py::arg("lin"), py::arg("machines"));

    m.def("decoupled_margins",
          [](const std::string& cfg_text, const std::string& ctl_text, const OperatingPoint& op,
             const std::vector<std::size_t>& machines) {
              const auto cfg = config_of(cfg_text);
              FarmOde ode(cfg, controllers_of(ctl_text, cfg));
              return margins_dict(measure_decoupled_margins(ode, op, machines, default_loop_specs()));
          },
          py::arg("config"), py::arg("controllers"), py::arg("op"), py::arg("machines"));

    m.def("stability_margins",
          [](const std::vector<double>& omega, const std::vector<Complex>& values) {
              FrequencyResponse r;
              r.omega = omega;
              r.value = values;
              const auto lm = stability_margins(r);
              py::dict d;
              d["has_crossover"] = lm.has_crossover;
              d["phi_m"] = lm.phi_m;
              d["omega_o"] = lm.omega_o;
              d["multiple"] = lm.multiple;
              return d;
          },
          py::arg("omega"), py::arg("values"));

    m.def("interaction",
          [](const LinearModel& lin, const std::vector<std::size_t>& machines,
             const std::vector<std::size_t>& sequence_from, double t_f, double dt) {
              const auto a = analyze_interaction(lin, machines, {t_f, dt}, sequence_from);
              py::dict d;
              py::list rho, iidx, sidx;
              for (const auto& mx : a.matrices) rho.append(mx.rho);
              for (const auto& ix : a.indices) {
                  iidx.append(ix.iidx);
                  sidx.append(ix.sidx);
              }
              d["rho"] = rho;
              d["farm_rho"] = a.farm.rho;
              d["iidx"] = iidx;
              d["sidx"] = sidx;
              d["sequence"] = loop_names(a.sequence);
              d["unstable"] = a.unstable;
              return d;
          },
          py::arg("lin"), py::arg("machines"), py::arg("sequence_from") = std::vector<std::size_t>{},
          py::arg("t_f") = 1.0, py::arg("dt") = 1e-4);

    m.def("pi_loopshape",
          [](double A_p_db, double phi_p_deg, const std::string& loop) {
              const auto& spec = spec_for(default_loop_specs(), parse_loop(loop));
              const auto r = make_readout(A_p_db, phi_p_deg, spec);
              const auto g = pi_loopshape(r, spec);
              py::dict d;
              d["dA"] = r.dA;
              d["dphi"] = r.dphi;
              d["K_p"] = g.K_p;
              d["K_i"] = g.K_i;
              return d;
          },
          py::arg("A_p_db"), py::arg("phi_p_deg"), py::arg("loop"));

    m.def("redesign",
          [](const std::string& cfg_text, const std::string& ctl_text, const OperatingPoint& op, int iterations,
             const std::vector<std::string>& sequence) {
              const auto cfg = config_of(cfg_text);
              RedesignOptions o;
              o.iterations = iterations;
              if (!sequence.empty()) o.sequence = loop_ids(sequence);
              const auto r = coordinated_redesign(cfg, controllers_of(ctl_text, cfg), op, o);
              py::list passes;
              for (const auto& p : r.report.passes) passes.append(margins_dict(p));
              return py::make_tuple(dump(to_json(r.controllers)), r.op, passes);
          },
          py::arg("config"), py::arg("controllers"), py::arg("op"), py::arg("iterations") = 2,
          py::arg("sequence") = std::vector<std::string>{});

    m.def("simulate",
          [](const std::string& cfg_text, const std::string& ctl_text, const OperatingPoint& op,
             const std::string& scenario, double dt, double duration) {
              const auto cfg = config_of(cfg_text);
              auto sc = scenario_of(scenario);
              if (dt > 0) sc.dt = dt;
              if (duration > 0) sc.duration = duration;
              FarmOde ode(cfg, controllers_of(ctl_text, cfg));
              TrimOptions to;
              to.initial = &op;
              const auto ts = integrate(ode, find_operating_point(ode, to), sc);
              const auto mt = scenario_metrics(ts, sc);
              py::dict metrics;
              metrics["peak_speed_deviation"] = mt.peak_speed_deviation;
              metrics["udc_amplitude"] = mt.udc_amplitude;
              metrics["speed_settling_time"] = mt.speed_settling_time;
              return py::make_tuple(series_dict(ts), metrics);
          },
          py::arg("config"), py::arg("controllers"), py::arg("op"), py::arg("scenario"), py::arg("dt") = 0.0,
          py::arg("duration") = 0.0);

    m.def("step_envelope",
          [](const LinearModel& lin, std::size_t machine, const std::string& loop) {
              const auto env = step_envelope(lin, machine, spec_for(default_loop_specs(), parse_loop(loop)));
              py::dict d;
              d["inside"] = env.result.inside;
              d["worst"] = env.result.worst;
              d["t_worst"] = env.result.t_worst;
              d["template_settling"] = env.template_settling;
              d["series"] = series_dict(env.series);
              return d;
          },
          py::arg("lin"), py::arg("machine"), py::arg("loop"));
}
