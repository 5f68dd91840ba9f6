#include "vsmfarm/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/core.h>

namespace vsmfarm {

namespace {

/// Reads keys of one object and rejects the ones nobody asked for.
class Reader {
public:
    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ParseError(fmt::format("{}: expected an object", where()));
    }

    void num(const char* key, double& out) {
        if (const Json* v = find(key)) {
            if (!v->is_number()) throw ParseError(fmt::format("{}.{}: expected a number", path_, key));
            out = v->get<double>();
            if (!std::isfinite(out)) throw ParseError(fmt::format("{}.{}: not finite", path_, key));
        }
    }
    void str(const char* key, std::string& out) {
        if (const Json* v = find(key)) {
            if (!v->is_string()) throw ParseError(fmt::format("{}.{}: expected a string", path_, key));
            out = v->get<std::string>();
        }
    }
    const Json* find(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    const Json& require(const char* key) {
        const Json* v = find(key);
        if (!v) throw ParseError(fmt::format("{}: missing '{}'", where(), key));
        return *v;
    }
    std::string sub(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ParseError(fmt::format("{}: unknown key '{}'", where(), it.key()));
    }

private:
    std::string where() const { return path_.empty() ? "<root>" : path_; }

    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Json impedance_json(const Impedance& z) { return Json{{"r", z.r}, {"x", z.x}}; }

Impedance impedance_from(const Json& j, const std::string& path) {
    Impedance z;
    Reader r(j, path);
    r.num("r", z.r);
    r.num("x", z.x);
    r.finish();
    return z;
}

Json pi_json(const TwoDofPi& p) {
    return Json{{"K_p", p.K_p}, {"K_i", p.K_i}, {"b", p.b}, {"integrator_limit", p.integrator_limit}};
}

TwoDofPi pi_from(const Json& j, const std::string& path) {
    TwoDofPi p;
    Reader r(j, path);
    r.num("K_p", p.K_p);
    r.num("K_i", p.K_i);
    r.num("b", p.b);
    r.num("integrator_limit", p.integrator_limit);
    r.finish();
    return p;
}

template <class Fn>
void object(Reader& parent, const char* key, Fn&& fn) {
    if (const Json* v = parent.find(key)) {
        Reader r(*v, parent.sub(key));
        fn(r);
        r.finish();
    }
}

}  // namespace

Json to_json(const FarmConfig& c) {
    Json feeders = Json::array();
    for (const auto& f : c.network.feeders) feeders.push_back(impedance_json(f));
    return Json{
        {"name", c.name},
        {"bases",
         {{"V_b", c.bases.V_b},
          {"I_b", c.bases.I_b},
          {"omega_b", c.bases.omega_b},
          {"pole_pairs", c.bases.pole_pairs},
          {"U_dc_b", c.bases.U_dc_b}}},
        {"grid",
         {{"H_sys", c.grid.H_sys},
          {"tau_g", c.grid.tau_g},
          {"D_eq", c.grid.D_eq},
          {"turbine",
           {{"natural_frequency", c.grid.turbine.natural_frequency},
            {"damping", c.grid.turbine.damping}}}}},
        {"dfig",
         {{"r_s", c.dfig.r_s},
          {"r_r", c.dfig.r_r},
          {"L_s", c.dfig.L_s},
          {"L_r", c.dfig.L_r},
          {"L_M", c.dfig.L_M},
          {"C_dc", c.dfig.C_dc},
          {"u_dc_nom", c.dfig.u_dc_nom},
          {"r_filter", c.dfig.r_filter},
          {"l_filter", c.dfig.l_filter}}},
        {"drivetrain",
         {{"J_t", c.drivetrain.J_t},
          {"D_t_r", c.drivetrain.D_t_r},
          {"K_tg_r", c.drivetrain.K_tg_r},
          {"D_tg_r", c.drivetrain.D_tg_r},
          {"J_g", c.drivetrain.J_g},
          {"D_g_r", c.drivetrain.D_g_r}}},
        {"turbine",
         {{"air_density", c.turbine.air_density},
          {"blade_radius", c.turbine.blade_radius},
          {"pitch_deg", c.turbine.pitch_deg},
          {"gear_ratio", c.turbine.gear_ratio},
          {"cut_out_speed", c.turbine.cut_out_speed}}},
        {"network",
         {{"feeders", feeders}, {"grid", impedance_json(c.network.grid)}, {"scr", c.network.scr}}},
        {"targets",
         {{"p_grid", c.targets.p_grid},
          {"v_grid", c.targets.v_grid},
          {"omega_r", c.targets.omega_r},
          {"q_star", c.targets.q_star},
          {"v_star", c.targets.v_star}}},
    };
}

FarmConfig config_from_json(const Json& j) {
    FarmConfig c = FarmConfig::benchmark();
    Reader r(j, "");
    r.str("name", c.name);
    object(r, "bases", [&](Reader& b) {
        b.num("V_b", c.bases.V_b);
        b.num("I_b", c.bases.I_b);
        b.num("omega_b", c.bases.omega_b);
        b.num("pole_pairs", c.bases.pole_pairs);
        b.num("U_dc_b", c.bases.U_dc_b);
    });
    object(r, "grid", [&](Reader& g) {
        g.num("H_sys", c.grid.H_sys);
        g.num("tau_g", c.grid.tau_g);
        g.num("D_eq", c.grid.D_eq);
        object(g, "turbine", [&](Reader& t) {
            t.num("natural_frequency", c.grid.turbine.natural_frequency);
            t.num("damping", c.grid.turbine.damping);
        });
    });
    object(r, "dfig", [&](Reader& d) {
        d.num("r_s", c.dfig.r_s);
        d.num("r_r", c.dfig.r_r);
        d.num("L_s", c.dfig.L_s);
        d.num("L_r", c.dfig.L_r);
        d.num("L_M", c.dfig.L_M);
        d.num("C_dc", c.dfig.C_dc);
        d.num("u_dc_nom", c.dfig.u_dc_nom);
        d.num("r_filter", c.dfig.r_filter);
        d.num("l_filter", c.dfig.l_filter);
    });
    object(r, "drivetrain", [&](Reader& d) {
        d.num("J_t", c.drivetrain.J_t);
        d.num("D_t_r", c.drivetrain.D_t_r);
        d.num("K_tg_r", c.drivetrain.K_tg_r);
        d.num("D_tg_r", c.drivetrain.D_tg_r);
        d.num("J_g", c.drivetrain.J_g);
        d.num("D_g_r", c.drivetrain.D_g_r);
    });
    object(r, "turbine", [&](Reader& t) {
        t.num("air_density", c.turbine.air_density);
        t.num("blade_radius", c.turbine.blade_radius);
        t.num("pitch_deg", c.turbine.pitch_deg);
        t.num("gear_ratio", c.turbine.gear_ratio);
        t.num("cut_out_speed", c.turbine.cut_out_speed);
    });
    object(r, "network", [&](Reader& n) {
        if (const Json* f = n.find("feeders")) {
            if (!f->is_array()) throw ParseError("network.feeders: expected an array");
            c.network.feeders.clear();
            for (std::size_t i = 0; i < f->size(); ++i)
                c.network.feeders.push_back(impedance_from((*f)[i], fmt::format("network.feeders[{}]", i)));
        }
        if (const Json* g = n.find("grid")) c.network.grid = impedance_from(*g, "network.grid");
        n.num("scr", c.network.scr);
    });
    object(r, "targets", [&](Reader& t) {
        t.num("p_grid", c.targets.p_grid);
        t.num("v_grid", c.targets.v_grid);
        t.num("omega_r", c.targets.omega_r);
        t.num("q_star", c.targets.q_star);
        t.num("v_star", c.targets.v_star);
    });
    r.finish();
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw ParseError(fmt::format("invalid config: {}", e.what()));
    }
    return c;
}

Json to_json(const ControllerSet& set) {
    Json machines = Json::array();
    for (const auto& m : set.machines)
        machines.push_back(Json{
            {"vsmp",
             {{"H", m.vsmp.H},
              {"D_p", m.vsmp.D_p},
              {"D_d", m.vsmp.D_d},
              {"omega_s0", m.vsmp.omega_s0},
              {"damping_path", m.vsmp.path == DampingPath::PowerFed ? "power_fed" : "error_fed"}}},
            {"vsmq", {{"K_q", m.vsmq.K_q}, {"D_q", m.vsmq.D_q}}},
            {"rsc_d", pi_json(m.rsc_d)},
            {"rsc_q", pi_json(m.rsc_q)},
            {"vdc", pi_json(m.vdc)},
            {"gsc_d", pi_json(m.gsc_d)},
            {"gsc_q", pi_json(m.gsc_q)},
            {"virtual_impedance", {{"r_v", m.zv.r_v}, {"l_v", m.zv.l_v}}},
        });
    return Json{{"label", set.label}, {"machines", machines}};
}

ControllerSet controllers_from_json(const Json& j) {
    ControllerSet set;
    Reader r(j, "");
    r.str("label", set.label);
    const Json& ms = r.require("machines");
    if (!ms.is_array() || ms.empty()) throw ParseError("machines: expected a non-empty array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const std::string path = fmt::format("machines[{}]", i);
        MachineControllers m;
        Reader mr(ms[i], path);
        object(mr, "vsmp", [&](Reader& v) {
            v.num("H", m.vsmp.H);
            v.num("D_p", m.vsmp.D_p);
            v.num("D_d", m.vsmp.D_d);
            v.num("omega_s0", m.vsmp.omega_s0);
            std::string path_name = m.vsmp.path == DampingPath::PowerFed ? "power_fed" : "error_fed";
            v.str("damping_path", path_name);
            if (path_name == "power_fed") m.vsmp.path = DampingPath::PowerFed;
            else if (path_name == "error_fed") m.vsmp.path = DampingPath::ErrorFed;
            else throw ParseError(fmt::format("{}.vsmp.damping_path: '{}' is not power_fed or error_fed", path, path_name));
        });
        object(mr, "vsmq", [&](Reader& v) {
            v.num("K_q", m.vsmq.K_q);
            v.num("D_q", m.vsmq.D_q);
        });
        const std::pair<const char*, TwoDofPi*> pis[] = {
            {"rsc_d", &m.rsc_d}, {"rsc_q", &m.rsc_q}, {"vdc", &m.vdc}, {"gsc_d", &m.gsc_d}, {"gsc_q", &m.gsc_q}};
        for (const auto& [key, dst] : pis)
            if (const Json* v = mr.find(key)) *dst = pi_from(*v, path + "." + key);
        object(mr, "virtual_impedance", [&](Reader& v) {
            v.num("r_v", m.zv.r_v);
            v.num("l_v", m.zv.l_v);
        });
        mr.finish();
        set.machines.push_back(m);
    }
    r.finish();
    try {
        set.validate(set.machines.size());
    } catch (const std::exception& e) {
        throw ParseError(fmt::format("invalid controllers: {}", e.what()));
    }
    return set;
}

Json to_json(const Scenario& sc) {
    Json events = Json::array();
    for (const auto& e : sc.events)
        events.push_back(Json{{"time", e.time},
                              {"target", e.target},
                              {"mode", e.mode == ScenarioEvent::Mode::Set ? "set" : "add"},
                              {"value", e.value}});
    return Json{{"name", sc.name},         {"duration", sc.duration}, {"dt", sc.dt},
                {"sample_dt", sc.sample_dt}, {"events", events},      {"outputs", sc.outputs}};
}

Scenario scenario_from_json(const Json& j) {
    Scenario sc;
    sc.outputs.clear();
    Reader r(j, "");
    r.str("name", sc.name);
    r.num("duration", sc.duration);
    r.num("dt", sc.dt);
    r.num("sample_dt", sc.sample_dt);
    if (const Json* ev = r.find("events")) {
        if (!ev->is_array()) throw ParseError("events: expected an array");
        for (std::size_t i = 0; i < ev->size(); ++i) {
            ScenarioEvent e;
            Reader er((*ev)[i], fmt::format("events[{}]", i));
            er.num("time", e.time);
            er.str("target", e.target);
            std::string mode = "add";
            er.str("mode", mode);
            if (mode == "set") e.mode = ScenarioEvent::Mode::Set;
            else if (mode != "add") throw ParseError(fmt::format("events[{}].mode: '{}' is not set or add", i, mode));
            er.num("value", e.value);
            er.finish();
            if (e.target.empty()) throw ParseError(fmt::format("events[{}]: missing 'target'", i));
            sc.events.push_back(e);
        }
    }
    if (const Json* out = r.find("outputs")) {
        if (!out->is_array()) throw ParseError("outputs: expected an array of names");
        for (const auto& o : *out) {
            if (!o.is_string()) throw ParseError("outputs: expected an array of names");
            sc.outputs.push_back(o.get<std::string>());
        }
    }
    r.finish();
    try {
        sc.validate();
    } catch (const std::exception& e) {
        throw ParseError(e.what());
    }
    return sc;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(fmt::format("cannot read {}", path));
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(fmt::format("{}: {}", origin, e.what()));
    }
}

FarmConfig load_config(const std::string& path) {
    const Json j = parse_json_text(read_file(path), path);
    try {
        return config_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path, e.what()));
    }
}

ControllerSet load_controllers(const std::string& path) {
    const Json j = parse_json_text(read_file(path), path);
    try {
        return controllers_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path, e.what()));
    }
}

Scenario load_scenario(const std::string& path) {
    const Json j = parse_json_text(read_file(path), path);
    try {
        return scenario_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path, e.what()));
    }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace vsmfarm
