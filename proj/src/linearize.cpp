#include "vsmfarm/linearize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>

namespace vsmfarm {

double wrap_angle(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a, two_pi);
    if (w <= -std::numbers::pi) w += two_pi;
    if (w > std::numbers::pi) w -= two_pi;
    return w;
}

// ---------------------------------------------------------------------------
// Operating point file

void OperatingPoint::save(std::ostream& os) const {
    fmt::print(os, "vsmfarm-operating-point 1\n");
    fmt::print(os, "residual {:.17g}\n", residual);
    fmt::print(os, "p_grid {:.17g}\n", p_grid);
    fmt::print(os, "v_grid {:.17g}\n", v_grid);
    fmt::print(os, "scr {:.17g}\n", scr);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        fmt::print(os, "state {} {:.17g}\n", state_names[static_cast<std::size_t>(i)], x[i]);
    for (Eigen::Index i = 0; i < u.size(); ++i)
        fmt::print(os, "input {} {:.17g}\n", input_names[static_cast<std::size_t>(i)], u[i]);
}

OperatingPoint OperatingPoint::load(std::istream& is) {
    OperatingPoint op;
    std::string line;
    if (!std::getline(is, line) || line != "vsmfarm-operating-point 1")
        throw std::runtime_error("not a version-1 operating point file");
    std::vector<double> xs, us;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "state" || key == "input") {
            std::string name;
            double v;
            if (!(ls >> name >> v)) throw std::runtime_error("malformed line: " + line);
            (key == "state" ? op.state_names : op.input_names).push_back(name);
            (key == "state" ? xs : us).push_back(v);
        } else {
            double v;
            if (!(ls >> v)) throw std::runtime_error("malformed line: " + line);
            if (key == "residual") op.residual = v;
            else if (key == "p_grid") op.p_grid = v;
            else if (key == "v_grid") op.v_grid = v;
            else if (key == "scr") op.scr = v;
            else throw std::runtime_error("unknown key: " + key);
        }
    }
    op.x = Eigen::Map<VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    op.u = Eigen::Map<VectorXd>(us.data(), static_cast<Eigen::Index>(us.size()));
    return op;
}

void OperatingPoint::save_file(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    save(f);
}

OperatingPoint OperatingPoint::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    return load(f);
}

// ---------------------------------------------------------------------------
// Trim

namespace {

struct TrimProblem {
    const FarmOde& ode;
    double p_grid;
    std::size_t n, nx, nz;

    TrimProblem(const FarmOde& o, double pg)
        : ode(o), p_grid(pg), n(o.num_units()), nx(o.num_states()),
          nz(nx + (n > 0 ? n + 2 : 1)) {}

    void unpack(const VectorXd& z, const VectorXd& u0, VectorXd& x, VectorXd& u) const {
        x = z.head(static_cast<Eigen::Index>(nx));
        u = u0;
        if (n == 0) {
            u[grid_input::pm_star] = z[static_cast<Eigen::Index>(nx)];
            return;
        }
        for (std::size_t k = 0; k < n; ++k) {
            const auto o = FarmOde::dfig_input_offset(k);
            u[o + dfig_input::wind] = z[static_cast<Eigen::Index>(nx + k)];
            u[o + dfig_input::p_star] = z[static_cast<Eigen::Index>(nx + n)];
        }
        u[grid_input::pm_star] = z[static_cast<Eigen::Index>(nx + n + 1)];
    }

    VectorXd residual(const VectorXd& z, const VectorXd& u0) const {
        VectorXd x, u, dx, y;
        unpack(z, u0, x, u);
        ode.evaluate(x, u, &dx, &y);
        VectorXd r(static_cast<Eigen::Index>(nz));
        r.head(static_cast<Eigen::Index>(nx)) = dx;
        const double w_target = ode.config().targets.omega_r;
        for (std::size_t k = 0; k < n; ++k)
            r[static_cast<Eigen::Index>(nx + k)] =
                x[FarmOde::dfig_state_offset(k) + dfig_state::wr] - w_target;
        if (n > 0) r[static_cast<Eigen::Index>(nx + n)] = y[grid_output::p_pcc] - p_grid;
        r[static_cast<Eigen::Index>(nz - 1)] = x[grid_state::df];
        return r;
    }

    double ode_residual(const VectorXd& z, const VectorXd& u0) const {
        return residual(z, u0).head(static_cast<Eigen::Index>(nx)).norm();
    }

    MatrixXd jacobian(const VectorXd& z, const VectorXd& u0) const {
        MatrixXd J(static_cast<Eigen::Index>(nz), static_cast<Eigen::Index>(nz));
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(nz); ++i) {
            const double h = std::max(1e-7, 1e-7 * std::abs(z[i]));
            VectorXd zp = z, zm = z;
            zp[i] += h;
            zm[i] -= h;
            J.col(i) = (residual(zp, u0) - residual(zm, u0)) / (2.0 * h);
        }
        return J;
    }
};

VectorXd no_load_guess(const FarmOde& ode) {
    const auto& cfg = ode.config();
    VectorXd x = VectorXd::Zero(static_cast<Eigen::Index>(ode.num_states()));
    const auto& p = cfg.dfig;
    const double v = cfg.targets.v_grid;
    for (std::size_t k = 0; k < ode.num_units(); ++k) {
        const auto o = FarmOde::dfig_state_offset(k);
        const Complex psi_s{0.0, -v};
        const Complex i_r = psi_s / p.L_M;
        const Complex psi_r = p.L_r * i_r;
        x[o + dfig_state::psi_sd] = psi_s.real();
        x[o + dfig_state::psi_sq] = psi_s.imag();
        x[o + dfig_state::psi_rd] = psi_r.real();
        x[o + dfig_state::psi_rq] = psi_r.imag();
        x[o + dfig_state::udc] = p.u_dc_nom;
        x[o + dfig_state::delta] = -std::numbers::pi / 2.0;
        x[o + dfig_state::wt] = cfg.targets.omega_r;
        x[o + dfig_state::wr] = cfg.targets.omega_r;
        x[o + dfig_state::psi_vd] = v;
        x[o + dfig_state::gsc_xq] = v;
    }
    return x;
}

}  // namespace

OperatingPoint find_operating_point(const FarmOde& ode, const TrimOptions& opt) {
    const auto& cfg = ode.config();
    const std::size_t n = ode.num_units();
    const double p_target = cfg.targets.p_grid;
    const double v_grid = cfg.targets.v_grid;

    if (n == 0 && p_target != 0.0)
        throw TrimError("infeasible target: no machines to deliver P_grid", INFINITY);
    if (n > 0) {
        const double scr = cfg.network.derived_scr(n);
        if (p_target > scr * v_grid * v_grid)
            throw TrimError(fmt::format("infeasible target: P_grid = {} pu exceeds the static "
                                        "transfer limit {:.4f} pu of the grid impedance",
                                        p_target, scr * v_grid * v_grid),
                            INFINITY);
        const double p_avail =
            mechanical_power(cfg.turbine.cut_out_speed, cfg.targets.omega_r, cfg.turbine, cfg.bases);
        if (p_target > p_avail)
            throw TrimError(fmt::format("infeasible target: P_grid = {} pu needs more than the "
                                        "{:.4f} pu available at cut-out wind",
                                        p_target, p_avail),
                            INFINITY);
    }

    VectorXd u0 = ode.nominal_inputs();
    u0[grid_input::vg] = v_grid;

    TrimProblem base(ode, p_target);
    VectorXd z(static_cast<Eigen::Index>(base.nz));
    int stages = opt.homotopy_stages;
    if (opt.initial) {
        if (static_cast<std::size_t>(opt.initial->x.size()) != ode.num_states() ||
            static_cast<std::size_t>(opt.initial->u.size()) != ode.num_inputs())
            throw std::invalid_argument("initial operating point does not match the model");
        z.head(static_cast<Eigen::Index>(base.nx)) = opt.initial->x;
        u0 = opt.initial->u;
        u0[grid_input::vg] = v_grid;
        if (n > 0) {
            for (std::size_t k = 0; k < n; ++k)
                z[static_cast<Eigen::Index>(base.nx + k)] =
                    opt.initial->u[FarmOde::dfig_input_offset(k) + dfig_input::wind];
            z[static_cast<Eigen::Index>(base.nx + n)] =
                opt.initial->u[FarmOde::dfig_input_offset(0) + dfig_input::p_star];
            z[static_cast<Eigen::Index>(base.nx + n + 1)] = opt.initial->u[grid_input::pm_star];
        } else {
            z[static_cast<Eigen::Index>(base.nx)] = opt.initial->u[grid_input::pm_star];
        }
        stages = 1;
    } else {
        z.head(static_cast<Eigen::Index>(base.nx)) = no_load_guess(ode);
        if (n > 0) {
            const double w0 = wind_for_power(0.01, cfg.targets.omega_r, cfg.turbine, cfg.bases);
            for (std::size_t k = 0; k < n; ++k) z[static_cast<Eigen::Index>(base.nx + k)] = w0;
            z[static_cast<Eigen::Index>(base.nx + n)] = 0.0;
            z[static_cast<Eigen::Index>(base.nx + n + 1)] = 0.0;
        } else {
            z[static_cast<Eigen::Index>(base.nx)] = 0.0;
        }
        if (n == 0 || p_target == 0.0) stages = 1;
    }

    int total_iterations = 0;
    double best = INFINITY;
    for (int stage = 1; stage <= stages; ++stage) {
        const double pg = p_target * static_cast<double>(stage) / static_cast<double>(stages);
        TrimProblem prob(ode, pg);
        VectorXd r = prob.residual(z, u0);
        double rn = r.norm();
        const bool last = stage == stages;
        // Intermediate stages only need to land in the basin of the next one.
        const double stage_tol = last ? opt.tolerance * 1e-3 : 1e-6;
        int it = 0;
        for (; it < opt.max_iterations && rn > stage_tol; ++it) {
            const MatrixXd J = prob.jacobian(z, u0);
            const VectorXd step = J.partialPivLu().solve(-r);
            if (!step.allFinite()) break;
            // Row equilibration keeps fast electrical rows from dominating the merit.
            VectorXd w = J.rowwise().lpNorm<Eigen::Infinity>().cwiseMax(1e-12).cwiseInverse();
            const double merit = r.cwiseProduct(w).norm();
            double lambda = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 30; ++ls) {
                const VectorXd zt = z + lambda * step;
                const VectorXd rt = prob.residual(zt, u0);
                if (rt.allFinite() && rt.cwiseProduct(w).norm() < (1.0 - 1e-4 * lambda) * merit) {
                    z = zt;
                    r = rt;
                    rn = rt.norm();
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!accepted) break;
        }
        total_iterations += it;
        const double ode_res = prob.ode_residual(z, u0);
        best = std::min(best, ode_res);
        if (last ? !(ode_res < opt.tolerance && rn < 1e-6) : !(rn < 1e-4))
            throw TrimError(fmt::format("trim did not converge at P_grid = {:.4f} pu "
                                        "(best residual {:.3e})",
                                        pg, ode_res),
                            best);
        for (std::size_t k = 0; k < n; ++k) {
            if (z[static_cast<Eigen::Index>(base.nx + k)] > cfg.turbine.cut_out_speed)
                throw TrimError("infeasible target: required wind speed exceeds cut-out", best);
        }
    }

    OperatingPoint op;
    base.unpack(z, u0, op.x, op.u);
    for (auto i : ode.angle_states()) op.x[static_cast<Eigen::Index>(i)] = wrap_angle(op.x[static_cast<Eigen::Index>(i)]);
    op.residual = ode.derivative(op.x, op.u).norm();
    op.state_names = ode.state_names();
    op.input_names = ode.input_names();
    op.p_grid = p_target;
    op.v_grid = v_grid;
    op.scr = cfg.network.scr;
    op.iterations = total_iterations;
    if (!(op.residual < opt.tolerance))
        throw TrimError(fmt::format("trim residual {:.3e} above tolerance", op.residual),
                        op.residual);
    return op;
}

// ---------------------------------------------------------------------------
// Linear models

std::size_t LinearModel::input_index(const std::string& name) const {
    for (std::size_t i = 0; i < input_names.size(); ++i)
        if (input_names[i] == name) return i;
    throw std::out_of_range(fmt::format("missing input tag '{}'", name));
}

std::size_t LinearModel::output_index(const std::string& name) const {
    for (std::size_t i = 0; i < output_names.size(); ++i)
        if (output_names[i] == name) return i;
    throw std::out_of_range(fmt::format("missing output tag '{}'", name));
}

SisoSystem LinearModel::siso(std::size_t input, std::size_t output) const {
    const auto i = static_cast<Eigen::Index>(input);
    const auto o = static_cast<Eigen::Index>(output);
    return {A, B.col(i), C.row(o), D(o, i)};
}

SisoSystem LinearModel::siso(const std::string& input, const std::string& output) const {
    return siso(input_index(input), output_index(output));
}

void LinearModel::export_text(std::ostream& os) const {
    auto names = [&](const char* key, const std::vector<std::string>& v) {
        fmt::print(os, "{} {}", key, v.size());
        for (const auto& s : v) fmt::print(os, " {}", s);
        fmt::print(os, "\n");
    };
    fmt::print(os, "vsmfarm-linear-model 1\n");
    names("states", state_names);
    names("inputs", input_names);
    names("outputs", output_names);
    auto mat = [&](const char* key, const MatrixXd& m) {
        fmt::print(os, "{} {} {}\n", key, m.rows(), m.cols());
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                fmt::print(os, c == 0 ? "{:.17g}" : " {:.17g}", m(r, c));
            fmt::print(os, "\n");
        }
    };
    mat("A", A);
    mat("B", B);
    mat("C", C);
    mat("D", D);
}

VectorField vector_field(const FarmOde& ode) {
    return [&ode](const VectorXd& x, const VectorXd& u, VectorXd* dx, VectorXd* y) {
        ode.evaluate(x, u, dx, y);
    };
}

namespace {

void fd_column(const VectorField& f, const VectorXd& x, const VectorXd& u, bool wrt_state,
               Eigen::Index i, double h, std::size_t ny, Eigen::Ref<VectorXd> df,
               Eigen::Ref<VectorXd> dg, const std::vector<std::string>* names) {
    VectorXd xp = x, xm = x, up = u, um = u;
    if (wrt_state) {
        xp[i] += h;
        xm[i] -= h;
    } else {
        up[i] += h;
        um[i] -= h;
    }
    VectorXd fp, fm, gp, gm;
    f(xp, up, &fp, ny ? &gp : nullptr);
    f(xm, um, &fm, ny ? &gm : nullptr);
    if (!fp.allFinite() || !fm.allFinite()) {
        const std::string who = names && static_cast<std::size_t>(i) < names->size()
                                    ? (*names)[static_cast<std::size_t>(i)]
                                    : fmt::format("#{}", i);
        throw std::runtime_error(
            fmt::format("NaN in vector field while perturbing {} '{}'",
                        wrt_state ? "state" : "input", who));
    }
    df = (fp - fm) / (2.0 * h);
    if (ny) dg = (gp - gm) / (2.0 * h);
}

LinearModel linearize_impl(const VectorField& f, const VectorXd& x, const VectorXd& u,
                           std::size_t ny, const FdOptions& opt, double scale,
                           const std::vector<std::string>* state_names,
                           const std::vector<std::string>* input_names) {
    const Eigen::Index nx = x.size(), nu = u.size(), nyi = static_cast<Eigen::Index>(ny);
    LinearModel lin;
    lin.A.resize(nx, nx);
    lin.B.resize(nx, nu);
    lin.C.resize(nyi, nx);
    lin.D.resize(nyi, nu);
    VectorXd x0 = x;
    for (auto i : opt.angle_states) x0[static_cast<Eigen::Index>(i)] = wrap_angle(x0[static_cast<Eigen::Index>(i)]);
    for (Eigen::Index i = 0; i < nx; ++i) {
        const double h = scale * std::max(opt.min_step, opt.rel_step * std::abs(x0[i]));
        fd_column(f, x0, u, true, i, h, ny, lin.A.col(i), lin.C.col(i), state_names);
    }
    for (Eigen::Index i = 0; i < nu; ++i) {
        const double h = scale * std::max(opt.min_step, opt.rel_step * std::abs(u[i]));
        fd_column(f, x0, u, false, i, h, ny, lin.B.col(i), lin.D.col(i), input_names);
    }
    return lin;
}

}  // namespace

LinearModel linearize(const VectorField& f, const VectorXd& x, const VectorXd& u,
                      std::size_t n_outputs, const FdOptions& opt) {
    return linearize_impl(f, x, u, n_outputs, opt, 1.0, nullptr, nullptr);
}

double step_halving_change(const VectorField& f, const VectorXd& x, const VectorXd& u,
                           std::size_t n_outputs, const FdOptions& opt) {
    const auto a = linearize_impl(f, x, u, n_outputs, opt, 1.0, nullptr, nullptr);
    const auto b = linearize_impl(f, x, u, n_outputs, opt, 0.5, nullptr, nullptr);
    double worst = 0.0;
    auto cmp = [&](const MatrixXd& p, const MatrixXd& q) {
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double ref = std::max(std::abs(p.data()[i]), 1.0);
            worst = std::max(worst, std::abs(p.data()[i] - q.data()[i]) / ref);
        }
    };
    cmp(a.A, b.A);
    cmp(a.B, b.B);
    cmp(a.C, b.C);
    cmp(a.D, b.D);
    return worst;
}

LinearModel jacobian_linearize(const FarmOde& ode, const OperatingPoint& op) {
    if (static_cast<std::size_t>(op.x.size()) != ode.num_states() ||
        static_cast<std::size_t>(op.u.size()) != ode.num_inputs())
        throw std::invalid_argument("operating point does not match the model dimensions");
    FdOptions opt;
    opt.angle_states = ode.angle_states();
    auto lin = linearize_impl(vector_field(ode), op.x, op.u, ode.num_outputs(), opt, 1.0,
                              &ode.state_names(), &ode.input_names());
    lin.state_names = ode.state_names();
    lin.input_names = ode.input_names();
    lin.output_names = ode.output_names();
    return lin;
}

AnalysisChannel extract_channel(const LinearModel& lin, std::size_t machine, LoopId loop) {
    const std::string pre = fmt::format("dfig{}.", machine + 1);
    const std::string tag = loop_tag(loop);
    AnalysisChannel ch;
    ch.label = fmt::format("dfig{}.{}", machine + 1, loop_name(loop));
    ch.machine = machine;
    ch.loop = loop;
    const auto d = lin.input_index(pre + "d_" + tag);
    ch.to_s = lin.siso(d, lin.output_index(pre + "s_" + tag));
    ch.to_t = lin.siso(d, lin.output_index(pre + "t_" + tag));
    return ch;
}

}  // namespace vsmfarm
