#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "vsmfarm/model.hpp"

using namespace vsmfarm;

TEST_CASE("cp quartic values and maximum") {
    CHECK(cp_coefficient(0.0) == doctest::Approx(-0.4958).epsilon(1e-12));
    CHECK(cp_coefficient(9.0) == doctest::Approx(0.488).epsilon(2e-3));
    double best = -1e9, arg = 0.0;
    for (int i = 0; i <= 1500; ++i) {
        const double l = 0.01 * i;
        if (cp_coefficient(l) > best) {
            best = cp_coefficient(l);
            arg = l;
        }
    }
    CHECK(arg >= 8.5);
    CHECK(arg <= 9.5);
    CHECK(best >= 0.48);
    CHECK(best <= 0.50);
}

TEST_CASE("mechanical power scaling") {
    const PuBases b;
    TurbineParams t;
    const double p1 = mechanical_power(10.0, 1.1, t, b);
    t.air_density *= 2.0;
    CHECK(mechanical_power(10.0, 1.1, t, b) == doctest::Approx(2.0 * p1).epsilon(1e-14));
    // Small wind with a bounded Cp window: lambda stays in range when omega_t scales with v.
    const TurbineParams t0;
    const double w1 = mechanical_power(1e-2, 1e-3, t0, b);
    const double w2 = mechanical_power(2e-2, 2e-3, t0, b);
    CHECK(std::abs(w1) < 1e-6);
    CHECK(w2 == doctest::Approx(8.0 * w1).epsilon(1e-12));
}

TEST_CASE("wind_for_power inverts mechanical_power") {
    const PuBases b;
    const TurbineParams t;
    const double v = wind_for_power(0.7, 1.1, t, b);
    CHECK(mechanical_power(v, 1.1, t, b) == doctest::Approx(0.7).epsilon(1e-10));
    CHECK_THROWS_AS(wind_for_power(50.0, 1.1, t, b), std::domain_error);
}

TEST_CASE("electrical torque") {
    CHECK(electrical_torque({0, 0}, {0.8, -0.2}, 2.0) == 0.0);
    CHECK(electrical_torque({1.0, 0.5}, {0.7, 0.35}, 2.0) == doctest::Approx(0.0).epsilon(1e-15));
    const double expected = 2.0 / std::sqrt(3.0) * 0.6;
    CHECK(electrical_torque({1.0, 0.5}, {0.8, -0.2}, 2.0) == doctest::Approx(expected).epsilon(1e-14));
    // Brute-force: Im(i_s conj(i_r)) expanded by components.
    const double brute = kPowerScale * 2.0 * (0.5 * 0.8 - 1.0 * (-0.2));
    CHECK(electrical_torque({1.0, 0.5}, {0.8, -0.2}, 2.0) == doctest::Approx(brute).epsilon(1e-14));
}

TEST_CASE("flux/current duality round-trips") {
    const DfigParams p;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 100; ++i) {
        const Complex ps{u(rng), u(rng)}, pr{u(rng), u(rng)};
        const auto [is, ir] = currents_from_fluxes(ps, pr, p);
        CHECK(std::abs(p.L_s * is + p.L_M * ir - ps) <= 1e-14 * std::max(1.0, std::abs(ps)) * 10);
        CHECK(std::abs(p.L_r * ir + p.L_M * is - pr) <= 1e-14 * std::max(1.0, std::abs(pr)) * 10);
    }
}

TEST_CASE("dfig derivatives") {
    const DfigParams p;
    const double wb = 100.0 * M_PI;
    SUBCASE("steady sinusoidal stator balance") {
        const Complex ps{0.1, -0.9}, pr{0.3, -0.8};
        const auto [is, ir] = currents_from_fluxes(ps, pr, p);
        const Complex j{0, 1};
        const double wf = 1.0, wm = 1.1;
        const auto d = dfig_derivatives(ps, pr, p.r_s * is + j * wf * ps, p.r_r * ir + j * (wf - wm) * pr, wf, wm, p, wb);
        CHECK(std::abs(d.psi_s) < 1e-12);
        CHECK(std::abs(d.psi_r) < 1e-12);
    }
    SUBCASE("no forcing") {
        DfigParams q = p;
        q.r_s = q.r_r = 0.0;
        const auto d = dfig_derivatives({0.4, 0.2}, {-0.3, 0.5}, {0, 0}, {0, 0}, 0.0, 0.0, q, wb);
        CHECK(std::abs(d.psi_s) == 0.0);
        CHECK(std::abs(d.psi_r) == 0.0);
    }
    SUBCASE("matches a real 4x4 formulation") {
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        for (int k = 0; k < 50; ++k) {
            const Complex ps{u(rng), u(rng)}, pr{u(rng), u(rng)}, vs{u(rng), u(rng)}, vr{u(rng), u(rng)};
            const double wf = 1.0 + 0.1 * u(rng), wm = 1.0 + 0.2 * u(rng);
            Eigen::Matrix4d L;
            L << p.L_s, 0, p.L_M, 0, 0, p.L_s, 0, p.L_M, p.L_M, 0, p.L_r, 0, 0, p.L_M, 0, p.L_r;
            const Eigen::Vector4d psi(ps.real(), ps.imag(), pr.real(), pr.imag());
            const Eigen::Vector4d i = L.fullPivLu().solve(psi);
            const double dsd = wb * (vs.real() - p.r_s * i[0] + wf * psi[1]);
            const double dsq = wb * (vs.imag() - p.r_s * i[1] - wf * psi[0]);
            const double drd = wb * (vr.real() - p.r_r * i[2] + (wf - wm) * psi[3]);
            const double drq = wb * (vr.imag() - p.r_r * i[3] - (wf - wm) * psi[2]);
            const auto d = dfig_derivatives(ps, pr, vs, vr, wf, wm, p, wb);
            const double scale = std::max({std::abs(dsd), std::abs(dsq), std::abs(drd), std::abs(drq), 1.0});
            CHECK(std::abs(d.psi_s.real() - dsd) <= 1e-12 * scale);
            CHECK(std::abs(d.psi_s.imag() - dsq) <= 1e-12 * scale);
            CHECK(std::abs(d.psi_r.real() - drd) <= 1e-12 * scale);
            CHECK(std::abs(d.psi_r.imag() - drq) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("lossless torque power balance") {
    DfigParams p;
    p.r_s = p.r_r = 0.0;
    const Complex j{0, 1};
    const Complex is{0.8, -0.3}, ir{-0.5, 0.6};
    const Complex ps = p.L_s * is + p.L_M * ir, pr = p.L_r * ir + p.L_M * is;
    const double wf = 1.0, wm = 1.13;
    const Complex vs = j * wf * ps, vr = j * (wf - wm) * pr;
    const double p_in = kPowerScale * (std::real(vs * std::conj(is)) + std::real(vr * std::conj(ir)));
    CHECK(std::abs(p_in - electrical_torque(is, ir, p.L_M) * wm) < 1e-10);
}

TEST_CASE("drivetrain") {
    const PuBases b;
    const DrivetrainParams dt;
    const auto pu = dt.per_unit(b);
    SUBCASE("per-unit conversion") {
        const double wm = b.omega_b / b.pole_pairs, sb = std::sqrt(3.0) * b.V_b * b.I_b;
        CHECK(pu.H_t == 800.0 * wm * wm / (2.0 * sb));
        CHECK(pu.K_tg == 12500.0 * wm / sb);
        CHECK(pu.D_tg == 130.0 * wm * wm / sb);
    }
    SUBCASE("constructed equilibrium") {
        const double w = 1.1;
        const DrivetrainState s{w, 0.0, w};
        const auto d = drivetrain_derivatives(s, pu.D_t * w, pu.D_g * w, pu, b.omega_b);
        CHECK(d.omega_t == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(d.T_tg == 0.0);
        CHECK(d.omega_r == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("spring equation") {
        const DrivetrainState s{1.2, 0.3, 1.1};
        CHECK(drivetrain_derivatives(s, 0.5, -0.5, pu, b.omega_b).T_tg ==
              doctest::Approx(b.omega_b * pu.K_tg * 0.1).epsilon(1e-14));
    }
    SUBCASE("torsional resonance") {
        VectorField f = [&](const VectorXd& x, const VectorXd&, VectorXd* dx, VectorXd*) {
            const auto d = drivetrain_derivatives({x[0], x[1], x[2]}, 0.0, 0.0, pu, b.omega_b);
            if (dx) *dx = Eigen::Vector3d(d.omega_t, d.T_tg, d.omega_r);
        };
        const auto lin = linearize(f, Eigen::Vector3d(1.1, 0.0, 1.1), VectorXd::Zero(1), 0);
        const Eigen::VectorXcd ev = lin.A.eigenvalues();
        const double expected = std::sqrt(b.omega_b * pu.K_tg * (1.0 / (2.0 * pu.H_t) + 1.0 / (2.0 * pu.H_g)));
        double best = 0.0;
        for (const auto& l : ev) best = std::max(best, std::abs(l.imag()));
        CHECK(best == doctest::Approx(expected).epsilon(0.02));
    }
}

TEST_CASE("grid frequency dynamics") {
    GridParams g;
    g.P_m_star = 0.6;
    SUBCASE("nominal equilibrium") {
        const GridState s{0.0, 0.6, 0.6, 0.0};
        const auto d = grid_derivatives(s, 0.6, g);
        CHECK(d.df == 0.0);
        CHECK(d.p_gov == 0.0);
        CHECK(d.p_turb == 0.0);
        CHECK(d.p_turb_rate == 0.0);
    }
    SUBCASE("droop steady state") {
        const double dP = 0.05;
        const double df = -dP / g.D_eq;
        const double pg = g.P_m_star - 0.5 * g.D_eq * df;
        const GridState s{df, pg, pg, 0.0};
        const auto d = grid_derivatives(s, g.P_m_star + dP, g);
        CHECK(std::abs(d.df) < 1e-9);
        CHECK(std::abs(d.p_gov) < 1e-9);
    }
    SUBCASE("inertia scaling") {
        const GridState s{0.0, 0.6, 0.6, 0.0};
        const double r1 = grid_derivatives(s, 0.7, g).df;
        g.H_sys *= 2.0;
        CHECK(grid_derivatives(s, 0.7, g).df == doctest::Approx(0.5 * r1).epsilon(1e-15));
    }
}

TEST_CASE("farm assembly") {
    const auto& cfg = fixtures::benchmark();
    FarmOde ode(cfg, initial_controllers(cfg));
    CHECK(ode.num_states() == grid_state::count + 4 * dfig_state::count);
    CHECK(ode.num_inputs() == grid_input::count + 4 * dfig_input::count);
    CHECK(ode.num_outputs() == grid_output::count + 4 * dfig_output::count);
    const auto& op = fixtures::base_op();
    CHECK(ode.derivative(op.x, op.u).norm() < 1e-8);
    // Deterministic evaluation.
    const VectorXd a = ode.derivative(op.x, op.u), b = ode.derivative(op.x, op.u);
    CHECK((a.array() == b.array()).all());
}

TEST_CASE("permuting machines permutes the vector field") {
    auto cfg = fixtures::benchmark();
    const auto ctl = initial_controllers(cfg);
    FarmOde ode(cfg, ctl);
    const auto& op = fixtures::base_op();
    auto swapped = cfg;
    std::swap(swapped.network.feeders[0], swapped.network.feeders[2]);
    FarmOde ode2(swapped, ctl);
    auto perm_state = [&](const VectorXd& v, std::size_t off0, std::size_t per, std::size_t count) {
        VectorXd w = v;
        for (std::size_t i = 0; i < count; ++i) {
            std::swap(w[static_cast<Eigen::Index>(off0 + 0 * per + i)], w[static_cast<Eigen::Index>(off0 + 2 * per + i)]);
        }
        return w;
    };
    const VectorXd x2 = perm_state(op.x, grid_state::count, dfig_state::count, dfig_state::count);
    const VectorXd u2 = perm_state(op.u, grid_input::count, dfig_input::count, dfig_input::count);
    const VectorXd f1 = ode.derivative(op.x, op.u);
    const VectorXd f2 = perm_state(ode2.derivative(x2, u2), grid_state::count, dfig_state::count, dfig_state::count);
    CHECK((f1 - f2).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("config validation") {
    auto cfg = fixtures::benchmark();
    cfg.network.scr = 2.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = fixtures::benchmark();
    cfg.dfig.L_M = 3.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
