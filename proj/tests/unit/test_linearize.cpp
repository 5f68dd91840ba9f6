#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "vsmfarm/freqresp.hpp"
#include "vsmfarm/linearize.hpp"

using namespace vsmfarm;

TEST_CASE("benchmark trim gate") {
    const auto& cfg = fixtures::benchmark();
    FarmOde ode(cfg, initial_controllers(cfg));
    const auto& op = fixtures::base_op();
    CHECK(op.residual < 1e-8);
    CHECK(ode.derivative(op.x, op.u).norm() < 1e-8);
    const VectorXd y = ode.outputs(op.x, op.u);
    CHECK(std::abs(y[grid_output::p_pcc] - 0.7) <= 1e-6);
    CHECK(op.u[grid_input::vg] == 1.0);
    CHECK(op.x[grid_state::df] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cfg.network.derived_scr(4) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Newton restarted at the solution converges at once") {
    const auto& cfg = fixtures::benchmark();
    FarmOde ode(cfg, initial_controllers(cfg));
    TrimOptions to;
    to.initial = &fixtures::base_op();
    const auto op = find_operating_point(ode, to);
    CHECK(op.iterations <= 1);
    CHECK((op.x - fixtures::base_op().x).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("infeasible trim target") {
    auto cfg = fixtures::benchmark();
    cfg.targets.p_grid = 5.0;
    FarmOde ode(cfg, initial_controllers(cfg));
    try {
        find_operating_point(ode);
        FAIL("trim should not succeed");
    } catch (const TrimError& e) {
        CHECK(std::string(e.what()).find("infeasible target") != std::string::npos);
    }
}

TEST_CASE("operating point file round-trips exactly") {
    const auto& op = fixtures::base_op();
    std::stringstream ss;
    op.save(ss);
    const auto back = OperatingPoint::load(ss);
    CHECK(back.state_names == op.state_names);
    CHECK(back.input_names == op.input_names);
    CHECK((back.x.array() == op.x.array()).all());
    CHECK((back.u.array() == op.u.array()).all());
    std::istringstream bad("not an operating point\n");
    CHECK_THROWS(OperatingPoint::load(bad));
}

TEST_CASE("linearization of a linear system is exact") {
    Eigen::Matrix3d A;
    A << -1, 2, 0, 0.5, -3, 1, 0, -1, -0.2;
    Eigen::Matrix<double, 3, 2> B;
    B << 1, 0, 0, 2, 1, 1;
    Eigen::RowVector3d C(1, -1, 0.5);
    VectorField f = [&](const VectorXd& x, const VectorXd& u, VectorXd* dx, VectorXd* y) {
        if (dx) *dx = A * x + B * u;
        if (y) *y = (C * x + Eigen::RowVector2d(0.3, 0) * u).eval();
    };
    const auto lin = linearize(f, Eigen::Vector3d(0.3, -2.0, 5.0), Eigen::Vector2d(1.0, -1.0), 1);
    CHECK((lin.A - A).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((lin.B - B).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((lin.C - C).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(std::abs(lin.D(0, 0) - 0.3) < 1e-7);
}

TEST_CASE("Jacobian step halving") {
    const auto& cfg = fixtures::benchmark();
    FarmOde ode(cfg, fixtures::stage_a());
    const auto& op = fixtures::stage_a_op();
    FdOptions fo;
    fo.angle_states = ode.angle_states();
    CHECK(step_halving_change(vector_field(ode), op.x, op.u, ode.num_outputs(), fo) < 1e-6);
}

TEST_CASE("sensitivity identity on every loop") {
    const auto& lin = fixtures::stage_b_lin();
    for (std::size_t k : {0u, 2u})
        for (LoopId id : kAllLoops) {
            ChannelEvaluator ev(extract_channel(lin, k, id));
            for (double w : log_grid(1e-2, 1e5, 100)) {
                const auto p = ev.at(w);
                CHECK(std::abs(p.S() + p.T() - 1.0) < 1e-8);
            }
        }
}

TEST_CASE("stage B margins are equal across structural twins") {
    const auto rows = measure_margins(fixtures::stage_b_lin(), {0, 1, 2, 3}, default_loop_specs());
    for (std::size_t i = 0; i < 7; ++i) {
        CAPTURE(rows[i].loop.label());
        CHECK(rows[i].margins.phi_m == doctest::Approx(rows[7 + i].margins.phi_m).epsilon(1e-6));
        CHECK(rows[i].margins.omega_o == doctest::Approx(rows[7 + i].margins.omega_o).epsilon(1e-6));
        CHECK(rows[14 + i].margins.phi_m == doctest::Approx(rows[21 + i].margins.phi_m).epsilon(1e-6));
        CHECK(rows[14 + i].margins.omega_o == doctest::Approx(rows[21 + i].margins.omega_o).epsilon(1e-6));
    }
}

TEST_CASE("closed loops are stable at stages B and Gamma") {
    for (const LinearModel* lin : {&fixtures::stage_b_lin(), &fixtures::gamma_lin()}) {
        const Eigen::VectorXcd ev = lin->A.eigenvalues();
        for (const auto& l : ev) CHECK(l.real() < 0.0);
    }
}

TEST_CASE("linear model export") {
    std::ostringstream os;
    fixtures::stage_b_lin().export_text(os);
    CHECK(os.str().find("A ") != std::string::npos);
    CHECK(os.str().size() > 1000);
}
