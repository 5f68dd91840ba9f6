#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "vsmfarm/control.hpp"
#include "vsmfarm/freqresp.hpp"

using namespace vsmfarm;

TEST_CASE("loop names round-trip") {
    for (LoopId id : kAllLoops) CHECK(parse_loop(loop_name(id)) == id);
    CHECK_THROWS_AS(parse_loop("rscq"), std::invalid_argument);
}

TEST_CASE("two-degree-of-freedom PI") {
    TwoDofPi pi{2.962, 2418.0, 1.0, 0.0};
    CHECK(pi.output(0.3, 0.3, 0.0) == 0.0);
    CHECK(pi.output(0.1, 0.0, 0.0) == doctest::Approx(0.2962).epsilon(1e-12));
    pi.b = 0.0;
    CHECK(pi.output(0.1, 0.0, 0.0) == 0.0);
    CHECK(pi.integrator_rate(0.1, 0.0, 0.0) == doctest::Approx(241.8));
    pi.integrator_limit = 1.0;
    CHECK(pi.integrator_rate(0.1, 0.0, 1.0) == 0.0);
    CHECK(pi.integrator_rate(-0.1, 0.0, 1.0) == doctest::Approx(-241.8));
}

TEST_CASE("pole placement against b/(s + a)") {
    const double a = 3.0, b = 40.0, zeta = 0.707, wn = 100.0;
    const auto pi = pole_place_pi(a, b, zeta, wn);
    // Closed loop s^2 + (a + b K_p) s + b K_i.
    CHECK(a + b * pi.K_p == doctest::Approx(2 * zeta * wn));
    CHECK(b * pi.K_i == doctest::Approx(wn * wn));
}

namespace {

/// Simulates the virtual shaft block with a sinusoidal power error and
/// returns the steady phasor ratio omega_v / error by least squares.
Complex vsmp_block_response(const VsmpParams& p, double w) {
    const double period = 2 * M_PI / w;
    const double dt = period / 4000.0;
    const int settle = static_cast<int>(std::ceil(40.0 * 2.0 * p.H / p.D_p / period)) + 4;
    double x = 0.0;
    auto e_at = [&](double t) { return std::sin(w * t); };
    auto rate = [&](double t, double xv) { return vsmp_dynamics(p, xv, e_at(t), 0.0).integrator_rate; };
    double t = 0.0;
    Complex acc_out{0, 0};
    const int n = 4000;
    for (int c = 0; c < settle + 1; ++c)
        for (int i = 0; i < n; ++i) {
            if (c == settle) {
                const double wv = vsmp_dynamics(p, x, e_at(t), 0.0).omega_v;
                acc_out += wv * std::polar(1.0, -w * t);
            }
            const double k1 = rate(t, x), k2 = rate(t + dt / 2, x + dt / 2 * k1);
            const double k3 = rate(t + dt / 2, x + dt / 2 * k2), k4 = rate(t + dt, x + dt * k3);
            x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            t += dt;
        }
    // Input sin(w t) has phasor -j / 2 in the same projection.
    return (acc_out / static_cast<double>(n)) / Complex(0.0, -0.5);
}

}  // namespace

TEST_CASE("virtual shaft block") {
    VsmpParams p{0.5, 20.0, 0.03, 1.0, DampingPath::ErrorFed};
    SUBCASE("droop DC gain") {
        // Steady state: dx/dt = 0 gives omega_v = dP / D_p.
        const double dP = 0.1;
        const double x_ss = dP / p.D_p - p.D_d / (2 * p.H) * dP;
        const auto s = vsmp_dynamics(p, x_ss, dP, 0.0);
        CHECK(s.omega_v == doctest::Approx(dP / p.D_p));
        CHECK(std::abs(s.integrator_rate) < 1e-15);
        p.path = DampingPath::PowerFed;
        const double x_pf = dP / p.D_p;  // P measured = 0, feed-forward from -P vanishes
        CHECK(std::abs(vsmp_dynamics(p, x_pf, dP, 0.0).integrator_rate) < 1e-15);
    }
    SUBCASE("matches C/D_p") {
        MachineControllers mc;
        mc.vsmp = p;
        const auto C = reconfigure_one_dof(LoopId::VSMP, mc);
        for (double w : {0.5, 5.0, 50.0}) {
            const Complex sim = vsmp_block_response(p, w);
            const Complex ref = C.at(w) / p.D_p;
            CHECK(std::abs(sim - ref) <= 1e-6 * std::abs(ref));
        }
    }
    SUBCASE("D_d = 0 is a first-order lag") {
        MachineControllers mc;
        mc.vsmp = p;
        mc.vsmp.D_d = 0.0;
        const auto C = reconfigure_one_dof(LoopId::VSMP, mc);
        const double w = 3.0;
        const Complex lag = 1.0 / Complex(1.0, w * 2 * p.H / p.D_p);
        CHECK(std::abs(C.at(w) - lag) < 1e-15);
    }
}

TEST_CASE("virtual flux block") {
    VsmqParams q{0.01, 0.05};
    CHECK(vsmq_dynamics(q, 0.0, 314.0) == 0.0);
    const double r1 = vsmq_dynamics(q, 0.02, 314.0);
    q.K_q *= 2.0;
    CHECK(vsmq_dynamics(q, 0.02, 314.0) == doctest::Approx(2.0 * r1).epsilon(1e-15));
}

TEST_CASE("gain change shifts the crossover by the gain ratio") {
    // K_q omega_b g / s crosses at K_q omega_b g.
    const double wb = 314.159, g = 0.8;
    auto G = [&](double kq) { return [=](double w) { return Complex(kq * wb * g, 0.0) / Complex(0.0, w); }; };
    const auto m1 = stability_margins(G(0.01));
    const auto m2 = stability_margins(G(0.02));
    CHECK(m2.omega_o / m1.omega_o == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("one-degree-of-freedom reconfiguration") {
    MachineControllers mc;
    mc.rsc_q = TwoDofPi{2.0, 500.0, 0.0, 0.0};
    mc.vsmq.K_q = 0.02;
    mc.vsmp = VsmpParams{0.4, 15.0, 0.02, 1.0, DampingPath::PowerFed};
    const double w = 123.0;
    CHECK(std::abs(reconfigure_one_dof(LoopId::RSCq, mc).at(w) - Complex(2.0, -500.0 / w)) < 1e-13);
    CHECK(std::abs(reconfigure_one_dof(LoopId::VSMQ, mc).at(w) - 0.02) < 1e-15);
    const Complex vs = Complex(1.0, w * 0.02) / Complex(1.0, w * 2 * 0.4 / 15.0);
    CHECK(std::abs(reconfigure_one_dof(LoopId::VSMP, mc).at(w) - vs) < 1e-13);
}

TEST_CASE("stage A gains meet the decoupled targets") {
    const auto& a = fixtures::stage_a();
    CHECK(a.label == "A");
    for (const auto& m : a.machines) {
        CHECK(m.rsc_d.b == 0.0);
        CHECK(m.vsmp.H > 0.0);
        CHECK(m.vsmq.K_q > 0.0);
    }
    FarmOde ode(fixtures::benchmark(), a);
    const auto rows = measure_decoupled_margins(ode, fixtures::stage_a_op(), {0, 2}, default_loop_specs());
    for (const auto& r : rows) {
        CAPTURE(r.loop.label());
        CHECK(r.error.phi < 0.01);
        CHECK(r.error.omega < 0.01);
    }
}

TEST_CASE("C times P reproduces the extracted loop") {
    const auto& lin = fixtures::stage_b_lin();
    const auto& a = fixtures::stage_a();
    for (LoopId id : kAllLoops) {
        const auto ch = extract_channel(lin, 0, id);
        const auto C = reconfigure_one_dof(id, a.machines[0]);
        const auto lf = loop_functions(ch, C, log_grid(1e-1, 1e4, 100));
        for (std::size_t i = 0; i < lf.G.omega.size(); ++i) {
            if (std::find(lf.excluded.begin(), lf.excluded.end(), i) != lf.excluded.end()) continue;
            const Complex g = C.at(lf.G.omega[i]) * lf.P.value[i];
            CHECK(std::abs(g - lf.G.value[i]) <= 1e-8 * std::abs(lf.G.value[i]));
        }
    }
}
