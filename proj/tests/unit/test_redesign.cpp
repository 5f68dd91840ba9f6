#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "vsmfarm/redesign.hpp"

using namespace vsmfarm;

namespace {

constexpr double kDeg = M_PI / 180.0;

const LoopSpec& spec(LoopId id) {
    static const auto specs = default_loop_specs();
    return spec_for(specs, id);
}

Complex pi_at(const PiGains& g, double w) { return Complex(g.K_p, -g.K_i / w); }

double db(Complex z) { return 20.0 * std::log10(std::abs(z)); }

}  // namespace

TEST_CASE("PI loop shaping worked example") {
    const auto& s = spec(LoopId::RSCq);
    const auto r = make_readout(-10.0, -93.8, s);
    CHECK(r.dA == doctest::Approx(10.0));
    CHECK(std::abs(r.dphi + 20.5) < 0.05);
    const auto g = pi_loopshape(r, s);
    CHECK(g.K_p == doctest::Approx(2.962).epsilon(1e-3));
    CHECK(g.K_i == doctest::Approx(2418.0).epsilon(1e-3));
    const Complex c = pi_at(g, 2184.0);
    CHECK(std::abs(db(c) - 10.0) < 1e-4);
    CHECK(std::abs(std::arg(c) / kDeg + 20.5) < 1e-3);
}

TEST_CASE("PI loop shaping boundaries") {
    const auto& s = spec(LoopId::GSCd);
    // phi_p chosen so that the required change is exactly zero.
    const auto r0 = make_readout(-6.0, s.phi_m - 180.0, s);
    CHECK(r0.dphi == doctest::Approx(0.0));
    const auto g0 = pi_loopshape(r0, s);
    CHECK(g0.K_i == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(g0.K_p == doctest::Approx(std::pow(10.0, 6.0 / 20.0)));

    const auto lead = make_readout(-6.0, s.phi_m - 180.0 - 5.0, s);
    CHECK(lead.dphi == doctest::Approx(5.0));
    CHECK_THROWS_WITH_AS(pi_loopshape(lead, s), doctest::Contains("PI cannot provide phase lead"), SynthesisError);
}

TEST_CASE("PI feasibility region on random readouts") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> amp(-40.0, 40.0), ph(-179.0, 179.0);
    const auto& s = spec(LoopId::RSCd);
    for (int k = 0; k < 2000; ++k) {
        ShapingReadout r;
        r.dA = amp(rng);
        r.dphi = ph(rng);
        const bool feasible = r.dphi > -90.0 && r.dphi <= 0.0;
        if (!feasible) {
            CHECK_THROWS_AS(pi_loopshape(r, s), SynthesisError);
            continue;
        }
        const auto g = pi_loopshape(r, s);
        CHECK(g.K_p > 0.0);
        CHECK(g.K_i >= 0.0);
        const Complex c = pi_at(g, s.omega_o);
        CHECK(std::abs(db(c) - r.dA) < 1e-9);
        CHECK(std::abs(std::arg(c) / kDeg - r.dphi) < 1e-9);
    }
}

TEST_CASE("virtual shaft loop shaping") {
    const auto& s = spec(LoopId::VSMP);
    const VsmpParams current{0.5, 20.0, 0.03, 1.0, DampingPath::PowerFed};
    auto C_at = [&](const VsmpParams& p) {
        MachineControllers mc;
        mc.vsmp = p;
        return reconfigure_one_dof(LoopId::VSMP, mc).at(s.omega_o);
    };
    SUBCASE("lag with attenuation") {
        ShapingReadout r;
        r.dA = -3.0;
        r.dphi = -25.0;
        const auto p = vsmp_loopshape(r, s, current);
        CHECK(p.D_p == current.D_p);
        CHECK(p.D_d < 2 * p.H / p.D_p);
        const Complex c = C_at(p);
        CHECK(std::abs(db(c) + 3.0) < 1e-9);
        CHECK(std::abs(std::arg(c) / kDeg + 25.0) < 1e-9);
    }
    SUBCASE("lead with gain") {
        ShapingReadout r;
        r.dA = 2.0;
        r.dphi = 15.0;
        const auto p = vsmp_loopshape(r, s, current);
        const Complex c = C_at(p);
        CHECK(std::abs(db(c) - 2.0) < 1e-9);
        CHECK(std::abs(std::arg(c) / kDeg - 15.0) < 1e-9);
    }
    SUBCASE("degenerate unit match") {
        ShapingReadout r;
        const auto p = vsmp_loopshape(r, s, current, 0.25);
        CHECK(p.H == 0.25);
        CHECK(p.D_d == doctest::Approx(2 * p.H / p.D_p));
        CHECK(std::abs(C_at(p) - 1.0) < 1e-12);
    }
    SUBCASE("unreachable readout") {
        ShapingReadout r;
        r.dA = 6.0;
        r.dphi = -30.0;  // gain above one with lag needs a negative pole
        CHECK_THROWS_AS(vsmp_loopshape(r, s, current), SynthesisError);
    }
}

TEST_CASE("virtual flux loop shaping") {
    const auto& s = spec(LoopId::VSMQ);
    CHECK(vsmq_loopshape(Complex(0.0, -0.5), s) == doctest::Approx(2.0));
    const Complex p(0.3, -0.2);
    CHECK(vsmq_loopshape(2.0 * p, s) == doctest::Approx(0.5 * vsmq_loopshape(p, s)));
    CHECK_THROWS_AS(vsmq_loopshape(Complex(0.0, 0.0), s), SynthesisError);
}

TEST_CASE("every synthesis step closes the loop at the target") {
    const auto& res = fixtures::gamma();
    REQUIRE_FALSE(res.report.steps.empty());
    for (const auto& st : res.report.steps) {
        CAPTURE(st.loop.label());
        CAPTURE(st.pass);
        const auto& s = spec(st.loop.loop);
        // Plant recovered from the readout, controller from the stored gains.
        const Complex P = std::polar(std::pow(10.0, st.readout.A_p / 20.0), st.readout.phi_p * kDeg);
        const auto again = make_readout(P, s);
        CHECK(std::abs(again.dphi - st.readout.dphi) < 1e-9);
        const Complex C = std::polar(std::pow(10.0, again.dA / 20.0), again.dphi * kDeg);
        if (st.loop.loop == LoopId::VSMQ) {
            CHECK(std::abs(std::abs(std::abs(P) * vsmq_loopshape(P, s)) - 1.0) < 1e-6);
            continue;
        }
        const Complex G = C * P;
        CHECK(std::abs(std::abs(G) - 1.0) < 1e-6);
        CHECK(std::abs(std::arg(G) / kDeg - (s.phi_m - 180.0)) < 1e-4);
    }
    // Installed controllers reproduce the readout at the target crossover.
    for (std::size_t k : {0u, 2u})
        for (LoopId id : kAllLoops) {
            if (id == LoopId::VSMQ) continue;
            const RedesignStep* last = nullptr;
            for (const auto& st : res.report.steps)
                if (st.loop.machine == k && st.loop.loop == id) last = &st;
            REQUIRE(last != nullptr);
            const Complex C = reconfigure_one_dof(id, res.controllers.machines[k]).at(spec(id).omega_o);
            CHECK(std::abs(db(C) - last->readout.dA) < 1e-6);
            CHECK(std::abs(std::arg(C) / kDeg - last->readout.dphi) < 1e-4);
        }
}

TEST_CASE("twins share gains after redesign") {
    const auto& c = fixtures::gamma().controllers;
    CHECK(c.label == "Gamma");
    CHECK(c.machines[1].rsc_q.K_p == c.machines[0].rsc_q.K_p);
    CHECK(c.machines[3].vsmp.H == c.machines[2].vsmp.H);
    CHECK(c.machines[3].gsc_d.K_i == c.machines[2].gsc_d.K_i);
    const auto rep = twin_representatives(fixtures::benchmark());
    CHECK(rep == std::vector<std::size_t>{0, 0, 2, 2});
}

TEST_CASE("spec errors do not grow across passes") {
    const auto& passes = fixtures::gamma().report.passes;
    REQUIRE(passes.size() == 3);
    auto worst = [](const std::vector<LoopMarginRow>& rows) {
        double w = 0.0;
        for (const auto& r : rows) w = std::max(w, r.error.max());
        return w;
    };
    CHECK(worst(passes[1]) <= worst(passes[0]));
    CHECK(worst(passes[2]) <= worst(passes[1]));
    CHECK(worst(passes[2]) <= 0.10);
}

TEST_CASE("zero iterations leaves the controllers untouched") {
    RedesignOptions o;
    o.iterations = 0;
    const auto r = coordinated_redesign(fixtures::benchmark(), fixtures::stage_a(), fixtures::base_op(), o);
    const auto& a = fixtures::stage_a();
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(r.controllers.machines[k].rsc_d.K_p == a.machines[k].rsc_d.K_p);
        CHECK(r.controllers.machines[k].vsmp.H == a.machines[k].vsmp.H);
        CHECK(r.controllers.machines[k].vsmq.K_q == a.machines[k].vsmq.K_q);
    }
    CHECK(r.report.steps.empty());
    REQUIRE(r.report.passes.size() == 1);
    CHECK(r.report.passes[0].size() == 28);
    std::ostringstream os;
    write_report_csv(os, r.report, default_loop_specs());
    CHECK(os.str().rfind("stage,machine,quantity,VSMP", 0) == 0);
}

TEST_CASE("redesign is deterministic") {
    RedesignOptions o;
    o.iterations = 1;
    o.sequence = fixtures::stage_b_interaction().sequence;
    o.representatives = {0};
    const auto a = coordinated_redesign(fixtures::benchmark(), fixtures::stage_a(), fixtures::base_op(), o);
    const auto b = coordinated_redesign(fixtures::benchmark(), fixtures::stage_a(), fixtures::base_op(), o);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(a.controllers.machines[k].rsc_q.K_p == b.controllers.machines[k].rsc_q.K_p);
        CHECK(a.controllers.machines[k].rsc_q.K_i == b.controllers.machines[k].rsc_q.K_i);
        CHECK(a.controllers.machines[k].vsmp.H == b.controllers.machines[k].vsmp.H);
        CHECK(a.controllers.machines[k].vsmp.D_d == b.controllers.machines[k].vsmp.D_d);
    }
    CHECK((a.op.x.array() == b.op.x.array()).all());
}
