import math

import numpy as np
import pytest

import vsmfarm


@pytest.fixture(scope="module")
def base():
    op = vsmfarm.trim()
    ctl = vsmfarm.stage_a_controllers(op)
    op_a = vsmfarm.trim(controllers=ctl, initial=op)
    return op, ctl, op_a


def test_cp_maximum():
    lam = np.linspace(0.0, 15.0, 3001)
    cp = np.array([vsmfarm.cp_coefficient(x) for x in lam])
    assert 0.48 <= cp.max() <= 0.50
    assert 8.5 <= lam[cp.argmax()] <= 9.5


def test_trim(base):
    op, _, _ = base
    assert op.residual < 1e-8
    assert abs(op.p_grid - 0.7) < 1e-12
    assert len(op.x) == len(op.state_names)
    again = vsmfarm.OperatingPoint.from_text(op.to_text())
    assert np.array_equal(again.x, op.x)


def test_config_round_trip_and_errors():
    cfg = vsmfarm.benchmark_config()
    assert len(cfg["network"]["feeders"]) == 4
    cfg["grid"]["H_system"] = 1.0
    with pytest.raises(vsmfarm.ParseError):
        vsmfarm.trim(config=cfg)
    cfg = vsmfarm.benchmark_config()
    cfg["targets"]["p_grid"] = 5.0
    with pytest.raises(vsmfarm.TrimError, match="infeasible target"):
        vsmfarm.trim(config=cfg)


def test_margin_oracle():
    zeta, wn = 0.707, 10.0
    w = np.logspace(-2, 4, 2000)
    s = 1j * w
    g = wn**2 / (s * (s + 2 * zeta * wn))
    m = vsmfarm.stability_margins(list(w), list(g))
    assert m["has_crossover"]
    assert abs(m["phi_m"] - 65.52) < 0.05
    assert abs(m["omega_o"] / wn - 0.6437) < 1e-3


def test_worked_example():
    r = vsmfarm.pi_loopshape(-10.0, -93.8, "RSCq")
    assert abs(r["dphi"] + 20.5) < 0.05
    assert abs(r["K_p"] - 2.962) < 1e-3
    assert abs(r["K_i"] - 2418) < 2


def test_linear_analysis(base):
    _, ctl, op_a = base
    lin = vsmfarm.linearize(ctl, op_a)
    assert lin.A.shape[0] == lin.A.shape[1] == len(lin.state_names)
    assert np.all(np.linalg.eigvals(lin.A).real < 0)
    dec = vsmfarm.decoupled_margins(ctl, op_a, [0])
    assert max(max(dec["err_phi"]), max(dec["err_omega"])) < 0.01
    coupled = vsmfarm.margins(lin, [0])
    assert coupled["loop"][0] == "dfig1.VSMP"
    inter = vsmfarm.interaction(lin, [0, 2], [0, 2])
    rho = inter["rho"][0]
    assert rho.shape == (7, 7)
    assert np.allclose(np.diag(rho), 1.0)
    assert rho.min() >= 0.0 and rho.max() <= 1.0
    assert sorted(inter["sequence"]) == sorted(["VSMP", "VSMQ", "RSCd", "RSCq", "VDC", "GSCd", "GSCq"])
    env = vsmfarm.step_envelope(lin, 0, "RSCd")
    assert env["template_settling"] > 0
    assert len(env["series"]["response"]) == len(env["series"]["time"])


def test_redesign_noop(base):
    op, ctl, _ = base
    new_ctl, _, passes = vsmfarm.redesign(ctl, op, iterations=0)
    assert new_ctl == ctl
    assert len(passes) == 1


def test_simulate(base):
    op, ctl, _ = base
    series, metrics = vsmfarm.simulate(ctl, op, "pref_step", duration=1.2)
    assert series["time"][-1] == pytest.approx(1.2)
    assert math.isfinite(metrics["peak_speed_deviation"])
    assert metrics["peak_speed_deviation"] > 0
