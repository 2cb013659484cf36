"""Quick end-to-end check of the pfl extension module."""

import math
import os
import tempfile

import pfl

HERE = os.path.dirname(os.path.abspath(__file__))
SCENARIOS = os.path.join(HERE, "..", "crates", "core", "scenarios")


def main():
    params = pfl.ModelParams()
    assert params.get("l1") == 1.5

    model = pfl.Model.full(params)
    assert model.dof == 5 and model.n_inputs == 3
    q = [0.1, -0.2, 0.3, 0.05, -0.1]
    m = model.mass_matrix(q)
    assert all(abs(m[i][j] - m[j][i]) < 1e-12 for i in range(5) for j in range(5))
    t_kin, v = model.energy(q, [0.0] * 5)
    _, v_rest = model.energy([0.0] * 5, [0.0] * 5)
    assert t_kin == 0.0 and v > v_rest
    acc = model.forward_dynamics([0.0] * 5, [0.0] * 5, [0.0] * 3)
    assert max(abs(a) for a in acc) < 1e-12

    ctrl = pfl.Controller(model, "coupled")
    u, terms = ctrl.control_wrench(q, [0.0] * 5)
    assert len(u) == 3 and "r" in terms
    eig = ctrl.eigenvalues()
    assert all(re < 0.0 for re, _, _ in eig)

    scen = pfl.Scenario.from_file(os.path.join(SCENARIOS, "case_a.toml"))
    log = scen.run()
    assert len(log) == 30001
    assert max(abs(x) for x in log.q[-1]) < 1e-3

    report = pfl.kpi(log.t, {"q4": log.joint(3)}, {"Fx": log.channel(0)})
    print("case A:", report)
    assert report["Fx"]["snr_db"] > 20.0

    short = pfl.Scenario(pfl.Controller(pfl.Model.planar(), "standard"), [0.2, 0.0], 20.0)
    planar = short.run()
    verdict = pfl.detect_limit_cycle(planar.t, planar.joint(0), 10.0)
    print("planar standard:", verdict)
    assert verdict[0] == "limit_cycle"

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "a.csv")
        log.write_csv(path)
        with open(path) as f:
            assert f.readline().startswith("t,q1")

    try:
        pfl.Scenario.from_toml("dt = 0.0\n")
    except pfl.PflError as e:
        print("rejected:", e)
    else:
        raise AssertionError("dt = 0 accepted")

    kick = pfl.Scenario.from_toml("duration = 2.0\ndq0 = [0.0, 0.0, 0.0, 0.0, 40.0]\n")
    try:
        kick.run()
    except pfl.RunAborted as e:
        assert 0.0 < e.args[1] < 2.0
    else:
        raise AssertionError("kick did not abort")

    assert math.isinf(pfl.snr([0.0] * 2000, 1e-3))
    print("smoke test passed")


if __name__ == "__main__":
    main()
