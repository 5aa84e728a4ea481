"""Smoke test for the pyexosim extension.

Build first:  pip install --no-build-isolation -e crates/py
Run:          python python/smoke_test.py
"""

import math
import os
import sys
import tempfile

import pyexosim


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    human, exo = pyexosim.static_grf()
    assert close(human, 646.5, 0.05) and close(exo, 872.1, 0.05), (human, exo)

    res = pyexosim.run(controller="passive", dt=0.005, cycles=1)
    assert len(res) == 138, len(res)
    assert res.columns[:5] == ["time", "gait_pct", "grf_x", "grf_y", "grf_z"]
    grf = res.column("grf_y")
    assert all(math.isfinite(v) for v in grf)
    assert close(max(grf), res.summary["peak_grf_vertical"], 1e-9)
    try:
        res.column("nope")
        raise AssertionError("missing column accepted")
    except ValueError:
        pass

    try:
        pyexosim.run(scenario="dt = -1.0\n")
        raise AssertionError("bad dt accepted")
    except ValueError as e:
        assert "dt" in str(e)

    cmp = pyexosim.compare(cases=["none", "passive", "mac"], dt=0.005, cycles=1)
    assert set(cmp) == {"none", "passive", "mac"}
    assert cmp["passive"]["peak_grf_vertical.pct_vs_none"] > 0.0
    assert cmp["mac"]["peak_knee_extension.pct_vs_passive"] < 0.0

    checks = pyexosim.validate(seed=3, quick=True)
    assert checks and all(c.passed for c in checks), [c for c in checks if not c.passed]
    bad = pyexosim.validate(quick=True, flip_exo_strap="tibia-R")
    failed = [c for c in bad if not c.passed]
    assert len(failed) == 1 and "tibia-R" in failed[0].detail, failed

    p = pyexosim.strap_pressure([838.0] + [0.0] * 11)
    assert close(p[0] / 1000.0, 41.9, 0.1), p

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "gait.csv")
        period = pyexosim.synth_gait(path)
        assert os.path.isfile(path) and 0.3 < period <= 1.2, period
        res = pyexosim.run(
            scenario=f'trajectory = "{path}"\ncontroller = "mic"\ndt = 0.005\ncycles = 1\n'
        )
        assert res.controller == "mic" and len(res) > 0

    print("pyexosim smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
