import warnings

import numpy as np
import pytest

from nnsph.cli import run_cli
from nnsph.scene import build_world, load_scene, shipped_scenes

RUNNABLE = [n for n in shipped_scenes() if n != "cow"]


@pytest.mark.parametrize("name", shipped_scenes())
def test_shipped_scene_validates(name, capsys):
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", "herschel_bulkley")
        assert run_cli(["validate", name]) == 0
    assert ": ok (" in capsys.readouterr().out


@pytest.mark.slow
@pytest.mark.filterwarnings("ignore:herschel_bulkley")
@pytest.mark.parametrize("name", RUNNABLE)
def test_shipped_scene_runs_ten_frames(name):
    cfg = load_scene(name)
    w = build_world(cfg)
    n = w.n
    for _ in range(10):
        w.advance_frame(cfg.output.frame_interval)
    assert w.frame == w.last_good_frame == 10
    assert w.time == pytest.approx(10 * cfg.output.frame_interval, abs=1e-12)
    assert w.n == n
    assert np.isfinite(w.x).all() and np.isfinite(w.v).all()
    rows = w.diagnostics
    assert all(0 < r["dt"] <= cfg.solver.dt_max for r in rows)
    assert max(r["density_err"] for r in rows) < 0.05
