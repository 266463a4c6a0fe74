import json
import math
import os
import pathlib

import numpy as np
import pytest

import mmdp

ROOT = pathlib.Path(os.environ.get("MMDP_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


def chain3():
    rows = [(0, 0, 1, 1.0, 1.0, 0.9), (1, 0, 0, 0.5, 1.0, 0.9), (1, 0, 2, 0.5, 1.0, 0.9), (2, 0, 2, 1.0, 0.0, 0.9)]
    return mmdp.Mdp(3, 1, rows, terminal=[False, False, True])


def test_value_determination_matches_numpy_solve():
    m = chain3()
    v = mmdp.value_determination(m, np.ones((3, 1)))
    p = np.array([[0, 1, 0], [0.5, 0, 0.5], [0, 0, 0]])
    r = np.array([1.0, 1.0, 0.0])
    expected = np.linalg.solve(np.eye(3) - 0.9 * p, r)
    assert np.allclose(v, expected, atol=1e-12)


def test_json_round_trip():
    m = chain3()
    assert mmdp.Mdp.from_json(m.to_json()) == m
    with pytest.raises(mmdp.ParseError):
        mmdp.Mdp.from_json(m.to_json()[:40])


def test_bad_rows_raise():
    with pytest.raises(ValueError):
        mmdp.Mdp(2, 1, [(0, 0, 1, 0.4, 0.0, 0.9), (1, 0, 1, 1.0, 0.0, 0.9)])


def test_four_room_multiscale_matches_flat():
    m = mmdp.build_domain({"type": "grid", "preset": "four-room"})
    v_star, actions, _ = mmdp.policy_iteration(m)
    assert len(actions) == m.n_states
    h = mmdp.build_hierarchy(m, max_conductance=0.05, max_depth=3)
    assert h.n_mdps == 2
    assert len(h.clusters(0)) == 4
    out = mmdp.solve_hierarchy(h, "cc", reference=v_star)
    assert np.max(np.abs(out["values"] - v_star)) <= 1e-6
    assert all(out["converged"])
    trace = out["trace"]
    assert trace["iter"][0] == 1
    assert not math.isnan(trace["linf_error"][-1])


def test_auto_boundary_updates():
    assert mmdp.auto_boundary_updates(0.9) == 7


def test_playroom_self_transfer_is_accepted():
    m = mmdp.build_domain({"type": "playroom", "variant": "default"})
    h = mmdp.build_hierarchy(m, max_depth=1, pool="diffusion")
    pairs = mmdp.transfer(h, h, mode="policy", correspondence="identity")
    assert pairs and all(p["T"] >= 0 for p in pairs)
    assert any(p["mode"] == "policy" for p in pairs)


def test_run_experiment(tmp_path):
    cfg = json.loads((ROOT / "configs" / "four_room.json").read_text())
    cfg["variants"] = ["cc"]
    manifest = pathlib.Path(mmdp.run_experiment(cfg, tmp_path))
    files = json.loads(manifest.read_text())["files"]
    assert "trace_cc" in files
    assert (tmp_path / files["summary"]).read_text().startswith("variant,")
