import json
import math

import numpy as np
import pytest

from lethargy_lab import (
    ConfigInvalid,
    DegreeExceedsGrid,
    NormedSpace,
    Subspace,
    distance,
)
from lethargy_lab.cli import main
from lethargy_lab.scenarios import (
    _chebyshev_columns,
    bundled_scenarios,
    demo_dense_chain,
    orthogonal_geometric_config,
    random_tilted_config,
    run_scenario,
    tilted_chain_config,
    validate_config,
)


def test_orthogonal_geometric_scenario_collapses():
    bundle = run_scenario(orthogonal_geometric_config(), seed=42)
    assert bundle["status"] == "pass"
    assert bundle["exit_code"] == 0
    assert bundle["tilde_a"]["value"] == pytest.approx(1.0, abs=1e-12)
    assert bundle["witness"]["method"] == "telescoping-exact"
    rows = bundle["sandwich"]["rows"]
    assert len(rows) == 12
    for row in rows:
        assert row["lower"] == pytest.approx(row["achieved"], abs=1e-9)
        assert row["upper"] == pytest.approx(row["lower"], abs=1e-15)


def test_tilted_scenario_constant_and_bounds():
    bundle = run_scenario(tilted_chain_config(), seed=42)
    assert bundle["status"] == "pass"
    assert bundle["tilde_a"]["value"] == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-9)
    for row in bundle["sandwich"]["rows"]:
        assert row["lower"] - 1e-9 <= row["achieved"] <= row["upper"] + 1e-9


def test_literal_mode_surfaces_stall_without_witness():
    bundle = run_scenario(orthogonal_geometric_config(), seed=42, mode="literal")
    assert bundle["status"] == "stalled"
    assert bundle["exit_code"] == 4
    assert bundle["plan"]["stalled"]
    assert "witness" not in bundle


def test_analyze_stage_reports_conditions():
    bundle = run_scenario(orthogonal_geometric_config(), seed=42, stage="analyze")
    conditions = bundle["conditions"]
    assert conditions["geometric_truncated"]["pass"]
    assert not conditions["geometric_idealized"]["pass"]  # ratio 1/2
    assert conditions["span_ratio"]["pass"]
    assert conditions["uniform_separation"]["positive"]
    # the geometric checks are informational; span-ratio gates the status
    assert bundle["status"] == "pass"


def test_plan_stage_stops_before_witness():
    bundle = run_scenario(orthogonal_geometric_config(), seed=42, stage="plan")
    assert "witness" not in bundle
    assert bundle["steps"]["z"][0] == 1
    assert all(ch["pass"] for ch in bundle["step_checks"])


def test_witness_stage_stops_before_sandwich(tmp_path):
    bundle = run_scenario(tilted_chain_config(), seed=42, stage="witness",
                          out_dir=tmp_path)
    assert bundle["status"] == "pass"
    assert bundle["witness"]["converged"]
    assert "sandwich" not in bundle
    assert (tmp_path / "tilted-chain.witness.json").exists()


def test_randomized_family_covers_requested_rows():
    for seed in (0, 5, 11):
        cfg = random_tilted_config(seed)
        bundle = run_scenario(cfg, seed=42)
        assert bundle["status"] == "pass"
        assert len(bundle["sandwich"]["rows"]) == cfg["d"]["N"]
        assert bundle["witness"]["method"] == "damped-iteration"


def test_run_is_deterministic(tmp_path):
    cfg = random_tilted_config(4)
    a_dir = tmp_path / "a"
    b_dir = tmp_path / "b"
    run_scenario(cfg, seed=42, out_dir=a_dir)
    run_scenario(cfg, seed=42, out_dir=b_dir)
    name = cfg["name"]
    assert (a_dir / f"{name}.json").read_bytes() == (b_dir / f"{name}.json").read_bytes()
    assert (a_dir / f"{name}.csv").read_bytes() == (b_dir / f"{name}.csv").read_bytes()


def test_config_validation_paths():
    with pytest.raises(ConfigInvalid) as excinfo:
        validate_config({"space": {"dim": 4, "p": 2}, "chain": {"type": "coordinate"},
                         "d": {"kind": "geometric", "N": 4}, "c": 1.0})
    assert excinfo.value.path == "d/ratio"

    with pytest.raises(ConfigInvalid):
        validate_config({"space": {"dim": 0, "p": 2}, "chain": {"type": "coordinate"},
                         "d": {"kind": "geometric", "ratio": 0.5, "N": 4}, "c": 1.0})

    with pytest.raises(ConfigInvalid) as excinfo:
        validate_config({"space": {"dim": 4, "p": 2}, "chain": {"type": "bases"},
                         "d": {"kind": "explicit", "values": [1.0, 0.5]}, "c": 1.0})
    assert excinfo.value.path == "chain/bases"

    cfg = orthogonal_geometric_config()
    cfg["c"] = 1.5
    with pytest.raises(ConfigInvalid):
        validate_config(cfg)


def test_witness_stage_requires_euclidean_norm():
    cfg = orthogonal_geometric_config(rows=4, dim=8)
    cfg["space"]["p"] = "inf"
    with pytest.raises(ConfigInvalid):
        run_scenario(cfg, stage="verify")
    # analyze still works for non-Euclidean norms (estimated profile)
    cfg["estimation"] = {"sphere_samples": 64}
    cfg["horizon_margin"] = 0
    bundle = run_scenario(cfg, stage="analyze")
    assert not bundle["profile"]["certified"]


def test_weighted_euclidean_scenario():
    cfg = {
        "name": "weighted-orthogonal",
        "space": {"dim": 12, "p": 2, "weights": [1.0 + 0.3 * i for i in range(12)]},
        "chain": {"type": "coordinate"},
        "d": {"kind": "geometric", "ratio": 0.5, "values": None, "N": 8},
        "c": 0.5,
    }
    bundle = run_scenario(cfg, seed=42)
    assert bundle["status"] == "pass"
    # weights keep the chain orthogonal in the scaled frame, so the damped
    # iteration starts exact and the sandwich still collapses
    assert bundle["witness"]["method"] == "damped-iteration"
    for row in bundle["sandwich"]["rows"]:
        assert abs(row["achieved"] - row["lower"]) <= 1e-9


def test_literal_mode_full_pipeline_on_tilted_chain():
    from lethargy_lab.scenarios import _tilted_frame

    dim = 14
    bases, staircase = _tilted_frame(dim, dim - 2, {k: 0.25 for k in range(1, dim - 2)})
    cfg = {
        "name": "literal-tilted",
        "space": {"dim": dim, "p": 2, "weights": None},
        "chain": {"type": "bases", "bases": bases, "staircase": staircase},
        "d": {"kind": "geometric", "ratio": 0.35, "values": None, "N": 6},
        "c": 1.0,
        "mode": "literal",
    }
    bundle = run_scenario(cfg, seed=42)
    assert bundle["status"] == "pass"
    assert bundle["plan"]["mode"] == "literal"
    assert not bundle["plan"]["stalled"]


def test_trailing_zero_errors_covered_exactly():
    cfg = {
        "name": "trailing-zero",
        "space": {"dim": 10, "p": 2, "weights": None},
        "chain": {"type": "coordinate"},
        "d": {"kind": "explicit", "ratio": None,
              "values": [1.0, 0.5, 0.25, 0.0, 0.0], "N": 5},
        "c": 1.0,
    }
    bundle = run_scenario(cfg, seed=42)
    assert bundle["status"] == "pass"
    rows = bundle["sandwich"]["rows"]
    assert len(rows) == 5
    assert rows[3]["achieved"] == pytest.approx(0.0, abs=1e-12)


def test_explicit_d_values_accepted():
    cfg = orthogonal_geometric_config()
    cfg["d"] = {"kind": "explicit", "values": [1.0, 0.5, 0.25, 0.1], "N": 4}
    bundle = run_scenario(cfg, seed=42)
    assert bundle["status"] == "pass"
    # explicit sequences cannot be extended: rows stop at the plan's coverage
    assert len(bundle["sandwich"]["rows"]) <= 4


def test_polynomial_grid_chain_type():
    cfg = {
        "name": "poly-grid-smoke",
        "space": {"dim": 17, "p": "inf", "weights": None},
        "chain": {"type": "polynomial-grid", "grid": 17, "max_degree": 4},
        "d": {"kind": "explicit", "values": [1.0, 0.5, 0.25, 0.1], "N": 4},
        "c": 1.0,
        "estimation": {"sphere_samples": 32},
    }
    bundle = run_scenario(cfg, stage="analyze")
    assert bundle["profile"]["certified"] is False
    assert len(bundle["profile"]["a"]) == 3


def test_demo_membership_of_polynomial_target():
    # a sampled quadratic lies in Y_3, so its distance vanishes from degree 3 on
    grid = 65
    columns = _chebyshev_columns(grid, 6)
    t = np.linspace(0.0, 1.0, grid)
    f = (2.0 * t - 1.0) ** 2
    space = NormedSpace(grid, math.inf)
    values = [distance(space, f, Subspace(columns[:, :n].T)).value
              for n in range(1, 7)]
    assert values[0] > 0.1
    for v in values[2:]:
        assert v <= 1e-9


def test_demo_small_grid_smoke(tmp_path):
    payload = demo_dense_chain(grid=65, degrees=5, target="step",
                               out_dir=tmp_path, fmt="both")
    assert (tmp_path / "demo-dense-step.csv").exists()
    assert (tmp_path / "demo-dense-step.json").exists()
    vals = [row["distance"] for row in payload["rows"]]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 0.3  # plateau from the jump


def test_demo_exp_decays_fast():
    # entire target: roughly factorial decay while the values stay above
    # the solver's numerical floor (deeper degrees flatten into roundoff)
    payload = demo_dense_chain(grid=65, degrees=6, target="exp")
    vals = [row["distance"] for row in payload["rows"]]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[0] > 0.5 and vals[-1] < 1e-5


def test_demo_rejects_degree_overflow():
    with pytest.raises(DegreeExceedsGrid):
        demo_dense_chain(grid=8, degrees=8)


def test_bundled_names():
    assert set(bundled_scenarios()) == {"orthogonal-geometric", "tilted-chain"}


def test_cli_exit_codes(tmp_path):
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text(json.dumps(orthogonal_geometric_config()))
    assert main(["verify", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "orthogonal-geometric.json").exists()
    assert (tmp_path / "orthogonal-geometric.csv").exists()

    assert main(["verify", "--config", str(cfg_path), "--mode", "literal"]) == 4
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == 3

    bad = orthogonal_geometric_config()
    bad["c"] = 2.0
    bad_path = tmp_path / "bad.json"
    bad_path.write_text(json.dumps(bad))
    assert main(["verify", "--config", str(bad_path)]) == 3

    assert main(["analyze", "--config", "tilted-chain"]) == 0
    assert main(["demo-dense", "--grid", "33", "--degrees", "4",
                 "--target", "step", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "demo-dense-step.csv").exists()
