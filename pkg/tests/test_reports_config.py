import json
import math

import pytest

from semipert.config import RunConfig, config_from_dict, load_config
from semipert.errors import ConfigError
from semipert.reports import CheckReport


def test_report_pass_fail_logic():
    rep = CheckReport("demo")
    rep.add("ok", 1e-13, 1e-12)
    rep.add("tight", 1.0, 1.0)
    assert rep.passed
    rep.add("broken", 2.0, 1.0)
    assert not rep.passed
    assert rep.worst().name == "broken"


def test_report_csv_schema(tmp_path):
    rep = CheckReport("demo")
    rep.add("alpha", 0.5, 1.0, n=2, t=0.25)
    rep.add("beta", 2.0, 1.0)
    text = rep.csv_text()
    lines = text.strip().split("\n")
    assert lines[0] == "name,n,t,residual,bound,pass"
    assert lines[1] == "alpha,2.0,0.25,0.5,1.0,true"
    # absent n and t render as empty cells
    assert lines[2] == "beta,,,2.0,1.0,false"
    out = tmp_path / "demo.csv"
    rep.save_csv(out)
    assert out.read_text() == text


def test_report_json_roundtrip(tmp_path):
    rep = CheckReport("demo", meta={"k": 3})
    rep.add("a", 0.1, 1.0)
    path = tmp_path / "demo.json"
    rep.save_json(path)
    data = json.loads(path.read_text())
    assert data["title"] == "demo"
    assert data["passed"] is True
    assert data["meta"] == {"k": 3}
    assert data["records"][0]["name"] == "a"


def test_default_config_is_valid():
    cfg = RunConfig()
    assert cfg.time_step == cfg.h_s
    g = cfg.grid()
    assert g.n_points == 1281
    phi = cfg.boundary_functional(g)
    assert phi.K == pytest.approx(math.sqrt(2.0))


def test_config_rejections():
    bad = [
        {"h_s": 0.3},                       # grid does not close
        {"h_t": 1.0 / 512.0},               # finer than h_s
        {"h_t": 0.3},                       # not a multiple of h_s
        {"t0": 2.0},                        # beyond b
        {"t0": 1.0 / 256.0},                # only one time step
        {"t_final": 0.123},                 # off the time grid
        {"p": 1.0},
        {"L": 0.5},
        {"tracked": (0,)},
        {"tracked": (1, 9)},                # beyond L
        {"kernel": "nonsense"},
        {"refine": 9},
        {"window_factor": 1.5},
        {"unknown_field": 1},
    ]
    for patch in bad:
        with pytest.raises(ConfigError):
            config_from_dict(patch)


def test_config_error_names_the_field():
    with pytest.raises(ConfigError) as err:
        config_from_dict({"p": 0.5})
    assert "p" in str(err.value)


def test_scaled_halves_both_steps():
    cfg = RunConfig(h_s=1.0 / 64.0, h_t=1.0 / 16.0)
    fine = cfg.scaled(2)
    assert fine.h_s == pytest.approx(1.0 / 256.0)
    assert fine.time_step == pytest.approx(1.0 / 64.0)


def test_load_config_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"t0": 0.25, "seed": 7}))
    cfg = load_config(path, {"seed": 9, "threshold": None})
    assert cfg.t0 == 0.25
    assert cfg.seed == 9
    assert cfg.threshold == RunConfig().threshold


def test_load_config_bad_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("not json at all")
    with pytest.raises(ConfigError):
        load_config(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(arr)


def test_kernel_file_roundtrip_through_config(tmp_path):
    cfg = RunConfig()
    grid = cfg.grid()
    phi = cfg.boundary_functional(grid)
    csv = tmp_path / "kernel.csv"
    phi.save_csv(csv)
    cfg2 = config_from_dict({"kernel": str(csv)})
    phi2 = cfg2.boundary_functional(grid)
    assert phi2.K == pytest.approx(phi.K, rel=1e-14)
