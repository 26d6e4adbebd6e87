import json
import math
import os

import numpy as np
import pytest

from flks.cli import (
    apply_overrides,
    build_model,
    emit_plot_script,
    export_csv,
    import_csv,
    main,
    parse_config,
)
from flks.core import ConstantDecay, FieldPair, Grid1D, ModelParams
from flks.errors import IoError, ParseError, ValidationError
from flks.limiters import TanhLimiter
from flks.pde_solver import SolverConfig, run

MINIMAL = """
[model]
D = 0.8
tau = 0.1
[limiter]
kind = tanh
v_max = 1.1
s0 = 1.4
[decay]
kind = constant
kappa0 = 0.5
[grid]
x_lo = -2.0
x_hi = 2.0
n = 32
[solver]
t_end = 0.05
output_stride = 10
[initial]
kind = uniform
u0 = 1.0
v0 = 0.0
"""

FIG1 = """
[model]
D = 0.8
tau = 0.1
[limiter]
kind = tanh
v_max = 1.1
s0 = 1.4
[decay]
kind = constant
kappa0 = 0.5
[exact]
family = case2_travelling_tanh
alpha = 1.1
U_ref = 1.0
y0 = 0.0
"""


def test_parse_minimal_and_defaults():
    cfg = parse_config(MINIMAL, command="simulate")
    assert cfg.command == "simulate"
    assert cfg.get("model", "D") == 0.8
    assert cfg.get("solver", "bc") == "neumann"  # default filled
    assert cfg.get("run", "seed") == 0


def test_parse_fig1_parameters():
    cfg = parse_config(FIG1, command="exact")
    p = build_model(cfg)
    assert p.D == 0.8 and p.tau == 0.1
    assert isinstance(p.limiter, TanhLimiter)
    assert p.limiter.v_max == 1.1 and p.limiter.s0 == 1.4
    assert isinstance(p.decay, ConstantDecay) and p.decay.kappa0 == 0.5
    assert cfg.get("exact", "alpha") == 1.1


def test_parse_rejects_unknown_keys():
    with pytest.raises(ValidationError):
        parse_config(MINIMAL + "\n[model]\nDD = 1.0\n")
    with pytest.raises(ValidationError):
        parse_config(MINIMAL + "\n[nonsense]\nx = 1\n")


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as exc:
        parse_config("[model]\nD 0.8\n")
    assert exc.value.line == 2


def test_negative_kappa0_needs_override_key():
    bad = MINIMAL.replace("kappa0 = 0.5", "kappa0 = -1.0")
    with pytest.raises(ValidationError):
        parse_config(bad)
    ok = bad.replace("kind = constant", "kind = constant\nallow_negative = true")
    cfg = parse_config(ok)
    assert cfg.get("decay", "kappa0") == -1.0


def test_config_roundtrips_to_canonical_form():
    cfg = parse_config(MINIMAL, command="simulate")
    text = cfg.canonical_text()
    cfg2 = parse_config(text, command="simulate")
    assert cfg2.sections == cfg.sections
    assert cfg2.canonical_text() == text


def test_overrides():
    cfg = parse_config(MINIMAL, command="simulate")
    apply_overrides(cfg, ["model.D=1.5", "solver.t_end=0.1"])
    assert cfg.get("model", "D") == 1.5
    with pytest.raises(ValidationError):
        apply_overrides(cfg, ["model.bogus=1"])
    with pytest.raises(ValidationError):
        apply_overrides(cfg, ["no_dots"])


def test_export_import_roundtrip_full_precision(tmp_path):
    p = ModelParams(D=0.8, tau=0.1, limiter=TanhLimiter(1.1, 1.4), decay=ConstantDecay(0.5))
    grid = Grid1D(0.0, 1.0, 8)
    cfg = SolverConfig(grid=grid, t_end=0.02, output_stride=10)
    rng = np.random.default_rng(0)
    traj = run(FieldPair(1.0 + 0.1 * rng.random(9), rng.random(9), 0.0), p, cfg)
    path = tmp_path / "traj.csv"
    export_csv(traj, str(path), meta={"hello": "world"})
    meta, cols = import_csv(str(path))
    assert meta["hello"] == "world"
    n_frames = traj.times.size
    assert cols["t"].size == n_frames * 9
    # losslessness: 17 significant digits round-trip doubles exactly
    np.testing.assert_array_equal(cols["u"], traj.us.ravel())
    np.testing.assert_array_equal(cols["v"], traj.vs.ravel())


def test_export_empty_trajectory_header_only(tmp_path):
    # zero-length horizon: a single frame is the degenerate case
    report = {}
    path = tmp_path / "empty.csv"
    export_csv(report, str(path))
    meta, cols = import_csv(str(path))
    assert meta["kind"] == "report"
    assert set(cols) == {"key", "value"}
    assert all(v.size == 0 for v in cols.values())


def test_emit_plot_script_requires_csv(tmp_path):
    with pytest.raises(IoError):
        emit_plot_script("trajectory", str(tmp_path / "missing.csv"), str(tmp_path / "p.py"))


def test_emit_plot_script_kinds(tmp_path):
    csv = tmp_path / "thing.csv"
    csv.write_text('# {"kind": "report"}\nkey,value\na,1\n')
    out = emit_plot_script("report", str(csv), str(tmp_path / "plot.py"))
    text = open(out).read()
    assert "barh" in text
    out2 = emit_plot_script("trajectory", str(csv), str(tmp_path / "plot2.py"))
    assert "pcolormesh" in open(out2).read()


def test_main_simulate_and_determinism(tmp_path):
    cfg_path = tmp_path / "cfg.ini"
    cfg_path.write_text(MINIMAL)
    out1 = tmp_path / "o1"
    out2 = tmp_path / "o2"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out2)]) == 0
    b1 = (out1 / "trajectory.csv").read_bytes()
    b2 = (out2 / "trajectory.csv").read_bytes()
    assert b1 == b2


def test_main_exit_codes(tmp_path):
    cfg_path = tmp_path / "cfg.ini"
    cfg_path.write_text(MINIMAL + "\n[model]\nbogus = 1\n")
    assert main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 2
    assert main(["simulate", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path / "o")]) == 4


def test_main_lie_command(tmp_path):
    cfg_path = tmp_path / "cfg.ini"
    cfg_path.write_text(MINIMAL)
    out = tmp_path / "lie"
    assert main(["lie", "--config", str(cfg_path), "--out", str(out)]) == 0
    payload = json.loads((out / "lie_report.json").read_text())
    assert all(rep["all_ok"] for rep in payload["optimal_systems"].values())


def test_main_verify_command(tmp_path):
    cfg_path = tmp_path / "cfg.ini"
    cfg_path.write_text(MINIMAL)
    out = tmp_path / "ver"
    assert main(["verify", "--config", str(cfg_path), "--out", str(out)]) == 0
    rep = json.loads((out / "residual_report.json").read_text())
    assert rep["sup_norm"] < 1e-8


def test_main_reduce_self_similar(tmp_path):
    cfg = MINIMAL.replace("kind = tanh\nv_max = 1.1\ns0 = 1.4",
                          "kind = tanh_log\nv_max = 1.1\na = 0.51")
    cfg = cfg.replace("kind = constant\nkappa0 = 0.5", "kind = power_law\nmu = 0.5")
    cfg += "\n[reduce]\nkind = self_similar\nn = 600\n"
    cfg_path = tmp_path / "cfg.ini"
    cfg_path.write_text(cfg)
    out = tmp_path / "red"
    assert main(["reduce", "--config", str(cfg_path), "--out", str(out)]) == 0
    meta, cols = import_csv(str(out / "reduce_self_similar.csv"))
    assert meta["converged"] is True
    assert cols["xi"].size == 601


def test_main_sweep(tmp_path):
    cfg = MINIMAL + "\n[sweep]\nsection = decay\nkey = kappa0\nvalues = 0.4,0.6\ncommand = simulate\n"
    cfg_path = tmp_path / "cfg.ini"
    cfg_path.write_text(cfg)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(cfg_path), "--out", str(out)]) == 0
    subdirs = sorted(os.listdir(out))
    assert len(subdirs) == 2
    for sub in subdirs:
        assert (out / sub / "trajectory.csv").exists()


def test_emitted_plot_script_runs(tmp_path):
    # the generated script must execute standalone against its CSV
    import subprocess
    import sys

    cfg_path = tmp_path / "cfg.ini"
    cfg_path.write_text(MINIMAL)
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out)]) == 0
    script = out / "plot_trajectory.py"
    proc = subprocess.run(
        [sys.executable, str(script)], capture_output=True, text=True, cwd=str(out)
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "trajectory.png").exists()
