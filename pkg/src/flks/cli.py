"""Config-driven command line front end.

Commands: simulate | exact | reduce | verify | lie | sweep, each taking a
sectioned key=value config file, an output directory and optional
--override section.key=value pairs.  Exit codes: 0 success, 2 config error,
3 numerical failure (diagnostic report still written), 4 I/O error.

Every CSV starts with '# ' JSON header lines carrying the canonical config
echo, so any output can be re-run from its own metadata.  Floats are printed
with 17 significant digits, which round-trips double precision losslessly.
"""

import argparse
import concurrent.futures
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import exact_solutions, lie_toolkit, pde_solver, reduced_systems, verify
from .core import (
    ConstantDecay,
    ExponentialDecay,
    FieldPair,
    Grid1D,
    ModelParams,
    PowerLawDecay,
    TabulatedDecay,
)
from .errors import FlksError, IoError, ParseError, ValidationError
from .limiters import limiter_from_config
from .quadrature import d1_uniform

# schema: section -> key -> converter; unknown keys are hard errors
_BOOL = {"true": True, "false": False}


def _as_bool(s):
    try:
        return _BOOL[s.lower()]
    except KeyError:
        raise ValueError(f"expected true/false, got {s!r}") from None


def _as_floats(s):
    return tuple(float(p) for p in s.split(",") if p.strip())


_SCHEMA = {
    "run": {"seed": int, "command": str},
    "model": {"D": float, "tau": float},
    "limiter": {"kind": str, "v_max": float, "s0": float, "a": float},
    "decay": {
        "kind": str,
        "kappa0": float,
        "mu": float,
        "lambda": float,
        "times": _as_floats,
        "values": _as_floats,
        "allow_negative": _as_bool,
    },
    "grid": {"x_lo": float, "x_hi": float, "n": int},
    "solver": {
        "bc": str,
        "cfl_safety": float,
        "t_end": float,
        "output_stride": int,
    },
    "initial": {
        "kind": str,
        "u0": float,
        "v0": float,
        "amplitude": float,
        "center": float,
        "width": float,
        "noise": float,
    },
    "exact": {
        "family": str,
        "C": float,
        "V0": float,
        "t0": float,
        "alpha": float,
        "A": float,
        "B": float,
        "U_ref": float,
        "y0": float,
        "C1": float,
        "window_lo": float,
        "window_hi": float,
        "n": int,
        "t_samples": _as_floats,
        "s_guess_amplitude": float,
        "s_guess_rate": float,
    },
    "reduce": {
        "kind": str,
        "t_end": float,
        "h": float,
        "n": int,
        "xi_max": float,
        "U0": float,
        "V0": float,
        "dU0": float,
        "s0": float,
        "C1": float,
        "alpha": float,
        "y_lo": float,
        "y_hi": float,
    },
    "verify": {"family": str, "t_samples": _as_floats, "ht": float},
    "sweep": {"section": str, "key": str, "values": _as_floats, "command": str},
}

_DEFAULTS = {
    "run": {"seed": 0},
    "model": {"D": 1.0, "tau": 1.0},
    "limiter": {"kind": "tanh"},
    "decay": {"kind": "constant", "kappa0": 1.0},
    "grid": {"x_lo": -5.0, "x_hi": 5.0, "n": 64},
    "solver": {"bc": "neumann", "cfl_safety": 0.4, "t_end": 1.0, "output_stride": 20},
    "initial": {"kind": "uniform", "u0": 1.0, "v0": 0.0},
}

# materialized only when the config leaves the limiter parameters out
_LIMITER_PARAM_DEFAULTS = {
    "tanh": {"v_max": 1.0, "s0": 1.0},
    "algebraic_sqrt": {"v_max": 1.0},
    "weber_fechner_log": {"v_max": 1.0, "s0": 1.0},
    "tanh_log": {"v_max": 1.0, "a": 1.0},
}


@dataclass
class RunConfig:
    """Parsed, validated configuration; sections hold converted values."""

    command: str
    sections: dict

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def canonical_text(self):
        lines = []
        for section in sorted(self.sections):
            body = self.sections[section]
            if not body:
                continue
            lines.append(f"[{section}]")
            for key in sorted(body):
                lines.append(f"{key} = {_format_value(body[key])}")
            lines.append("")
        return "\n".join(lines)


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, tuple):
        return ",".join(format(float(x), ".17g") for x in v)
    return str(v)


def parse_config(text, command=None):
    """Parse sectioned key=value text into a validated RunConfig.

    Unknown sections or keys raise errors naming the offending line; there
    are no silent defaults for misspellings.
    """
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("unterminated section header", line=lineno)
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                raise ValidationError(f"unknown section [{name}] at line {lineno}")
            current = name
            sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ParseError("expected key = value", line=lineno, column=1)
        if current is None:
            raise ParseError("key outside any section", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        schema = _SCHEMA[current]
        if key not in schema:
            raise ValidationError(
                f"unknown key {key!r} in section [{current}] at line {lineno}"
            )
        try:
            sections[current][key] = schema[key](value)
        except ValueError as exc:
            raise ParseError(f"bad value for {key}: {exc}", line=lineno)

    merged = {}
    for section, defaults in _DEFAULTS.items():
        merged[section] = dict(defaults)
    for section, body in sections.items():
        merged.setdefault(section, {}).update(body)

    cmd = command or merged.get("run", {}).get("command", "simulate")
    cfg = RunConfig(command=cmd, sections=merged)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg):
    decay = cfg.sections.get("decay", {})
    if decay.get("kind") == "constant" and decay.get("kappa0", 1.0) < 0.0:
        if not decay.get("allow_negative", False):
            raise ValidationError(
                "negative kappa0 is admitted mathematically but flagged; "
                "set decay.allow_negative = true to override"
            )
    grid = cfg.sections.get("grid", {})
    if grid and grid.get("x_lo", 0.0) >= grid.get("x_hi", 1.0):
        raise ValidationError("grid needs x_lo < x_hi")


def apply_overrides(cfg, overrides):
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValidationError(f"override must look like section.key=value, got {item!r}")
        dotted, value = item.split("=", 1)
        section, key = dotted.split(".", 1)
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ValidationError(f"unknown override target {dotted!r}")
        cfg.sections.setdefault(section, {})[key] = _SCHEMA[section][key](value.strip())
    _validate_config(cfg)
    return cfg


def build_decay(cfg):
    d = cfg.sections["decay"]
    kind = d.get("kind", "constant")
    if kind == "constant":
        return ConstantDecay(d["kappa0"])
    if kind == "power_law":
        return PowerLawDecay(d["mu"])
    if kind == "exponential":
        return ExponentialDecay(d["kappa0"], d["lambda"])
    if kind == "tabulated":
        return TabulatedDecay(d["times"], d["values"])
    raise ValidationError(f"unknown decay kind {kind!r}")


def build_limiter(cfg):
    lim = dict(cfg.sections["limiter"])
    kind = lim.pop("kind", "tanh")
    if not lim:
        lim = dict(_LIMITER_PARAM_DEFAULTS.get(kind, {}))
    return limiter_from_config(kind, **lim)


def build_model(cfg):
    m = cfg.sections["model"]
    return ModelParams(
        D=m["D"], tau=m["tau"], limiter=build_limiter(cfg), decay=build_decay(cfg)
    )


def build_grid(cfg):
    g = cfg.sections["grid"]
    return Grid1D(g["x_lo"], g["x_hi"], g["n"])


def build_initial(cfg, grid):
    ini = cfg.sections["initial"]
    x = grid.nodes()
    kind = ini.get("kind", "uniform")
    u0 = ini.get("u0", 1.0)
    v0 = ini.get("v0", 0.0)
    if kind == "uniform":
        u = np.full_like(x, u0)
    elif kind == "gaussian":
        amp = ini.get("amplitude", 1.0)
        c = ini.get("center", 0.5 * (grid.x_lo + grid.x_hi))
        w = ini.get("width", 1.0)
        u = u0 + amp * np.exp(-((x - c) ** 2) / (2.0 * w * w))
    elif kind == "noise":
        rng = np.random.default_rng(cfg.get("run", "seed", 0))
        u = u0 + ini.get("noise", 1e-2) * rng.standard_normal(x.size)
    else:
        raise ValidationError(f"unknown initial kind {kind!r}")
    t0 = 1.0 if cfg.sections["decay"].get("kind") == "power_law" else 0.0
    return FieldPair(u, np.full_like(x, v0), t0)


# ---------------------------------------------------------------------------
# CSV export / import
# ---------------------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def export_csv(result, path, meta=None):
    """Write a result as CSV with a JSON metadata header comment block.

    Column layout per result kind: trajectories go long-format (t, x, u, v),
    profile results carry their abscissa plus profile columns, and report
    dicts flatten to key,value rows.
    """
    meta = dict(meta or {})
    rows = []
    if isinstance(result, pde_solver.Trajectory):
        header = ["t", "x", "u", "v"]
        x = result.grid.nodes()
        for k in range(result.times.size):
            t = result.times[k]
            for j in range(x.size):
                rows.append((t, x[j], result.us[k, j], result.vs[k, j]))
        meta.setdefault("kind", "trajectory")
        meta.setdefault("mass_ledger", [float(m) for m in result.mass])
        meta.setdefault("min_u", [float(m) for m in result.min_u])
        meta.setdefault("solver", result.metadata)
    elif isinstance(result, reduced_systems.SelfSimilarResult):
        header = ["xi", "U", "V", "S"]
        rows = list(zip(result.xi, result.U, result.V, result.S))
        meta.setdefault("kind", "profiles")
        meta.setdefault("defects", {
            "u": result.defect_u, "v": result.defect_v, "s_form": result.s_form_defect,
        })
        meta.setdefault("converged", result.converged)
        meta.setdefault("residual_history", [float(r) for r in result.residual_history])
        meta.setdefault("metadata", result.metadata)
    elif isinstance(result, exact_solutions.TravellingWaveSolution):
        header = ["y", "U", "V", "s"]
        rows = list(zip(result.y, result.U, result.V, result.s))
        meta.setdefault("kind", "profiles")
        meta.setdefault("params", result.params)
        meta.setdefault("residual_history", [float(r) for r in result.residual_history])
    elif isinstance(result, reduced_systems.HomogeneousResult):
        header = ["t", "U", "V"]
        rows = list(zip(result.ts, result.U, result.V))
        meta.setdefault("kind", "profiles")
    elif isinstance(result, reduced_systems.SteadyStateResult):
        header = ["x", "U", "V"]
        rows = list(zip(result.x, result.U, result.V))
        meta.setdefault("kind", "profiles")
        meta.setdefault("defect", result.defect)
    elif isinstance(result, reduced_systems.TravellingWaveResult):
        header = ["y", "U", "dU", "V", "s"]
        rows = list(zip(result.y, result.U, result.dU, result.V, result.s))
        meta.setdefault("kind", "profiles")
    elif isinstance(result, dict):
        header = ["key", "value"]
        rows = [(k, v) for k, v in sorted(result.items())]
        meta.setdefault("kind", "report")
    elif isinstance(result, np.ndarray) and result.ndim == 2:
        header = [f"c{i}" for i in range(result.shape[1])]
        rows = [tuple(r) for r in result]
        meta.setdefault("kind", "table")
    else:
        raise ValidationError(f"no CSV layout for {type(result).__name__}")

    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("# " + json.dumps(meta, sort_keys=True, default=str) + "\n")
            f.write(",".join(header) + "\n")
            for row in rows:
                f.write(
                    ",".join(_fmt(c) if isinstance(c, (int, float, np.floating)) else str(c) for c in row)
                    + "\n"
                )
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def import_csv(path):
    """Read back an exported CSV: (metadata dict, column-name -> array)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    meta = {}
    idx = 0
    while idx < len(lines) and lines[idx].startswith("#"):
        meta.update(json.loads(lines[idx][1:].strip()))
        idx += 1
    header = lines[idx].split(",")
    cols = {h: [] for h in header}
    for line in lines[idx + 1 :]:
        if not line:
            continue
        for h, val in zip(header, line.split(",")):
            cols[h].append(val)
    out = {}
    for h, vals in cols.items():
        try:
            out[h] = np.asarray([float(v) for v in vals])
        except ValueError:
            out[h] = np.asarray(vals)
    return meta, out


_PLOT_TEMPLATE = '''"""Auto-generated plotting script; needs matplotlib."""
import json

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

CSV = {csv_path!r}

with open(CSV) as f:
    lines = f.read().splitlines()
meta = json.loads(lines[0][1:])
header = lines[1].split(",")
data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln])
cols = {{h: data[:, i] for i, h in enumerate(header)}}

{body}
plt.tight_layout()
plt.savefig({png_path!r}, dpi=150)
print("wrote", {png_path!r})
'''

_TRAJ_BODY = '''ts = np.unique(cols["t"])
xs = np.unique(cols["x"])
U = cols["u"].reshape(ts.size, xs.size)
x_slice = {x_slice}
j = int(np.argmin(np.abs(xs - x_slice)))
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
ax1.plot(ts, U[:, j])
ax1.set_xlabel("t")
ax1.set_ylabel("u")
ax1.set_title(f"cell density at x = {{xs[j]:.3g}}")
pc = ax2.pcolormesh(xs, ts, U, shading="auto")
fig.colorbar(pc, ax=ax2, label="u")
ax2.set_xlabel("x")
ax2.set_ylabel("t")
ax2.set_title("u(x, t)")
'''

_PROFILE_BODY = '''fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
ab = header[0]
ax1.plot(cols[ab], cols[header[1]])
ax1.set_xlabel(ab)
ax1.set_ylabel(header[1])
ax1.set_title(header[1] + " profile")
for name in header[2:]:
    ax2.plot(cols[ab], cols[name], label=name)
ax2.set_xlabel(ab)
ax2.legend()
ax2.set_title("companion profiles")
'''

_REPORT_BODY = '''fig, ax = plt.subplots(figsize=(7, 4))
keys = [str(k) for k in cols[header[0]]]
vals = [float(v) for v in cols[header[1]]]
ax.barh(keys, vals)
ax.set_xlabel(header[1])
ax.set_title("report")
'''


def emit_plot_script(kind, csv_path, out_path, x_slice=0.7):
    """Write a standalone two-panel (or bar) matplotlib script for a CSV."""
    if not os.path.exists(csv_path):
        raise IoError(f"CSV not found: {csv_path}")
    if kind == "trajectory":
        body = _TRAJ_BODY.format(x_slice=x_slice)
    elif kind == "profiles":
        body = _PROFILE_BODY
    elif kind == "report":
        body = _REPORT_BODY
    else:
        raise ValidationError(f"unknown plot kind {kind!r}")
    png = os.path.splitext(csv_path)[0] + ".png"
    text = _PLOT_TEMPLATE.format(csv_path=csv_path, body=body, png_path=png)
    try:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {out_path}: {exc}") from exc
    return out_path


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _meta_for(cfg):
    return {"config": cfg.sections, "command": cfg.command}


def cmd_simulate(cfg, outdir):
    params = build_model(cfg)
    grid = build_grid(cfg)
    s = cfg.sections["solver"]
    config = pde_solver.SolverConfig(
        grid=grid,
        t_end=s["t_end"],
        bc=s.get("bc", "neumann"),
        cfl_safety=s.get("cfl_safety", 0.4),
        output_stride=s.get("output_stride", 20),
    )
    traj = pde_solver.run(build_initial(cfg, grid), params, config)
    csv_path = os.path.join(outdir, "trajectory.csv")
    export_csv(traj, csv_path, meta=_meta_for(cfg))
    emit_plot_script("trajectory", csv_path, os.path.join(outdir, "plot_trajectory.py"))
    return {"frames": int(traj.times.size), "steps": traj.steps_taken,
            "mass_drift": float(abs(traj.mass[-1] - traj.mass[0]))}


def cmd_exact(cfg, outdir):
    params = build_model(cfg)
    e = cfg.sections.get("exact", {})
    family = e.get("family", "case1_homogeneous")
    meta = _meta_for(cfg)
    if family == "case1_homogeneous":
        sol = exact_solutions.case1_homogeneous(
            params, C=e.get("C", 1.0), V0=e.get("V0", 0.0), t0=e.get("t0", 0.0)
        )
    elif family == "case3_homogeneous":
        sol = exact_solutions.case3_homogeneous(
            params.decay.mu, params.tau, C=e.get("C", 1.0), V0=e.get("V0", 0.0),
            t0=e.get("t0", 1.0),
        )
    elif family == "case4_homogeneous":
        sol = exact_solutions.case4_homogeneous(
            params.decay.kappa0, params.decay.lam, params.tau,
            C=e.get("C", 1.0), V0=e.get("V0", 0.0), t0=e.get("t0", 0.0),
        )
    elif family == "case2_travelling_tanh":
        s_profile = None
        if "s_guess_amplitude" in e:
            amp = e["s_guess_amplitude"]
            rate = e.get("s_guess_rate", 0.2)
            s_profile = lambda y: amp * math.exp(-rate * y * y)
        sol = exact_solutions.case2_travelling_tanh(
            params,
            alpha=e.get("alpha", 1.1),
            s_profile=s_profile,
            C1=e.get("C1", 0.0),
            U_ref=e.get("U_ref", 1.0),
            y0=e.get("y0", 0.0),
            window=(e.get("window_lo", -40.0), e.get("window_hi", 40.0)),
            n=e.get("n", 16384),
        )
        csv_path = os.path.join(outdir, f"{family}.csv")
        export_csv(sol, csv_path, meta=meta)
        emit_plot_script("profiles", csv_path, os.path.join(outdir, "plot_profiles.py"))
        return {"family": family, "converged": sol.converged,
                "iterations": len(sol.residual_history)}
    elif family == "case4_cellfree_front":
        sol = exact_solutions.case4_cellfree_front(
            alpha=e.get("alpha", 1.1), tau=params.tau, kappa0=params.decay.kappa0,
            lam=params.decay.lam, A=e.get("A", 1.0), B=e.get("B", 0.0),
        )
    else:
        raise ValidationError(f"unknown exact family {family!r}")

    # sample homogeneous / front families on the grid at the requested times
    grid = build_grid(cfg)
    ts = e.get("t_samples", (0.5, 1.0, 2.0))
    x = grid.nodes()
    rows = []
    for t in ts:
        u = np.broadcast_to(np.asarray(sol.eval_u(x, t), dtype=float), x.shape)
        v = np.broadcast_to(np.asarray(sol.eval_v(x, t), dtype=float), x.shape)
        for j in range(x.size):
            rows.append((t, x[j], u[j], v[j]))
    table = np.asarray(rows)
    csv_path = os.path.join(outdir, f"{family}.csv")
    meta["kind"] = "trajectory"
    meta["params"] = {k: str(v) for k, v in sol.params.items()}
    meta["assumptions"] = list(sol.assumptions)
    try:
        with open(csv_path, "w", encoding="utf-8", newline="\n") as f:
            f.write("# " + json.dumps(meta, sort_keys=True, default=str) + "\n")
            f.write("t,x,u,v\n")
            for row in table:
                f.write(",".join(_fmt(c) for c in row) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {csv_path}: {exc}") from exc
    emit_plot_script("trajectory", csv_path, os.path.join(outdir, "plot_trajectory.py"))
    return {"family": family, "samples": len(rows)}


def cmd_reduce(cfg, outdir):
    params = build_model(cfg)
    r = cfg.sections.get("reduce", {})
    kind = r.get("kind", "homogeneous")
    meta = _meta_for(cfg)
    if kind == "homogeneous":
        t0 = 1.0 if cfg.sections["decay"].get("kind") == "power_law" else 0.0
        prob = reduced_systems.ReducedProblem(
            "homogeneous", params, domain=(t0, t0 + r.get("t_end", 5.0)),
            data={"U0": r.get("U0", 1.0), "V0": r.get("V0", 0.0)},
        )
        res = reduced_systems.integrate_homogeneous(prob, h=r.get("h", 1e-3))
    elif kind == "steady_state":
        grid = cfg.sections["grid"]
        prob = reduced_systems.ReducedProblem(
            "steady_state", params,
            constants={"kappa0": cfg.sections["decay"].get("kappa0", 1.0)},
            domain=(grid["x_lo"], grid["x_hi"]),
            data={"bc": "neumann"},
        )
        res = reduced_systems.solve_steady_state(prob, n=r.get("n", 128))
    elif kind == "travelling_wave":
        prob = reduced_systems.ReducedProblem(
            "travelling_wave", params,
            constants={"alpha": r.get("alpha", 1.1),
                       "kappa0": cfg.sections["decay"].get("kappa0", 1.0)},
            domain=(r.get("y_lo", 0.0), r.get("y_hi", 5.0)),
            data={"U0": r.get("U0", 0.0), "dU0": r.get("dU0", 0.0),
                  "V0": r.get("V0", 1.0), "s0": r.get("s0", 0.0)},
        )
        res = reduced_systems.integrate_travelling_wave(prob, h=r.get("h", 1e-3))
    elif kind == "self_similar":
        prob = reduced_systems.ReducedProblem(
            "self_similar", params,
            constants={"mu": cfg.sections["decay"].get("mu", 0.5)},
            domain=(0.0, r.get("xi_max", 10.0)),
            data={"U0": r.get("U0", 1.0), "C1": r.get("C1", 0.0)},
        )
        res = reduced_systems.solve_self_similar(
            prob, n=r.get("n", 2000), xi_max=r.get("xi_max", 10.0)
        )
    else:
        raise ValidationError(f"unknown reduce kind {kind!r}")
    csv_path = os.path.join(outdir, f"reduce_{kind}.csv")
    export_csv(res, csv_path, meta=meta)
    emit_plot_script("profiles", csv_path, os.path.join(outdir, "plot_profiles.py"))
    out = {"kind": kind}
    if hasattr(res, "defect_u"):
        out.update(defect_u=res.defect_u, defect_v=res.defect_v, converged=res.converged)
    if hasattr(res, "defect"):
        out.update(defect=res.defect)
    return out


def cmd_verify(cfg, outdir):
    params = build_model(cfg)
    v = cfg.sections.get("verify", {})
    family = v.get("family", "case1_homogeneous")
    e = cfg.sections.get("exact", {})
    if family == "case1_homogeneous":
        sol = exact_solutions.case1_homogeneous(
            params, C=e.get("C", 1.0), V0=e.get("V0", 0.0), t0=e.get("t0", 0.0)
        )
    elif family == "case4_cellfree_front":
        sol = exact_solutions.case4_cellfree_front(
            alpha=e.get("alpha", 1.1), tau=params.tau,
            kappa0=getattr(params.decay, "kappa0", 1.0),
            lam=getattr(params.decay, "lam", 0.0),
            A=e.get("A", 1.0), B=e.get("B", 0.0),
        )
        # the damped front solves the constant-coefficient equation
        params = ModelParams(
            D=params.D, tau=params.tau, limiter=params.limiter,
            decay=ConstantDecay(getattr(params.decay, "kappa0", 1.0)),
        )
    else:
        raise ValidationError(f"unknown verify family {family!r}")
    grid = build_grid(cfg)
    rep = verify.pde_residual(
        sol, params, grid, v.get("t_samples", (0.5, 1.0)), ht=v.get("ht", 5e-4)
    )
    report = {
        "sup_norm": rep.sup_norm,
        "l2_norm": rep.l2_norm,
        "worst_x": rep.worst_location[0],
        "worst_t": rep.worst_location[1],
    }
    csv_path = os.path.join(outdir, "residual_report.csv")
    export_csv(report, csv_path, meta=_meta_for(cfg))
    with open(os.path.join(outdir, "residual_report.json"), "w", encoding="utf-8") as f:
        json.dump({"family": family, **report}, f, indent=2, sort_keys=True)
    emit_plot_script("report", csv_path, os.path.join(outdir, "plot_report.py"))
    return report


def cmd_lie(cfg, outdir):
    rows = lie_toolkit.classification_report()
    reports = {}
    for case in ("I", "II", "III", "IV"):
        from .core import CaseTag

        tag = {t.value: t for t in CaseTag}[case]
        rep = lie_toolkit.verify_optimal_system(tag)
        reports[case] = {
            "representatives": rep.representatives,
            "all_ok": rep.all_ok,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in rep.checks
            ],
        }
    payload = {"classification": rows, "optimal_systems": reports}
    with open(os.path.join(outdir, "lie_report.json"), "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=str)
    flat = {
        f"optimal_{case}_all_ok": int(rep["all_ok"]) for case, rep in reports.items()
    }
    csv_path = os.path.join(outdir, "lie_report.csv")
    export_csv(flat, csv_path, meta=_meta_for(cfg))
    return {"all_ok": all(rep["all_ok"] for rep in reports.values())}


def cmd_sweep(cfg, outdir):
    s = cfg.sections.get("sweep", {})
    section, key = s.get("section"), s.get("key")
    values = s.get("values", ())
    base_command = s.get("command", "simulate")
    if not section or not key or not values:
        raise ValidationError("[sweep] needs section, key and values")
    if section not in _SCHEMA or key not in _SCHEMA[section]:
        raise ValidationError(f"unknown sweep target {section}.{key}")

    def one(value):
        sub = RunConfig(
            command=base_command,
            sections={sec: dict(body) for sec, body in cfg.sections.items()},
        )
        sub.sections[section][key] = value
        subdir = os.path.join(outdir, f"{section}.{key}={value:g}")
        os.makedirs(subdir, exist_ok=True)
        return _COMMANDS[base_command](sub, subdir)

    with concurrent.futures.ThreadPoolExecutor(max_workers=min(4, len(values))) as ex:
        results = list(ex.map(one, values))
    return {"runs": len(results)}


_COMMANDS = {
    "simulate": cmd_simulate,
    "exact": cmd_exact,
    "reduce": cmd_reduce,
    "verify": cmd_verify,
    "lie": cmd_lie,
    "sweep": cmd_sweep,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="flks",
        description="Flux-limited chemotaxis system: simulate, solve and verify",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="path to the config file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument(
        "--override", action="append", default=[], metavar="SECTION.KEY=VALUE"
    )
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 4

    try:
        cfg = parse_config(text, command=args.command)
        cfg = apply_overrides(cfg, args.override)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    # FLKS_LOG=debug echoes the canonical config; env vars control verbosity only
    if os.environ.get("FLKS_LOG", "").lower() == "debug":
        print(cfg.canonical_text(), file=sys.stderr)

    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return 4

    try:
        summary = _COMMANDS[cfg.command](cfg, args.out)
    except IoError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FlksError as exc:
        # numerical failure: leave a diagnostic report behind
        report = {"error": type(exc).__name__, "message": str(exc)}
        for attr in ("history", "residual", "iterations"):
            if hasattr(exc, attr):
                report[attr] = getattr(exc, attr)
        try:
            with open(os.path.join(args.out, "failure_report.json"), "w") as f:
                json.dump(report, f, indent=2, default=str)
        except OSError:
            pass
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    print(json.dumps({"command": cfg.command, "summary": summary}, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
