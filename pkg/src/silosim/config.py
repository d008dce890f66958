"""Flat key-value experiment configs (dotted sections, one experiment per file).

Reference of recognized keys:

    domain.kind      = interval | rectangle
    domain.length    = 1.0                 (interval)
    domain.lengths   = 1.0,1.0             (rectangle)
    grid.h_list      = 0.01,0.005
    params.alpha     = 1.0
    params.beta      = 1.0
    params.gamma     = 1.0
    source.patches   = lo,hi,intensity ; ...            (1D)
    source.rects     = x0,x1,y0,y1,intensity ; ...      (2D)
    source.disks     = cx,cy,r,intensity ; ...          (2D)
    source.atoms     = x,mass ; ...  /  x,y,mass ; ...
    scheme.cfl_safety / exchange_cap_safety / stop_epsilon / stop_window /
    scheme.max_steps / rate_drift_epsilon / v_diffusion
    output.kinds     = table,profiles,snapshots
    output.dir       = out
    output.snapshot_every = 200

Lines starting with '#' are comments; multi-entry values separate entries
with ';'.
"""

from __future__ import annotations

from pathlib import Path

from .experiments import ExperimentConfig
from .fd import SchemeConfig
from .model import Atom, DiskPatch, IntervalPatch, Parameters, RectPatch, SourceSpec


def parse_key_values(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _floats(value: str) -> list:
    return [float(tok) for tok in value.split(",") if tok.strip()]


def _entries(value: str) -> list:
    return [_floats(chunk) for chunk in value.split(";") if chunk.strip()]


def config_from_text(text: str, overrides: dict | None = None) -> ExperimentConfig:
    kv = parse_key_values(text)
    if overrides:
        kv.update({k: v for k, v in overrides.items() if v is not None})

    kind = kv.get("domain.kind", "interval")
    if kind == "interval":
        lengths = (float(kv.get("domain.length", "1.0")),)
    else:
        lengths = tuple(_floats(kv.get("domain.lengths", "1.0,1.0")))

    h_list = tuple(_floats(kv.get("grid.h_list", "0.01")))

    params = Parameters(
        alpha=float(kv.get("params.alpha", "1.0")),
        beta=float(kv.get("params.beta", "1.0")),
        gamma=float(kv.get("params.gamma", "1.0")),
    )

    patches = []
    for lo, hi, intensity in _entries(kv.get("source.patches", "")):
        patches.append(IntervalPatch(lo, hi, intensity))
    for x0, x1, y0, y1, intensity in _entries(kv.get("source.rects", "")):
        patches.append(RectPatch(x0, x1, y0, y1, intensity))
    for cx, cy, r, intensity in _entries(kv.get("source.disks", "")):
        patches.append(DiskPatch(cx, cy, r, intensity))
    atoms = []
    for entry in _entries(kv.get("source.atoms", "")):
        if len(entry) == 2:
            atoms.append(Atom(entry[0], entry[1]))
        elif len(entry) == 3:
            atoms.append(Atom((entry[0], entry[1]), entry[2]))
        else:
            raise ValueError(f"bad atom entry {entry}")
    source = SourceSpec(tuple(patches), tuple(atoms))

    drift = kv.get("scheme.rate_drift_epsilon")
    scheme = SchemeConfig(
        cfl_safety=float(kv.get("scheme.cfl_safety", "0.4")),
        exchange_cap_safety=float(kv.get("scheme.exchange_cap_safety", "0.5")),
        stop_epsilon=float(kv.get("scheme.stop_epsilon", "1e-3")),
        stop_window=int(kv.get("scheme.stop_window", "50")),
        max_steps=int(kv.get("scheme.max_steps", "1000000")),
        rate_drift_epsilon=None if drift is None else float(drift),
        v_diffusion=float(kv.get("scheme.v_diffusion", "1.0")),
    )

    outputs = tuple(
        tok.strip() for tok in kv.get("output.kinds", "table").split(",") if tok.strip()
    )
    return ExperimentConfig(
        kind=kind,
        lengths=lengths,
        h_list=h_list,
        params=params,
        source=source,
        scheme=scheme,
        outputs=outputs,
        out_dir=kv.get("output.dir", "out"),
        snapshot_every=int(kv.get("output.snapshot_every", "0")),
    )


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    return config_from_text(Path(path).read_text(), overrides)


BUILTIN_CONFIGS = {
    "fig1_point_source_1d.cfg": """\
# 1D silo with a unit point source over the middle (logarithmic profile).
domain.kind = interval
domain.length = 1.0
grid.h_list = 0.01,0.005
source.atoms = 0.5,1.0
output.kinds = table,profiles
""",
    "fig3a_centered_patch_1d.cfg": """\
# Growing heap for a centered symmetric source support [0.45, 0.55].
domain.kind = interval
domain.length = 1.0
grid.h_list = 0.01
source.patches = 0.45,0.55,1.0
output.kinds = table,profiles
""",
    "fig3b_boundary_patch_1d.cfg": """\
# Growing heap for a source support close to the wall, [0.9, 1.0].
domain.kind = interval
domain.length = 1.0
grid.h_list = 0.01
source.patches = 0.9,1.0,1.0
output.kinds = table,profiles
""",
    "fig3c_disconnected_patches_1d.cfg": """\
# Growing heap for a disconnected source support.
domain.kind = interval
domain.length = 1.0
grid.h_list = 0.01
source.patches = 0.25,0.35,1.0 ; 0.65,0.75,1.0
output.kinds = table,profiles
""",
    "fig4_table1_convergence_1d.cfg": """\
# Error table for the centered-patch case over a refinement sweep.
# Only the convergence order is a reproduction target; the source
# intensity behind the published constants is not documented.
domain.kind = interval
domain.length = 1.0
grid.h_list = 0.01,0.005,0.0025,0.001
source.patches = 0.45,0.55,1.0
scheme.stop_epsilon = 1e-4
output.kinds = table,profiles
""",
    "fig5_central_ball_2d.cfg": """\
# Square silo, source supported in a small central ball.
domain.kind = rectangle
domain.lengths = 1.0,1.0
grid.h_list = 0.015625
source.disks = 0.5,0.5,0.15,4.0
output.kinds = table,profiles
""",
    "fig6_two_balls_2d.cfg": """\
# Square silo, source supported in two disconnected balls.
domain.kind = rectangle
domain.lengths = 1.0,1.0
grid.h_list = 0.015625
source.disks = 0.3,0.5,0.1,4.0 ; 0.7,0.5,0.1,4.0
output.kinds = table,profiles
""",
    "fig7_growth_movie_2d.cfg": """\
# Snapshot series of the growing heap (central-ball source).
domain.kind = rectangle
domain.lengths = 1.0,1.0
grid.h_list = 0.03125
source.disks = 0.5,0.5,0.15,4.0
output.kinds = table,snapshots
output.snapshot_every = 500
""",
}


def write_builtin_configs(directory) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in BUILTIN_CONFIGS.items():
        (directory / name).write_text(text)
        written.append(directory / name)
    return written
