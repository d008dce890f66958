"""Experiment driver: similarity/evolution runs, error tables, CSV export."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exact import similarity_1d_exact
from .fd import RunReport, SchemeConfig, run
from .fe import CourantMesh, FESimilarity, similarity_fe
from .model import Grid1D, Grid2D, Parameters, SourceSpec

FMT = "%.17g"


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment (one config file)."""

    kind: str  # "interval" or "rectangle"
    lengths: tuple
    h_list: tuple
    params: Parameters = Parameters()
    source: SourceSpec = SourceSpec()
    scheme: SchemeConfig = SchemeConfig()
    outputs: tuple = ("table",)
    out_dir: str = "out"
    snapshot_every: int = 0
    clip_alarm_ratio: float = 1e-8
    defect_alarm_constant: float = 10.0

    def __post_init__(self):
        if self.kind not in ("interval", "rectangle"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not self.h_list:
            raise ValueError("at least one grid size is required")
        if list(self.h_list) != sorted(self.h_list, reverse=True):
            raise ValueError("h list must be strictly decreasing")
        if not self.outputs:
            raise ValueError("at least one output must be requested")

    def grid(self, h: float):
        if self.kind == "interval":
            (L,) = self.lengths
            n = _node_count(L, h)
            return Grid1D(L, n)
        Lx, Ly = self.lengths
        return Grid2D(Lx, Ly, _node_count(Lx, h), _node_count(Ly, h))


def _node_count(length: float, h: float) -> int:
    n = round(length / h)
    if abs(n * h - length) > 1e-9 * length:
        raise ValueError(f"spacing {h} does not divide the length {length}")
    return n + 1


def observed_order(errs, hs):
    """Convergence order between consecutive rows; None marks a zero error."""
    if len(errs) != len(hs) or len(errs) < 2:
        raise ValueError("need matching error/h lists of length >= 2")
    orders = []
    for e0, e1, h0, h1 in zip(errs, errs[1:], hs, hs[1:]):
        if e0 == 0.0 or e1 == 0.0:
            orders.append(None)
        else:
            orders.append(math.log(e0 / e1) / math.log(h0 / h1))
    return orders


@dataclass
class ErrorTable:
    """Sup-norm error rows of an h sweep plus observed orders."""

    hs: list
    columns: dict  # name -> list of errors (None marks a failed row)
    orders: dict = field(default_factory=dict)

    def compute_orders(self):
        self.orders = {}
        for name, errs in self.columns.items():
            col = []
            for e0, e1, h0, h1 in zip(errs, errs[1:], self.hs, self.hs[1:]):
                if e0 is None or e1 is None:
                    col.append(None)
                elif e0 == 0.0 or e1 == 0.0:
                    col.append("exact")
                else:
                    col.append(math.log(e0 / e1) / math.log(h0 / h1))
            self.orders[name] = col
        return self

    def to_csv(self) -> str:
        names = list(self.columns)
        header = "h," + ",".join(f"err_{n}" for n in names)
        header += "," + ",".join(f"order_{n}" for n in names)
        lines = [header]
        for i, h in enumerate(self.hs):
            cells = [FMT % h]
            for n in names:
                e = self.columns[n][i]
                cells.append("failed" if e is None else FMT % e)
            for n in names:
                if i == 0:
                    cells.append("")
                else:
                    o = self.orders[n][i - 1]
                    if o is None:
                        cells.append("failed")
                    elif o == "exact":
                        cells.append("exact")
                    else:
                        cells.append(FMT % o)
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def export_profile(values: np.ndarray, grid, path) -> None:
    """Write a nodal field as CSV: x,value (1D) or x,y,value (2D, row-major)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.asarray(values, dtype=float)
    lines = []
    if isinstance(grid, Grid1D):
        lines.append("x,value")
        for x, v in zip(grid.nodes, values):
            lines.append(f"{FMT % x},{FMT % v}")
    else:
        lines.append("x,y,value")
        xs, ys = grid.nodes_x, grid.nodes_y
        for i in range(grid.node_count_x):
            for j in range(grid.node_count_y):
                lines.append(f"{FMT % xs[i]},{FMT % ys[j]},{FMT % values[i, j]}")
    path.write_text("\n".join(lines) + "\n")


class SnapshotWriter:
    """Per-step snapshot callback writing zero-padded CSV series."""

    def __init__(self, grid, directory, prefix="snapshot"):
        self.grid = grid
        self.directory = Path(directory)
        self.prefix = prefix
        self.count = 0

    def __call__(self, step, t, u, v):
        export_profile(
            u - u.min(),
            self.grid,
            self.directory / f"{self.prefix}_u_{self.count:06d}.csv",
        )
        self.count += 1


@dataclass
class ExperimentResult:
    table: ErrorTable | None
    alarms: list
    failures: list
    rows: list  # per-h dicts of computed objects


def _check_alarms(cfg: ExperimentConfig, report: RunReport, h: float, alarms: list):
    if report.injected_mass > 0.0 and report.clipped_mass > (
        cfg.clip_alarm_ratio * report.injected_mass
    ):
        alarms.append(
            f"h={h:g}: clipped rolling-layer mass {report.clipped_mass:.3e} exceeds "
            f"{cfg.clip_alarm_ratio:g} of injected {report.injected_mass:.3e}"
        )
    t_final = report.state.t
    if t_final > 0.0:
        rate = report.mass_defect / t_final
        inj_rate = report.injected_mass / t_final
        threshold = cfg.defect_alarm_constant * h * max(inj_rate, 1.0)
        if rate > threshold:
            alarms.append(
                f"h={h:g}: mass-balance defect rate {rate:.3e} exceeds {threshold:.3e}"
            )


def _evolve_one(cfg: ExperimentConfig, grid, out_h: Path):
    callback = None
    if "snapshots" in cfg.outputs and cfg.snapshot_every > 0:
        callback = SnapshotWriter(grid, out_h / "snapshots")
    return run(
        cfg.source,
        grid,
        cfg.params,
        cfg.scheme,
        snapshot_callback=callback,
        snapshot_every=cfg.snapshot_every,
    )


def run_similarity(cfg: ExperimentConfig) -> ExperimentResult:
    """Discrete (FE) similarity solutions for every grid size."""
    out = Path(cfg.out_dir)
    rows = []
    failures = []
    for h in cfg.h_list:
        grid = cfg.grid(h)
        domain = grid if cfg.kind == "interval" else CourantMesh.from_grid(grid)
        try:
            fe = similarity_fe(cfg.source, domain, cfg.params)
        except Exception as exc:  # propagate per-row, keep the sweep going
            failures.append(f"h={h:g}: {exc}")
            rows.append({"h": h, "fe": None})
            continue
        rows.append({"h": h, "grid": grid, "fe": fe})
        if "profiles" in cfg.outputs:
            export_profile(fe.u, grid, out / f"h{h:g}" / "fe_u.csv")
            export_profile(fe.v, grid, out / f"h{h:g}" / "fe_v.csv")
    return ExperimentResult(table=None, alarms=[], failures=failures, rows=rows)


def run_evolve(cfg: ExperimentConfig) -> ExperimentResult:
    """Evolutive FD runs for every grid size."""
    out = Path(cfg.out_dir)
    rows = []
    alarms = []
    failures = []
    for h in cfg.h_list:
        grid = cfg.grid(h)
        try:
            report = _evolve_one(cfg, grid, out / f"h{h:g}")
        except Exception as exc:
            failures.append(f"h={h:g}: {exc}")
            rows.append({"h": h, "report": None})
            continue
        if not report.converged:
            failures.append(f"h={h:g}: no similarity detected in {report.steps} steps")
        _check_alarms(cfg, report, h, alarms)
        rows.append({"h": h, "grid": grid, "report": report})
        if "profiles" in cfg.outputs:
            export_profile(report.u_profile, grid, out / f"h{h:g}" / "fd_u.csv")
            export_profile(report.v_profile, grid, out / f"h{h:g}" / "fd_v.csv")
    return ExperimentResult(table=None, alarms=alarms, failures=failures, rows=rows)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Full pipeline: exact (1D), FE, and FD profiles with the error table."""
    out = Path(cfg.out_dir)
    one_d = cfg.kind == "interval"
    names = ["u_fe", "u_fd", "v_fe", "v_fd"] if one_d else ["u", "v"]
    columns = {n: [] for n in names}
    hs = []
    rows = []
    alarms = []
    failures = []
    for h in cfg.h_list:
        grid = cfg.grid(h)
        hs.append(h)
        row = {"h": h, "grid": grid}
        try:
            domain = grid if one_d else CourantMesh.from_grid(grid)
            fe = similarity_fe(cfg.source, domain, cfg.params)
            report = _evolve_one(cfg, grid, out / f"h{h:g}")
            if not report.converged:
                raise RuntimeError(
                    f"no similarity detected in {report.steps} steps"
                )
            _check_alarms(cfg, report, h, alarms)
        except Exception as exc:
            failures.append(f"h={h:g}: {exc}")
            for n in names:
                columns[n].append(None)
            rows.append(row)
            continue
        row["fe"] = fe
        row["report"] = report
        if one_d:
            exact = similarity_1d_exact(cfg.source, grid, cfg.params)
            row["exact"] = exact
            columns["u_fe"].append(float(np.max(np.abs(exact.U - fe.u))))
            columns["u_fd"].append(
                float(np.max(np.abs(exact.U - report.u_profile)))
            )
            columns["v_fe"].append(float(np.max(np.abs(exact.V - fe.v))))
            columns["v_fd"].append(
                float(np.max(np.abs(exact.V - report.v_profile)))
            )
            if "profiles" in cfg.outputs:
                export_profile(exact.U, grid, out / f"h{h:g}" / "exact_u.csv")
                export_profile(exact.V, grid, out / f"h{h:g}" / "exact_v.csv")
        else:
            columns["u"].append(float(np.max(np.abs(fe.u - report.u_profile))))
            columns["v"].append(float(np.max(np.abs(fe.v - report.v_profile))))
        if "profiles" in cfg.outputs:
            export_profile(fe.u, grid, out / f"h{h:g}" / "fe_u.csv")
            export_profile(fe.v, grid, out / f"h{h:g}" / "fe_v.csv")
            export_profile(report.u_profile, grid, out / f"h{h:g}" / "fd_u.csv")
            export_profile(report.v_profile, grid, out / f"h{h:g}" / "fd_v.csv")
        rows.append(row)
    table = ErrorTable(hs=hs, columns=columns).compute_orders()
    if "table" in cfg.outputs or "errors" in cfg.outputs:
        out.mkdir(parents=True, exist_ok=True)
        (out / "table.csv").write_text(table.to_csv())
    return ExperimentResult(table=table, alarms=alarms, failures=failures, rows=rows)
