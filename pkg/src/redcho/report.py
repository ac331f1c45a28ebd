"""CSV and SVG output for runs and sweeps.

Trajectory CSV (long format, one file per run)::

    # config: {...resolved scenario as JSON...}
    t,mu,agent,y,ybar,e_mu,disagreement_norm,block_sum

Each sample time contributes, for every order ``mu``, one row per agent
(``agent`` and ``y`` filled, aggregates empty) followed by one aggregate
row (``agent`` and ``y`` empty). ``disagreement_norm`` is the 2-norm of
``Y_mu - ubar_mu 1``. Floats use ``repr`` so a re-read is bit-exact.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sim import Trajectory, settling_time, terminal_error

TRAJECTORY_COLUMNS = ("t", "mu", "agent", "y", "ybar", "e_mu", "disagreement_norm", "block_sum")
METRIC_COLUMNS = ("mu", "settling_time", "terminal_error", "terminal_error_inf", "final_disagreement", "diverged")


def _f(x) -> str:
    return repr(float(x))


def config_header(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True, separators=(",", ":")) + "\n"


def write_trajectory_csv(path, traj: Trajectory, config: dict) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(config_header(config))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for s, t in enumerate(traj.t):
            ts = _f(t)
            Y = traj.Y[s]
            for mu in range(Y.shape[0]):
                for i, y in enumerate(Y[mu]):
                    w.writerow((ts, mu, i, _f(y), "", "", "", ""))
                w.writerow((ts, mu, "", "", _f(traj.ybar[s, mu]), _f(traj.e[s, mu]),
                            _f(traj.disagreement[s, mu]), _f(traj.block_sum[s, mu])))
    return path


def read_trajectory_csv(path):
    """Return ``(config, rows)`` with rows as dicts of floats (``None`` for empty cells)."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# config: "):
            raise ValueError(f"{path}: missing config header")
        config = json.loads(first[len("# config: "):])
        rows = []
        for row in csv.DictReader(fh):
            rows.append({k: (None if v == "" else (int(v) if k in ("mu", "agent") else float(v))) for k, v in row.items()})
    return config, rows


def aggregate_series(rows, mu: int, column: str):
    """(t, values) of an aggregate column for one order, from ``read_trajectory_csv`` rows."""
    sel = [(r["t"], r[column]) for r in rows if r["mu"] == mu and r["agent"] is None]
    return np.array([a for a, _ in sel]), np.array([b for _, b in sel])


@dataclass(frozen=True)
class Metrics:
    mu: int
    settling_time: float | None
    terminal_error: float
    terminal_error_inf: float
    final_disagreement: float
    diverged: bool


def compute_metrics(traj: Trajectory, tol: float, window: float | None, terminal_window: float) -> list[Metrics]:
    out = []
    horizon = traj.t1 - traj.t0
    tw = min(terminal_window, horizon)
    for mu in range(traj.m + 1):
        out.append(Metrics(
            mu=mu,
            settling_time=settling_time(traj, mu, tol, window),
            terminal_error=terminal_error(traj, mu, tw, "2"),
            terminal_error_inf=terminal_error(traj, mu, tw, "inf"),
            final_disagreement=float(traj.disagreement[-1, mu]) if len(traj.t) else math.nan,
            diverged=traj.diverged,
        ))
    return out


def _opt(x) -> str:
    return "" if x is None else _f(x)


def write_metrics_csv(path, metrics: list[Metrics], config: dict) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(config_header(config))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_COLUMNS)
        for r in metrics:
            w.writerow((r.mu, _opt(r.settling_time), _f(r.terminal_error), _f(r.terminal_error_inf),
                        _f(r.final_disagreement), int(r.diverged)))
    return path


def sweep_columns(m: int) -> list[str]:
    cols = ["axis", "value"]
    cols += [f"settling_time_mu{mu}" for mu in range(m + 1)]
    cols += [f"terminal_error_mu{mu}" for mu in range(m + 1)]
    cols.append("diverged")
    return cols


def write_sweep_csv(path, axis: str, rows: list[tuple[float, list[Metrics]]], config: dict) -> Path:
    path = Path(path)
    m = len(rows[0][1]) - 1
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(config_header(config))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(sweep_columns(m))
        for value, mets in rows:
            w.writerow([axis, _f(value)] + [_opt(r.settling_time) for r in mets]
                       + [_f(r.terminal_error) for r in mets] + [int(any(r.diverged for r in mets))])
    return path


def read_table_csv(path):
    """Header config and rows (as string dicts) of a metrics or sweep CSV."""
    with Path(path).open(encoding="utf-8") as fh:
        config = json.loads(fh.readline()[len("# config: "):])
        return config, list(csv.DictReader(fh))


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "redcho"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def plot_run(traj: Trajectory, out_dir, name: str) -> list[Path]:
    """Disagreement norms on a log scale, plus agent outputs against the reference mean."""
    plt = _pyplot()
    out_dir = Path(out_dir)
    paths = []
    meta = {"Date": None, "Creator": "redcho"}

    fig, ax = plt.subplots(figsize=(7, 4))
    for mu in range(traj.m + 1):
        vals = np.maximum(traj.disagreement[:, mu], 1e-16)
        ax.semilogy(traj.t, vals, label=rf"$\|Y_{mu} - \bar u^{{({mu})}} 1\|_2$", lw=1.0)
    for ev in traj.events:
        ax.axvline(ev["t"], color="0.5", ls="--", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("disagreement")
    ax.set_title(f"{name}: disagreement norms")
    ax.legend(loc="upper right", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    p = out_dir / "disagreement.svg"
    fig.savefig(p, format="svg", metadata=meta)
    plt.close(fig)
    paths.append(p)

    fig, axes = plt.subplots(traj.m + 1, 1, figsize=(7, 2.2 * (traj.m + 1)), sharex=True, squeeze=False)
    for mu in range(traj.m + 1):
        ax = axes[mu, 0]
        ys = [Y[mu] for Y in traj.Y]
        width = max(len(y) for y in ys)
        grid = np.full((len(ys), width), np.nan)
        for s, y in enumerate(ys):
            grid[s, : len(y)] = y
        ax.plot(traj.t, grid, lw=0.6, alpha=0.7)
        ax.plot(traj.t, traj.ubar[:, mu], color="k", lw=1.2, ls="--", label="reference mean")
        ax.set_ylabel(rf"$y_{{i,{mu}}}$")
        ax.grid(True, alpha=0.3)
        for ev in traj.events:
            ax.axvline(ev["t"], color="0.5", ls="--", lw=0.8)
    axes[0, 0].legend(loc="upper right", fontsize=8)
    axes[0, 0].set_title(f"{name}: agent outputs")
    axes[-1, 0].set_xlabel("t")
    fig.tight_layout()
    p = out_dir / "outputs.svg"
    fig.savefig(p, format="svg", metadata=meta)
    plt.close(fig)
    paths.append(p)
    return paths


def plot_sweep(axis: str, rows, out_path) -> Path:
    plt = _pyplot()
    values = [v for v, _ in rows]
    m = len(rows[0][1]) - 1
    fig, ax = plt.subplots(figsize=(6, 4))
    for mu in range(m + 1):
        ax.semilogy(values, [max(r[mu].terminal_error, 1e-16) for _, r in rows], "o-", label=f"mu={mu}")
    if axis in ("h", "variance"):
        ax.set_xscale("log")
    ax.set_xlabel(axis)
    ax.set_ylabel("terminal disagreement (2-norm)")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None, "Creator": "redcho"})
    plt.close(fig)
    return Path(out_path)
