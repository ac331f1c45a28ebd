"""Fixed-step explicit Euler simulation with scheduled network events."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernel
from .algebra import ProtocolMatrices, ProtocolParams
from .dynamics import NetworkState
from .graph import Network
from .signals import SignalBank


@dataclass(frozen=True)
class InitPolicy:
    """How fresh internal states are produced (initial, joining or reset agents).

    ``kind`` is ``"zero"``, ``"normal"`` or ``"explicit"``. For ``"normal"`` the
    entries are i.i.d. with the given mean and variance from a generator
    seeded with ``seed``; ``zero_sum`` then removes each block's mean.
    """

    kind: str = "zero"
    mean: float = 1.0
    variance: float = 1.0
    seed: int = 0
    zero_sum: bool = False
    values: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "normal", "explicit"):
            raise ValueError(f"unknown init policy {self.kind!r}")
        if self.kind == "normal" and self.variance < 0:
            raise ValueError("variance must be >= 0")
        if self.kind == "explicit" and self.values is None:
            raise ValueError("explicit policy needs values")

    def draw(self, m: int, count: int) -> np.ndarray:
        if self.kind == "zero":
            X = np.zeros((m + 1, count))
        elif self.kind == "normal":
            rng = np.random.default_rng(self.seed)
            X = self.mean + math.sqrt(self.variance) * rng.standard_normal((m + 1, count))
        else:
            X = np.array(self.values, dtype=float).reshape(m + 1, -1)
            if X.shape[1] != count:
                raise ValueError(f"explicit values cover {X.shape[1]} agents, need {count}")
        if self.zero_sum and count:
            X = X - X.mean(axis=1, keepdims=True)
        return X

    def as_dict(self) -> dict:
        d = {"policy": self.kind}
        if self.kind == "normal":
            d.update(mean=self.mean, variance=self.variance, seed=self.seed)
        if self.kind == "explicit":
            d["values"] = [list(map(float, row)) for row in self.values]
        if self.zero_sum:
            d["zero_sum"] = True
        return d


@dataclass(frozen=True)
class SwapGraph:
    """Replace the topology. Surviving agents keep their state.

    ``keep`` lists the old indices that survive, in their new order; the
    default keeps the first ``min(n_old, n_new)`` agents. Remaining new slots
    are filled by ``join``. ``bank`` replaces the signals when given.
    """

    network: Network
    join: InitPolicy = InitPolicy("normal")
    bank: SignalBank | None = None
    keep: tuple[int, ...] | None = None

    def survivors(self, n_old: int) -> tuple[int, ...]:
        if self.keep is not None:
            return tuple(self.keep)
        return tuple(range(min(n_old, self.network.n)))


@dataclass(frozen=True)
class ResetAgent:
    index: int
    policy: InitPolicy = InitPolicy("zero")


@dataclass(frozen=True)
class SetSignals:
    bank: SignalBank


@dataclass(frozen=True)
class Event:
    time: float
    action: Union[SwapGraph, ResetAgent, SetSignals]

    @property
    def label(self) -> str:
        a = self.action
        if isinstance(a, SwapGraph):
            return f"swap_graph(n={a.network.n})"
        if isinstance(a, ResetAgent):
            return f"reset_agent({a.index})"
        return "set_signals"


@dataclass
class Trajectory:
    """Decimated record of one run. Per-sample arrays are indexed [sample, mu]."""

    t: np.ndarray
    n: np.ndarray
    Y: list
    ubar: np.ndarray
    ybar: np.ndarray
    e: np.ndarray
    disagreement: np.ndarray
    disagreement_inf: np.ndarray
    block_sum: np.ndarray
    events: list = field(default_factory=list)
    diverged: bool = False
    diverged_at: float | None = None
    final_state: NetworkState | None = None
    h: float = 0.0
    decimation: int = 1
    t0: float = 0.0
    t1: float = 0.0

    @property
    def m(self) -> int:
        return self.e.shape[1] - 1


class _Recorder:
    def __init__(self, pm: ProtocolMatrices):
        self.pm = pm
        self.rows = {k: [] for k in ("t", "n", "Y", "ubar", "ybar", "e", "dis", "dinf", "bs")}

    def outputs(self, X, bank, t):
        m = self.pm.order
        U = bank.stacked(t, m + 1)
        Y = U - self.pm.G @ X
        ubar = U.mean(axis=1)
        ybar = Y.mean(axis=1)
        return Y, ubar, ybar

    def record(self, X, bank, t) -> bool:
        """Append one sample; refuse (and return False) if any derived value overflows."""
        with np.errstate(over="ignore", invalid="ignore"):
            Y, ubar, ybar = self.outputs(X, bank, t)
            dev = Y - ubar[:, None]
            dis = np.linalg.norm(dev, axis=1)
        if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(dis))):
            return False
        r = self.rows
        r["t"].append(t)
        r["n"].append(X.shape[1])
        r["Y"].append(Y)
        r["ubar"].append(ubar)
        r["ybar"].append(ybar)
        r["e"].append(ybar - ubar)
        r["dis"].append(dis)
        r["dinf"].append(np.max(np.abs(dev), axis=1))
        r["bs"].append(X.sum(axis=1))
        return True

    def build(self, **kw) -> Trajectory:
        r = self.rows
        return Trajectory(
            t=np.array(r["t"]),
            n=np.array(r["n"], dtype=int),
            Y=r["Y"],
            ubar=np.array(r["ubar"]),
            ybar=np.array(r["ybar"]),
            e=np.array(r["e"]),
            disagreement=np.array(r["dis"]),
            disagreement_inf=np.array(r["dinf"]),
            block_sum=np.array(r["bs"]),
            **kw,
        )


def _step_count(span: float, h: float) -> int:
    steps = span / h
    n = int(round(steps))
    if abs(steps - n) > 1e-6 * max(1.0, steps):
        raise ValueError(f"horizon {span} is not a whole number of steps of size {h}")
    return n


def event_step(time: float, t0: float, h: float) -> int:
    """Index of the first step boundary at or after ``time``."""
    return int(math.ceil((time - t0) / h - 1e-9))


def _check_events(events, n0, bank_n, t0, t1, m):
    n, bn = n0, bank_n
    last = -math.inf
    for ev in events:
        if not (t0 < ev.time < t1):
            raise ValueError(f"event at t={ev.time} is not strictly inside ({t0}, {t1})")
        if ev.time < last:
            raise ValueError("events must be sorted by time")
        last = ev.time
        a = ev.action
        if isinstance(a, SwapGraph):
            keep = a.survivors(n)
            if any(not 0 <= i < n for i in keep) or len(set(keep)) != len(keep):
                raise ValueError(f"swap at t={ev.time} keeps agents {keep} but only {n} exist")
            if len(keep) > a.network.n:
                raise ValueError(f"swap at t={ev.time} keeps more agents than the new network has")
            n = a.network.n
            if a.bank is not None:
                bn = a.bank.n
        elif isinstance(a, ResetAgent):
            if not 0 <= a.index < n:
                raise ValueError(f"reset at t={ev.time} references absent agent {a.index} (n={n})")
        elif isinstance(a, SetSignals):
            bn = a.bank.n
        else:
            raise TypeError(f"unknown event action {a!r}")
    return n, bn


def _apply(ev: Event, X, net, bank, m):
    a = ev.action
    if isinstance(a, SwapGraph):
        keep = a.survivors(X.shape[1])
        Xn = np.empty((m + 1, a.network.n))
        Xn[:, : len(keep)] = X[:, list(keep)]
        Xn[:, len(keep):] = a.join.draw(m, a.network.n - len(keep))
        return Xn, a.network, (a.bank if a.bank is not None else bank)
    if isinstance(a, ResetAgent):
        X = X.copy()
        X[:, a.index] = a.policy.draw(m, 1)[:, 0]
        return X, net, bank
    return X, net, a.bank


def euler_run(
    params: ProtocolParams,
    net: Network,
    bank: SignalBank,
    X0,
    t0: float,
    t1: float,
    h: float,
    events=(),
    decimation: int = 1,
) -> Trajectory:
    """Integrate the network with explicit Euler from ``t0`` to ``t1``.

    Events fire at the first step boundary at or after their time, in
    declaration order, before that boundary is sampled. A non-finite state
    stops the run; the trajectory keeps every sample taken before it.
    """
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    if int(decimation) != decimation or decimation < 1:
        raise ValueError(f"decimation must be a positive integer, got {decimation}")
    decimation = int(decimation)
    m = params.m
    X = np.array(X0, dtype=float)
    if X.shape != (m + 1, net.n):
        raise ValueError(f"X0 has shape {X.shape}, expected {(m + 1, net.n)}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X0 contains non-finite entries")
    if bank.n != net.n:
        raise ValueError(f"signal bank has {bank.n} agents, network has {net.n}")
    events = list(events)
    total = _step_count(t1 - t0, h)
    n_end, bn_end = _check_events(events, net.n, bank.n, t0, t1, m)

    pm = ProtocolMatrices.from_params(params)
    gains = params.effective_gains
    alphas = params.exponents
    gamma = np.asarray(params.gamma)

    by_step: dict[int, list[Event]] = {}
    for ev in events:
        by_step.setdefault(event_step(ev.time, t0, h), []).append(ev)
    boundaries = sorted(set(range(decimation, total + 1, decimation)) | set(by_step))

    rec = _Recorder(pm)
    rec.record(X, bank, t0)
    log = []
    diverged_at = None
    k = 0
    for b in boundaries:
        ei, ej = net.edge_arrays
        sa, samp, som, sph, poly = bank.kernel_arrays
        _kernel.advance(X, k, b - k, t0, h, gains, alphas, gamma, ei, ej, sa, samp, som, sph, poly)
        k = b
        t = t0 + k * h
        if not np.all(np.isfinite(X)):
            diverged_at = t
            break
        for ev in by_step.get(k, ()):
            X, net, bank = _apply(ev, X, net, bank, m)
            if bank.n != net.n and ev is by_step[k][-1]:
                raise ValueError(f"after events at t={t}: bank has {bank.n} agents, network has {net.n}")
            _, ubar, ybar = rec.outputs(X, bank, t)
            log.append({"t": t, "step": k, "label": ev.label, "e": ybar - ubar, "block_sum": X.sum(axis=1)})
        if k % decimation == 0 and not rec.record(X, bank, t):
            diverged_at = t
            break

    return rec.build(
        events=log,
        diverged=diverged_at is not None,
        diverged_at=diverged_at,
        final_state=None if diverged_at is not None else NetworkState(X.copy(), t0 + k * h),
        h=h,
        decimation=decimation,
        t0=t0,
        t1=t1,
    )


@dataclass(frozen=True)
class ProjectionCheck:
    residual: float
    linear_e: np.ndarray
    trajectory: Trajectory


def consensus_projection_check(params, net, bank, X0, t0, t1, h, events=(), decimation=1) -> ProjectionCheck:
    """Compare the averaged network error with the linear recursion e <- e + h GammaTilde e.

    The recursion restarts from the network value after each event, since
    events change the agent population and hence the average.
    """
    traj = euler_run(params, net, bank, X0, t0, t1, h, events, decimation)
    A = np.array(ProtocolMatrices.from_params(params).GammaTilde)
    e = traj.e[0].copy()
    ev_by_step: dict[int, np.ndarray] = {}
    for rec in traj.events:
        ev_by_step[rec["step"]] = rec["e"]
    steps = sorted(set(range(decimation, decimation * (len(traj.t) - 1) + 1, decimation)) | set(ev_by_step))
    out = [e.copy()]
    k = 0
    for b in steps:
        if b > decimation * (len(traj.t) - 1):
            break
        _kernel.linear_steps(A, e, b - k, h)
        k = b
        if b in ev_by_step:
            e = np.array(ev_by_step[b], dtype=float)
        if b % decimation == 0:
            out.append(e.copy())
    lin = np.array(out)
    residual = float(np.max(np.abs(lin - traj.e))) if len(lin) == len(traj.e) else math.inf
    return ProjectionCheck(residual, lin, traj)


def settling_time(traj: Trajectory, mu: int, tol: float, window: float | None = None, norm: str = "inf"):
    """Earliest sample time after which the mu-th disagreement stays <= tol.

    With ``window`` the error only has to stay below ``tol`` on
    ``[t, t + window]``; without it, until the end of the record. Returns
    ``None`` when no such time exists.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    vals = (traj.disagreement_inf if norm == "inf" else traj.disagreement)[:, mu]
    t = traj.t
    if len(t) == 0:
        return None
    if window is None:
        bad = np.flatnonzero(~(vals <= tol))
        if bad.size == 0:
            return float(t[0])
        nxt = bad[-1] + 1
        if traj.diverged or nxt >= len(t):
            return None
        return float(t[nxt])
    horizon = traj.t1 - traj.t0
    if window > horizon:
        raise ValueError(f"window {window} exceeds horizon {horizon}")
    bad = np.concatenate([[0], np.cumsum(~(vals <= tol))])
    slack = 1e-9 * max(1.0, abs(t[-1]))
    for k in range(len(t)):
        if t[k] + window > t[-1] + slack:
            break
        j = np.searchsorted(t, t[k] + window + slack, side="right")
        if bad[j] - bad[k] == 0:
            return float(t[k])
    return None


def terminal_error(traj: Trajectory, mu: int, window: float, norm: str = "2") -> float:
    """Largest disagreement over the final ``window`` seconds of the record."""
    vals = (traj.disagreement if norm == "2" else traj.disagreement_inf)[:, mu]
    if traj.diverged or len(vals) == 0:
        return math.inf
    sel = traj.t >= traj.t[-1] - window - 1e-12
    return float(np.max(vals[sel]))


def mean_recursion(params: ProtocolParams, s0, nsteps: int, h: float) -> np.ndarray:
    """Block sums under s <- s + h Gamma s (the coupling terms sum to zero)."""
    from .algebra import build_gamma

    s = np.array(s0, dtype=float)
    _kernel.linear_steps(build_gamma(params), s, int(nsteps), h)
    return s
