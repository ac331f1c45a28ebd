"""Declarative TOML scenarios: parsing, validation and presets.

Grammar (every table optional unless noted; unknown keys are errors)::

    name = "example1"                 # required
    description = "..."

    [protocol]                        # required
    m = 2
    gamma = [3.0, 3.0, 3.0]
    k = [6.0, 11.0, 6.0]
    theta = 1.5                       # default 1.0
    design_L = 40.0                   # optional; warn when the signals exceed it

    [topology]                        # required
    generator = "ring"                # ring | path | complete | star
    n = 8
    # or: n = 4 and edges = [[0, 1], [1, 2], [2, 3]]
    allow_disconnected = false

    [signals]                         # required
    type = "cosines"                  # cosines | random_cosines | agents
    amplitudes = [...]                # cosines
    frequencies = [...]
    phases = [...]                    # optional
    # random_cosines: n, seed, amplitude_range, frequency_range
    # agents: agent = [{terms = [{type = "sinusoid", amplitude, frequency, phase},
    #                            {type = "polynomial", coeffs = [...]},
    #                            {type = "constant", value}]}, ...]
    subset = [0, 1, 2, 3]             # optional: keep only these agents

    [initial]                         # initial-state policy
    policy = "normal"                 # zero | normal | explicit
    mean = 1.0
    variance = 1.0
    seed = 0
    zero_sum = false
    # explicit: values = [[...], ...] with m+1 rows of n entries

    [time]                            # required
    t0 = 0.0
    t1 = 10.0
    h = 1e-5
    decimation = 1000

    [[events]]
    time = 5.0
    kind = "swap_graph"               # swap_graph | reset_agent | set_signals
    topology = { generator = "ring", n = 8 }
    join = { policy = "normal", seed = 1 }
    signals = { type = "cosines", ... }
    keep = [0, 1, 2, 3]
    # reset_agent: agent = 0, state = { policy = "zero" }
    # set_signals: signals = { ... }

    [metrics]
    tol = 1e-2
    window = 1.0                      # omit: stay below tol until the end
    terminal_window = 1.0

    [output]
    dir = "runs/example1"
    plot = true
    expect_divergence = false
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import tomli

from .algebra import ProtocolMatrices, ProtocolParams
from .graph import GENERATORS, Network, from_edge_list
from .signals import Constant, Polynomial, SignalBank, Sinusoid, cosine_bank, estimate_L, random_cosine_bank
from .sim import Event, InitPolicy, ResetAgent, SetSignals, SwapGraph, _check_events, euler_run


class ScenarioError(ValueError):
    """Raised with every problem found, one per entry of ``errors``."""

    def __init__(self, errors, source=None):
        self.errors = list(errors)
        self.source = source
        head = f"{source}: " if source else ""
        super().__init__(head + "invalid scenario:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass(frozen=True)
class Scenario:
    name: str
    params: ProtocolParams
    network: Network
    bank: SignalBank
    initial: InitPolicy
    t0: float
    t1: float
    h: float
    decimation: int
    events: tuple = ()
    description: str = ""
    tol: float = 1e-2
    window: float | None = None
    terminal_window: float = 1.0
    output_dir: str | None = None
    plot: bool = True
    expect_divergence: bool = False
    design_L: float | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def initial_state(self):
        return self.initial.draw(self.params.m, self.network.n)

    def run(self):
        """Integrate the scenario; returns a :class:`~redcho.sim.Trajectory`."""
        return euler_run(self.params, self.network, self.bank, self.initial_state(),
                         self.t0, self.t1, self.h, self.events, self.decimation)

    def disturbance_bound(self, samples: int = 20001) -> float:
        """Grid estimate of the disturbance bound for the initial bank over the horizon."""
        return estimate_L(self.bank, ProtocolMatrices.from_params(self.params).l, self.t0, self.t1, samples)

    def resolved(self) -> dict:
        """Fully expanded configuration, including seeds and drawn signal parameters."""
        events = []
        for ev in self.events:
            a = ev.action
            d = {"time": ev.time}
            if isinstance(a, SwapGraph):
                d.update(kind="swap_graph", topology=a.network.as_dict(), join=a.join.as_dict())
                if a.bank is not None:
                    d["signals"] = a.bank.as_dict()
                if a.keep is not None:
                    d["keep"] = list(a.keep)
            elif isinstance(a, ResetAgent):
                d.update(kind="reset_agent", agent=a.index, state=a.policy.as_dict())
            else:
                d.update(kind="set_signals", signals=a.bank.as_dict())
            events.append(d)
        return {
            "name": self.name,
            "protocol": {**self.params.as_dict(), **({"design_L": self.design_L} if self.design_L is not None else {})},
            "topology": self.network.as_dict(),
            "signals": self.bank.as_dict(),
            "initial": self.initial.as_dict(),
            "time": {"t0": self.t0, "t1": self.t1, "h": self.h, "decimation": self.decimation},
            "events": events,
            "metrics": {"tol": self.tol, "window": self.window, "terminal_window": self.terminal_window},
            "output": {"expect_divergence": self.expect_divergence},
        }


_TOP = {"name", "description", "protocol", "topology", "signals", "initial", "time", "events", "metrics", "output"}
_PROTOCOL = {"m", "gamma", "k", "theta", "design_L"}
_TOPOLOGY = {"generator", "n", "edges", "allow_disconnected"}
_SIGNALS = {
    "cosines": {"type", "amplitudes", "frequencies", "phases", "subset"},
    "random_cosines": {"type", "n", "seed", "amplitude_range", "frequency_range", "subset"},
    "agents": {"type", "agent", "subset"},
}
_TERMS = {
    "sinusoid": {"type", "amplitude", "frequency", "phase"},
    "polynomial": {"type", "coeffs"},
    "constant": {"type", "value"},
}
_INIT = {"policy", "mean", "variance", "seed", "zero_sum", "values"}
_TIME = {"t0", "t1", "h", "decimation"}
_EVENT = {
    "swap_graph": {"time", "kind", "topology", "join", "signals", "keep"},
    "reset_agent": {"time", "kind", "agent", "state"},
    "set_signals": {"time", "kind", "signals"},
}
_METRICS = {"tol", "window", "terminal_window"}
_OUTPUT = {"dir", "plot", "expect_divergence"}


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, where, msg):
        self.errors.append(f"{where}: {msg}")

    def keys(self, table, allowed, where):
        if not isinstance(table, dict):
            self.add(where, f"expected a table, got {type(table).__name__}")
            return False
        for key in table:
            if key not in allowed:
                self.add(f"{where}.{key}" if where else key, f"unknown key (allowed: {', '.join(sorted(allowed))})")
        return True

    def need(self, table, key, where, kind=None):
        if key not in table:
            self.add(where, f"missing required key '{key}'")
            return None
        val = table[key]
        if kind is not None and not _is(val, kind):
            self.add(f"{where}.{key}", f"expected {kind}, got {val!r}")
            return None
        return val

    def opt(self, table, key, where, kind, default):
        if key not in table:
            return default
        val = table[key]
        if not _is(val, kind):
            self.add(f"{where}.{key}", f"expected {kind}, got {val!r}")
            return default
        return val


def _is(val, kind):
    if kind == "number":
        return isinstance(val, (int, float)) and not isinstance(val, bool) and math.isfinite(val)
    if kind == "int":
        return isinstance(val, int) and not isinstance(val, bool)
    if kind == "bool":
        return isinstance(val, bool)
    if kind == "str":
        return isinstance(val, str)
    if kind == "numbers":
        return isinstance(val, list) and all(_is(v, "number") for v in val)
    if kind == "ints":
        return isinstance(val, list) and all(_is(v, "int") for v in val)
    if kind == "table":
        return isinstance(val, dict)
    raise AssertionError(kind)


def _topology(c: _Collector, t, where) -> Network | None:
    if not c.keys(t, _TOPOLOGY, where):
        return None
    n = c.need(t, "n", where, "int")
    allow = c.opt(t, "allow_disconnected", where, "bool", False)
    if n is None:
        return None
    gen = t.get("generator")
    net = None
    try:
        if gen is not None and "edges" in t:
            c.add(where, "give either 'generator' or 'edges', not both")
        elif gen is not None:
            if gen not in GENERATORS:
                c.add(f"{where}.generator", f"unknown generator {gen!r} (choose from {', '.join(GENERATORS)})")
            else:
                net = GENERATORS[gen](n)
        elif "edges" in t:
            edges = t["edges"]
            if not (isinstance(edges, list) and all(_is(e, "ints") and len(e) == 2 for e in edges)):
                c.add(f"{where}.edges", "expected a list of [i, j] integer pairs")
            else:
                net = from_edge_list(n, edges)
        else:
            c.add(where, "missing 'generator' or 'edges'")
    except ValueError as exc:
        c.add(where, str(exc))
        return None
    if net is not None and not allow and not net.connected:
        c.add(where, "topology is disconnected (set allow_disconnected = true to run it anyway)")
    return net


def _term(c, d, where):
    if not isinstance(d, dict) or d.get("type") not in _TERMS:
        c.add(where, f"term needs type in {sorted(_TERMS)}")
        return None
    c.keys(d, _TERMS[d["type"]], where)
    if d["type"] == "sinusoid":
        a = c.need(d, "amplitude", where, "number")
        w = c.need(d, "frequency", where, "number")
        ph = c.opt(d, "phase", where, "number", 0.0)
        return None if a is None or w is None else Sinusoid(a, w, ph)
    if d["type"] == "polynomial":
        co = c.need(d, "coeffs", where, "numbers")
        return None if not co else Polynomial(tuple(co))
    v = c.need(d, "value", where, "number")
    return None if v is None else Constant(v)


def _signals(c: _Collector, s, where, max_order) -> SignalBank | None:
    if not isinstance(s, dict):
        c.add(where, "expected a table")
        return None
    typ = s.get("type")
    if typ not in _SIGNALS:
        c.add(f"{where}.type", f"expected one of {sorted(_SIGNALS)}, got {typ!r}")
        return None
    c.keys(s, _SIGNALS[typ], where)
    bank = None
    try:
        if typ == "cosines":
            a = c.need(s, "amplitudes", where, "numbers")
            w = c.need(s, "frequencies", where, "numbers")
            ph = c.opt(s, "phases", where, "numbers", None)
            if a is not None and w is not None:
                bank = cosine_bank(a, w, ph, max_order=max_order)
        elif typ == "random_cosines":
            n = c.need(s, "n", where, "int")
            seed = c.opt(s, "seed", where, "int", 0)
            ar = c.opt(s, "amplitude_range", where, "numbers", [0.2, 1.0])
            fr = c.opt(s, "frequency_range", where, "numbers", [0.1, 0.8])
            if len(ar) != 2 or len(fr) != 2:
                c.add(where, "ranges must be [low, high]")
            elif n is not None:
                bank = random_cosine_bank(n, seed, tuple(ar), tuple(fr), max_order=max_order)
        else:
            agents = s.get("agent")
            if not isinstance(agents, list) or not agents:
                c.add(f"{where}.agent", "expected a non-empty array of agent tables")
            else:
                out = []
                for i, ag in enumerate(agents):
                    aw = f"{where}.agent[{i}]"
                    if not c.keys(ag, {"terms"}, aw):
                        continue
                    terms = ag.get("terms", [])
                    if not isinstance(terms, list):
                        c.add(aw, "terms must be an array")
                        continue
                    built = [_term(c, term, f"{aw}.terms[{j}]") for j, term in enumerate(terms)]
                    out.append(tuple(b for b in built if b is not None))
                bank = SignalBank(tuple(out), max_order)
    except ValueError as exc:
        c.add(where, str(exc))
        return None
    if bank is not None and "subset" in s:
        sub = s["subset"]
        if not _is(sub, "ints") or any(not 0 <= i < bank.n for i in sub):
            c.add(f"{where}.subset", f"expected agent indices below {bank.n}")
        else:
            bank = bank.subset(sub)
    return bank


def _init(c: _Collector, d, where) -> InitPolicy | None:
    if not c.keys(d, _INIT, where):
        return None
    pol = c.opt(d, "policy", where, "str", "zero")
    if pol not in ("zero", "normal", "explicit"):
        c.add(f"{where}.policy", f"expected zero | normal | explicit, got {pol!r}")
        return None
    mean = c.opt(d, "mean", where, "number", 1.0)
    var = c.opt(d, "variance", where, "number", 1.0)
    seed = c.opt(d, "seed", where, "int", 0)
    zs = c.opt(d, "zero_sum", where, "bool", False)
    values = None
    if pol == "explicit":
        values = d.get("values")
        if not (isinstance(values, list) and values and all(_is(r, "numbers") for r in values)):
            c.add(f"{where}.values", "explicit policy needs values = [[...], ...]")
            return None
        values = tuple(tuple(r) for r in values)
    if var < 0:
        c.add(f"{where}.variance", "must be >= 0")
        return None
    return InitPolicy(pol, float(mean), float(var), seed, zs, values)


def parse_scenario(data: dict, source: str | None = None) -> Scenario:
    """Validate a decoded TOML document and build the scenario."""
    c = _Collector()
    c.keys(data, _TOP, "")
    name = c.need(data, "name", "scenario", "str") or "unnamed"
    desc = c.opt(data, "description", "scenario", "str", "")

    params = None
    design_L = None
    prot = data.get("protocol")
    if prot is None:
        c.add("protocol", "missing required table")
    elif c.keys(prot, _PROTOCOL, "protocol"):
        m = c.need(prot, "m", "protocol", "int")
        gamma = c.need(prot, "gamma", "protocol", "numbers")
        k = c.need(prot, "k", "protocol", "numbers")
        theta = c.opt(prot, "theta", "protocol", "number", 1.0)
        design_L = c.opt(prot, "design_L", "protocol", "number", None)
        if design_L is not None and design_L <= 0:
            c.add("protocol.design_L", "must be positive")
        if None not in (m, gamma, k):
            try:
                params = ProtocolParams(m, tuple(gamma), tuple(k), theta)
            except ValueError:
                probe = object.__new__(ProtocolParams)
                for key, val in dict(m=m, gamma=tuple(gamma), k=tuple(k), theta=float(theta)).items():
                    object.__setattr__(probe, key, val)
                for msg in probe.problems():
                    c.add("protocol", msg)
    max_order = params.m + 1 if params else None

    net = None
    if "topology" not in data:
        c.add("topology", "missing required table")
    else:
        net = _topology(c, data["topology"], "topology")

    bank = None
    if "signals" not in data:
        c.add("signals", "missing required table")
    else:
        bank = _signals(c, data["signals"], "signals", max_order)
    if bank is not None and net is not None and bank.n != net.n:
        c.add("signals", f"bank has {bank.n} agents but topology has {net.n}")

    initial = _init(c, data.get("initial", {}), "initial")
    if initial is not None and initial.kind == "explicit" and params and net:
        vals = initial.values
        if len(vals) != params.m + 1 or any(len(r) != net.n for r in vals):
            c.add("initial.values", f"need {params.m + 1} rows of {net.n} entries")

    t0 = t1 = h = None
    dec = 1
    tt = data.get("time")
    if tt is None:
        c.add("time", "missing required table")
    elif c.keys(tt, _TIME, "time"):
        t0 = c.opt(tt, "t0", "time", "number", 0.0)
        t1 = c.need(tt, "t1", "time", "number")
        h = c.need(tt, "h", "time", "number")
        dec = c.opt(tt, "decimation", "time", "int", 1)
        if h is not None and h <= 0:
            c.add("time.h", f"step must be positive, got {h}")
            h = None
        if t1 is not None and t1 <= t0:
            c.add("time.t1", "must exceed t0")
            t1 = None
        if dec < 1:
            c.add("time.decimation", "must be >= 1")
        if None not in (h, t1) and abs((t1 - t0) / h - round((t1 - t0) / h)) > 1e-6 * max(1.0, (t1 - t0) / h):
            c.add("time", f"horizon {t1 - t0} is not a whole number of steps of {h}")

    events = []
    raw_events = data.get("events", [])
    if not isinstance(raw_events, list):
        c.add("events", "expected an array of tables ([[events]])")
        raw_events = []
    last = -math.inf
    for i, ev in enumerate(raw_events):
        where = f"events[{i}]"
        kind = ev.get("kind") if isinstance(ev, dict) else None
        if kind not in _EVENT:
            c.add(f"{where}.kind", f"expected one of {sorted(_EVENT)}, got {kind!r}")
            continue
        c.keys(ev, _EVENT[kind], where)
        time = c.need(ev, "time", where, "number")
        if time is None:
            continue
        if None not in (t0, t1) and not (t0 < time < t1):
            c.add(f"{where}.time", f"{time} is not strictly inside ({t0}, {t1})")
        if time < last:
            c.add(f"{where}.time", "events must be sorted by time")
        last = time
        action = None
        if kind == "swap_graph":
            topo = c.need(ev, "topology", where, "table")
            enet = _topology(c, topo, f"{where}.topology") if topo is not None else None
            join = _init(c, ev.get("join", {"policy": "normal"}), f"{where}.join")
            ebank = _signals(c, ev["signals"], f"{where}.signals", max_order) if "signals" in ev else None
            keep = c.opt(ev, "keep", where, "ints", None)
            if enet is not None and join is not None:
                action = SwapGraph(enet, join, ebank, tuple(keep) if keep is not None else None)
        elif kind == "reset_agent":
            agent = c.need(ev, "agent", where, "int")
            pol = _init(c, ev.get("state", {"policy": "zero"}), f"{where}.state")
            if agent is not None and pol is not None:
                action = ResetAgent(agent, pol)
        else:
            sb = c.need(ev, "signals", where, "table")
            ebank = _signals(c, sb, f"{where}.signals", max_order) if sb is not None else None
            if ebank is not None:
                action = SetSignals(ebank)
        if action is not None:
            events.append(Event(float(time), action))

    met = data.get("metrics", {})
    tol, window, tw = 1e-2, None, 1.0
    if c.keys(met, _METRICS, "metrics"):
        tol = c.opt(met, "tol", "metrics", "number", 1e-2)
        window = c.opt(met, "window", "metrics", "number", None)
        tw = c.opt(met, "terminal_window", "metrics", "number", 1.0)
        if tol <= 0:
            c.add("metrics.tol", "must be positive")

    out = data.get("output", {})
    out_dir, plot, expect_div = None, True, False
    if c.keys(out, _OUTPUT, "output"):
        out_dir = c.opt(out, "dir", "output", "str", None)
        plot = c.opt(out, "plot", "output", "bool", True)
        expect_div = c.opt(out, "expect_divergence", "output", "bool", False)

    if not c.errors and params is not None and net is not None and bank is not None:
        try:
            n_end, bn_end = _check_events(events, net.n, bank.n, t0, t1, params.m)
            if n_end != bn_end:
                c.add("events", f"after all events the network has {n_end} agents but the signal bank has {bn_end}")
        except ValueError as exc:
            c.add("events", str(exc))

    if c.errors:
        raise ScenarioError(c.errors, source)
    return Scenario(
        name=name,
        description=desc,
        params=params,
        network=net,
        bank=bank,
        initial=initial,
        t0=float(t0),
        t1=float(t1),
        h=float(h),
        decimation=int(dec),
        events=tuple(events),
        tol=float(tol),
        window=window,
        terminal_window=float(tw),
        output_dir=out_dir,
        plot=plot,
        expect_divergence=expect_div,
        design_L=design_L,
        raw=data,
    )


def loads(text: str, source: str | None = None) -> Scenario:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError([f"parse error: {exc}"], source) from exc
    return parse_scenario(data, source)


def load(path) -> Scenario:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), str(path))


def preset_names() -> list[str]:
    files = resources.files("redcho") / "presets"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".toml"))


def preset_text(name: str) -> str:
    f = resources.files("redcho") / "presets" / f"{name}.toml"
    if not f.is_file():
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return f.read_text(encoding="utf-8")


def load_preset(name: str) -> Scenario:
    return loads(preset_text(name), f"preset:{name}")


def resolve(source: str) -> Scenario:
    """Load a scenario from a file path, or from ``preset:NAME`` / a bare preset name."""
    if source.startswith("preset:"):
        return load_preset(source[len("preset:"):])
    p = Path(source)
    if p.exists():
        return load(p)
    if source in preset_names():
        return load_preset(source)
    raise FileNotFoundError(f"no scenario file {source!r} and no preset of that name")


SWEEP_AXES = ("theta", "h", "seed", "variance")


def with_axis(scn: Scenario, axis: str, value: float) -> Scenario:
    """Copy of ``scn`` with one sweep axis set to ``value``."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    if not math.isfinite(value):
        raise ValueError(f"sweep value {value} is not finite")
    if axis == "theta":
        return replace(scn, params=replace(scn.params, theta=value))
    if axis == "h":
        if value <= 0:
            raise ValueError("h must be positive")
        spacing = scn.decimation * scn.h
        dec = max(1, int(round(spacing / value)))
        return replace(scn, h=float(value), decimation=dec)
    if scn.initial.kind != "normal":
        raise ValueError(f"axis {axis!r} needs a normal initial policy, scenario uses {scn.initial.kind!r}")
    if axis == "seed":
        if value != int(value):
            raise ValueError("seed values must be integers")
        return replace(scn, initial=replace(scn.initial, seed=int(value)))
    if value < 0:
        raise ValueError("variance must be >= 0")
    return replace(scn, initial=replace(scn.initial, variance=float(value)))
