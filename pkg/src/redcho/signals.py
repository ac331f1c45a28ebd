"""Closed-form reference signals u_i(t) and the mismatch signal w_i(t).

Every term type is closed under differentiation, so derivatives of any order
are evaluated exactly and no numerical differentiation reaches the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from numpy.polynomial import polynomial as P


@dataclass(frozen=True)
class Sinusoid:
    """a * cos(omega * t + phi)."""

    amplitude: float
    omega: float
    phase: float = 0.0

    def derivative(self, mu: int, t):
        return self.amplitude * self.omega**mu * np.cos(self.omega * t + self.phase + mu * np.pi / 2)


@dataclass(frozen=True)
class Polynomial:
    """sum_p coeffs[p] * t**p (ascending powers)."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def derivative(self, mu: int, t):
        c = np.asarray(self.coeffs, dtype=float)
        if mu:
            c = P.polyder(c, mu) if c.size > mu else np.zeros(1)
        return P.polyval(t, c) + 0.0 * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class Constant:
    value: float

    def derivative(self, mu: int, t):
        z = 0.0 * np.asarray(t, dtype=float)
        return z + (self.value if mu == 0 else 0.0)


Term = Union[Sinusoid, Polynomial, Constant]


@dataclass(frozen=True)
class SignalBank:
    """One sum of terms per agent.

    ``max_order`` optionally caps the derivative order that may be requested
    (normally ``m + 1``).
    """

    agents: tuple[tuple[Term, ...], ...]
    max_order: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(tuple(a) for a in self.agents))

    @property
    def n(self) -> int:
        return len(self.agents)

    def __len__(self):
        return self.n

    def _check_mu(self, mu: int):
        if int(mu) != mu or mu < 0:
            raise ValueError(f"derivative order must be a nonnegative integer, got {mu}")
        if self.max_order is not None and mu > self.max_order:
            raise ValueError(f"derivative order {mu} exceeds max_order {self.max_order}")

    def derivatives(self, mu: int, t) -> np.ndarray:
        """u^(mu)(t) for every agent; shape (n,) for scalar t, (len(t), n) otherwise."""
        self._check_mu(mu)
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.n,))
        for i, terms in enumerate(self.agents):
            for term in terms:
                out[..., i] += term.derivative(mu, t)
        return out

    def stacked(self, t: float, orders: int) -> np.ndarray:
        """Rows U^(0)(t) .. U^(orders-1)(t), shape (orders, n)."""
        return np.array([self.derivatives(mu, t) for mu in range(orders)]).reshape(orders, self.n)

    def scaled(self, c: float) -> "SignalBank":
        def scale(term):
            if isinstance(term, Sinusoid):
                return Sinusoid(c * term.amplitude, term.omega, term.phase)
            if isinstance(term, Polynomial):
                return Polynomial(tuple(c * v for v in term.coeffs))
            return Constant(c * term.value)

        return SignalBank(tuple(tuple(scale(t) for t in a) for a in self.agents), self.max_order)

    def subset(self, indices) -> "SignalBank":
        return SignalBank(tuple(self.agents[i] for i in indices), self.max_order)

    @cached_property
    def kernel_arrays(self):
        """Flat arrays for compiled evaluation of u_i(t).

        Returns ``(sin_agent, sin_amp, sin_omega, sin_phase, poly)`` where ``poly``
        is an (n, degree+1) ascending coefficient matrix that also absorbs constants.
        """
        sa, amp, om, ph = [], [], [], []
        deg = 0
        for terms in self.agents:
            for term in terms:
                if isinstance(term, Polynomial):
                    deg = max(deg, len(term.coeffs) - 1)
        poly = np.zeros((self.n, deg + 1))
        for i, terms in enumerate(self.agents):
            for term in terms:
                if isinstance(term, Sinusoid):
                    sa.append(i)
                    amp.append(term.amplitude)
                    om.append(term.omega)
                    ph.append(term.phase)
                elif isinstance(term, Polynomial):
                    poly[i, : len(term.coeffs)] += term.coeffs
                else:
                    poly[i, 0] += term.value
        return (
            np.array(sa, dtype=np.int64),
            np.array(amp, dtype=float),
            np.array(om, dtype=float),
            np.array(ph, dtype=float),
            poly,
        )

    def as_dict(self) -> list:
        def term_dict(term):
            if isinstance(term, Sinusoid):
                return {"type": "sinusoid", "amplitude": term.amplitude, "frequency": term.omega, "phase": term.phase}
            if isinstance(term, Polynomial):
                return {"type": "polynomial", "coeffs": list(term.coeffs)}
            return {"type": "constant", "value": term.value}

        return [[term_dict(t) for t in a] for a in self.agents]


def eval_derivative(bank: SignalBank, i: int, mu: int, t: float) -> float:
    if not 0 <= i < bank.n:
        raise IndexError(f"agent {i} not in bank of size {bank.n}")
    bank._check_mu(mu)
    return float(sum(term.derivative(mu, t) for term in bank.agents[i]))


def average_derivative(bank: SignalBank, mu: int, t):
    if bank.n == 0:
        raise ValueError("average of an empty bank")
    return bank.derivatives(mu, t).mean(axis=-1)


def disturbance_vector(bank: SignalBank, l, t) -> np.ndarray:
    """w_i(t) for all agents (trailing axis), given coefficients l_0..l_m."""
    l = np.asarray(l, dtype=float)
    m = l.size - 1
    total = 0.0
    for mu in range(m + 2):
        U = bank.derivatives(mu, t)
        diff = U.mean(axis=-1, keepdims=True) - U
        total = total + (diff if mu == m + 1 else l[mu] * diff)
    return total


def disturbance_w(bank: SignalBank, l, i: int, t: float) -> float:
    if not 0 <= i < bank.n:
        raise IndexError(f"agent {i} not in bank of size {bank.n}")
    return float(disturbance_vector(bank, l, t)[..., i])


SAFETY_FACTOR = 1.05


def estimate_L(bank: SignalBank, l, t0: float, t1: float, samples: int = 20001) -> float:
    """Grid estimate of sup_t max_i |w_i(t)| on [t0, t1], inflated by 5%.

    Exact in the limit of a fine grid only when [t0, t1] covers a full period
    of the slowest component; it is an estimate, not a certified bound.
    """
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    if samples < 2:
        raise ValueError("need at least two samples")
    ts = np.linspace(t0, t1, int(samples))
    w = disturbance_vector(bank, l, ts)
    return SAFETY_FACTOR * float(np.max(np.abs(w)))


EXAMPLE1_AMPLITUDES = (0.95, 0.34, 0.58, 0.22, 0.75, 0.25, 0.50, 0.69)
EXAMPLE1_FREQUENCIES = (0.70, 0.75, 0.27, 0.67, 0.65, 0.16, 0.11, 0.49)


def cosine_bank(amplitudes, frequencies, phases=None, max_order=None) -> SignalBank:
    if len(amplitudes) != len(frequencies):
        raise ValueError("amplitudes and frequencies differ in length")
    phases = phases if phases is not None else [0.0] * len(amplitudes)
    if len(phases) != len(amplitudes):
        raise ValueError("phases length mismatch")
    return SignalBank(
        tuple((Sinusoid(float(a), float(w), float(p)),) for a, w, p in zip(amplitudes, frequencies, phases)),
        max_order,
    )


def example1_bank(max_order=None) -> SignalBank:
    return cosine_bank(EXAMPLE1_AMPLITUDES, EXAMPLE1_FREQUENCIES, max_order=max_order)


def random_cosine_bank(n: int, seed: int, amplitude_range=(0.2, 1.0), frequency_range=(0.1, 0.8), max_order=None):
    """Seeded u_i = a_i cos(omega_i t) with uniform a_i and omega_i."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(*amplitude_range, size=n)
    w = rng.uniform(*frequency_range, size=n)
    return cosine_bank(a, w, max_order=max_order)
