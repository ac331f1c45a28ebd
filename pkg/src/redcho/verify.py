"""Randomized identity, homogeneity and projection suites.

``run_all`` is what ``redcho verify`` executes. Every suite compares the
production code against a route from :mod:`redcho.oracles` or against an
exact algebraic identity, over draws from a seeded generator.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from . import oracles
from .algebra import ProtocolMatrices, ProtocolParams, verify_similarity
from .dynamics import (
    dilation,
    error_rhs,
    h_field,
    homogeneity_weights,
    output_map,
    q_field,
    redcho_rhs,
)
from .graph import Network, from_edge_list
from .signals import random_cosine_bank
from .sim import InitPolicy, consensus_projection_check, euler_run, mean_recursion


@dataclass
class SuiteResult:
    name: str
    passed: bool
    worst: float
    tol: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: worst={self.worst:.3e} tol={self.tol:.1e} ({self.seconds:.2f}s) {self.detail}".rstrip()


def random_connected_graph(rng, n: int, p: float = 0.4) -> Network:
    """Random spanning tree plus extra edges with probability ``p``."""
    order = rng.permutation(n)
    edges = set()
    for idx in range(1, n):
        a, b = int(order[idx]), int(order[rng.integers(idx)])
        edges.add((min(a, b), max(a, b)))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.add((i, j))
    return from_edge_list(n, edges)


def random_params(rng, m: int, positive=True, theta=None) -> ProtocolParams:
    """Draws at the magnitude of the shipped gain set: gamma in (0, 10], k in [1, 12], theta in [1, 2]."""
    gamma = rng.uniform(0.1, 10.0, m + 1) if positive else np.zeros(m + 1)
    k = rng.uniform(1.0, 12.0, m + 1)
    th = theta if theta is not None else (rng.uniform(1.0, 2.0) if positive else 1.0)
    return ProtocolParams(m, tuple(gamma), tuple(k), th)


def similarity_suite(rng, draws=100, fault=False) -> SuiteResult:
    """Condition-scaled check; the absolute 1e-10 bound is unreachable in
    float64 once entries of G reach ~1e6 (m >= 4, gamma near 10)."""
    worst_g = worst_b = worst_abs = 0.0
    unit_lower = True
    for _ in range(draws):
        m = int(rng.integers(1, 7))
        gamma = rng.uniform(0.0, 10.0, m + 1)
        gamma[gamma == 0.0] = 10.0  # keep draws in (0, 10]
        pm = ProtocolMatrices.from_params(ProtocolParams(m, tuple(gamma), (1.0,) * (m + 1), 1.0))
        if fault:
            bad = np.array(pm.GammaTilde)
            bad[-1, 0] = -bad[-1, 0]
            pm = dataclasses.replace(pm, GammaTilde=bad)
        rep = verify_similarity(pm, scaled=True)
        worst_abs = max(worst_abs, rep.gamma_residual)
        worst_g = max(worst_g, rep.scaled_residual / rep.tol_gamma)
        worst_b = max(worst_b, rep.b_residual / rep.tol_b)
        G = pm.G
        unit_lower &= bool(np.all(np.diag(G) == 1.0) and np.all(np.triu(G, 1) == 0.0))
    ok = worst_g <= 1 and worst_b <= 1 and unit_lower
    return SuiteResult(
        "similarity", ok, max(worst_g, worst_b), 1.0,
        f"(scaled residual/tolerance; max absolute residual {worst_abs:.1e}; G unit lower triangular: {unit_lower})",
    )


def char_poly_suite(rng, draws=100) -> SuiteResult:
    from .algebra import build_gamma, char_poly_coeffs, companion_matrix

    worst = 0.0
    for _ in range(draws):
        m = int(rng.integers(0, 7))
        gamma = rng.uniform(0.0, 10.0, m + 1)
        l = char_poly_coeffs(gamma)
        a = oracles.faddeev_leverrier(companion_matrix(l))
        b = oracles.faddeev_leverrier(build_gamma(gamma=gamma))
        c = oracles.root_expansion_coeffs(gamma)
        scale = max(1.0, np.max(np.abs(c)))
        worst = max(worst, np.max(np.abs(a - b)) / scale, np.max(np.abs(l - c)) / scale)
    return SuiteResult("char_poly", worst <= 1e-9, worst, 1e-9, "(relative)")


def theta_conjugation_suite(rng, draws=100) -> SuiteResult:
    worst = 0.0
    for _ in range(draws):
        m = int(rng.integers(0, 7))
        p = random_params(rng, m, theta=rng.uniform(1.0, 10.0))
        pm = ProtocolMatrices.from_params(p)
        A0 = pm.Gamma + np.diag(p.gamma)
        lhs = pm.Theta @ pm.Gamma @ np.linalg.inv(pm.Theta)
        rhs = p.theta * (A0 - np.diag(np.asarray(p.gamma) / p.theta))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return SuiteResult("theta_conjugation", worst <= 1e-12, worst, 1e-12)


def vectorization_suite(rng, draws=50) -> SuiteResult:
    worst = 0.0
    for _ in range(draws):
        n = int(rng.integers(2, 13))
        m = int(rng.integers(0, 4))
        net = random_connected_graph(rng, n)
        p = random_params(rng, m)
        pm = ProtocolMatrices.from_params(p)
        bank = random_cosine_bank(n, int(rng.integers(1 << 30)))
        X = rng.normal(0, 1, (m + 1, n))
        t = rng.uniform(0, 10)
        frame = output_map(X, bank, pm, t)
        U = bank.stacked(t, m + 1).reshape(-1)
        y_or = oracles.kron_output(X.reshape(-1), U, np.array(pm.G))
        worst = max(worst, float(np.max(np.abs(frame.Y.reshape(-1) - y_or))))
        f = redcho_rhs(X, frame.Y[0], p, net).reshape(-1)
        f_or = oracles.kron_rhs(X.reshape(-1), frame.Y[0], m, p.gamma, p.k, p.theta, net.adjacency)
        worst = max(worst, float(np.max(np.abs(f - f_or))))
    return SuiteResult("vectorization", worst <= 1e-12, worst, 1e-12)


def orientation_suite(rng, draws=50) -> SuiteResult:
    worst = 0.0
    for _ in range(draws):
        n = int(rng.integers(2, 13))
        net = random_connected_graph(rng, n)
        D = np.array(net.incidence)
        flip = D.copy()
        flip[:, rng.integers(net.num_edges)] *= -1
        v = rng.normal(size=n)
        for alpha in (0.0, 1 / 3, 0.5, 2 / 3, 1.0):
            a = D @ oracles.spow(D.T @ v, alpha)
            b = flip @ oracles.spow(flip.T @ v, alpha)
            worst = max(worst, float(np.max(np.abs(a - b))))
    return SuiteResult("orientation", worst <= 1e-14, worst, 1e-14)


def homogeneity_suite(rng, draws=50) -> SuiteResult:
    worst = 0.0
    for _ in range(draws):
        n = int(rng.integers(2, 10))
        m = int(rng.integers(0, 4))
        net = random_connected_graph(rng, n)
        p = random_params(rng, m)
        Z = rng.normal(0, 1, (m + 1, n))
        lam = rng.uniform(0.5, 2.0)
        r = homogeneity_weights(m)
        lhs = h_field(dilation(Z, lam, r), 0.0, p, net)
        rhs = dilation(h_field(Z, 0.0, p, net), lam, r) / lam
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(rhs)))))
        lq = q_field(dilation(Z, lam, r), p)
        rq = dilation(q_field(Z, p), lam, r)
        worst = max(worst, float(np.max(np.abs(lq - rq)) / max(1.0, np.max(np.abs(rq)))))
    return SuiteResult("homogeneity", worst <= 1e-9, worst, 1e-9, "(relative)")


def edcho_limit_suite(rng, draws=50) -> SuiteResult:
    worst = 0.0
    for _ in range(draws):
        n = int(rng.integers(2, 13))
        m = int(rng.integers(0, 4))
        net = random_connected_graph(rng, n)
        p = random_params(rng, m, positive=False)
        pm = ProtocolMatrices.from_params(p)
        bank = random_cosine_bank(n, int(rng.integers(1 << 30)))
        X = rng.normal(0, 1, (m + 1, n))
        t = rng.uniform(0, 10)
        got = error_rhs(X, bank, pm, p, net, t)
        Yt = output_map(X, bank, pm, t).Ytilde
        Un = bank.derivatives(m + 1, t)
        ref = oracles.edcho_error_rhs(Yt, Un - Un.mean(), p.k, np.array(net.incidence))
        worst = max(worst, float(np.max(np.abs(got - ref))))
    return SuiteResult("edcho_limit", worst <= 1e-12, worst, 1e-12)


def _example_run_inputs(rng, positive=True):
    from .graph import ring
    from .signals import example1_bank
    from .algebra import example1_params

    p = example1_params() if positive else ProtocolParams(2, (0.0, 0.0, 0.0), (6.0, 11.0, 6.0), 1.0)
    X0 = InitPolicy("normal", 1.0, 1.0, int(rng.integers(1 << 30)), zero_sum=not positive).draw(2, 8)
    return p, ring(8), example1_bank(), X0


def projection_suite(rng, steps=10_000, h=1e-4) -> SuiteResult:
    p, net, bank, X0 = _example_run_inputs(rng)
    chk = consensus_projection_check(p, net, bank, X0, 0.0, steps * h, h, decimation=100)
    return SuiteResult("projection", chk.residual <= 1e-9, chk.residual, 1e-9)


def block_sum_suite(rng, steps=10_000, h=1e-4) -> SuiteResult:
    worst = 0.0
    for positive in (True, False):
        p, net, bank, X0 = _example_run_inputs(rng, positive)
        traj = euler_run(p, net, bank, X0, 0.0, steps * h, h, decimation=steps)
        ref = mean_recursion(p, X0.sum(axis=1), steps, h)
        worst = max(worst, float(np.max(np.abs(traj.block_sum[-1] - ref))))
    return SuiteResult("block_sum", worst <= 1e-9, worst, 1e-9)


SUITES = {
    "similarity": similarity_suite,
    "char_poly": char_poly_suite,
    "theta_conjugation": theta_conjugation_suite,
    "vectorization": vectorization_suite,
    "orientation": orientation_suite,
    "homogeneity": homogeneity_suite,
    "edcho_limit": edcho_limit_suite,
    "projection": projection_suite,
    "block_sum": block_sum_suite,
}


def run_all(seed: int = 0, fault: bool = False) -> list[SuiteResult]:
    results = []
    for name, fn in SUITES.items():
        rng = np.random.default_rng([seed, len(results)])
        start = time.perf_counter()
        res = fn(rng, fault=fault) if name == "similarity" else fn(rng)
        res.seconds = time.perf_counter() - start
        results.append(res)
    return results
