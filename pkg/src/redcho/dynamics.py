"""REDCHO vector field, outputs, error coordinates and homogeneous fields.

States are arrays of shape ``(m + 1, n)``: row ``mu`` is the block ``X_mu``.
Flattening row-major gives the stacked vector ``[X_0; ...; X_m]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import ProtocolMatrices, ProtocolParams
from .graph import Network
from .signals import SignalBank


@dataclass(frozen=True)
class NetworkState:
    X: np.ndarray
    t: float

    @property
    def stacked(self) -> np.ndarray:
        return np.asarray(self.X).reshape(-1)

    @classmethod
    def from_stacked(cls, vec, m: int, t: float = 0.0) -> "NetworkState":
        vec = np.asarray(vec, dtype=float)
        return cls(vec.reshape(m + 1, -1), t)


@dataclass(frozen=True)
class OutputFrame:
    Y: np.ndarray  # (m+1, n)
    ybar: np.ndarray  # (m+1,)
    Ytilde: np.ndarray  # (m+1, n)


def signum_power(x, alpha: float):
    """|x|**alpha * sign(x), with sign(0) = 0 for every alpha >= 0."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    x = np.asarray(x, dtype=float)
    if alpha == 0:
        out = np.sign(x)
    else:
        out = np.sign(x) * np.abs(x) ** alpha
    return out if out.ndim else float(out)


def edge_coupling(net: Network, y0, alpha: float) -> np.ndarray:
    """D @ sig(D^T y0)^alpha."""
    D = net.incidence
    return D @ signum_power(D.T @ np.asarray(y0, dtype=float), alpha)


def coupling_blocks(y0, params: ProtocolParams, net: Network, theta: float | None = None) -> np.ndarray:
    """Blocks k_mu theta^(mu+1) D sig(D^T y0)^((m-mu)/(m+1)), shape (m+1, n)."""
    theta = params.theta if theta is None else theta
    gains = np.asarray(params.k) * theta ** np.arange(1, params.m + 2)
    return np.array([g * edge_coupling(net, y0, a) for g, a in zip(gains, params.exponents)])


def _check_state(X, n: int, m: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != (m + 1, n):
        raise ValueError(f"state has shape {X.shape}, expected {(m + 1, n)}")
    return X


def projector(n: int) -> np.ndarray:
    return np.eye(n) - np.full((n, n), 1.0 / n)


def output_map(X, bank: SignalBank, pm: ProtocolMatrices, t: float) -> OutputFrame:
    """Y_mu = U^(mu)(t) - sum_nu G[mu, nu] X_nu, with its consensus split."""
    m = pm.order
    X = _check_state(X, bank.n, m)
    U = bank.stacked(t, m + 1)
    Y = U - pm.G @ X
    ybar = Y.mean(axis=1)
    return OutputFrame(Y, ybar, Y - ybar[:, None])


def redcho_rhs(X, Y0, params: ProtocolParams, net: Network) -> np.ndarray:
    """Time derivative of the internal states for the current Y_0."""
    m = params.m
    X = _check_state(X, net.n, m)
    Y0 = np.asarray(Y0, dtype=float)
    if Y0.shape != (net.n,):
        raise ValueError(f"Y0 has shape {Y0.shape}, expected {(net.n,)}")
    dX = coupling_blocks(Y0, params, net) - np.asarray(params.gamma)[:, None] * X
    dX[:-1] += X[1:]
    return dX


def error_rhs(X, bank: SignalBank, pm: ProtocolMatrices, params: ProtocolParams, net: Network, t: float) -> np.ndarray:
    """d/dt of the consensus error blocks P Y_mu along the network flow."""
    m = params.m
    frame = output_map(X, bank, pm, t)
    dU = bank.stacked(t, m + 2)[1:]
    dY = dU - pm.G @ redcho_rhs(X, frame.Y[0], params, net)
    return dY - dY.mean(axis=1, keepdims=True)


def z_transform(Ytilde, pm: ProtocolMatrices) -> np.ndarray:
    """Z = Theta G^-1 Ytilde, blockwise."""
    Ytilde = np.asarray(Ytilde, dtype=float)
    if Ytilde.shape[0] != pm.order + 1:
        raise ValueError(f"expected {pm.order + 1} blocks, got {Ytilde.shape[0]}")
    return pm.Theta @ (pm.Ginv @ Ytilde)


def h_field(Z, w, params: ProtocolParams, net: Network, L: float | None = None) -> np.ndarray:
    """One selection of the set-valued field H; ``w`` picks the last block.

    Uses unit region gain (theta = 1) in the coupling term.
    """
    m = params.m
    Z = _check_state(Z, net.n, m)
    w = np.broadcast_to(np.asarray(w, dtype=float), (net.n,))
    if L is not None and np.max(np.abs(w)) > L:
        raise ValueError(f"selection |w|_inf = {np.max(np.abs(w))} exceeds L = {L}")
    H = np.empty_like(Z)
    H[:-1] = Z[1:]
    H[-1] = w
    return H - coupling_blocks(Z[0], params, net, theta=1.0)


def q_field(Z, params: ProtocolParams) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    return -(np.asarray(params.gamma) / params.theta)[:, None] * Z


def homogeneity_weights(m: int) -> np.ndarray:
    """r_mu = m + 1 - mu."""
    return (m + 1 - np.arange(m + 1)).astype(float)


def dilation(Z, lam: float, weights=None) -> np.ndarray:
    if not lam > 0:
        raise ValueError(f"dilation needs lambda > 0, got {lam}")
    Z = np.asarray(Z, dtype=float)
    r = homogeneity_weights(Z.shape[0] - 1) if weights is None else np.asarray(weights, dtype=float)
    return (lam**r)[:, None] * Z


def z_disturbance(bank: SignalBank, pm: ProtocolMatrices, theta: float, t: float) -> np.ndarray:
    """P W_{m+1}(t) / theta^(m+1), the last-block input of the Z system."""
    m = pm.order
    U = bank.stacked(t, m + 2)
    W = U[m + 1] + pm.l @ U[: m + 1]
    return (W - W.mean()) / theta ** (m + 1)
