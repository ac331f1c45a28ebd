"""Protocol parameters and the fixed matrices derived from them.

Every object here is built once from a :class:`ProtocolParams` and never
mutated afterwards; arrays are flagged read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ProtocolParams:
    """Order ``m``, leak gains ``gamma``, sliding gains ``k`` and region gain ``theta``.

    ``gamma`` must be either all strictly positive (REDCHO) or all zero with
    ``theta == 1`` (EDCHO). Mixed vectors are rejected.
    """

    m: int
    gamma: tuple[float, ...]
    k: tuple[float, ...]
    theta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        object.__setattr__(self, "k", tuple(float(v) for v in self.k))
        object.__setattr__(self, "theta", float(self.theta))
        errors = self.problems()
        if errors:
            raise ValueError("; ".join(errors))

    def problems(self) -> list[str]:
        errs = []
        if int(self.m) != self.m or self.m < 0:
            errs.append(f"m must be a nonnegative integer, got {self.m!r}")
            return errs
        size = self.m + 1
        if len(self.gamma) != size:
            errs.append(f"gamma needs {size} entries, got {len(self.gamma)}")
        if len(self.k) != size:
            errs.append(f"k needs {size} entries, got {len(self.k)}")
        if not all(np.isfinite(self.gamma)) or not all(np.isfinite(self.k)):
            errs.append("gamma and k must be finite")
        if any(v <= 0 for v in self.k):
            errs.append(f"k entries must be > 0, got {list(self.k)}")
        if not np.isfinite(self.theta) or self.theta < 1:
            errs.append(f"theta must be >= 1, got {self.theta}")
        if any(g < 0 for g in self.gamma):
            errs.append(f"gamma entries must be >= 0, got {list(self.gamma)}")
        elif self.gamma and not (all(g > 0 for g in self.gamma) or all(g == 0 for g in self.gamma)):
            errs.append(f"gamma must be all positive or all zero, got {list(self.gamma)}")
        elif self.gamma and all(g == 0 for g in self.gamma) and self.theta != 1:
            errs.append("gamma = 0 (EDCHO) requires theta = 1")
        return errs

    @property
    def mode(self) -> str:
        return "edcho" if all(g == 0 for g in self.gamma) else "redcho"

    @property
    def exponents(self) -> np.ndarray:
        """Signum-power exponents (m - mu)/(m + 1) for mu = 0..m."""
        return (self.m - np.arange(self.m + 1)) / (self.m + 1)

    @property
    def effective_gains(self) -> np.ndarray:
        """k_mu * theta**(mu + 1)."""
        return np.asarray(self.k) * self.theta ** np.arange(1, self.m + 2)

    def as_dict(self) -> dict:
        return {"m": self.m, "gamma": list(self.gamma), "k": list(self.k), "theta": self.theta}


def build_gamma(params: ProtocolParams | None = None, *, gamma=None) -> np.ndarray:
    """Upper bidiagonal matrix with ``-gamma`` on the diagonal and ones above it."""
    g = np.asarray(params.gamma if params is not None else gamma, dtype=float)
    size = g.size
    return np.diag(-g) + np.eye(size, k=1)


def observability_matrix(Gamma: np.ndarray) -> np.ndarray:
    """Stack C, C Gamma, ..., C Gamma^m with C = [1, 0, ..., 0]."""
    Gamma = np.asarray(Gamma, dtype=float)
    size = Gamma.shape[0]
    G = np.zeros((size, size))
    row = np.zeros(size)
    row[0] = 1.0
    for mu in range(size):
        G[mu] = row
        row = row @ Gamma
    return G


def unit_lower_inverse(L: np.ndarray) -> np.ndarray:
    """Inverse of a unit lower-triangular matrix by forward substitution."""
    L = np.asarray(L, dtype=float)
    size = L.shape[0]
    inv = np.eye(size)
    for col in range(size):
        for row in range(col + 1, size):
            inv[row, col] = -L[row, col:row] @ inv[col:row, col]
    return inv


def char_poly_coeffs(gamma) -> np.ndarray:
    """Coefficients l_0..l_m with prod(s + gamma_mu) = s^(m+1) + sum l_mu s^mu."""
    poly = np.array([1.0])  # ascending powers of s
    for g in np.asarray(gamma, dtype=float):
        poly = np.convolve(poly, [g, 1.0])
    return poly[:-1]


def companion_matrix(l) -> np.ndarray:
    l = np.asarray(l, dtype=float)
    size = l.size
    M = np.eye(size, k=1)
    M[-1, :] = -l
    return M


def theta_matrix(theta: float, m: int) -> np.ndarray:
    """diag(1, 1/theta, ..., 1/theta^m)."""
    return np.diag(float(theta) ** -np.arange(m + 1, dtype=float))


@dataclass(frozen=True)
class ProtocolMatrices:
    Gamma: np.ndarray
    G: np.ndarray
    Ginv: np.ndarray
    l: np.ndarray
    GammaTilde: np.ndarray
    Theta: np.ndarray

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "ProtocolMatrices":
        Gamma = build_gamma(params)
        G = observability_matrix(Gamma)
        l = char_poly_coeffs(params.gamma)
        return cls(
            Gamma=_frozen(Gamma),
            G=_frozen(G),
            Ginv=_frozen(unit_lower_inverse(G)),
            l=_frozen(l),
            GammaTilde=_frozen(companion_matrix(l)),
            Theta=_frozen(theta_matrix(params.theta, params.m)),
        )

    @property
    def order(self) -> int:
        return self.Gamma.shape[0] - 1


@dataclass(frozen=True)
class SimilarityReport:
    """Residuals of the similarity identities.

    ``gamma_residual`` is absolute. ``scaled_residual`` divides it by
    ``||G|| ||Gamma|| ||G^-1||`` (infinity norms), the size of the terms that
    cancel in the product; it is what ``scaled=True`` checks against.
    """

    gamma_residual: float
    b_residual: float
    scaled_residual: float
    tol_gamma: float = 1e-10
    tol_b: float = 1e-12
    scaled: bool = False
    messages: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        r = self.scaled_residual if self.scaled else self.gamma_residual
        return r <= self.tol_gamma and self.b_residual <= self.tol_b


def verify_similarity(
    pm: ProtocolMatrices, tol_gamma: float = 1e-10, tol_b: float = 1e-12, scaled: bool = False
) -> SimilarityReport:
    """Residuals of GammaTilde = G Gamma G^-1 and G B = B in the infinity norm.

    Failing residuals are listed in ``messages``; nothing is raised.
    """
    size = pm.Gamma.shape[0]
    B = np.zeros(size)
    B[-1] = 1.0
    rg = float(np.linalg.norm(pm.GammaTilde - pm.G @ pm.Gamma @ pm.Ginv, np.inf))
    rb = float(np.linalg.norm(pm.G @ B - B, np.inf))
    inf = lambda a: float(np.linalg.norm(a, np.inf))  # noqa: E731
    scale = inf(pm.G) * inf(pm.Gamma) * inf(pm.Ginv)
    rs = rg / scale if scale > 0 else rg
    msgs = []
    if (rs if scaled else rg) > tol_gamma:
        label = "scaled residual" if scaled else "||GammaTilde - G Gamma G^-1||_inf"
        msgs.append(f"{label} = {rs if scaled else rg:.3e} exceeds {tol_gamma:.1e}")
    if rb > tol_b:
        msgs.append(f"||G B - B||_inf = {rb:.3e} exceeds {tol_b:.1e}")
    return SimilarityReport(rg, rb, rs, tol_gamma, tol_b, scaled, tuple(msgs))


EXAMPLE1_PARAMS = dict(m=2, gamma=(3.0, 3.0, 3.0), k=(6.0, 11.0, 6.0), theta=1.5)


def example1_params(**overrides) -> ProtocolParams:
    """Second-order gain set used throughout the reproduced experiments."""
    kw = dict(EXAMPLE1_PARAMS)
    kw.update(overrides)
    return ProtocolParams(**kw)
