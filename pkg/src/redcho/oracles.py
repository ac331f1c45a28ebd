"""Independent reference computations used by ``verify`` and the tests.

Each function here takes a different route from the production code it is
compared against: Kronecker products instead of blockwise algebra,
adjacency sums instead of incidence products, root expansion and
Faddeev-LeVerrier instead of convolution, dense solves instead of
forward substitution.
"""

from __future__ import annotations

import numpy as np


def spow(x, a):
    x = np.asarray(x, dtype=float)
    return np.where(x == 0, 0.0, np.sign(x) * np.abs(x) ** a) if a > 0 else np.sign(x)


def adjacency_coupling(A, y, alpha):
    """sum_j a_ij sig(y_i - y_j)^alpha for each i."""
    y = np.asarray(y, dtype=float)
    return np.array([sum(A[i, j] * spow(y[i] - y[j], alpha) for j in range(len(y))) for i in range(len(y))])


def kron_rhs(x, y0, m, gamma, k, theta, A):
    """(Gamma kron I) x + F(y0; theta), with F built from adjacency sums."""
    n = A.shape[0]
    Gamma = np.zeros((m + 1, m + 1))
    for mu in range(m + 1):
        Gamma[mu, mu] = -gamma[mu]
        if mu < m:
            Gamma[mu, mu + 1] = 1.0
    F = np.concatenate([k[mu] * theta ** (mu + 1) * adjacency_coupling(A, y0, (m - mu) / (m + 1)) for mu in range(m + 1)])
    return np.kron(Gamma, np.eye(n)) @ np.asarray(x, dtype=float) + F


def kron_output(x, U, G):
    n = len(x) // G.shape[0]
    return np.asarray(U, dtype=float) - np.kron(G, np.eye(n)) @ np.asarray(x, dtype=float)


def edcho_error_rhs(Ytilde, PU_next, k, D):
    """Consensus-error dynamics of the zero-leak, unit-region protocol, written out directly."""
    m = Ytilde.shape[0] - 1
    z = D.T @ Ytilde[0]
    out = np.empty_like(Ytilde)
    for mu in range(m):
        out[mu] = Ytilde[mu + 1] - k[mu] * D @ spow(z, (m - mu) / (m + 1))
    out[m] = PU_next - k[m] * D @ np.sign(z)
    return out


def root_expansion_coeffs(gamma):
    """Ascending l_0..l_m from the monic polynomial with roots -gamma."""
    desc = np.poly(-np.asarray(gamma, dtype=float))
    return desc[::-1][:-1]


def faddeev_leverrier(M):
    """Ascending coefficients c_0..c_{n-1} of det(sI - M) = s^n + sum c_i s^i."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    Mk = np.zeros_like(M)
    for j in range(1, n + 1):
        Mk = M @ Mk + coeffs[n - j + 1] * np.eye(n)
        coeffs[n - j] = -np.trace(M @ Mk) / j
    return coeffs[:-1]


def brute_observability(Gamma):
    size = Gamma.shape[0]
    C = np.eye(size)[0]
    return np.array([C @ np.linalg.matrix_power(Gamma, mu) for mu in range(size)])


def euler_linear(A, x0, nsteps, h):
    """x_{k+1} = (I + h A) x_k by matrix power; a closed form for the linear recursion."""
    return np.linalg.matrix_power(np.eye(len(x0)) + h * np.asarray(A), nsteps) @ np.asarray(x0, dtype=float)
