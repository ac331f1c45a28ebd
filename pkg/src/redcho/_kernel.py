"""Compiled fixed-step Euler loop for the REDCHO network.

Mirrors :func:`redcho.dynamics.redcho_rhs` exactly; the test-suite checks
the two against each other step by step.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _reference(t, n, sa, samp, som, sph, poly, out):
    deg = poly.shape[1]
    for i in range(n):
        acc = poly[i, deg - 1]
        for p in range(deg - 2, -1, -1):
            acc = acc * t + poly[i, p]
        out[i] = acc
    for s in range(sa.shape[0]):
        out[sa[s]] += samp[s] * math.cos(som[s] * t + sph[s])


@njit(cache=True)
def advance(X, step0, nsteps, t0, h, gains, alphas, gamma, ei, ej, sa, samp, som, sph, poly):
    """Apply ``nsteps`` explicit Euler steps to ``X`` in place.

    Time of step ``k`` is ``t0 + k * h`` with ``k`` counted from ``step0``.
    """
    nb, n = X.shape
    ne = ei.shape[0]
    u = np.empty(n)
    dX = np.empty((nb, n))
    for s in range(nsteps):
        t = t0 + (step0 + s) * h
        _reference(t, n, sa, samp, som, sph, poly, u)
        for mu in range(nb):
            for i in range(n):
                dX[mu, i] = -gamma[mu] * X[mu, i]
                if mu + 1 < nb:
                    dX[mu, i] += X[mu + 1, i]
        for e in range(ne):
            i = ei[e]
            j = ej[e]
            d = (u[i] - X[0, i]) - (u[j] - X[0, j])
            if d > 0.0:
                sg = 1.0
            elif d < 0.0:
                sg = -1.0
            else:
                sg = 0.0
            ad = abs(d)
            for mu in range(nb):
                a = alphas[mu]
                if a == 0.0:
                    v = gains[mu] * sg
                else:
                    v = gains[mu] * sg * ad**a
                dX[mu, i] += v
                dX[mu, j] -= v
        for mu in range(nb):
            for i in range(n):
                X[mu, i] += h * dX[mu, i]


@njit(cache=True)
def linear_steps(A, v, nsteps, h):
    """v <- v + h A v, repeated ``nsteps`` times (in place)."""
    k = v.shape[0]
    tmp = np.empty(k)
    for s in range(nsteps):
        for r in range(k):
            acc = 0.0
            for c in range(k):
                acc += A[r, c] * v[c]
            tmp[r] = acc
        for r in range(k):
            v[r] += h * tmp[r]
