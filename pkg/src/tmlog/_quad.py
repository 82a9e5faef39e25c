"""Small quadrature helpers used by several modules."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss01(n):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_log01(n=4):
    """Weights for int_0^1 log(s) p(s) ds on the n-point Gauss nodes.

    Interpolatory, so exact for polynomials of degree < n.
    """
    s, _ = gauss01(n)
    k = np.arange(n)
    vander = s[None, :] ** k[:, None]
    moments = -1.0 / (k + 1.0) ** 2
    return s, np.linalg.solve(vander, moments)


def richardson(values, ratio, powers):
    """Eliminate error terms h**p for each p in ``powers`` (step shrinks by ``ratio``)."""
    table = list(values)
    for p in powers:
        if len(table) < 2:
            break
        f = ratio ** p
        table = [(f * table[i + 1] - table[i]) / (f - 1.0) for i in range(len(table) - 1)]
    return table[-1]
