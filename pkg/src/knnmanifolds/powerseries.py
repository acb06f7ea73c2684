"""Truncated power-series arithmetic used for formal series reversion.

A series is a plain 1-D numpy array of float coefficients ``a`` meaning
``a[0] + a[1] x + a[2] x^2 + ...`` truncated after ``len(a) - 1``.  All
operations keep a fixed truncation order; nothing here tracks convergence.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ps_trim",
    "ps_add",
    "ps_mul",
    "ps_compose",
    "ps_reciprocal",
    "ps_sqrt",
    "ps_eval",
    "solve_inverse_of_monotone",
]


def ps_trim(a, order: int) -> np.ndarray:
    """Truncate (or zero-pad) coefficients to degree `order` inclusive."""
    a = np.asarray(a, dtype=float)
    out = np.zeros(order + 1)
    n = min(len(a), order + 1)
    out[:n] = a[:n]
    return out


def ps_add(a, b, order: int) -> np.ndarray:
    return ps_trim(a, order) + ps_trim(b, order)


def ps_mul(a, b, order: int) -> np.ndarray:
    """Cauchy product truncated at degree `order`."""
    a = ps_trim(a, order)
    b = ps_trim(b, order)
    out = np.zeros(order + 1)
    for i, ai in enumerate(a):
        if ai == 0.0:
            continue
        out[i:] += ai * b[: order + 1 - i]
    return out


def ps_compose(outer, inner, order: int) -> np.ndarray:
    """Composition outer(inner(x)) truncated at `order`.

    `inner` must have zero constant term, otherwise the composition is not
    a formal power series operation.
    """
    inner = ps_trim(inner, order)
    if abs(inner[0]) > 0.0:
        raise ValueError("inner series must have zero constant term")
    outer = np.asarray(outer, dtype=float)
    # Horner in series arithmetic.
    out = np.zeros(order + 1)
    for c in outer[::-1]:
        out = ps_mul(out, inner, order)
        out[0] += c
    return out


def ps_reciprocal(a, order: int) -> np.ndarray:
    """Series 1/a, requires a[0] != 0."""
    a = ps_trim(a, order)
    if a[0] == 0.0:
        raise ZeroDivisionError("cannot invert a series with zero constant term")
    out = np.zeros(order + 1)
    out[0] = 1.0 / a[0]
    # Coefficient recurrence: sum_{j<=n} a[j] r[n-j] = 0 for n >= 1.
    for n in range(1, order + 1):
        acc = np.dot(a[1 : n + 1], out[n - 1 :: -1][: n])
        out[n] = -acc / a[0]
    return out


def ps_sqrt(a, order: int) -> np.ndarray:
    """Series sqrt(a), requires a[0] > 0."""
    a = ps_trim(a, order)
    if a[0] <= 0.0:
        raise ValueError("series sqrt needs a positive constant term")
    out = np.zeros(order + 1)
    out[0] = np.sqrt(a[0])
    # (sum b)^2 = a: 2 b0 b_n = a_n - sum_{1<=j<=n-1} b_j b_{n-j}
    for n in range(1, order + 1):
        acc = np.dot(out[1:n], out[n - 1 : 0 : -1])
        out[n] = (a[n] - acc) / (2.0 * out[0])
    return out


def ps_eval(a, x: float) -> float:
    """Horner evaluation of the truncated series at a point."""
    acc = 0.0
    for c in np.asarray(a, dtype=float)[::-1]:
        acc = acc * x + c
    return acc


def solve_inverse_of_monotone(forward, order: int) -> np.ndarray:
    """Formal reversion of y = x * forward-tail.

    `forward` is the series g with g[0] != 0 such that y = x * g(x); the
    result is the series h with x = y * h(y), i.e. x(y) = y * h(y), found
    by the fixed-point iteration x <- y / g(x), which gains at least one
    correct order per pass.
    """
    g = ps_trim(forward, order)
    if g[0] == 0.0:
        raise ValueError("leading coefficient must be nonzero")
    # x(y) as series in y with zero constant term; seed with y / g0.
    x = np.zeros(order + 2)
    x[1] = 1.0 / g[0]
    for _ in range(order + 1):
        gx = ps_compose(g, x[: order + 1], order)
        rec = ps_reciprocal(gx, order)
        x = np.concatenate(([0.0], rec[: order + 1]))  # multiply by y
    # h(y) with x = y*h(y)
    return x[1 : order + 2]
