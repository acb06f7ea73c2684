"""Direct numerical moments <D_k^alpha(N)> from an inverse-area function.

The moment is the expectation of A^{-1}(W)^alpha under W ~ Beta(k, N-k+1).
Instead of integrating the raw Beta kernel (which concentrates all its mass
in a width ~ k/N window and defeats adaptive quadrature by N ~ 1e4), the
integral is pulled back through the Beta quantile function, so the kernel
becomes uniform on [0, 1] and the integrand stays O(1) at any N.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.special import betainc, betaincinv, gammaln

from .series import MomentSpec, PowerSeries

__all__ = [
    "AreaInverseFn",
    "QuadratureMoment",
    "QuadratureToleranceError",
    "moment_from_area_inverse",
    "remainder_bound",
]


class QuadratureToleranceError(RuntimeError):
    """Adaptive quadrature stopped short of the requested tolerance."""

    def __init__(self, value: float, error: float, requested: float):
        super().__init__(
            f"quadrature tolerance not reached: estimate {value!r} "
            f"+- {error:.3e} (requested rel {requested:.1e})"
        )
        self.best = QuadratureMoment(value=value, error=error)


@dataclass(frozen=True)
class QuadratureMoment:
    value: float
    error: float

    def __float__(self) -> float:
        return self.value


class AreaInverseFn:
    """Inverse disc-area function w in [0,1] -> radius, nondecreasing, 0 at 0."""

    def __init__(self, eval_fn: Callable, kind: str, name: str = ""):
        self._eval = eval_fn
        self.kind = kind
        self.name = name or kind
        v0 = float(eval_fn(np.asarray(0.0)))
        if abs(v0) > 1e-12:
            raise ValueError(f"inverse area must vanish at w=0, got {v0}")
        probe = eval_fn(np.linspace(0.0, 1.0, 257))
        if np.any(np.diff(probe) < -1e-12):
            raise ValueError("inverse area must be nondecreasing on [0, 1]")

    def __call__(self, w):
        return self._eval(np.asarray(w, dtype=float))

    @classmethod
    def from_power_series(cls, s: PowerSeries) -> "AreaInverseFn":
        return cls(s, kind="series", name=f"series(gamma={s.gamma})")

    @classmethod
    def from_table(cls, w_grid, l_grid) -> "AreaInverseFn":
        """Monotone (shape-preserving cubic) interpolant through (w, l) samples."""
        w_grid = np.asarray(w_grid, dtype=float)
        l_grid = np.asarray(l_grid, dtype=float)
        if w_grid[0] != 0.0 or l_grid[0] != 0.0:
            raise ValueError("table must start at (0, 0)")
        if np.any(np.diff(w_grid) <= 0) or np.any(np.diff(l_grid) < 0):
            raise ValueError("table must be strictly increasing in w, nondecreasing in l")
        interp = PchipInterpolator(w_grid, l_grid, extrapolate=False)
        top = w_grid[-1]

        def ev(w):
            w = np.clip(w, 0.0, top)
            return interp(w)

        return cls(ev, kind="tabulated", name="tabulated")

    @classmethod
    def named(cls, name: str, d: int = 2) -> "AreaInverseFn":
        """Built-in closed forms: 'flat-2d', 'sphere-arcsin', 'flat-d'."""
        sqrt_pi = math.sqrt(math.pi)
        if name == "flat-2d":
            return cls(lambda w: np.sqrt(w / math.pi), kind="closed", name=name)
        if name == "sphere-arcsin":
            return cls(
                lambda w: np.arcsin(np.sqrt(np.clip(w, 0.0, 1.0))) / sqrt_pi,
                kind="closed",
                name=name,
            )
        if name == "flat-d":
            c = math.exp(gammaln(d / 2.0 + 1.0) / d) / sqrt_pi
            return cls(lambda w: c * w ** (1.0 / d), kind="closed", name=f"flat-{d}d")
        raise KeyError(f"unknown inverse-area function {name!r}")


def moment_from_area_inverse(
    a: AreaInverseFn, ms: MomentSpec, rel_tol: float = 1e-11
) -> QuadratureMoment:
    """<D_k^alpha(N)> by adaptive quadrature in the Beta-quantile variable.

    Returns the value with the integrator's error estimate.  Raises
    QuadratureToleranceError (carrying the best estimate) if the adaptive
    refinement flags the tolerance as unreached by a wide margin.
    """
    k, n, alpha = ms.k, ms.n, ms.alpha
    aa, bb = float(k), float(n - k + 1)

    def integrand(u: float) -> float:
        w = betaincinv(aa, bb, u)
        return float(a(w)) ** alpha

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, err = integrate.quad(
            integrand, 0.0, 1.0, epsabs=0.0, epsrel=rel_tol, limit=300
        )
    flagged = any(issubclass(w.category, integrate.IntegrationWarning) for w in caught)
    if flagged and err > 100.0 * rel_tol * max(abs(value), 1e-300):
        raise QuadratureToleranceError(value, err, rel_tol)
    return QuadratureMoment(value=value, error=err)


def remainder_bound(a: AreaInverseFn, flat, ms: MomentSpec) -> float:
    """Certificate that truncating the flat series at w0 is exponentially small.

    Bounds the discarded piece of the moment integral over w >= w0 by
    sup|A^{-1}| times the Beta tail probability P(W >= w0); the latter decays
    like (1-w0)^(N-k), which is the reason locally-flat closed manifolds obey
    the flat closed form to all orders in 1/N.
    """
    w0 = float(flat.w0)
    if not 0.0 < w0 <= 1.0:
        raise ValueError("w0 must lie in (0, 1]")
    if w0 == 1.0:
        return 0.0
    sup = float(a(1.0)) ** ms.alpha
    # P(W >= w0) with W ~ Beta(k, N-k+1), via the mirrored regularized
    # incomplete beta to keep precision when the tail is tiny.
    tail = float(betainc(ms.n - ms.k + 1.0, float(ms.k), 1.0 - w0))
    return sup * tail
