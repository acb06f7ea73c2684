"""Exact and asymptotic formulas for k-th-nearest-neighbor distance moments.

Everything here is built on one identity: on a unit-area surface the area
function A(l) of a geodesic disc is the CDF of the distance from a point to
one uniform random site, so for N sites the mean distance to the k-th
nearest is a Beta-weighted integral of the inverse function A^{-1}(w),

    <D_k(N)> = Gamma(N+1)/(Gamma(N-k+1) Gamma(k))
               * Int_0^1 A^{-1}(w) w^(k-1) (1-w)^(N-k) dw.

When A^{-1}(w) = w^gamma * sum_j c_j w^j the integral telescopes into
Gamma-function ratios, term by term (`mean_from_series`).  Flat manifolds
in any dimension give a single term and a closed form (`flat_mean`); the
round sphere with arc-length metric gives the arcsin series
(`sphere_mean_exact`).

The reduced mean <D~_k(N)> divides out the leading large-N behavior so its
limit is 1; its 1/N expansion is computed with exact rational arithmetic
(`reduced_series`, `reduced_mean_series`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import gammaln

__all__ = [
    "PowerSeries",
    "MomentSpec",
    "ReducedScalingSeries",
    "TopologyInfo",
    "DimensionSpec",
    "SeriesMean",
    "ConvergenceError",
    "mean_from_series",
    "flat_mean",
    "sphere_mean_exact",
    "sphere_inverse_area_coeffs",
    "reduced_series",
    "reduced_mean_series",
    "reduced_normalizer",
    "subleading_coeff",
    "curved_inverse_area_leading",
]


class ConvergenceError(RuntimeError):
    """A truncated sum did not reach the requested residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class PowerSeries:
    """Inverse-area series A^{-1}(w) = w^gamma * sum_j coeffs[j] w^j."""

    gamma: float
    coeffs: tuple[float, ...]

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if len(self.coeffs) == 0 or self.coeffs[0] <= 0.0:
            raise ValueError("need a positive leading coefficient")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def truncation_order(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        acc = np.zeros_like(w)
        for c in self.coeffs[::-1]:
            acc = acc * w + c
        return np.where(w > 0.0, w**self.gamma, 0.0 if self.gamma > 0 else 1.0) * acc


@dataclass(frozen=True)
class MomentSpec:
    """Neighbor rank k, site count N and moment order alpha."""

    k: int
    n: int
    alpha: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.n < self.k:
            raise ValueError(f"need N >= k, got N={self.n}, k={self.k}")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class DimensionSpec:
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")


@dataclass(frozen=True)
class TopologyInfo:
    """Euler characteristic and genus of a closed orientable surface."""

    chi: int
    genus: int

    def __post_init__(self):
        if self.chi != 2 * (1 - self.genus):
            raise ValueError(f"chi={self.chi} inconsistent with genus={self.genus}")

    @classmethod
    def from_genus(cls, genus: int) -> "TopologyInfo":
        return cls(chi=2 * (1 - genus), genus=genus)


@dataclass(frozen=True)
class ReducedScalingSeries:
    """1/N expansion of the reduced mean; constant term is exactly 1."""

    k: int | None
    gamma: Fraction
    one_over_n_coeffs: tuple

    def __post_init__(self):
        if self.one_over_n_coeffs[0] != 1:
            raise ValueError("reduced expansion must start at 1")

    def __call__(self, n) -> float:
        x = 1.0 / np.asarray(n, dtype=float)
        acc = np.zeros_like(x)
        for c in self.one_over_n_coeffs[::-1]:
            acc = acc * x + float(c)
        return acc


@dataclass(frozen=True)
class SeriesMean:
    """Value of a truncated moment series plus a convergence flag."""

    value: float
    converged: bool
    last_term: float = 0.0

    def __float__(self) -> float:
        return self.value


def _log_beta_moment_term(gamma: float, j, k: int, n: int) -> np.ndarray:
    """log of Gamma(k+j+gamma)/Gamma(k) * Gamma(N+1)/Gamma(N+j+gamma+1)."""
    j = np.asarray(j, dtype=float)
    return (
        gammaln(k + j + gamma)
        - gammaln(k)
        + gammaln(n + 1.0)
        - gammaln(n + j + gamma + 1.0)
    )


def mean_from_series(s: PowerSeries, ms: MomentSpec) -> SeriesMean:
    """Mean k-th-neighbor distance from a truncated inverse-area series.

    Evaluates sum_j c_j Gamma(k+j+gamma)/Gamma(k) * N!/Gamma(N+j+gamma+1)
    in log space with compensated summation.  The `converged` flag is False
    when the retained |terms| are not decreasing at the truncation point.
    """
    if ms.alpha != 1.0:
        raise ValueError("series route only covers alpha=1; use the quadrature engine")
    j = np.arange(len(s.coeffs))
    logs = _log_beta_moment_term(s.gamma, j, ms.k, ms.n)
    terms = np.asarray(s.coeffs) * np.exp(logs)
    value = math.fsum(terms)
    converged = True
    if len(terms) >= 2 and abs(terms[-1]) >= abs(terms[-2]) and terms[-1] != 0.0:
        converged = False
    return SeriesMean(value=value, converged=converged, last_term=float(terms[-1]))


def flat_mean(dim: DimensionSpec | int, ms: MomentSpec) -> float:
    """Mean k-th-neighbor distance on a flat unit-volume d-manifold.

    Valid up to corrections exponentially small in N (exact for the
    chord-metric sphere in d=2).  The k-dependence and N-dependence
    separate: the value is

        Gamma(d/2+1)^(1/d)/sqrt(pi) * Gamma(k+1/d)/Gamma(k)
                                    * Gamma(N+1)/Gamma(N+1/d+1).
    """
    d = dim.d if isinstance(dim, DimensionSpec) else int(dim)
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if ms.alpha != 1.0:
        raise ValueError("closed form only covers alpha=1; use the quadrature engine")
    invd = 1.0 / d
    log = (
        gammaln(d / 2.0 + 1.0) * invd
        - 0.5 * math.log(math.pi)
        + gammaln(ms.k + invd)
        - gammaln(ms.k)
        + gammaln(ms.n + 1.0)
        - gammaln(ms.n + invd + 1.0)
    )
    return math.exp(log)


def sphere_inverse_area_coeffs(j_max: int) -> np.ndarray:
    """Coefficients c_j of arcsin(sqrt(w))/sqrt(pi) = sqrt(w/pi) sum c~_j w^j.

    Returns the full c_j including the 1/sqrt(pi) prefactor, j = 0..j_max:
    c_j = (1/sqrt(pi)) * (2j)! / (2^(2j) (j!)^2 (2j+1)).
    """
    j = np.arange(j_max + 1, dtype=float)
    logc = gammaln(2 * j + 1) - j * math.log(4.0) - 2 * gammaln(j + 1)
    return np.exp(logc) / (2 * j + 1) / math.sqrt(math.pi)


_TAIL_SAFETY = 4.0


def _power_tail(t_prev: float, t_last: float, j_last: int) -> float:
    """Euler-Maclaurin tail of sum_{j>J} t_j for smoothly decaying t_j > 0."""
    if t_last <= 0.0 or t_prev <= 0.0 or t_last >= t_prev:
        return 0.0
    ratio = t_last / t_prev
    if ratio < 0.9:
        # effectively geometric decay
        return t_last * ratio / (1.0 - ratio)
    p = math.log(t_prev / t_last) / math.log(j_last / (j_last - 1.0))
    if p <= 1.0:
        return math.inf
    jp = j_last + 1.0
    c = t_last * j_last**p
    return c * (jp ** (1.0 - p) / (p - 1.0) + 0.5 * jp ** (-p))


def sphere_mean_exact(ms: MomentSpec, j_max: int | None = None) -> float:
    """Mean k-th-neighbor arc distance on the unit-area round sphere.

    Sums the arcsin-series moments to convergence.  For N close to k the
    terms decay only like a power of j; a power-law tail estimate is then
    added so that small-N values are still accurate to ~1e-12 without
    summing tens of millions of terms.

    Raises ConvergenceError if an explicit `j_max` truncates before the
    last term falls below 1e-14 of the partial sum.
    """
    if ms.alpha != 1.0:
        raise ValueError("exact sum only covers alpha=1; use the quadrature engine")
    k, n = ms.k, ms.n
    sqrt_pi = math.sqrt(math.pi)

    def terms_for(j_lo: int, j_hi: int) -> np.ndarray:
        j = np.arange(j_lo, j_hi + 1, dtype=float)
        logc = gammaln(2 * j + 1) - j * math.log(4.0) - 2 * gammaln(j + 1)
        logs = logc + _log_beta_moment_term(0.5, j, k, n)
        return np.exp(logs) / (2 * j + 1) / sqrt_pi

    adaptive = j_max is None
    hard_cap = 4_000_000 if adaptive else int(j_max)
    chunk_sums: list[float] = []
    j_lo, chunk = 0, 64
    t_prev = t_last = math.inf
    j_last = 0
    while j_lo <= hard_cap:
        j_hi = min(j_lo + chunk - 1, hard_cap)
        t = terms_for(j_lo, j_hi)
        chunk_sums.append(math.fsum(t))
        if len(t) >= 2:
            t_prev, t_last = float(t[-2]), float(t[-1])
        else:
            t_prev, t_last = t_last, float(t[-1])
        j_last = j_hi
        if adaptive and j_hi > 10 and t_last < 1e-15 * math.fsum(chunk_sums):
            break
        j_lo = j_hi + 1
        chunk = min(2 * chunk, 1 << 19)
    total = math.fsum(chunk_sums)
    tail = _power_tail(t_prev, t_last, j_last)
    if not math.isfinite(tail):
        raise ConvergenceError("arcsin series tail is divergent-looking", math.inf)
    if t_last >= 1e-14 * total:
        raise ConvergenceError(
            f"arcsin series not converged by j={j_last} for k={k}, N={n}",
            residual=_TAIL_SAFETY * tail,
        )
    return total + tail


# ---------------------------------------------------------------------------
# Exact-rational 1/N expansions
# ---------------------------------------------------------------------------

# Bernoulli numbers B_0..B_8 (B_1 = -1/2 convention).
_BERNOULLI = [
    Fraction(1),
    Fraction(-1, 2),
    Fraction(1, 6),
    Fraction(0),
    Fraction(-1, 30),
    Fraction(0),
    Fraction(1, 42),
    Fraction(0),
    Fraction(-1, 30),
]


def _bernoulli_poly(m: int, x: Fraction) -> Fraction:
    """B_m(x) = sum_k C(m,k) B_k x^(m-k), exact rationals."""
    acc = Fraction(0)
    for kk in range(m + 1):
        acc += math.comb(m, kk) * _BERNOULLI[kk] * x ** (m - kk)
    return acc


def _poly_mul_trunc(a: list, b: list, order: int) -> list:
    out = [Fraction(0)] * (order + 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for jj, bj in enumerate(b):
            if i + jj > order:
                break
            out[i + jj] += ai * bj
    return out


def _gamma_ratio_expansion(gamma: Fraction, order: int) -> list:
    """Exact 1/N coefficients of N^gamma * Gamma(N+1)/Gamma(N+gamma+1).

    Uses the Stirling-type expansion of log Gamma(z+h) whose 1/z^m
    coefficients are Bernoulli polynomials, then exponentiates formally.
    """
    if order + 1 >= len(_BERNOULLI):
        raise ValueError(f"expansion order {order} beyond tabulated Bernoulli numbers")
    # log-ratio coefficients t_m of sum t_m / N^m
    t = [Fraction(0)] * (order + 1)
    for m in range(1, order + 1):
        sign = -1 if m % 2 == 0 else 1  # (-1)^(m+1)
        t[m] = (
            sign
            * (_bernoulli_poly(m + 1, Fraction(1)) - _bernoulli_poly(m + 1, gamma + 1))
            / (m * (m + 1))
        )
    # exp of the series
    out = [Fraction(1)] + [Fraction(0)] * order
    power = [Fraction(1)] + [Fraction(0)] * order
    factorial = 1
    for m in range(1, order + 1):
        power = _poly_mul_trunc(power, t, order)
        factorial *= m
        for i in range(order + 1):
            out[i] += power[i] / factorial
    return out


def reduced_series(gamma, k: int | None = None, order: int = 3) -> ReducedScalingSeries:
    """1/N expansion of the reduced-mean normalization factor.

    For gamma given as a Fraction (or anything Fraction() accepts) the
    coefficients of N^gamma * Gamma(N+1)/Gamma(N+gamma+1) come out as exact
    rationals, e.g. gamma=1/2 -> [1, -3/8, 25/128, ...].  The k argument is
    carried through for bookkeeping only; the pure normalization factor is
    k-independent.
    """
    if order > 3:
        raise ValueError("expansion implemented through order 3")
    g = gamma if isinstance(gamma, Fraction) else Fraction(gamma)
    coeffs = _gamma_ratio_expansion(g, order)
    return ReducedScalingSeries(k=k, gamma=g, one_over_n_coeffs=tuple(coeffs))


def reduced_mean_series(s: PowerSeries, k: int, order: int = 3,
                        gamma: Fraction | None = None,
                        coeff_ratios: Sequence | None = None) -> ReducedScalingSeries:
    """Combined 1/N expansion of the reduced mean for a full inverse-area series.

    The j-th series term contributes at order 1/N^j a factor
    (c_j/c_0) * prod_{i<j}(k+gamma+i) times the expansion of
    N^gamma Gamma(N+1)/Gamma(N+j+gamma+1) * N^j.  Pass `gamma` and
    `coeff_ratios` as exact rationals to keep the output rational; by
    default they are taken from `s` (floats convert exactly).
    """
    if order > 3:
        raise ValueError("expansion implemented through order 3")
    g = gamma if gamma is not None else Fraction(s.gamma)
    if coeff_ratios is None:
        c0 = Fraction(s.coeffs[0])
        ratios = [Fraction(c) / c0 for c in s.coeffs]
    else:
        ratios = [r if isinstance(r, Fraction) else Fraction(r) for r in coeff_ratios]
    base = _gamma_ratio_expansion(g, order)  # N^g G(N+1)/G(N+g+1)
    total = [Fraction(0)] * (order + 1)
    for j in range(min(order, len(ratios) - 1) + 1):
        # Gamma(N+g+1)/Gamma(N+j+g+1) = prod_{i=1..j} 1/(N+g+i); expand each
        # factor as N^{-1} * sum_m (-(g+i))^m N^{-m}.
        factor = list(base)
        for i in range(1, j + 1):
            geo = [(-(g + i)) ** m for m in range(order + 1)]
            factor = _poly_mul_trunc(factor, geo, order)
        # shift by N^{-j} and weight
        rho = Fraction(1)
        for i in range(j):
            rho *= k + g + i
        w = ratios[j] * rho
        for m in range(order + 1 - j):
            total[m + j] += w * factor[m]
    return ReducedScalingSeries(k=k, gamma=g, one_over_n_coeffs=tuple(total))


def reduced_normalizer(gamma: float, c0: float, k: int, n: int) -> float:
    """Factor turning a raw mean into the reduced mean: its N->inf limit is 1."""
    return n**gamma / c0 * math.exp(gammaln(k) - gammaln(k + gamma))


def subleading_coeff(k: int, topo: TopologyInfo) -> Fraction:
    """Coefficient of 1/N in the surface-averaged reduced mean.

    Equals (chi*(2k+1) - 9)/24; depends on the surface only through its
    Euler characteristic chi, which is the content of the topological
    universality this toolkit verifies.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    return Fraction(topo.chi * (2 * k + 1) - 9, 24)


@dataclass(frozen=True)
class CurvedLeadingInverse:
    """Leading inverse-volume behavior on a weakly curved d-manifold (d>2).

    eval(w) = b0 * w^(1/d) * (1 + b1 * w^(2/d)); only the constant-curvature
    model backs the b1 term, so treat it as indicative, not exact.
    """

    d: int
    curvature: float
    b0: float
    b1: float

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        return self.b0 * w ** (1.0 / self.d) * (1.0 + self.b1 * w ** (2.0 / self.d))


def curved_inverse_area_leading(d: int, curvature: float) -> CurvedLeadingInverse:
    if d < 2:
        raise ValueError("curved leading form needs d >= 2")
    vol_ratio = math.exp(gammaln(d / 2.0 + 1.0)) / math.pi ** (d / 2.0)
    b0 = vol_ratio ** (1.0 / d)
    b1 = (d - 1.0) / (d + 2.0) * curvature / 6.0 * vol_ratio ** (2.0 / d)
    return CurvedLeadingInverse(d=d, curvature=curvature, b0=b0, b1=b1)
