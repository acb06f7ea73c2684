"""Monte Carlo estimation of k-th-nearest-neighbor distance moments.

Determinism contract: a run is fully determined by (seed, trials, N,
manifold, alpha, fixed query) and is independent of the stream count.
Trials are split into fixed-size chunks; chunk i draws from its own Philox
stream keyed by (seed, i), workers only decide *who* computes a chunk, and
chunk results are merged in index order with error-free compensated
summation.  Reruns are therefore bit-identical whether streams=1 or 8.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .manifolds import FlatTorus, Manifold, SurfacePoint
from .rng import PURPOSE_MC_CHUNK, philox_generator
from .series import reduced_normalizer

__all__ = [
    "SampleConfig",
    "Accumulator",
    "ScalingEstimate",
    "FitResult",
    "knn_distances",
    "estimate_moments",
    "sweep",
    "fit_subleading",
]

# fixed trial-chunk budget in site draws; part of the determinism contract,
# so changing it changes results like changing the seed would
CHUNK_SITE_BUDGET = 1 << 19


@dataclass(frozen=True)
class SampleConfig:
    n_sites: int
    k_max: int = 1
    alpha: float = 1.0
    trials: int = 1
    seed: int = 0
    streams: int = 1
    fixed_query: SurfacePoint | None = None

    def __post_init__(self):
        if self.k_max < 1 or self.k_max > self.n_sites:
            raise ValueError("need 1 <= k_max <= n_sites")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.streams < 1:
            raise ValueError("streams must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


def _two_sum(a: float, b: float) -> tuple[float, float]:
    """Error-free transform: a + b = s + err exactly."""
    s = a + b
    bv = s - a
    err = (a - (s - bv)) + (b - bv)
    return s, err


class Accumulator:
    """Streaming per-k sums of D_k^alpha and their squares.

    Uses Neumaier compensation, so merging two accumulators reproduces the
    accumulation over the concatenated stream to the last ulp; merges must
    happen in a deterministic order for bit-identical reruns.
    """

    def __init__(self, k_max: int, alpha: float = 1.0):
        self.k_max = int(k_max)
        self.alpha = float(alpha)
        self.count = 0
        self._sum = np.zeros(k_max)
        self._sum_c = np.zeros(k_max)
        self._sq = np.zeros(k_max)
        self._sq_c = np.zeros(k_max)

    def _absorb(self, target: str, values: np.ndarray):
        acc = getattr(self, target)
        comp = getattr(self, target + "_c")
        for k in range(self.k_max):
            s, err = _two_sum(acc[k], float(values[k]))
            acc[k] = s
            comp[k] += err

    def add_batch(self, powered: np.ndarray):
        """Add a (B, k_max) block of D_k^alpha values."""
        powered = np.atleast_2d(powered)
        self._absorb("_sum", powered.sum(axis=0))
        self._absorb("_sq", (powered * powered).sum(axis=0))
        self.count += powered.shape[0]

    def merge(self, other: "Accumulator") -> "Accumulator":
        if (other.k_max, other.alpha) != (self.k_max, self.alpha):
            raise ValueError("cannot merge accumulators with different shapes")
        self._absorb("_sum", other._sum + other._sum_c)
        self._absorb("_sq", other._sq + other._sq_c)
        self.count += other.count
        return self

    def mean(self, k: int) -> float:
        return (self._sum[k - 1] + self._sum_c[k - 1]) / self.count

    def stderr(self, k: int) -> float:
        if self.count < 2:
            return math.inf
        m = self.mean(k)
        sq = (self._sq[k - 1] + self._sq_c[k - 1]) / self.count
        var = max(sq - m * m, 0.0)
        return math.sqrt(var / (self.count - 1))

    def means(self) -> np.ndarray:
        return (self._sum + self._sum_c) / self.count

    def stderrs(self) -> np.ndarray:
        return np.array([self.stderr(k) for k in range(1, self.k_max + 1)])


# ---------------------------------------------------------------------------
# k-nearest-neighbor distances
# ---------------------------------------------------------------------------


def knn_distances(m: Manifold, x: SurfacePoint, sites, k_max: int) -> np.ndarray:
    """Sorted distances to the k_max nearest of the given sites.

    Ties are broken by site index (a measure-zero event for random sites,
    pinned down for determinism).  For the 2-D flat torus a grid-bucket
    search is used for large site lists; it evaluates the identical
    arithmetic on a candidate subset and returns bit-identical results.
    """
    rows = np.stack([m.row(s) if isinstance(s, SurfacePoint) else np.asarray(s, float) for s in sites])
    if len(rows) < k_max:
        raise ValueError("need at least k_max sites")
    x_row = m.row(x) if isinstance(x, SurfacePoint) else np.asarray(x, float)
    if isinstance(m, FlatTorus) and m.dim == 2 and len(rows) >= 64:
        return _torus_knn_grid(m, x_row, rows, k_max)
    return _knn_brute(m, x_row, rows, k_max)


def _knn_brute(m: Manifold, x_row, rows, k_max: int) -> np.ndarray:
    d = m.distances_from(x_row, rows)
    order = np.lexsort((np.arange(len(d)), d))[:k_max]
    return d[order]


def _torus_knn_grid(m: FlatTorus, x_row, rows, k_max: int) -> np.ndarray:
    """Cell-list k-NN on the unit 2-torus, bit-identical to brute force.

    Sites are bucketed into a g x g periodic grid; rings of cells are
    scanned outward until the k-th best distance provably beats anything a
    farther ring could contain.  Distances are computed with the same
    vectorized expressions as the brute-force path on the candidate subset,
    so the results (including index tie-breaks) match to the last bit.
    """
    n = len(rows)
    g = max(int(math.sqrt(n / 2.0)), 3)
    cells = np.minimum((rows * g).astype(int), g - 1)
    flat = cells[:, 0] * g + cells[:, 1]
    order = np.argsort(flat, kind="stable")
    sorted_flat = flat[order]
    starts = np.searchsorted(sorted_flat, np.arange(g * g))
    ends = np.searchsorted(sorted_flat, np.arange(g * g), side="right")
    cx, cy = min(int(x_row[0] * g), g - 1), min(int(x_row[1] * g), g - 1)

    cand_idx: list[np.ndarray] = []
    visited = np.zeros(g * g, dtype=bool)
    best: np.ndarray | None = None
    for ring in range(g + 1):
        members = []
        for dx in range(-ring, ring + 1):
            for dy in range(-ring, ring + 1):
                if max(abs(dx), abs(dy)) != ring:
                    continue
                cell = ((cx + dx) % g) * g + (cy + dy) % g
                if visited[cell]:  # wrapped ring reached an old cell
                    continue
                visited[cell] = True
                members.append(order[starts[cell] : ends[cell]])
        if members:
            cand_idx.append(np.concatenate(members))
        total = np.concatenate(cand_idx) if cand_idx else np.empty(0, dtype=int)
        all_seen = bool(visited.all())
        if len(total) >= k_max:
            cand = rows[total]
            d = m.distances_from(x_row, cand)
            pick = np.lexsort((total, d))[:k_max]
            best = d[pick]
            # any unscanned site sits in a ring >= ring+1, hence >= ring/g away
            if best[-1] <= ring / g or all_seen:
                return best
        if all_seen and best is not None:
            return best
    raise RuntimeError("grid search failed to gather candidates")


# ---------------------------------------------------------------------------
# Moment estimation
# ---------------------------------------------------------------------------


def _chunk_trials_for(n_sites: int) -> int:
    return max(1, CHUNK_SITE_BUDGET // max(n_sites, 1))


def _run_chunk(m: Manifold, cfg: SampleConfig, chunk_index: int, chunk_trials: int,
               stream_salt: int) -> np.ndarray:
    gen = philox_generator(cfg.seed, chunk_index + stream_salt, PURPOSE_MC_CHUNK)
    b = chunk_trials
    if cfg.fixed_query is None:
        queries = m.sample_array(gen, b)
    else:
        queries = np.tile(m.row(cfg.fixed_query), (b, 1))
    sites = m.sample_array(gen, b * cfg.n_sites)
    sites = sites.reshape(b, cfg.n_sites, -1)
    d = m.distances_batch(queries, sites)
    if cfg.k_max == 1:
        vals = d.min(axis=1)[:, None]
    else:
        vals = np.partition(d, cfg.k_max - 1, axis=1)[:, : cfg.k_max]
        vals.sort(axis=1)
    if cfg.alpha != 1.0:
        vals = vals**cfg.alpha
    return vals


def estimate_moments(m: Manifold, cfg: SampleConfig, stream_salt: int = 0) -> Accumulator:
    """Accumulate D_k^alpha over cfg.trials independent configurations.

    Each trial draws a fresh query point and N fresh sites (or reuses
    cfg.fixed_query for pointwise studies).  The result is independent of
    cfg.streams; see the module docstring for the mechanism.
    """
    chunk_trials = _chunk_trials_for(cfg.n_sites)
    n_chunks = (cfg.trials + chunk_trials - 1) // chunk_trials
    sizes = [
        min(chunk_trials, cfg.trials - i * chunk_trials) for i in range(n_chunks)
    ]
    acc = Accumulator(cfg.k_max, cfg.alpha)
    if cfg.streams == 1 or n_chunks == 1:
        for ci, sz in enumerate(sizes):
            acc.add_batch(_run_chunk(m, cfg, ci, sz, stream_salt))
        return acc
    with ThreadPoolExecutor(max_workers=cfg.streams) as pool:
        for block in pool.map(
            lambda args: _run_chunk(m, cfg, *args),
            [(ci, sz, stream_salt) for ci, sz in enumerate(sizes)],
        ):
            acc.add_batch(block)  # pool.map yields in submission order
    return acc


# ---------------------------------------------------------------------------
# Scaling sweeps and the 1/N fit
# ---------------------------------------------------------------------------


@dataclass
class ScalingEstimate:
    """Reduced means over an N grid, per neighbor rank, with uncertainties."""

    ks: tuple
    n_grid: tuple
    mean: np.ndarray  # (K, N)
    stderr: np.ndarray
    gamma: float
    c0: float
    fitted_c1: dict = field(default_factory=dict)

    def reduced(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """<D~_k(N)> and its stderr across the N grid."""
        ki = self.ks.index(k)
        norm = np.array([reduced_normalizer(self.gamma, self.c0, k, n) for n in self.n_grid])
        return self.mean[ki] * norm, self.stderr[ki] * norm


@dataclass(frozen=True)
class FitResult:
    value: float
    stderr: float
    quadratic: float | None = None
    quadratic_stderr: float | None = None


def sweep(
    m: Manifold,
    ks,
    n_grid,
    trials_per_n: int,
    seed: int = 0,
    streams: int = 1,
    alpha: float = 1.0,
) -> ScalingEstimate:
    """Monte Carlo means across an N grid; each N gets its own streams."""
    ks = tuple(int(k) for k in ks)
    n_grid = tuple(int(n) for n in n_grid)
    k_max = max(ks)
    gamma, c0 = m.leading_inverse_area
    mean = np.zeros((len(ks), len(n_grid)))
    err = np.zeros_like(mean)
    for j, n in enumerate(n_grid):
        cfg = SampleConfig(
            n_sites=n, k_max=k_max, alpha=alpha, trials=trials_per_n,
            seed=seed, streams=streams,
        )
        acc = estimate_moments(m, cfg, stream_salt=j << 32)
        for i, k in enumerate(ks):
            mean[i, j] = acc.mean(k)
            err[i, j] = acc.stderr(k)
    return ScalingEstimate(ks=ks, n_grid=n_grid, mean=mean, stderr=err, gamma=gamma, c0=c0)


def fit_one_over_n(n_grid, y, sigma=None, include_quadratic: bool = True) -> FitResult:
    """Weighted least squares of y against 1/N (optional 1/N^2 nuisance).

    With per-point uncertainties the parameter covariance is the usual
    (X^T W X)^{-1}; for exact inputs (sigma None or all zero) the residual
    variance is used instead, so exact linear data reports zero error.
    """
    n_grid = np.asarray(n_grid, dtype=float)
    if len(n_grid) < (3 if include_quadratic else 2):
        raise ValueError("not enough N points for the fit")
    if np.max(n_grid) / np.min(n_grid) < 10.0:
        raise ValueError("N grid must span at least one decade for a stable 1/N fit")
    y = np.asarray(y, dtype=float)
    x = 1.0 / n_grid
    cols = [x, x * x] if include_quadratic else [x]
    X = np.column_stack(cols)
    weighted = sigma is not None and np.any(np.asarray(sigma) > 0)
    if weighted:
        w = 1.0 / np.asarray(sigma, dtype=float) ** 2
    else:
        w = np.ones_like(x)
    xtwx = X.T @ (w[:, None] * X)
    cov = np.linalg.inv(xtwx)
    beta = cov @ (X.T @ (w * y))
    if not weighted:
        resid = y - X @ beta
        dof = max(len(y) - X.shape[1], 1)
        cov = cov * float(resid @ resid) / dof
    se = np.sqrt(np.diag(cov))
    if include_quadratic:
        return FitResult(float(beta[0]), float(se[0]), float(beta[1]), float(se[1]))
    return FitResult(float(beta[0]), float(se[0]))


def fit_subleading(se: ScalingEstimate, k: int | None = None,
                   include_quadratic: bool = True) -> FitResult:
    """1/N coefficient of the reduced mean <D~_k(N)> from a scaling estimate."""
    k = k if k is not None else se.ks[0]
    red, red_err = se.reduced(k)
    sigma = red_err if np.all(np.isfinite(red_err)) else None
    fit = fit_one_over_n(se.n_grid, red - 1.0, sigma, include_quadratic)
    se.fitted_c1[k] = fit
    return fit
