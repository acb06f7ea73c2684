"""Closed-manifold models: uniform samplers, distances, disc areas.

Every manifold is normalized to total area (volume) 1 at construction, so
the disc-area function A(l) doubles as the CDF of the distance from a point
to one uniform random site.  The family covers the cases where exact
answers exist on at least one route:

  flat square torus (any dimension)   A(l) = V_d l^d below the wrap radius
  round sphere, arc-length metric     A(l) = sin^2(sqrt(pi) l), exact
  round sphere, chord "metric"        A(l) = pi l^2, exact up to l = 2R
  conformal patch atlases             A by geodesic shooting (numeric)
  convex polyhedra                    exact unfolded geodesics, cone discs

Coordinates are chart-dependent: tori use coordinates in [0,1)^d, spheres
and polyhedra use embedded 3-D points, conformal atlases use (u,v) plus a
chart id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from . import curvature as curv
from . import regge
from .rng import RandomStream
from .series import DimensionSpec  # re-exported contract type

__all__ = [
    "FlatnessThreshold",
    "SurfacePoint",
    "DimensionSpec",
    "Manifold",
    "FlatTorus",
    "FlatTorus2D",
    "SphereGeodesic",
    "SphereChord",
    "ConformalPatchSet",
    "PolyhedronManifold",
    "RejectionSamplingError",
    "manifold_from_config",
    "UNIT_SPHERE_RADIUS",
]

UNIT_SPHERE_RADIUS = curv.UNIT_SPHERE_RADIUS


class RejectionSamplingError(RuntimeError):
    """Rejection sampler exceeded its attempt budget (bad sup-f bound?)."""


@dataclass(frozen=True)
class FlatnessThreshold:
    """Radius l0 of guaranteed local flatness and its enclosed area w0 = A(l0)."""

    l0: float
    w0: float

    def __post_init__(self):
        if self.l0 <= 0.0:
            raise ValueError("l0 must be positive")
        if not 0.0 < self.w0 <= 1.0:
            raise ValueError("w0 must lie in (0, 1]")


@dataclass(frozen=True)
class SurfacePoint:
    chart_id: int
    coords: tuple

    @classmethod
    def of(cls, chart_id: int, coords) -> "SurfacePoint":
        return cls(chart_id=int(chart_id), coords=tuple(float(c) for c in np.asarray(coords).ravel()))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


def _ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.exp(gammaln(d / 2.0 + 1.0))


class Manifold:
    """Common interface; concrete manifolds override the array-level methods.

    Immutable after construction; random streams are supplied per call and
    never stored, so instances are freely shareable across threads.
    """

    kind: str = "abstract"
    dim: int = 2
    total_area: float = 1.0
    flatness: FlatnessThreshold | None = None

    # (gamma, c0) of the leading inverse-area behavior c0 * w^gamma
    @property
    def leading_inverse_area(self) -> tuple[float, float]:
        raise NotImplementedError

    # -- array-level API (rows encode points; layout is manifold-private) ----

    def sample_array(self, gen: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def distances_from(self, x_row: np.ndarray, sites: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def distances_batch(self, xs: np.ndarray, sites: np.ndarray) -> np.ndarray:
        """(B,) query rows against (B, N) site rows -> (B, N) distances."""
        return np.stack(
            [self.distances_from(xs[i], sites[i]) for i in range(len(xs))]
        )

    def point(self, row: np.ndarray) -> SurfacePoint:
        return SurfacePoint.of(0, row)

    def row(self, p: SurfacePoint) -> np.ndarray:
        return p.array

    # -- public point-level API ----------------------------------------------

    def sample(self, stream: RandomStream, n: int | None = None):
        """Uniform area-measure samples as SurfacePoint(s)."""
        rows = self.sample_array(stream.generator, n or 1)
        pts = [self.point(r) for r in rows]
        return pts if n is not None else pts[0]

    def distance(self, a: SurfacePoint, b: SurfacePoint) -> float:
        return float(self.distances_from(self.row(a), self.row(b)[None, :])[0])

    def disc_area(self, x: SurfacePoint, l: float) -> float:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Flat tori
# ---------------------------------------------------------------------------


class FlatTorus(Manifold):
    """Unit d-torus [0,1)^d with the min-image (wraparound) metric."""

    def __init__(self, d: int = 2):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = int(d)
        self.kind = "flat-torus" if d == 2 else f"flat-torus-{d}d"
        self.flatness = FlatnessThreshold(l0=0.5, w0=_ball_volume(d) / 2.0**d)

    @property
    def leading_inverse_area(self) -> tuple[float, float]:
        d = self.dim
        c0 = math.exp(gammaln(d / 2.0 + 1.0) / d) / math.sqrt(math.pi)
        return (1.0 / d, c0)

    def sample_array(self, gen, n):
        return gen.random((n, self.dim))

    def distances_from(self, x_row, sites):
        delta = np.abs(sites - x_row)
        delta = np.minimum(delta, 1.0 - delta)
        return np.sqrt(np.einsum("...i,...i->...", delta, delta))

    def distances_batch(self, xs, sites):
        delta = np.abs(sites - xs[:, None, :])
        delta = np.minimum(delta, 1.0 - delta)
        return np.sqrt(np.einsum("bni,bni->bn", delta, delta))

    def diameter(self) -> float:
        return 0.5 * math.sqrt(self.dim)

    def disc_area(self, x: SurfacePoint, l: float) -> float:
        """A(l); exact closed forms in d = 1, 2, flat regime for d >= 3.

        The min-image ball of radius l is congruent to the intersection of a
        Euclidean l-ball with the centered unit cube, so in 2-D the area
        beyond the wrap radius 1/2 is pi l^2 minus four circular segments.
        """
        if l < 0:
            raise ValueError("radius must be nonnegative")
        d = self.dim
        if l >= self.diameter():
            return 1.0
        if d == 1:
            return min(2.0 * l, 1.0)
        if l <= 0.5:
            return _ball_volume(d) * l**d
        if d == 2:
            seg = l * l * math.acos(0.5 / l) - 0.5 * math.sqrt(l * l - 0.25)
            return math.pi * l * l - 4.0 * seg
        raise NotImplementedError(
            f"d={d} torus disc area beyond the flat regime l <= 1/2 is not provided"
        )


def FlatTorus2D() -> FlatTorus:
    return FlatTorus(2)


# ---------------------------------------------------------------------------
# Round spheres
# ---------------------------------------------------------------------------


class _SphereBase(Manifold):
    dim = 2

    def __init__(self, radius: float = UNIT_SPHERE_RADIUS):
        self.radius = float(radius)

    @property
    def leading_inverse_area(self) -> tuple[float, float]:
        return (0.5, 1.0 / math.sqrt(math.pi))

    def sample_array(self, gen, n):
        # Archimedes hat-box: z uniform on [-R, R], azimuth uniform
        u = gen.random((2, n))
        z = u[0]
        z *= 2.0 * self.radius
        z -= self.radius
        phi = u[1]
        phi *= 2.0 * math.pi
        rho = np.sqrt((self.radius - z) * (self.radius + z))
        out = np.empty((n, 3))
        c, s = np.cos(phi), np.sin(phi)
        c *= rho
        s *= rho
        out[:, 0] = c
        out[:, 1] = s
        out[:, 2] = z
        return out


class SphereGeodesic(_SphereBase):
    """Unit-area round sphere with arc-length (great-circle) distance."""

    kind = "sphere-geodesic"

    def distances_from(self, x_row, sites):
        dots = sites @ x_row / self.radius**2
        return self.radius * np.arccos(np.clip(dots, -1.0, 1.0))

    def distances_batch(self, xs, sites):
        dots = (sites @ xs[:, :, None])[:, :, 0] / self.radius**2
        return self.radius * np.arccos(np.clip(dots, -1.0, 1.0))

    def diameter(self) -> float:
        return math.pi * self.radius

    def disc_area(self, x: SurfacePoint, l: float) -> float:
        if l < 0:
            raise ValueError("radius must be nonnegative")
        if l >= self.diameter():
            return 1.0
        return math.sin(math.sqrt(math.pi) * l) ** 2


class SphereChord(_SphereBase):
    """Round sphere with straight-line 3-D chord distance.

    The area spanned by a chord of length l is exactly pi l^2 all the way to
    the diameter 2R, where it equals the (unit) total area, so the flat
    closed form for <D_k(N)> holds exactly at every N.
    """

    kind = "sphere-chord"

    def __init__(self, radius: float = UNIT_SPHERE_RADIUS):
        super().__init__(radius)
        self.flatness = FlatnessThreshold(l0=2.0 * self.radius, w0=1.0)

    def distances_from(self, x_row, sites):
        return np.linalg.norm(sites - x_row, axis=-1)

    def distances_batch(self, xs, sites):
        return np.linalg.norm(sites - xs[:, None, :], axis=-1)

    def diameter(self) -> float:
        return 2.0 * self.radius

    def disc_area(self, x: SurfacePoint, l: float) -> float:
        if l < 0:
            raise ValueError("radius must be nonnegative")
        return min(math.pi * l * l, 1.0)


# ---------------------------------------------------------------------------
# Conformal patch atlases
# ---------------------------------------------------------------------------


class ConformalPatchSet(Manifold):
    """Surface given as an atlas of conformal patches.

    Sampling draws a patch proportionally to its area mass, then rejection
    samples against a per-patch sup of the metric factor f (validated by a
    grid scan at construction).  Points landing in chart overlaps belong to
    the lowest chart id.  Geodesic point-to-point distance is not defined
    for general atlases (it would require a boundary-value geodesic solver);
    disc areas are delegated to the geodesic shooting integrator.
    """

    kind = "conformal"
    dim = 2

    def __init__(self, patches: Sequence[curv.ConformalPatch], name: str = "conformal",
                 sup_f: Sequence[float] | None = None, max_attempts: int = 1000):
        self.patches = list(patches)
        self.name = name
        self.max_attempts = int(max_attempts)
        self._masses = np.array(
            [
                p.weight * curv.patch_integral(p, lambda uu, vv, _p=p: _p.f(uu, vv), rel_tol=1e-11)
                for p in self.patches
            ]
        )
        total = self._masses.sum()
        if abs(total - 1.0) > 1e-7:
            raise ValueError(f"atlas area is {total}, expected unit total area")
        self._sup_f = []
        for i, p in enumerate(self.patches):
            grid = p.domain.uniform_sample(np.random.default_rng(1234 + i), 4096)
            observed = float(np.max(p.f(grid[:, 0], grid[:, 1]))) * 1.05
            bound = observed if sup_f is None else float(sup_f[i])
            if bound < observed / 1.05:
                raise ValueError(
                    f"declared sup f {bound} below observed {observed / 1.05} on patch {p.name}"
                )
            self._sup_f.append(bound)
        # chart proposals must follow the PROPOSAL mass (domain area x sup f):
        # acceptance ~ f/sup then leaves a global density ~ f, with accepted
        # chart proportions automatically matching the true masses
        proposal = np.array(
            [p.domain.area * s * p.weight for p, s in zip(self.patches, self._sup_f)]
        )
        self._cdf = np.cumsum(proposal) / proposal.sum()

    @property
    def leading_inverse_area(self) -> tuple[float, float]:
        return (0.5, 1.0 / math.sqrt(math.pi))

    def point(self, row):
        return SurfacePoint.of(int(row[0]), row[1:])

    def row(self, p: SurfacePoint):
        return np.concatenate(([float(p.chart_id)], p.array))

    def sample_array(self, gen, n):
        out = np.empty((n, 3))
        filled = 0
        attempts = 0
        while filled < n:
            if attempts > self.max_attempts:
                raise RejectionSamplingError(
                    f"rejection sampling stalled after {attempts} rounds on {self.name}"
                )
            attempts += 1
            m = n - filled
            u = gen.random(m)
            charts = np.searchsorted(self._cdf, u)
            accept_u = gen.random(m)
            for ci in range(len(self.patches)):
                sel = np.flatnonzero(charts == ci)
                if len(sel) == 0:
                    continue
                patch = self.patches[ci]
                pts = patch.domain.uniform_sample(gen, len(sel))
                fvals = patch.f(pts[:, 0], pts[:, 1])
                kept_pts = pts[accept_u[sel] * self._sup_f[ci] <= fvals]
                take = min(len(kept_pts), n - filled)
                if take:
                    out[filled : filled + take, 0] = ci
                    out[filled : filled + take, 1:] = kept_pts[:take]
                    filled += take
        return out

    def distances_from(self, x_row, sites):
        raise NotImplementedError(
            "point-to-point geodesic distance on a general conformal atlas "
            "is not provided (needs a two-point boundary-value solver)"
        )

    def disc_area(self, x: SurfacePoint, l: float) -> float:
        if l < 0:
            raise ValueError("radius must be nonnegative")
        patch = self.patches[x.chart_id]
        return curv.disc_area_numeric(patch, x.coords, l)


# ---------------------------------------------------------------------------
# Polyhedra
# ---------------------------------------------------------------------------


class PolyhedronManifold(Manifold):
    """Convex polyhedral surface with exact unfolded geodesics.

    Rows are (face_index, x, y, z).  Disc areas are provided in the flat and
    single-vertex (cone) regimes only, which is where the deficit-angle
    picture makes exact statements.
    """

    kind = "polyhedron"
    dim = 2

    def __init__(self, surface: regge.PolyhedralSurface, depth: int = 4):
        area = surface.total_area
        if abs(area - 1.0) > 1e-12:
            surface = surface.normalized()
        self.surface = surface
        self.depth = int(depth)
        self._cdf, self._tris = surface.sampling_tables()
        self._vertex_data, _ = regge.deficit_and_euler(surface)
        self._min_edge = min(
            surface.edge_length(i, j) for i, j in surface._edges
        )

    @property
    def leading_inverse_area(self) -> tuple[float, float]:
        return (0.5, 1.0 / math.sqrt(math.pi))

    def point(self, row):
        return SurfacePoint.of(int(row[0]), row[1:])

    def row(self, p: SurfacePoint):
        return np.concatenate(([float(p.chart_id)], p.array))

    def sample_array(self, gen, n):
        u = gen.random((n, 4))
        faces = np.searchsorted(self._cdf, u[:, 0])
        out = np.empty((n, 4))
        out[:, 0] = faces
        for i in range(n):
            pts, tri_cdf = self._tris[faces[i]]
            t = int(np.searchsorted(tri_cdf, u[i, 1]))
            a, b, c = pts[0], pts[t + 1], pts[t + 2]
            r1, r2 = u[i, 2], u[i, 3]
            s = math.sqrt(r1)
            out[i, 1:] = (1.0 - s) * a + s * (1.0 - r2) * b + s * r2 * c
        return out

    def distances_from(self, x_row, sites):
        sites = np.atleast_2d(sites)
        return regge.unfolded_distances_batch(
            self.surface,
            int(x_row[0]),
            x_row[1:],
            sites[:, 0].astype(int),
            sites[:, 1:],
            depth=self.depth,
        )

    def diameter(self) -> float:
        raise NotImplementedError("no closed form; not needed for supported regimes")

    def disc_area(self, x: SurfacePoint, l: float) -> float:
        if l < 0:
            raise ValueError("radius must be nonnegative")
        if l > 0.45 * self._min_edge:
            raise NotImplementedError(
                "disc area is provided only for radii small enough to touch "
                "at most one vertex (l <= 0.45 * min edge length)"
            )
        r = regge.vertex_distances(self.surface, x.chart_id, x.array, self.depth)
        near = np.flatnonzero(r < l)
        if len(near) == 0:
            return math.pi * l * l
        if len(near) > 1:
            raise NotImplementedError("disc overlaps more than one vertex")
        i = int(near[0])
        return regge.cone_disc_area(self._vertex_data[i].deficit, float(r[i]), l)


# ---------------------------------------------------------------------------
# Config-driven construction
# ---------------------------------------------------------------------------


def manifold_from_config(cfg) -> Manifold:
    """Build a manifold from {'kind': ..., 'params': {...}} or a plain name."""
    if isinstance(cfg, str):
        cfg = {"kind": cfg, "params": {}}
    kind = cfg["kind"]
    params = dict(cfg.get("params") or {})
    if kind in ("flat-torus", "flat-torus-2d"):
        return FlatTorus(2)
    if kind == "flat-torus-d":
        return FlatTorus(int(params.get("d", 3)))
    if kind == "sphere-geodesic":
        return SphereGeodesic()
    if kind == "sphere-chord":
        return SphereChord()
    if kind == "conformal":
        atlas = params.pop("atlas")
        sup_f = params.pop("sup_f", None)
        max_attempts = params.pop("max_attempts", 1000)
        patches = curv.patch_atlas(atlas, **params)
        return ConformalPatchSet(patches, name=atlas, sup_f=sup_f, max_attempts=max_attempts)
    if kind == "polyhedron":
        shape = params.get("shape", "cube")
        return PolyhedronManifold(regge.builtin_polyhedron(shape), depth=int(params.get("depth", 4)))
    if kind in ("cube", "tetrahedron"):
        return PolyhedronManifold(regge.builtin_polyhedron(kind))
    raise KeyError(f"unknown manifold kind {kind!r}")
