"""Conformal-patch differential geometry.

A surface is covered by coordinate patches carrying a conformal metric
ds^2 = f(u,v) (du^2 + dv^2), area measure dmu = f du dv.  From f and its
first/second partials everything else is derived numerically:

  * Gaussian curvature K and its invariant derivative scalars,
  * geodesics (adaptive ODE integration of the standard conformal-metric
    geodesic equations),
  * geodesic-disc areas, either by shooting (polar Jacobian transport) or
    from the curvature expansion of A(l) in even powers of l,
  * formal reversion of the area expansion into an inverse series A^{-1}(w),
  * Gauss-Bonnet surface integrals and mu-averages of the inverse series.

Direction bookkeeping for disc areas: initial velocities are parametrized
by the angle phi with (u', v') = (cos phi, sin phi)/sqrt(f0).  Sweeping phi
over [0, 2pi) is the same as integrating the u'-component over its allowed
range twice, once per sign of v'; the angle form is used because the
Jacobian of the change of variables cancels the inverse-square-root
endpoint singularity of the u'-parametrization, and the two sign branches
become the upper and lower half-circle.  Odd powers of l cancel between
opposite directions automatically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp
from scipy.special import roots_legendre

from .powerseries import ps_sqrt, ps_trim, solve_inverse_of_monotone
from .series import PowerSeries

__all__ = [
    "RectDomain",
    "DiscDomain",
    "ConformalPatch",
    "CurvatureJet",
    "GeodesicState",
    "GeodesicPath",
    "AreaPolynomial",
    "ConjugatePointError",
    "QuadratureConvergenceError",
    "gaussian_curvature",
    "area_series_from_curvature",
    "invert_area_series",
    "geodesic_trace",
    "disc_area_numeric",
    "gauss_bonnet_chi",
    "surface_average_series",
    "constant_patch",
    "flat_torus_patch",
    "stereographic_sphere_atlas",
    "perturbed_sphere_atlas",
    "torus_of_revolution_atlas",
    "hyperbolic_patch",
    "patch_atlas",
    "UNIT_SPHERE_RADIUS",
]

# Radius of the unit-area round sphere.
UNIT_SPHERE_RADIUS = 1.0 / (2.0 * math.sqrt(math.pi))


class ConjugatePointError(RuntimeError):
    """The geodesic-polar Jacobian changed sign before the target radius."""


class QuadratureConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


# ---------------------------------------------------------------------------
# Patch domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RectDomain:
    u_min: float
    u_max: float
    v_min: float
    v_max: float
    periodic_u: bool = False
    periodic_v: bool = False

    @property
    def area(self) -> float:
        return (self.u_max - self.u_min) * (self.v_max - self.v_min)

    def contains(self, u, v, margin: float = 0.0):
        ok_u = (u >= self.u_min - margin) & (u <= self.u_max + margin)
        ok_v = (v >= self.v_min - margin) & (v <= self.v_max + margin)
        if self.periodic_u:
            ok_u = True
        if self.periodic_v:
            ok_v = True
        return ok_u & ok_v if not (self.periodic_u and self.periodic_v) else np.full(np.shape(u), True)

    def boundary_clearance(self, u: float, v: float) -> float:
        """Smallest coordinate distance to a non-periodic edge (inf if none)."""
        vals = []
        if not self.periodic_u:
            vals += [u - self.u_min, self.u_max - u]
        if not self.periodic_v:
            vals += [v - self.v_min, self.v_max - v]
        return min(vals) if vals else math.inf

    def uniform_sample(self, gen, n: int) -> np.ndarray:
        pts = gen.random((n, 2))
        pts[:, 0] = self.u_min + pts[:, 0] * (self.u_max - self.u_min)
        pts[:, 1] = self.v_min + pts[:, 1] * (self.v_max - self.v_min)
        return pts


@dataclass(frozen=True)
class DiscDomain:
    center_u: float
    center_v: float
    radius: float

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def contains(self, u, v, margin: float = 0.0):
        r2 = (u - self.center_u) ** 2 + (v - self.center_v) ** 2
        return r2 <= (self.radius + margin) ** 2

    def boundary_clearance(self, u: float, v: float) -> float:
        return self.radius - math.hypot(u - self.center_u, v - self.center_v)

    def uniform_sample(self, gen, n: int) -> np.ndarray:
        pts = gen.random((n, 2))
        r = self.radius * np.sqrt(pts[:, 0])
        th = 2.0 * math.pi * pts[:, 1]
        return np.column_stack(
            (self.center_u + r * np.cos(th), self.center_v + r * np.sin(th))
        )


# ---------------------------------------------------------------------------
# Conformal patches
# ---------------------------------------------------------------------------


class ConformalPatch:
    """One coordinate patch with metric factor f and its partials.

    All supplied callables must be vectorized over numpy arrays.  The f
    formula must remain evaluable slightly outside the declared domain so
    that finite-difference stencils near the boundary stay valid.
    """

    def __init__(
        self,
        f: Callable,
        fu: Callable,
        fv: Callable,
        fuu: Callable,
        fuv: Callable,
        fvv: Callable,
        domain,
        name: str = "patch",
        weight: float = 1.0,
        embedding: Callable | None = None,
    ):
        self.f, self.fu, self.fv = f, fu, fv
        self.fuu, self.fuv, self.fvv = fuu, fuv, fvv
        self.domain = domain
        self.name = name
        self.weight = float(weight)
        self.embedding = embedding

    @classmethod
    def from_expression(
        cls,
        expr,
        domain,
        name: str = "patch",
        weight: float = 1.0,
        embedding: Callable | None = None,
    ) -> "ConformalPatch":
        """Build a patch from a sympy expression (or string) in u, v."""
        u, v = sp.symbols("u v", real=True)
        e = sp.sympify(expr, locals={"u": u, "v": v}) if isinstance(expr, str) else expr
        # identify coordinate symbols by name so caller-created symbols work
        subs = {s: (u if s.name == "u" else v) for s in e.free_symbols if s.name in ("u", "v")}
        e = e.subs(subs)
        free = e.free_symbols - {u, v}
        if free:
            raise ValueError(f"metric factor has unbound symbols: {free}")

        def lamb(ex):
            fn = sp.lambdify((u, v), ex, modules="numpy")

            def wrapped(uu, vv, _fn=fn):
                uu = np.asarray(uu, dtype=float)
                vv = np.asarray(vv, dtype=float)
                out = np.asarray(_fn(uu, vv), dtype=float)
                shape = np.broadcast_shapes(uu.shape, vv.shape)
                if out.shape != shape:
                    out = np.broadcast_to(out, shape).copy()
                return out

            return wrapped

        return cls(
            f=lamb(e),
            fu=lamb(sp.diff(e, u)),
            fv=lamb(sp.diff(e, v)),
            fuu=lamb(sp.diff(e, u, 2)),
            fuv=lamb(sp.diff(e, u, v)),
            fvv=lamb(sp.diff(e, v, 2)),
            domain=domain,
            name=name,
            weight=weight,
            embedding=embedding,
        )

    def scaled(self, factor: float, name: str | None = None) -> "ConformalPatch":
        """Patch with metric factor multiplied by a positive constant."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        mk = lambda fn: (lambda uu, vv, _fn=fn: factor * _fn(uu, vv))
        return ConformalPatch(
            f=mk(self.f), fu=mk(self.fu), fv=mk(self.fv),
            fuu=mk(self.fuu), fuv=mk(self.fuv), fvv=mk(self.fvv),
            domain=self.domain, name=name or self.name, weight=self.weight,
            embedding=self.embedding,
        )

    def check_positive(self, u, v):
        val = self.f(u, v)
        if np.any(np.asarray(val) <= 0.0):
            raise ValueError(f"metric factor must be positive on {self.name}")
        return val

    def validate_derivatives(self, gen=None, n: int = 64, rel_tol: float = 1e-6) -> float:
        """Spot-check supplied partials against central differences of f.

        Returns the worst relative mismatch found; raises if above rel_tol.
        """
        gen = gen or np.random.default_rng(0)
        pts = self.domain.uniform_sample(gen, n)
        # stay away from the boundary so the stencil remains in-domain
        uu, vv = pts[:, 0], pts[:, 1]
        h = 1e-5 * max(1.0, float(np.max(np.abs(pts))) if len(pts) else 1.0)
        scale = np.maximum(np.abs(self.f(uu, vv)), 1e-30)
        worst = 0.0
        pairs = [
            (self.fu, (self.f(uu + h, vv) - self.f(uu - h, vv)) / (2 * h)),
            (self.fv, (self.f(uu, vv + h) - self.f(uu, vv - h)) / (2 * h)),
            (self.fuu, (self.f(uu + h, vv) - 2 * self.f(uu, vv) + self.f(uu - h, vv)) / h**2),
            (self.fvv, (self.f(uu, vv + h) - 2 * self.f(uu, vv) + self.f(uu, vv - h)) / h**2),
            (
                self.fuv,
                (
                    self.f(uu + h, vv + h)
                    - self.f(uu + h, vv - h)
                    - self.f(uu - h, vv + h)
                    + self.f(uu - h, vv - h)
                )
                / (4 * h**2),
            ),
        ]
        for fn, approx in pairs:
            err = float(np.max(np.abs(fn(uu, vv) - approx) / np.maximum(scale, np.abs(approx))))
            worst = max(worst, err)
        if worst > rel_tol:
            raise ValueError(
                f"supplied derivatives of {self.name} disagree with finite "
                f"differences (relative error {worst:.2e})"
            )
        return worst


@dataclass(frozen=True)
class CurvatureJet:
    """Gaussian curvature and its invariant derivative scalars at a point."""

    curvature: float
    lap_curvature: float = 0.0
    grad_curvature_sq: float = 0.0
    bilap_curvature: float = 0.0


@dataclass(frozen=True)
class GeodesicState:
    s: float
    u: float
    v: float
    du_ds: float
    dv_ds: float


@dataclass(frozen=True)
class GeodesicPath:
    states: tuple
    exited_domain: bool
    unit_speed_drift: float

    @property
    def end(self) -> GeodesicState:
        return self.states[-1]


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------


def curvature_field(patch: ConformalPatch, u, v):
    """Gaussian curvature K = (f_u^2 + f_v^2 - f f_uu - f f_vv) / (2 f^3)."""
    f = patch.f(u, v)
    fu, fv = patch.fu(u, v), patch.fv(u, v)
    fuu, fvv = patch.fuu(u, v), patch.fvv(u, v)
    return (fu**2 + fv**2 - f * fuu - f * fvv) / (2.0 * f**3)


def _richardson_second(fn, x0: np.ndarray, direction: int, h: float):
    """4th-order second partial along u (direction=0) or v (1), Richardson."""
    def d2(hh):
        e = np.zeros(2)
        e[direction] = hh
        return (fn(x0[0] + e[0], x0[1] + e[1]) - 2.0 * fn(x0[0], x0[1])
                + fn(x0[0] - e[0], x0[1] - e[1])) / hh**2

    return (4.0 * d2(h / 2.0) - d2(h)) / 3.0


def _richardson_first(fn, x0, direction: int, h: float):
    def d1(hh):
        e = np.zeros(2)
        e[direction] = hh
        return (fn(x0[0] + e[0], x0[1] + e[1]) - fn(x0[0] - e[0], x0[1] - e[1])) / (2 * hh)

    return (4.0 * d1(h / 2.0) - d1(h)) / 3.0


def gaussian_curvature(
    patch: ConformalPatch,
    at: Sequence[float],
    with_derivatives: bool = True,
    h: float | None = None,
) -> CurvatureJet:
    """Curvature jet at a point of a conformal patch.

    K itself is analytic in the supplied partials of f.  The invariant
    scalars lap K = (K_uu + K_vv)/f, (grad K)^2 = (K_u^2 + K_v^2)/f and
    lap(lap K) are produced by Richardson-extrapolated central differences
    applied to the analytic K, so no derivatives of f beyond second order
    are ever required.
    """
    u0, v0 = float(at[0]), float(at[1])
    f0 = float(patch.check_positive(u0, v0))
    k0 = float(curvature_field(patch, u0, v0))
    if not with_derivatives:
        return CurvatureJet(curvature=k0)
    scale = max(1.0, abs(u0), abs(v0))
    hh = h if h is not None else 4e-3 * scale

    kfn = lambda uu, vv: curvature_field(patch, uu, vv)
    x0 = np.array([u0, v0])
    ku = float(_richardson_first(kfn, x0, 0, hh))
    kv = float(_richardson_first(kfn, x0, 1, hh))
    kuu = float(_richardson_second(kfn, x0, 0, hh))
    kvv = float(_richardson_second(kfn, x0, 1, hh))
    grad_sq = (ku**2 + kv**2) / f0
    lap = (kuu + kvv) / f0

    hi = 2.0 * hh  # inner step for the nested Laplacian

    def lap_fn(uu, vv):
        uu = np.asarray(uu, dtype=float)
        vv = np.asarray(vv, dtype=float)
        d2u = (kfn(uu + hi, vv) - 2 * kfn(uu, vv) + kfn(uu - hi, vv)) / hi**2
        d2u = (4 * ((kfn(uu + hi / 2, vv) - 2 * kfn(uu, vv) + kfn(uu - hi / 2, vv)) / (hi / 2) ** 2) - d2u) / 3
        d2v = (kfn(uu, vv + hi) - 2 * kfn(uu, vv) + kfn(uu, vv - hi)) / hi**2
        d2v = (4 * ((kfn(uu, vv + hi / 2) - 2 * kfn(uu, vv) + kfn(uu, vv - hi / 2)) / (hi / 2) ** 2) - d2v) / 3
        return (d2u + d2v) / patch.f(uu, vv)

    # outer step well above the inner FD noise floor; constant-curvature
    # metrics then resolve bilap ~ 0 to ~1e-7 instead of ~1e-4
    ho = 20.0 * hh
    lap0 = lap_fn(u0, v0)
    bl_uu = (lap_fn(u0 + ho, v0) - 2 * lap0 + lap_fn(u0 - ho, v0)) / ho**2
    bl_vv = (lap_fn(u0, v0 + ho) - 2 * lap0 + lap_fn(u0, v0 - ho)) / ho**2
    bilap = float((bl_uu + bl_vv) / f0)
    return CurvatureJet(
        curvature=k0,
        lap_curvature=float(lap),
        grad_curvature_sq=float(grad_sq),
        bilap_curvature=bilap,
    )


# ---------------------------------------------------------------------------
# Disc-area expansion and its reversion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AreaPolynomial:
    """Even polynomial A(l) = sum_m even_coeffs[m] * l^(2m+2)."""

    even_coeffs: tuple

    def __call__(self, l):
        x = np.asarray(l, dtype=float) ** 2
        acc = np.zeros_like(x)
        for c in self.even_coeffs[::-1]:
            acc = acc * x + c
        return acc * x

    @property
    def order(self) -> int:
        return 2 * len(self.even_coeffs)


def area_series_from_curvature(jet: CurvatureJet, order: int = 8) -> AreaPolynomial:
    """Geodesic-disc area expansion about a point with the given curvature jet.

    A(l) = pi l^2 [ 1 - K l^2/12 + (2K^2 - 3 lap K) l^4/720
                    - (8K^3 - 3(10 (grad K)^2 + 14 K lap K - 5 lap^2 K)) l^6/161280 ]
    truncated at the requested (even) order in l.
    """
    if order not in (2, 4, 6, 8):
        raise ValueError("order must be one of 2, 4, 6, 8")
    k = jet.curvature
    coeffs = [math.pi]
    if order >= 4:
        coeffs.append(-math.pi * k / 12.0)
    if order >= 6:
        coeffs.append(math.pi * (2.0 * k**2 - 3.0 * jet.lap_curvature) / 720.0)
    if order >= 8:
        bracket = 10.0 * jet.grad_curvature_sq + 14.0 * k * jet.lap_curvature - 5.0 * jet.bilap_curvature
        coeffs.append(-math.pi * (8.0 * k**3 - 3.0 * bracket) / 161280.0)
    return AreaPolynomial(even_coeffs=tuple(coeffs))


def invert_area_series(area_poly: AreaPolynomial, order: int = 3) -> PowerSeries:
    """Formal reversion of an even area polynomial into A^{-1}(w).

    Works on the series in x = l^2: with A = pi x g(x), the reversion gives
    x(w) = w h(w) and the radius is l = sqrt(x) = sqrt(w) sqrt(h)(w).  The
    coefficients are produced by fixed-point series reversion, not copied
    from any closed form, so constant-curvature closed forms can be used as
    independent cross-checks.
    """
    coeffs = np.asarray(area_poly.even_coeffs, dtype=float)
    if len(coeffs) == 0 or coeffs[0] == 0.0:
        raise ValueError("area polynomial must have a nonzero leading term")
    g = ps_trim(coeffs, order)  # series in x multiplying x
    h = solve_inverse_of_monotone(g, order)
    c = ps_sqrt(h, order)
    return PowerSeries(gamma=0.5, coeffs=tuple(c))


# ---------------------------------------------------------------------------
# Geodesics
# ---------------------------------------------------------------------------


def _geodesic_rhs(patch: ConformalPatch):
    def rhs(s, y):
        u, v, p, q = y[0], y[1], y[2], y[3]
        f = float(patch.f(u, v))
        g1 = float(patch.fu(u, v)) / f
        g2 = float(patch.fv(u, v)) / f
        dp = -0.5 * g1 * (p * p - q * q) - g2 * p * q
        dq = -0.5 * g2 * (q * q - p * p) - g1 * p * q
        return (p, q, dp, dq)

    return rhs


def _geodesic_variational_rhs(patch: ConformalPatch):
    """RHS for (u, v, p, q, U, V, P, Q, a): geodesic + transported variation
    + running disc-area integrand a' = f (p V - q U)."""

    def rhs(s, y):
        u, v, p, q, U, V, P, Q, _a = y
        f = float(patch.f(u, v))
        fu = float(patch.fu(u, v))
        fv = float(patch.fv(u, v))
        fuu = float(patch.fuu(u, v))
        fuv = float(patch.fuv(u, v))
        fvv = float(patch.fvv(u, v))
        g1, g2 = fu / f, fv / f
        g1u = fuu / f - g1 * g1
        g1v = fuv / f - g1 * g2
        g2u = fuv / f - g1 * g2
        g2v = fvv / f - g2 * g2
        pp, qq = p * p, q * q
        dp = -0.5 * g1 * (pp - qq) - g2 * p * q
        dq = -0.5 * g2 * (qq - pp) - g1 * p * q
        # partials of the accelerations
        dFu_du = -0.5 * (pp - qq) * g1u - p * q * g2u
        dFu_dv = -0.5 * (pp - qq) * g1v - p * q * g2v
        dFu_dp = -g1 * p - g2 * q
        dFu_dq = g1 * q - g2 * p
        dFv_du = -0.5 * (qq - pp) * g2u - p * q * g1u
        dFv_dv = -0.5 * (qq - pp) * g2v - p * q * g1v
        dFv_dp = g2 * p - g1 * q
        dFv_dq = -g2 * q - g1 * p
        dP = dFu_du * U + dFu_dv * V + dFu_dp * P + dFu_dq * Q
        dQ = dFv_du * U + dFv_dv * V + dFv_dp * P + dFv_dq * Q
        da = f * (p * V - q * U)
        return (p, q, dp, dq, P, Q, dP, dQ, da)

    return rhs


def initial_geodesic_state(patch: ConformalPatch, u0: float, v0: float, angle: float) -> GeodesicState:
    """Unit-speed initial state shooting in chart direction `angle`."""
    f0 = float(patch.check_positive(u0, v0))
    inv = 1.0 / math.sqrt(f0)
    return GeodesicState(s=0.0, u=u0, v=v0, du_ds=inv * math.cos(angle), dv_ds=inv * math.sin(angle))


def geodesic_trace(
    patch: ConformalPatch,
    start: GeodesicState,
    s_max: float,
    tol: float = 1e-10,
    n_states: int = 33,
) -> GeodesicPath:
    """Integrate the geodesic ODE from `start` for arc length s_max.

    The returned path samples n_states points uniformly in s.  If the
    geodesic leaves a bounded patch domain the path is truncated there and
    flagged.  The unit-speed residual max |f (u'^2+v'^2) - 1| along the
    returned path is reported as `unit_speed_drift`.
    """
    f0 = float(patch.f(start.u, start.v))
    speed = f0 * (start.du_ds**2 + start.dv_ds**2)
    if abs(speed - 1.0) > 1e-8:
        raise ValueError(f"start state is not unit speed: f |x'|^2 = {speed}")

    events = []

    def exit_event(s, y):
        return patch.domain.boundary_clearance(y[0], y[1])

    exit_event.terminal = True
    exit_event.direction = -1
    if patch.domain.boundary_clearance(start.u, start.v) != math.inf:
        events.append(exit_event)

    sol = solve_ivp(
        _geodesic_rhs(patch),
        (0.0, s_max),
        [start.u, start.v, start.du_ds, start.dv_ds],
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-2,
        dense_output=True,
        events=events or None,
        max_step=s_max / 4.0,
    )
    if not sol.success:
        raise RuntimeError(f"geodesic integration failed: {sol.message}")
    exited = sol.status == 1
    s_end = float(sol.t[-1])
    ss = np.linspace(0.0, s_end, n_states)
    ys = sol.sol(ss)
    states = tuple(
        GeodesicState(s=float(s), u=float(y[0]), v=float(y[1]), du_ds=float(y[2]), dv_ds=float(y[3]))
        for s, y in zip(ss, ys.T)
    )
    fvals = patch.f(ys[0], ys[1])
    drift = float(np.max(np.abs(fvals * (ys[2] ** 2 + ys[3] ** 2) - 1.0)))
    return GeodesicPath(states=states, exited_domain=exited, unit_speed_drift=drift)


def _polar_sector_area(patch: ConformalPatch, u0: float, v0: float, angle: float,
                       l: float, ode_tol: float) -> float:
    """Transported-Jacobian area density integrated along one direction."""
    f0 = float(patch.check_positive(u0, v0))
    inv = 1.0 / math.sqrt(f0)
    y0 = [
        u0, v0, inv * math.cos(angle), inv * math.sin(angle),
        0.0, 0.0, -inv * math.sin(angle), inv * math.cos(angle),
        0.0,
    ]

    def conjugate_event(s, y):
        # Jacobian starts at 0 like s/f0; ignore the first sliver.
        jac = y[2] * y[5] - y[3] * y[4]
        if s < 1e-9 * max(l, 1.0):
            return 1.0
        return jac

    conjugate_event.terminal = True
    conjugate_event.direction = -1

    def exit_event(s, y):
        return patch.domain.boundary_clearance(y[0], y[1])

    exit_event.terminal = True
    exit_event.direction = -1

    events = [conjugate_event]
    if patch.domain.boundary_clearance(u0, v0) != math.inf:
        events.append(exit_event)

    sol = solve_ivp(
        _geodesic_variational_rhs(patch),
        (0.0, l),
        y0,
        method="DOP853",
        rtol=ode_tol,
        atol=ode_tol * 1e-2,
        events=events,
    )
    if not sol.success:
        raise RuntimeError(f"variational integration failed: {sol.message}")
    if sol.status == 1:
        if sol.t_events[0].size:
            raise ConjugatePointError(
                f"conjugate point at s={sol.t_events[0][0]:.6g} < l={l:.6g}; "
                "geodesic disc is not embedded"
            )
        raise ValueError("geodesic disc of this radius leaves the patch domain")
    return float(sol.y[8, -1])


def disc_area_numeric(
    patch: ConformalPatch,
    center: Sequence[float],
    l: float,
    angle_tol: float = 1e-9,
    ode_tol: float = 1e-10,
    max_directions: int = 512,
) -> float:
    """Geodesic-disc area by shooting: integrate f J over (s, direction).

    Directions sweep the full circle (both velocity-sign branches); the
    angular integral uses the periodic trapezoid rule with doubling, which
    converges spectrally for smooth metrics.
    """
    if l < 0:
        raise ValueError("radius must be nonnegative")
    if l == 0:
        return 0.0
    u0, v0 = float(center[0]), float(center[1])
    cache: dict[int, float] = {}

    def sector(idx: int, m: int) -> float:
        key = idx * (max_directions // m)
        if key not in cache:
            cache[key] = _polar_sector_area(
                patch, u0, v0, 2.0 * math.pi * key / max_directions, l, ode_tol
            )
        return cache[key]

    m = 16
    prev = None
    while m <= max_directions:
        total = sum(sector(i, m) for i in range(m)) * (2.0 * math.pi / m)
        if prev is not None and abs(total - prev) <= angle_tol * max(abs(total), 1e-30):
            return total
        prev = total
        m *= 2
    raise QuadratureConvergenceError(
        "angular quadrature for disc area did not converge",
        residual=abs(total - prev),
    )


# ---------------------------------------------------------------------------
# Surface quadrature: Gauss-Bonnet and series averages
# ---------------------------------------------------------------------------


def _rect_nodes(dom: RectDomain, n: int):
    x, wx = roots_legendre(n)
    u = 0.5 * (dom.u_min + dom.u_max) + 0.5 * (dom.u_max - dom.u_min) * x
    v = 0.5 * (dom.v_min + dom.v_max) + 0.5 * (dom.v_max - dom.v_min) * x
    wu = 0.5 * (dom.u_max - dom.u_min) * wx
    wv = 0.5 * (dom.v_max - dom.v_min) * wx
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wu, wv)
    return uu, vv, ww


def _disc_nodes(dom: DiscDomain, n: int):
    x, wx = roots_legendre(n)
    r = 0.5 * dom.radius * (x + 1.0)
    wr = 0.5 * dom.radius * wx
    m = 2 * n
    th = 2.0 * math.pi * np.arange(m) / m
    wth = np.full(m, 2.0 * math.pi / m)
    rr, tt = np.meshgrid(r, th, indexing="ij")
    uu = dom.center_u + rr * np.cos(tt)
    vv = dom.center_v + rr * np.sin(tt)
    ww = np.outer(wr, wth) * rr
    return uu, vv, ww


def patch_integral(patch: ConformalPatch, integrand: Callable, rel_tol: float = 1e-10,
                   abs_tol: float = 1e-12, n_start: int = 12, n_max: int = 384) -> float:
    """Integral of integrand(u, v) du dv over the patch domain, adaptive order.

    The integrand receives coordinate arrays; multiply by patch.f inside the
    integrand when integrating against the area measure.  abs_tol matters for
    integrals that vanish by symmetry, where no relative test can succeed.
    """
    nodes = _rect_nodes if isinstance(patch.domain, RectDomain) else _disc_nodes
    n = n_start
    prev = None
    diff = math.inf
    while n <= n_max:
        uu, vv, ww = nodes(patch.domain, n)
        total = float(np.sum(integrand(uu, vv) * ww))
        if prev is not None:
            diff = abs(total - prev)
            if diff <= rel_tol * abs(total) + abs_tol:
                return total
        prev = total
        n *= 2
    raise QuadratureConvergenceError(
        f"surface quadrature on {patch.name} did not converge", residual=diff
    )


def surface_integral(patches: Sequence[ConformalPatch], integrand, rel_tol=1e-10) -> float:
    """Sum of weighted patch integrals of integrand(patch, u, v) du dv."""
    return math.fsum(
        p.weight * patch_integral(p, lambda uu, vv, _p=p: integrand(_p, uu, vv), rel_tol)
        for p in patches
    )


def gauss_bonnet_chi(patches: Sequence[ConformalPatch], rel_tol: float = 1e-8) -> float:
    """(1/2pi) Int K dmu over an atlas tiling a closed surface.

    For a valid atlas the result is the Euler characteristic, an integer;
    the deviation from the nearest integer is a direct measure of the
    quadrature and tiling error.
    """
    total = surface_integral(
        patches,
        lambda p, uu, vv: curvature_field(p, uu, vv) * p.f(uu, vv),
        rel_tol=rel_tol,
    )
    return total / (2.0 * math.pi)


def _lap_curvature_field(patch: ConformalPatch, uu, vv, h: float = 4e-3):
    """Laplace-Beltrami of K on arrays via Richardson central differences."""
    k = lambda a, b: curvature_field(patch, a, b)

    def d2(axis_h_u, axis_h_v, hh):
        return (k(uu + axis_h_u, vv + axis_h_v) - 2.0 * k(uu, vv) + k(uu - axis_h_u, vv - axis_h_v)) / hh**2

    d2u = (4.0 * d2(h / 2, 0.0, h / 2) - d2(h, 0.0, h)) / 3.0
    d2v = (4.0 * d2(0.0, h / 2, h / 2) - d2(0.0, h, h)) / 3.0
    return (d2u + d2v) / patch.f(uu, vv)


def surface_average_series(
    patches: Sequence[ConformalPatch], order: int = 3, rel_tol: float = 1e-9
) -> PowerSeries:
    """mu-average of the pointwise inverse-area series over a closed surface.

    Total derivatives integrate to zero on a closed surface, so the averaged
    coefficients reduce to integrals of K, K^2 and (K^3, K lap K):

        c1/c0 = Int K dmu / 24 pi          (Gauss-Bonnet: chi/12)
        c2/c0 = Int 3 K^2 dmu / 640 pi^2
        c3/c0 = Int (15 K^3 + 16 K lap K) dmu / 21504 pi^3

    The averaged series generally does NOT come from any single closed
    surface's A(l): beyond O(w) the coefficients mix curvature moments that
    no topological identity controls.
    """
    if order < 1 or order > 3:
        raise ValueError("order must be 1, 2 or 3")
    c0 = 1.0 / math.sqrt(math.pi)
    kf = lambda p, uu, vv: curvature_field(p, uu, vv)
    coeffs = [c0]
    int_k = surface_integral(patches, lambda p, uu, vv: kf(p, uu, vv) * p.f(uu, vv), rel_tol)
    coeffs.append(c0 * int_k / (24.0 * math.pi))
    if order >= 2:
        int_k2 = surface_integral(
            patches, lambda p, uu, vv: kf(p, uu, vv) ** 2 * p.f(uu, vv), rel_tol
        )
        coeffs.append(c0 * 3.0 * int_k2 / (640.0 * math.pi**2))
    if order >= 3:
        def w3(p, uu, vv):
            k = kf(p, uu, vv)
            lap = _lap_curvature_field(p, uu, vv)
            return (15.0 * k**3 + 16.0 * k * lap) * p.f(uu, vv)

        int_w3 = surface_integral(patches, w3, max(rel_tol, 1e-7))
        coeffs.append(c0 * int_w3 / (21504.0 * math.pi**3))
    return PowerSeries(gamma=0.5, coeffs=tuple(coeffs))


# ---------------------------------------------------------------------------
# Built-in patch catalog
# ---------------------------------------------------------------------------


def constant_patch(value: float = 1.0, extent: float = 1.0, name: str = "constant") -> ConformalPatch:
    dom = RectDomain(0.0, extent, 0.0, extent)
    return ConformalPatch.from_expression(sp.Float(value), dom, name=name)


def flat_torus_patch() -> ConformalPatch:
    dom = RectDomain(0.0, 1.0, 0.0, 1.0, periodic_u=True, periodic_v=True)
    return ConformalPatch.from_expression(sp.Integer(1), dom, name="flat-torus")


def _sphere_embeddings(radius: float):
    def north(u, v):
        rho2 = u**2 + v**2
        den = 1.0 + rho2
        return np.stack(
            [2.0 * u / den * radius, 2.0 * v / den * radius, radius * (1.0 - rho2) / den],
            axis=-1,
        )

    def south(u, v):
        rho2 = u**2 + v**2
        den = 1.0 + rho2
        return np.stack(
            [2.0 * u / den * radius, 2.0 * v / den * radius, -radius * (1.0 - rho2) / den],
            axis=-1,
        )

    return north, south


def stereographic_sphere_atlas(radius: float = UNIT_SPHERE_RADIUS) -> list[ConformalPatch]:
    """Round sphere as two stereographic disc charts (one per hemisphere).

    Chart 0 covers the closed northern hemisphere, chart 1 the southern;
    f = 4 R^2 / (1 + u^2 + v^2)^2 on the unit disc in both.
    """
    u, v = sp.symbols("u v", real=True)
    f = 4 * sp.Float(radius) ** 2 / (1 + u**2 + v**2) ** 2
    north, south = _sphere_embeddings(radius)
    dom = DiscDomain(0.0, 0.0, 1.0)
    return [
        ConformalPatch.from_expression(f, dom, name="sphere-north", embedding=north),
        ConformalPatch.from_expression(f, dom, name="sphere-south", embedding=south),
    ]


def perturbed_sphere_atlas(eps: float = 0.15, radius: float = UNIT_SPHERE_RADIUS,
                           normalize: bool = True) -> list[ConformalPatch]:
    """Genus-0 surface: round-sphere metric times exp(2 eps z/R), renormalized
    to unit total area.  Curvature is nonconstant but Int K dmu stays 4 pi."""
    u, v = sp.symbols("u v", real=True)
    rho2 = u**2 + v**2
    base = 4 * sp.Float(radius) ** 2 / (1 + rho2) ** 2
    g_north = (1 - rho2) / (1 + rho2)  # z/R in the northern chart
    north, south = _sphere_embeddings(radius)
    dom = DiscDomain(0.0, 0.0, 1.0)
    patches = [
        ConformalPatch.from_expression(
            base * sp.exp(2 * sp.Float(eps) * g_north), dom, name="perturbed-north", embedding=north
        ),
        ConformalPatch.from_expression(
            base * sp.exp(-2 * sp.Float(eps) * g_north), dom, name="perturbed-south", embedding=south
        ),
    ]
    if not normalize:
        return patches
    area = surface_integral(patches, lambda p, uu, vv: p.f(uu, vv), rel_tol=1e-12)
    return [p.scaled(1.0 / area, name=p.name) for p in patches]


def torus_of_revolution_atlas(c: float = 2.0, a: float = 1.0) -> list[ConformalPatch]:
    """Torus of revolution (center radius c, tube radius a > 0, c > a) as one
    periodic conformal rectangle chart, rescaled to unit area.

    The tube angle is reparametrized by the conformal coordinate psi with
    d psi = a d theta / (c + a cos theta); cos theta is expressed through
    psi without branch cuts, so the chart is smooth across its period.
    """
    if not (c > a > 0):
        raise ValueError("need c > a > 0 for a ring torus")
    u, v = sp.symbols("u v", real=True)  # u = psi, v = phi
    q2 = sp.Float((c + a) / (c - a))
    sigma = sp.sqrt(sp.Float(c**2 - a**2)) / (2 * sp.Float(a))
    s = sigma * u
    cos_theta = (sp.cos(s) ** 2 - q2 * sp.sin(s) ** 2) / (sp.cos(s) ** 2 + q2 * sp.sin(s) ** 2)
    lam2 = sp.Float(1.0 / (4.0 * math.pi**2 * a * c))
    f = lam2 * (sp.Float(c) + sp.Float(a) * cos_theta) ** 2
    psi_period = 2.0 * math.pi * a / math.sqrt(c**2 - a**2)
    dom = RectDomain(
        -psi_period / 2.0, psi_period / 2.0, 0.0, 2.0 * math.pi,
        periodic_u=True, periodic_v=True,
    )
    return [ConformalPatch.from_expression(f, dom, name="torus-of-revolution")]


def hyperbolic_patch() -> ConformalPatch:
    """Upper-half-plane patch f = 1/v^2 (K = -1); not a closed surface,
    provided for curvature validation only."""
    dom = RectDomain(-1.0, 1.0, 0.5, 2.0)
    return ConformalPatch.from_expression("1/v**2", dom, name="hyperbolic")


def patch_atlas(name: str, **params) -> list[ConformalPatch]:
    """Built-in atlases by name for config files and the CLI."""
    builders = {
        "flat-torus": lambda: [flat_torus_patch()],
        "stereographic-sphere": lambda: stereographic_sphere_atlas(**params),
        "perturbed-sphere": lambda: perturbed_sphere_atlas(**params),
        "torus-of-revolution": lambda: torus_of_revolution_atlas(**params),
        "constant": lambda: [constant_patch(**params)],
    }
    if name not in builders:
        raise KeyError(f"unknown atlas {name!r}; available: {sorted(builders)}")
    return builders[name]()
