"""Command-line front end.

Subcommands
-----------
analytic   series and quadrature values of <D_k(N)> side by side
mc         Monte Carlo moments at one N
sweep      Monte Carlo over an N grid, optional 1/N coefficient fit
curvature  Gauss-Bonnet chi and surface-averaged inverse-area series
regge      deficit angles and Euler's relation for a polyhedron
invert     reversion of a curvature-jet area expansion

Result tables share a fixed row schema (versioned via the `# schema=1`
header): engine, manifold, k, n, alpha, value, uncertainty, seed.  JSON
output mirrors the same rows and may add subcommand-specific extras.
Outputs are written atomically and are byte-identical for identical
configurations, independent of --streams.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from . import curvature as curv
from . import regge
from .manifolds import manifold_from_config
from .montecarlo import SampleConfig, estimate_moments, fit_subleading, sweep
from .quadrature import AreaInverseFn, moment_from_area_inverse, remainder_bound
from .series import MomentSpec, flat_mean, sphere_mean_exact

SCHEMA_VERSION = 1
CSV_COLUMNS = ("engine", "manifold", "k", "n", "alpha", "value", "uncertainty", "seed")

USAGE_ERROR = 2
COMPUTE_ERROR = 1


@dataclass(frozen=True)
class RunConfig:
    """Resolved run parameters; round-trips through canonical JSON."""

    subcommand: str
    manifold: str = ""
    k: tuple = (1,)
    n: tuple = (100,)
    trials: int = 10000
    seed: int = 0
    streams: int = 1
    alpha: float = 1.0
    output: str = ""
    format: str = "json"

    def canonical_json(self) -> str:
        d = asdict(self)
        d["k"] = list(self.k)
        d["n"] = list(self.n)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        d = json.loads(text)
        d["k"] = tuple(d["k"])
        d["n"] = tuple(d["n"])
        return cls(**d)


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(tok) for tok in str(text).split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _row(engine, manifold, k, n, alpha, value, uncertainty, seed, **extras):
    row = {
        "engine": engine,
        "manifold": manifold,
        "k": int(k),
        "n": int(n),
        "alpha": float(alpha),
        "value": float(value),
        "uncertainty": float(uncertainty),
        "seed": int(seed),
    }
    row.update(extras)
    return row


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _render_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA_VERSION}\n")
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n")
    return buf.getvalue()


def _render_json(rows, extras=None) -> str:
    doc = {"schema": SCHEMA_VERSION, "rows": rows}
    if extras:
        doc.update(extras)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(text: str, output: str):
    if not output:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(output))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".knnm-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, output)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_result(rows, cfg: RunConfig, extras=None):
    text = _render_csv(rows) if cfg.format == "csv" else _render_json(rows, extras)
    _emit(text, cfg.output)


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

_FLAT_DIMENSION = {"flat-torus": 2, "sphere-chord": 2}


def _analytic_pair(manifold: str, ms: MomentSpec, quad_rel_tol: float):
    """(series value, quadrature value, quadrature error, extras)."""
    extras = {}
    if manifold == "sphere-geodesic":
        series_val = sphere_mean_exact(ms)
        quad = moment_from_area_inverse(AreaInverseFn.named("sphere-arcsin"), ms, quad_rel_tol)
    elif manifold in ("flat-torus", "sphere-chord"):
        series_val = flat_mean(2, ms)
        quad = moment_from_area_inverse(AreaInverseFn.named("flat-2d"), ms, quad_rel_tol)
        m = manifold_from_config(manifold)
        extras["remainder_bound"] = remainder_bound(
            AreaInverseFn.named("flat-2d"), m.flatness, ms
        )
    elif manifold.startswith("flat-torus-") and manifold.endswith("d"):
        d = int(manifold[len("flat-torus-") : -1])
        series_val = flat_mean(d, ms)
        quad = moment_from_area_inverse(AreaInverseFn.named("flat-d", d=d), ms, quad_rel_tol)
    else:
        raise KeyError(f"no analytic route for manifold {manifold!r}")
    return float(series_val), quad.value, quad.error, extras


def _cmd_analytic(args, cfg: RunConfig) -> int:
    rows, pairs = [], []
    for n in cfg.n:
        for k in cfg.k:
            if k > n:
                continue
            ms = MomentSpec(k, n, cfg.alpha)
            sv, qv, qe, extras = _analytic_pair(cfg.manifold, ms, args.quad_rel_tol)
            agreement = abs(sv - qv)
            rows.append(_row("series", cfg.manifold, k, n, cfg.alpha, sv, 0.0, cfg.seed))
            rows.append(
                _row("quadrature", cfg.manifold, k, n, cfg.alpha, qv, qe, cfg.seed,
                     agreement=agreement, **extras)
            )
            pairs.append(
                {"k": k, "n": n, "series": sv, "quadrature": qv, "agreement": agreement}
            )
    _emit_result(rows, cfg, extras={"analytic": pairs, "config": json.loads(cfg.canonical_json())})
    return 0


def _cmd_mc(args, cfg: RunConfig) -> int:
    m = manifold_from_config(cfg.manifold)
    rows = []
    for n in cfg.n:
        sample_cfg = SampleConfig(
            n_sites=n, k_max=max(cfg.k), alpha=cfg.alpha,
            trials=cfg.trials, seed=cfg.seed, streams=cfg.streams,
        )
        acc = estimate_moments(m, sample_cfg)
        for k in cfg.k:
            rows.append(
                _row("mc", cfg.manifold, k, n, cfg.alpha, acc.mean(k), acc.stderr(k), cfg.seed)
            )
    _emit_result(rows, cfg, extras={"config": json.loads(cfg.canonical_json())})
    return 0


def _cmd_sweep(args, cfg: RunConfig) -> int:
    m = manifold_from_config(cfg.manifold)
    est = sweep(
        m, ks=cfg.k, n_grid=cfg.n, trials_per_n=cfg.trials,
        seed=cfg.seed, streams=cfg.streams, alpha=cfg.alpha,
    )
    rows = []
    for i, k in enumerate(cfg.k):
        for j, n in enumerate(cfg.n):
            rows.append(
                _row("mc", cfg.manifold, k, n, cfg.alpha, est.mean[i, j], est.stderr[i, j], cfg.seed)
            )
    fits = []
    if args.fit:
        for k in cfg.k:
            fit = fit_subleading(est, k)
            rows.append(
                _row("fit", cfg.manifold, k, 0, cfg.alpha, fit.value, fit.stderr, cfg.seed,
                     fitted_c1=fit.value)
            )
            fits.append({"k": k, "fitted_c1": fit.value, "stderr": fit.stderr,
                         "quadratic": fit.quadratic})
    _emit_result(rows, cfg, extras={"fits": fits, "config": json.loads(cfg.canonical_json())})
    return 0


def _cmd_curvature(args, cfg: RunConfig) -> int:
    patches = curv.patch_atlas(args.surface)
    chi = curv.gauss_bonnet_chi(patches, rel_tol=args.quad_rel_tol)
    ps = curv.surface_average_series(patches, order=args.order)
    ratios = [c / ps.coeffs[0] for c in ps.coeffs]
    doc = {
        "surface": args.surface,
        "chi": chi,
        "chi_nearest_integer": round(chi),
        "coeff_ratios": ratios,
        "chi_over_12": chi / 12.0,
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", cfg.output)
    return 0


def _cmd_regge(args, cfg: RunConfig) -> int:
    if args.off:
        surface = regge.read_off(args.off)
    else:
        surface = regge.builtin_polyhedron(args.poly)
    data, chi = regge.deficit_and_euler(surface)
    doc = {
        "polyhedron": surface.name,
        "vertices": [{"index": d.index, "theta": d.theta, "deficit": d.deficit} for d in data],
        "sum_deficits": math.fsum(d.deficit for d in data),
        "chi_from_deficits": chi,
        "chi_combinatorial": surface.euler_characteristic_combinatorial(),
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", cfg.output)
    return 0


def _cmd_invert(args, cfg: RunConfig) -> int:
    jet = curv.CurvatureJet(
        curvature=args.curvature,
        lap_curvature=args.lap_k,
        grad_curvature_sq=args.grad_k_sq,
        bilap_curvature=args.bilap_k,
    )
    poly = curv.area_series_from_curvature(jet, order=2 * (args.order + 1))
    ps = curv.invert_area_series(poly, order=args.order)
    doc = {
        "gamma": ps.gamma,
        "coeffs": list(ps.coeffs),
        "coeff_ratios": [c / ps.coeffs[0] for c in ps.coeffs],
        "area_coeffs": list(poly.even_coeffs),
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", cfg.output)
    return 0


# ---------------------------------------------------------------------------
# Parsing and dispatch
# ---------------------------------------------------------------------------


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="knnmanifolds")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, manifold=True):
        if manifold:
            p.add_argument("--manifold", required=True)
            p.add_argument("--k", type=_int_list, default=(1,))
            p.add_argument("--n", type=_int_list, default=(100,))
            p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", default="")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        p.add_argument("--config", default="")

    p = sub.add_parser("analytic")
    common(p)
    p.add_argument("--quad-rel-tol", type=float, default=1e-11)

    p = sub.add_parser("mc")
    common(p)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--streams", type=int, default=None)

    p = sub.add_parser("sweep")
    common(p)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--streams", type=int, default=None)
    p.add_argument("--fit", action="store_true")

    p = sub.add_parser("curvature")
    common(p, manifold=False)
    p.add_argument("--surface", required=True)
    p.add_argument("--order", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--quad-rel-tol", type=float, default=1e-9)

    p = sub.add_parser("regge")
    common(p, manifold=False)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--poly")
    group.add_argument("--off")

    p = sub.add_parser("invert")
    common(p, manifold=False)
    p.add_argument("--curvature", type=float, required=True)
    p.add_argument("--lap-k", type=float, default=0.0, dest="lap_k")
    p.add_argument("--grad-k-sq", type=float, default=0.0, dest="grad_k_sq")
    p.add_argument("--bilap-k", type=float, default=0.0, dest="bilap_k")
    p.add_argument("--order", type=int, default=3, choices=(1, 2, 3))
    return parser


def _apply_config_file(args):
    if getattr(args, "config", ""):
        with open(args.config) as fh:
            overrides = json.load(fh)
        for key, value in overrides.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise _UsageError(f"unknown config key {key!r}")
            if attr in ("k", "n"):
                value = tuple(int(x) for x in value) if isinstance(value, list) else _int_list(value)
            setattr(args, attr, value)
    return args


def _resolve_streams(args) -> int:
    explicit = getattr(args, "streams", None)
    if explicit is not None:
        return int(explicit)
    return int(os.environ.get("KNN_WORKERS", "1"))


_HANDLERS = {
    "analytic": _cmd_analytic,
    "mc": _cmd_mc,
    "sweep": _cmd_sweep,
    "curvature": _cmd_curvature,
    "regge": _cmd_regge,
    "invert": _cmd_invert,
}


def dispatch(argv) -> int:
    """Run a subcommand; 0 on success, 1 on computation error, 2 on usage."""
    try:
        args = _build_parser().parse_args(argv)
        args = _apply_config_file(args)
        cfg = RunConfig(
            subcommand=args.subcommand,
            manifold=getattr(args, "manifold", ""),
            k=tuple(getattr(args, "k", (1,))),
            n=tuple(getattr(args, "n", (100,))),
            trials=int(getattr(args, "trials", 0) or 0),
            seed=int(args.seed),
            streams=_resolve_streams(args),
            alpha=float(getattr(args, "alpha", 1.0)),
            output=args.output,
            format=args.format,
        )
        assert RunConfig.from_json(cfg.canonical_json()) == cfg
    except (_UsageError, KeyError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        return _HANDLERS[args.subcommand](args, cfg)
    except KeyError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:  # computation failure
        print(f"error: {exc}", file=sys.stderr)
        return COMPUTE_ERROR


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
