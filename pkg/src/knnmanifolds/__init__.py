"""Expected k-th-nearest-neighbor distances for uniform random sites on
closed manifolds, computed by three independent routes (closed-form series,
adaptive quadrature over the disc-area function, Monte Carlo) plus the
differential- and Regge-geometry machinery needed to compare them."""

from .curvature import (
    AreaPolynomial,
    ConformalPatch,
    CurvatureJet,
    GeodesicState,
    area_series_from_curvature,
    disc_area_numeric,
    gauss_bonnet_chi,
    gaussian_curvature,
    geodesic_trace,
    invert_area_series,
    patch_atlas,
    surface_average_series,
)
from .manifolds import (
    ConformalPatchSet,
    DimensionSpec,
    FlatnessThreshold,
    FlatTorus,
    Manifold,
    PolyhedronManifold,
    SphereChord,
    SphereGeodesic,
    SurfacePoint,
    manifold_from_config,
)
from .montecarlo import (
    Accumulator,
    SampleConfig,
    ScalingEstimate,
    estimate_moments,
    fit_subleading,
    knn_distances,
    sweep,
)
from .quadrature import AreaInverseFn, moment_from_area_inverse, remainder_bound
from .regge import (
    PolyhedralSurface,
    VertexData,
    cone_disc_area,
    deficit_and_euler,
    unfolded_distance,
)
from .rng import RandomStream
from .series import (
    MomentSpec,
    PowerSeries,
    ReducedScalingSeries,
    TopologyInfo,
    flat_mean,
    mean_from_series,
    reduced_mean_series,
    reduced_series,
    sphere_mean_exact,
    subleading_coeff,
)

__version__ = "0.1.0"
