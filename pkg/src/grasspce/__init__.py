"""Local polynomial-chaos surrogates on Grassmann manifolds.

High-dimensional matrix responses are factorized by thin SVD, their subspace
factors clustered on the Grassmann manifold, each cluster reduced by
principal geodesic analysis, and polynomial chaos expansions fit from the
inputs to the reduced coordinates.  Predictions run the chain in reverse.
"""

from . import benchmarks, clustering, manifold, pce, pga, serialize, stats, surrogate
from .clustering import (
    Clustering,
    ClusterSelectConfig,
    cluster_score,
    riemannian_kmeans,
    select_cluster_count,
)
from .exceptions import (
    ConvergenceError,
    CutLocusError,
    DimensionMismatch,
    ExtrapolationWarning,
    FitError,
    FormatError,
    GrasspceError,
    SpreadWarning,
)
from .manifold import (
    OrthoFrame,
    PrincipalAngles,
    TangentVector,
    exp_map,
    geodesic_distance,
    log_map,
    principal_angles,
    random_frame,
    random_tangent,
)
from .pce import MultiIndexSet, PCEModel, UniformDistribution, build_index_set
from .pga import PGACoordinates, PGAModel, fit_pga
from .stats import KarcherConfig, KarcherResult, frechet_variance, karcher_mean
from .surrogate import (
    Dataset,
    EvaluationResult,
    LocalModel,
    SurrogateConfig,
    SVDTriple,
    TrainedSurrogate,
    estimate_moments,
    evaluate,
    l2_error,
    locate_cluster,
    predict,
    project_dataset,
    r2_score,
    train,
)

__version__ = "0.1.0"
