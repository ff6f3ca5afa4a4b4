"""Universal scaling-limit correlations of random polynomial zeros.

Numerics for the zero statistics of Gaussian random holomorphic sections:
exact model reproducing kernels, Wick-moment evaluation of limit correlation
functions, finite-degree covariances on CP^1, connected-correlation decay
bounds, and Monte Carlo root statistics of SU(2) polynomials.
"""

__version__ = "0.1.0"

from . import connected, correlations, covariance, gaussian, kernels, montecarlo
from .connected import (
    ConnectedValue,
    Partition,
    connected_correlation,
    decay_bound,
    decay_check,
    moebius_reconstruct,
    partitions,
)
from .correlations import (
    CorrelationCurve,
    CorrelationRequest,
    CorrelationValue,
    Method,
    density_one_point,
    finite_correlation_cp1,
    limit_correlation,
    pair_correlation_closed,
    small_r_asymptote,
)
from .covariance import (
    CovarianceBlocks,
    FiniteNContext,
    PointConfiguration,
    assemble_conditional,
    finite_blocks_cp1,
    lambda_schur,
    limit_blocks,
)
from .errors import (
    AcceptanceFailure,
    NearCoincidentConfiguration,
    NotPositiveSemidefinite,
    NumericalContractError,
    PatternTooLarge,
)
from .gaussian import (
    GeneralizedGaussian,
    HermitianMatrix,
    MomentPattern,
    det_product_moment,
    mc_det_product_moment,
    psd_factorize,
    substream,
    wick_moment,
)
from .kernels import (
    HeisenbergPoint,
    KernelValue,
    SpherePoint,
    fs_szego,
    heisenberg_dilate,
    heisenberg_lift,
    heisenberg_szego,
    scaled_kernel_residual,
)
from .montecarlo import (
    PairHistogram,
    SU2Sample,
    ZeroSet,
    empirical_pair_correlation,
    fs_distance,
    poisson_baseline,
    roots,
    sample_su2,
)
