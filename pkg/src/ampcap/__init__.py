"""Capacity bounds for amplitude-constrained MIMO Gaussian channels."""

from .distributions import (
    DitherSpec,
    FiniteDiscrete,
    PamConstellation,
    PamProduct,
    PointMass,
    PrecodedUniform,
    UniformBox,
)
from .errors import (
    AmpcapError,
    BudgetError,
    ConfigError,
    DimensionError,
    DomainError,
    NumericError,
    PreconditionError,
    RankDeficiencyError,
)
from .geometry import (
    Ball,
    Box,
    ChannelMatrix,
    enclosing_box_of_image,
    log_volume,
    packing_efficiency,
    precoded_uniform_sampler,
    r_max_image,
    r_min,
    volume,
)
from .lower_bounds import (
    amplitude_allocate,
    epi_svd,
    epi_uniform_invertible,
    jensen_bound_diag,
    jensen_bound_general,
    ow_bound,
    ow_pam_diag,
)
from .oracle import expectation_exp_quadratic, mutual_information_discrete
from .results import BoundResult, McEstimate
from .specialfn import (
    Tolerance,
    k_np,
    log_gamma,
    noncentral_chi_moment,
    phi,
    q_function,
)
from .svd_precoding import (
    PrecodedChannel,
    epi_svd_inner,
    jensen_svd,
    jensen_svd_inner,
    precode,
    prelog_sweep,
)
from .upper_bounds import (
    duality_ball_bound,
    duality_box_bound,
    duality_diag_ball_paper,
    moment_bound,
    moment_bound_at_p,
    upper_bound_set,
)

__version__ = "0.1.0"
