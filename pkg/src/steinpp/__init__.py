"""Finite point processes: samplers, Papangelou intensities, and
Stein-type distance bounds verified by Monte Carlo."""

from .geometry import (
    Box, BoxRegion, Configuration, Disk, Grid, IntensityMeasure,
    dyadic_boxes, integrate, tv_config, tv_measures,
)
from .kernels import Kernel, ginibre_kernel, sample_discrete_dpp
from .models import (
    AcceptanceFailure, BinomialPP, BoundedN, ConditionalPoissonPP,
    CountDistribution, CoxAtomic, DiscreteDPP, GibbsPairwise, HardcoreR,
    LabeledConfiguration, PoissonPP, PurelyRandomPP, SuperposeModel,
    sample, sample_many,
)
from .papangelou import (
    PapangelouEvaluator, classify_prpp, gnz_check, janossy_ratio_oracle,
    papangelou_evaluator,
)
from .reports import BoundReport, CheckRow, EstimateReport
from .transforms import (
    NotClosed, Rescale, Restrict, Superpose, Thin,
    rescale_config, superpose_configs, thin_config, transform_model,
)

__version__ = "0.1.0"
