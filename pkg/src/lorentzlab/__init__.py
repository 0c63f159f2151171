"""Finite-space laboratory for Lorentz-space bounds of the centered maximal operator."""
from .scalar import Scalar, arith_mode
from .mms import Fn, Space, SpaceError, StepFn, ball, distribution
from .lorentz import lorentz_norm, indicator_norm, avg_fn
from .maximal import MaximalOperator, maximal_fn
from .testspace import ClassFn, ClassSpace, TestSpaceParams, generate_sequences
from .composite import Surd, combine, lemma5_components, lemma6_components
from .normlab import NormEstimate, OperatorNormEstimator, estimate, scaling_probe
from .region import RegionMap, RegionScanner, RegionSpec, RegionSpecError, emit, scan
from .interp import lambda_split, s_comparability, s_transform, t_transform, verify_chain

__version__ = "0.1.0"
