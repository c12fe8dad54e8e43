"""Exception hierarchy.

Every error carries a short ``category`` string so the command line can
emit one machine-parsable line and map it to an exit code.
"""


class PolyheatError(Exception):
    category = "error"
    exit_code = 3


class ConfigError(PolyheatError, ValueError):
    category = "config"
    exit_code = 2


class NumericError(PolyheatError, ArithmeticError):
    category = "numeric"
    exit_code = 3


# kernels
class UnsupportedDimension(ConfigError):
    category = "unsupported_dimension"


class NonPositiveTime(ConfigError):
    category = "non_positive_time"


class QuadratureNonConvergence(NumericError):
    category = "quadrature_non_convergence"


class BoxTooSmall(NumericError):
    category = "box_too_small"


class EstimateDiverging(NumericError):
    category = "estimate_diverging"


class SemigroupMismatch(NumericError):
    category = "semigroup_mismatch"


# criteria
class DegenerateMeasure(NumericError):
    category = "degenerate_measure"


class NonSigmaFinite(ConfigError):
    category = "non_sigma_finite"


class InsufficientSigmas(ConfigError):
    category = "insufficient_sigmas"


class WrongRegime(ConfigError):
    category = "wrong_regime"


class PointwiseUnavailable(ConfigError):
    category = "pointwise_unavailable"


class AlphaOutOfRange(ConfigError):
    category = "alpha_out_of_range"


# solver
class WeightDegenerate(NumericError):
    category = "weight_degenerate"


class NoContraction(NumericError):
    category = "no_contraction"
    exit_code = 4


class IterationDiverged(NumericError):
    category = "iteration_diverged"


class NaNDetected(NumericError):
    category = "nan_detected"


class OutOfBox(NumericError):
    category = "out_of_box"


# testfn
class SupportMismatch(NumericError):
    category = "support_mismatch"
