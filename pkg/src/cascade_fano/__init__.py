"""Sample-complexity lower bounds for recovering the parents of a cascade child node."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    KlReport,
    ThresholdReport,
    fano_threshold_continuous,
    fano_threshold_discrete,
    kl_bound_continuous,
    kl_bound_discrete,
    kl_exact_continuous,
    kl_exact_discrete,
    log_binom_lower,
    mi_exact_single_sample,
    mi_pairwise_bound,
)
from .errors import (  # noqa: E402
    CapacityError,
    ConditionViolation,
    DomainError,
    FormatError,
    ParameterError,
    UnsupportedError,
)
from .inference import Dataset, absence_score_estimate, enumerate_hypotheses, ml_estimate  # noqa: E402
from .model import (  # noqa: E402
    NEVER,
    ContinuousCascade,
    DiscreteCascade,
    Hypothesis,
    ModelParams,
    child_activation_prob,
    derive_theta,
    loglik_continuous,
    loglik_discrete,
    simulate_continuous,
    simulate_discrete,
)
from .transmission import TransmissionSpec, boundedness_constants, transmission_density  # noqa: E402
