"""Stochastic model-based optimization with adaptive proximal regularization.

Library surface:

  models    per-sample losses, stochastic model oracles, closed-form prox steps
  stepsize  regularization-weight policies and clipped-moment estimators
  problems  synthetic robust regression instances and growth bounds
  solver    the stochastic iteration driver and run traces
  envelope  Moreau-envelope stationarity diagnostics
  mirror    mirror-descent baseline with radial Bregman kernels
  bench     sweep harness, CSV results, convex rate suite
  svgplot   sweep figures as plain-text SVG
"""

__version__ = "0.1.0"

from .models import (  # noqa: F401
    ConfigurationError,
    ModelEval,
    ModelKind,
    RegularizerSpec,
    Sample,
    evaluate_loss,
    model_eval,
    model_value,
    prox_step,
)
from .problems import (  # noqa: F401
    ProblemInstance,
    generate,
    growth_function,
    initial_point,
    load_instance,
    save_instance,
)
from .solver import (  # noqa: F401
    RunRecord,
    SolverConfig,
    convex_gap_trace,
    full_objective,
    run,
)
from .stepsize import (  # noqa: F401
    StepsizeParams,
    clipped_ratio_moments,
    reg_weight,
)
from .envelope import EnvelopeReport, envelope_trace, prox_point  # noqa: F401
from .mirror import KernelSpec, kernel_grad, kernel_grad_inverse, run_md  # noqa: F401
