"""Random-basis hiding, bit commitments and quantum extrapolation at desk scale."""

__version__ = "0.1.0"

from ._accel import BACKEND  # noqa: E402
from .bases import BasisFamily, build_family, parse_family, pinch, verify_2design, verify_mub  # noqa: E402
from .commit import (  # noqa: E402
    CommitmentPair,
    GenInstance,
    binding_advantage,
    binding_reduction,
    build_commitment,
    fixed_basis_failure_demo,
    hiding_distance,
    optimal_binding,
    xor_amplify,
)
from .extrap import (  # noqa: E402
    QExtrapTask,
    commitment_attack,
    conjugation_reduce,
    cq_success,
    exact_extrapolator,
    extrapolation_fidelity,
    make_task,
    robustness_check,
)
from .hiding import (  # noqa: E402
    HidingReport,
    counterexample_run,
    expected_pinch_distance,
    haar_limit,
    ivanovic_decompose,
    lemma_bound,
)
from .instances import load_instance  # noqa: E402
from .qcore import DensityMatrix, RegisterShape, StateVector  # noqa: E402
