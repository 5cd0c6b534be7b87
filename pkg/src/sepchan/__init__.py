"""Separable operations versus LOCC for deterministic pure-state distillation."""

__version__ = "0.1.0"

from .channels import (  # noqa: E402
    KrausChannel,
    NotProduct,
    ProductFactorization,
    apply_branch,
    apply_to_density,
    factor_product,
    is_separable,
    validate_channel,
)
from .distill import (  # noqa: E402
    PaperConstants,
    paper_channel,
    paper_eigenstates,
    paper_source,
    paper_target,
    thm1_case_analysis,
    verify_deterministic_distillation,
)
from .locc import (  # noqa: E402
    Party,
    ProtocolNode,
    branch_nonvanishing_check,
    nielsen_rank2_protocol,
    simulate,
    validate_protocol,
)
from .monotones import Ensemble, ensemble_average_pmax, majorization_check, tail_sum, vidal_pmax  # noqa: E402
from .states import (  # noqa: E402
    DensityOperator,
    PureState,
    SpanVerdict,
    eigendecompose,
    fidelity_with_pure,
    make_density,
    make_pure,
    product_vectors_in_span,
    schmidt_decompose,
    schmidt_rank,
)
from .tensor import BipartiteDims, frobenius_distance, realign, svd, tensor_product  # noqa: E402
