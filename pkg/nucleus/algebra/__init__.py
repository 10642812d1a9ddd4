from nucleus.algebra.matrix import (  # noqa: F401
    ATOL,
    DTYPE,
    PAULI,
    RDTYPE,
    DimensionError,
    NotHermitianError,
    NotUnitaryError,
    OrthogonalPropagatorError,
    as_matrix,
    dagger,
    frobenius,
    identity,
    is_hermitian,
    is_unitary,
    kron,
    phase_distance,
    trace,
)
from nucleus.algebra.states import (  # noqa: F401
    DensityMatrix,
    NormalizationError,
    PureState,
    basis_density,
    evolve,
    expectation,
    pure_to_density,
)
from nucleus.algebra.product_operators import (  # noqa: F401
    BASIS_NAMES,
    ProductOperatorCoeffs,
    operator,
    po_compose,
    po_decompose,
)
