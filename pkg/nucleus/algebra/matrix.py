import math
from typing import Sequence, Tuple, Union

import torch

# Storage and computational precision of every operator in the package.
DTYPE = torch.complex128
RDTYPE = torch.float64

# Tolerance used by the Hermitian/unitary guards.
ATOL = 1e-10

MatrixLike = Union[torch.Tensor, Sequence[Sequence[complex]]]


class DimensionError(ValueError):
    """Raised when an operator does not have the expected shape."""


class NotUnitaryError(ValueError):
    """Raised when a propagator fails the U^dagger U = 1 check."""


class NotHermitianError(ValueError):
    """Raised when an observable or state is not Hermitian."""


class OrthogonalPropagatorError(ValueError):
    """Raised when Tr(V^dagger U) vanishes, so no global phase can be assigned."""


def as_matrix(data: MatrixLike) -> torch.Tensor:
    """Convert nested lists or any tensor into a complex128 tensor."""
    if isinstance(data, torch.Tensor):
        return data.to(DTYPE)
    return torch.tensor(data, dtype=DTYPE)


def identity(dim: int = 4) -> torch.Tensor:
    return torch.eye(dim, dtype=DTYPE)


PAULI = {
    "i": identity(2),
    "x": torch.tensor([[0, 1], [1, 0]], dtype=DTYPE),
    "y": torch.tensor([[0, -1j], [1j, 0]], dtype=DTYPE),
    "z": torch.tensor([[1, 0], [0, -1]], dtype=DTYPE),
}


def dagger(m: torch.Tensor) -> torch.Tensor:
    return m.conj().transpose(-2, -1)


def trace(m: torch.Tensor) -> complex:
    return complex(torch.diagonal(m, dim1=-2, dim2=-1).sum().item())


def max_abs(m: torch.Tensor) -> float:
    return float(m.abs().max().item())


def frobenius(m: torch.Tensor) -> float:
    return float(torch.linalg.matrix_norm(m).item())


def _square(m: torch.Tensor, name: str) -> int:
    if m.dim() != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
        raise DimensionError(f"{name} must be a 2x2 or 4x4 matrix, got {tuple(m.shape)}")
    return m.shape[0]


def is_unitary(m: torch.Tensor, atol: float = ATOL) -> bool:
    dim = _square(m, "operator")
    return max_abs(dagger(m) @ m - identity(dim)) < atol


def is_hermitian(m: torch.Tensor, atol: float = ATOL) -> bool:
    _square(m, "operator")
    return max_abs(m - dagger(m)) < atol


def require_unitary(m: torch.Tensor, name: str = "propagator", atol: float = ATOL):
    if not is_unitary(m, atol):
        raise NotUnitaryError(f"{name} is not unitary within {atol:g}")


def require_hermitian(m: torch.Tensor, name: str = "operator", atol: float = ATOL):
    if not is_hermitian(m, atol):
        raise NotHermitianError(f"{name} is not Hermitian within {atol:g}")


def kron(a: MatrixLike, b: MatrixLike) -> torch.Tensor:
    """Tensor product a (spin I) x b (spin S) in the |00>,|01>,|10>,|11> ordering."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise DimensionError(
            f"kron expects two 2x2 factors, got {tuple(a.shape)} and {tuple(b.shape)}"
        )
    return torch.kron(a, b)


def phase_distance(u: MatrixLike, v: MatrixLike) -> Tuple[float, float]:
    """Distance between two propagators up to a global phase.

    Args:
        u (MatrixLike): The achieved propagator.
        v (MatrixLike): The reference propagator.

    Returns:
        Tuple[float, float]: (||U - e^{i phi} V||_F, phi) where phi = arg Tr(V^dagger U).

    Raises:
        OrthogonalPropagatorError: If Tr(V^dagger U) is zero.
    """
    u, v = as_matrix(u), as_matrix(v)
    if u.shape != v.shape:
        raise DimensionError(f"shape mismatch: {tuple(u.shape)} vs {tuple(v.shape)}")
    _square(u, "U")

    overlap = trace(dagger(v) @ u)
    if abs(overlap) < 1e-12 * u.shape[0]:
        raise OrthogonalPropagatorError(
            "Tr(V^dagger U) = 0: the propagators are orthogonal, global phase undefined"
        )
    phase = math.atan2(overlap.imag, overlap.real)
    rotated = complex(math.cos(phase), math.sin(phase)) * v
    return frobenius(u - rotated), phase
