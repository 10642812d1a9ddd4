from typing import Optional, Union

import torch
from pydantic import BaseModel, ConfigDict, field_validator

from nucleus.algebra.matrix import (
    ATOL,
    DTYPE,
    DimensionError,
    MatrixLike,
    NotHermitianError,
    as_matrix,
    dagger,
    require_hermitian,
    require_unitary,
    trace,
)


# Largest imaginary part of an expectation value treated as round-off.
IMAG_TOL = 1e-12


class NormalizationError(ValueError):
    """Raised when a state is not normalized."""


class PureState(BaseModel):
    """Two-spin state vector over |00>, |01>, |10>, |11> (first label = spin I)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    amplitudes: torch.Tensor

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _to_tensor(cls, value):
        if isinstance(value, torch.Tensor):
            return value.to(DTYPE).flatten()
        return torch.tensor(value, dtype=DTYPE).flatten()

    @field_validator("amplitudes")
    @classmethod
    def _check_normalized(cls, value: torch.Tensor) -> torch.Tensor:
        if value.shape != (4,):
            raise DimensionError(f"a two-spin state has 4 amplitudes, got {value.numel()}")
        norm = float((value.abs() ** 2).sum().item())
        if abs(norm - 1.0) > 1e-12:
            raise NormalizationError(f"sum |a_i|^2 = {norm:.15g}, expected 1")
        return value

    @classmethod
    def basis(cls, bit_i: int, bit_s: int) -> "PureState":
        """The computational basis state |bit_i>|bit_s>."""
        amplitudes = torch.zeros(4, dtype=DTYPE)
        amplitudes[2 * bit_i + bit_s] = 1
        return cls(amplitudes=amplitudes)

    def overlap(self, other: "PureState") -> complex:
        return complex(torch.vdot(other.amplitudes, self.amplitudes).item())


class DensityMatrix(BaseModel):
    """Hermitian, unit-trace, positive 4x4 state of the spin ensemble."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: torch.Tensor
    label: Optional[str] = None

    @field_validator("matrix", mode="before")
    @classmethod
    def _to_tensor(cls, value):
        return as_matrix(value)

    @field_validator("matrix")
    @classmethod
    def _check_state(cls, value: torch.Tensor) -> torch.Tensor:
        if value.shape != (4, 4):
            raise DimensionError(f"density matrix must be 4x4, got {tuple(value.shape)}")
        require_hermitian(value, "density matrix", atol=1e-12)
        tr = trace(value)
        if abs(tr - 1) > 1e-12:
            raise NormalizationError(f"density matrix trace is {tr}, expected 1")
        if float(torch.linalg.eigvalsh(value).min().item()) < -1e-10:
            raise ValueError("density matrix has a negative eigenvalue")
        return value


StateLike = Union[DensityMatrix, torch.Tensor]


def state_matrix(rho: StateLike) -> torch.Tensor:
    return rho.matrix if isinstance(rho, DensityMatrix) else as_matrix(rho)


def like_state(template: StateLike, matrix: torch.Tensor) -> StateLike:
    if isinstance(template, DensityMatrix):
        # Round-off from repeated conjugation is symmetrised away.
        matrix = (matrix + dagger(matrix)) / 2
        return DensityMatrix(matrix=matrix, label=template.label)
    return matrix


def pure_to_density(state: PureState, label: Optional[str] = None) -> DensityMatrix:
    """rho = |psi><psi|."""
    psi = state.amplitudes
    return DensityMatrix(matrix=torch.outer(psi, psi.conj()), label=label)


def basis_density(bit_i: int, bit_s: int) -> DensityMatrix:
    return pure_to_density(PureState.basis(bit_i, bit_s), label=f"rho{bit_i}{bit_s}")


def evolve(rho: StateLike, propagator: MatrixLike) -> StateLike:
    """U rho U^dagger on a DensityMatrix or a raw Hermitian operator; returns the same kind."""
    u = as_matrix(propagator)
    require_unitary(u)
    matrix = state_matrix(rho)
    return like_state(rho, u @ matrix @ dagger(u))


def expectation(rho: StateLike, observable: MatrixLike) -> float:
    """Tr(rho . obs) for a Hermitian observable.

    Raises:
        NotHermitianError: If the observable is not Hermitian, or the trace has an
            imaginary part beyond round-off (a raw state that is not Hermitian).
    """
    obs = as_matrix(observable)
    require_hermitian(obs, "observable", atol=ATOL)
    value = trace(state_matrix(rho) @ obs)
    if abs(value.imag) > IMAG_TOL * max(1.0, abs(value.real)):
        raise NotHermitianError(f"Tr(rho . obs) = {value:.3e} is not real; rho is not Hermitian")
    return value.real
