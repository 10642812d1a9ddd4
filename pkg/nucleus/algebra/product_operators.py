from typing import Dict, Tuple

import torch
from pydantic import RootModel, field_validator

from nucleus.algebra.matrix import (
    DTYPE,
    PAULI,
    as_matrix,
    dagger,
    identity,
    kron,
    require_hermitian,
    trace,
)
from nucleus.algebra.states import DensityMatrix

BASIS_NAMES: Tuple[str, ...] = (
    "halfE",
    "Ix",
    "Iy",
    "Iz",
    "Sx",
    "Sy",
    "Sz",
    "2IxSx",
    "2IxSy",
    "2IxSz",
    "2IySx",
    "2IySy",
    "2IySz",
    "2IzSx",
    "2IzSy",
    "2IzSz",
)


def _build_basis() -> Dict[str, torch.Tensor]:
    # Single-spin terms are sigma/2 on one spin; two-spin terms carry the factor 2.
    half = {axis: PAULI[axis] / 2 for axis in "xyz"}
    basis = {"halfE": identity(4) / 2}
    for axis in "xyz":
        basis[f"I{axis}"] = kron(half[axis], PAULI["i"])
    for axis in "xyz":
        basis[f"S{axis}"] = kron(PAULI["i"], half[axis])
    for a in "xyz":
        for b in "xyz":
            basis[f"2I{a}S{b}"] = 2 * kron(half[a], half[b])
    return basis


BASIS: Dict[str, torch.Tensor] = _build_basis()


def operator(name: str) -> torch.Tensor:
    """Return a product operator by basis name, e.g. operator("Ix")."""
    try:
        return BASIS[name].clone()
    except KeyError:
        raise KeyError(f"unknown product operator {name!r}") from None


class ProductOperatorCoeffs(RootModel[Dict[str, float]]):
    """Real coefficients over the 16-element product-operator basis.

    Missing names default to zero, so ProductOperatorCoeffs({"Ix": 0.5}) is complete.
    """

    model_config = {"frozen": True}

    @field_validator("root", mode="before")
    @classmethod
    def _complete(cls, value):
        value = dict(value or {})
        unknown = set(value) - set(BASIS_NAMES)
        if unknown:
            raise ValueError(f"unknown product operator(s): {sorted(unknown)}")
        return {name: float(value.get(name, 0.0)) for name in BASIS_NAMES}

    def __getitem__(self, name: str) -> float:
        return self.root[name]

    def nonzero(self, atol: float = 1e-12) -> Dict[str, float]:
        return {k: v for k, v in self.root.items() if abs(v) > atol}


def po_decompose(rho) -> ProductOperatorCoeffs:
    """Decompose a Hermitian 4x4 operator as c_k = Tr(B_k^dagger rho) / Tr(B_k^dagger B_k)."""
    matrix = rho.matrix if isinstance(rho, DensityMatrix) else as_matrix(rho)
    require_hermitian(matrix, "decomposed operator", atol=1e-12)
    coeffs = {}
    for name, b in BASIS.items():
        b_dag = dagger(b)
        coeffs[name] = (trace(b_dag @ matrix) / trace(b_dag @ b)).real
    return ProductOperatorCoeffs(coeffs)


def po_compose(coeffs: ProductOperatorCoeffs) -> torch.Tensor:
    """Sum_k c_k B_k."""
    if not isinstance(coeffs, ProductOperatorCoeffs):
        coeffs = ProductOperatorCoeffs(coeffs)
    out = torch.zeros((4, 4), dtype=DTYPE)
    for name, value in coeffs.root.items():
        if value:
            out = out + value * BASIS[name]
    return out