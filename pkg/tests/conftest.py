import pytest
import torch

from nucleus.algebra.matrix import DTYPE
from nucleus.algebra.states import basis_density
from nucleus.pulses.engine import SpinSystem

# The controlled NOT: flip S when I is 1.
CNOT = torch.tensor(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    dtype=DTYPE,
)


@pytest.fixture
def proton_sys():
    return SpinSystem(nu_I=381.5, nu_S=-381.5, J=7.2, T2star=0.3)


@pytest.fixture
def offset_free_sys():
    return SpinSystem(nu_I=0.0, nu_S=0.0, J=7.2)


@pytest.fixture
def cnot():
    return CNOT.clone()


@pytest.fixture
def basis():
    """rho_00 ... rho_11 keyed by their two bits."""
    return {(i, s): basis_density(i, s) for i in (0, 1) for s in (0, 1)}
