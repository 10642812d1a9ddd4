"""Ideal pulse propagators, free precession and the gate library.

Rotation convention: a pulse of flip angle theta and phase phi on one spin applies
exp(-i theta (cos phi Jx + sin phi Jy)) with Ja = sigma_a / 2, a z-rotation applies
exp(-i theta Jz). Sequences are written left-to-right in time and composed
right-to-left as operators, see `in_time_order`.
"""

import cmath
import math
from functools import reduce
from typing import FrozenSet, Iterable, Union

import torch
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from nucleus.algebra.matrix import DTYPE, as_matrix, identity, kron
from nucleus.algebra.states import StateLike, like_state, state_matrix

AXIS_PHASES = {"x": 0.0, "y": 90.0, "-x": 180.0, "-y": 270.0}

Targets = Union[str, Iterable[str]]
Phase = Union[str, float]

# Diagonals of Iz, Sz and 2IzSz in the |00>,|01>,|10>,|11> ordering.
_IZ = torch.tensor([0.5, 0.5, -0.5, -0.5], dtype=torch.float64)
_SZ = torch.tensor([0.5, -0.5, 0.5, -0.5], dtype=torch.float64)
_IZSZ = torch.tensor([0.5, -0.5, -0.5, 0.5], dtype=torch.float64)


class SpinSystem(BaseModel):
    """Two weakly coupled spins-1/2 in the transmitter rotating frame.

    Attributes:
        nu_I: Offset of spin I from the transmitter (Hz).
        nu_S: Offset of spin S from the transmitter (Hz).
        J: Scalar coupling (Hz).
        T2star: Phenomenological transverse decay time (s); inf disables decay.
    """

    model_config = ConfigDict(frozen=True)

    nu_I: float = 0.0
    nu_S: float = 0.0
    J: float = 7.2
    T2star: float = Field(default=math.inf, gt=0)

    @model_validator(mode="after")
    def _warn_strong_coupling(self) -> "SpinSystem":
        if abs(self.nu_I - self.nu_S) < 10 * abs(self.J):
            logger.warning(
                f"|nu_I - nu_S| = {abs(self.nu_I - self.nu_S):g} Hz is below 10 J = "
                f"{10 * abs(self.J):g} Hz; the weak-coupling Hamiltonian may be inaccurate."
            )
        return self

    def offset(self, spin: str) -> float:
        return {"I": self.nu_I, "S": self.nu_S}[spin]


def other_spin(spin: str) -> str:
    return {"I": "S", "S": "I"}[spin]


def normalize_targets(targets: Targets) -> FrozenSet[str]:
    """Turn "I", "S", "both" or an iterable of spin names into a frozenset."""
    if isinstance(targets, str):
        names = {"both": ("I", "S")}.get(targets, (targets,))
    else:
        names = tuple(targets)
    result = frozenset(names)
    if not result:
        raise ValueError("empty target set")
    unknown = result - {"I", "S"}
    if unknown:
        raise ValueError(f"unknown target spin(s): {sorted(unknown)}")
    return result


def phase_degrees(phase: Phase) -> float:
    """Axis label (x, y, -x, -y) or a number of degrees -> degrees."""
    if isinstance(phase, str):
        try:
            return AXIS_PHASES[phase]
        except KeyError:
            raise ValueError(f"unknown pulse axis {phase!r}") from None
    return float(phase)


def rotation(theta: float, phase: float) -> torch.Tensor:
    """2x2 rotation by theta (rad) about the transverse axis at phase (rad)."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    n = cmath.exp(1j * phase)
    return torch.tensor([[c, -1j * s * n.conjugate()], [-1j * s * n, c]], dtype=DTYPE)


def z_rotation_2x2(theta: float) -> torch.Tensor:
    phases = [cmath.exp(-0.5j * theta), cmath.exp(0.5j * theta)]
    return torch.diag(torch.tensor(phases, dtype=DTYPE))


def _on_targets(single: torch.Tensor, targets: FrozenSet[str]) -> torch.Tensor:
    one = identity(2)
    return kron(single if "I" in targets else one, single if "S" in targets else one)


def in_time_order(*propagators: torch.Tensor) -> torch.Tensor:
    """Compose propagators given first-to-last in time: U_n ... U_2 U_1."""
    if not propagators:
        return identity(4)
    return reduce(lambda acc, u: as_matrix(u) @ acc, propagators[1:], as_matrix(propagators[0]))


def hard_pulse(theta: float, phase: Phase, targets: Targets) -> torch.Tensor:
    """Instantaneous pulse of theta degrees; no Zeeman or J evolution during it."""
    spins = normalize_targets(targets)
    single = rotation(math.radians(theta), math.radians(phase_degrees(phase)))
    return _on_targets(single, spins)


def z_rotation(theta: float, targets: Targets) -> torch.Tensor:
    """exp(-i theta Jz) on each target spin, theta in degrees."""
    spins = normalize_targets(targets)
    return _on_targets(z_rotation_2x2(math.radians(theta)), spins)


def hamiltonian_diagonal(sys: SpinSystem) -> torch.Tensor:
    """Diagonal of H = 2 pi nu_I Iz + 2 pi nu_S Sz + pi J 2IzSz (rad/s)."""
    return 2 * math.pi * (sys.nu_I * _IZ + sys.nu_S * _SZ) + math.pi * sys.J * _IZSZ


def free_evolution(sys: SpinSystem, t: float) -> torch.Tensor:
    """exp(-i t H) under the Zeeman + secular J Hamiltonian."""
    if t < 0:
        raise ValueError(f"free evolution time must be >= 0, got {t}")
    return torch.diag(torch.exp(-1j * t * hamiltonian_diagonal(sys).to(DTYPE)))


def couple(fraction: float, sys: SpinSystem) -> torch.Tensor:
    """Evolution under pi J 2IzSz alone for fraction / J seconds."""
    if sys.J == 0:
        raise ValueError("a coupling interval needs J != 0")
    if fraction < 0:
        raise ValueError(f"coupling fraction must be >= 0, got {fraction}")
    return torch.diag(torch.exp(-1j * math.pi * fraction * _IZSZ.to(DTYPE)))


def hadamard_exact(targets: Targets) -> torch.Tensor:
    """Hadamard from the 45_y - 180_x - 45_-y sandwich; equals H up to a global phase of -i."""
    return in_time_order(
        hard_pulse(45, "y", targets),
        hard_pulse(180, "x", targets),
        hard_pulse(45, "-y", targets),
    )


def pseudo_hadamard(targets: Targets, inverse: bool = False) -> torch.Tensor:
    """The 90_y approximation of the Hadamard (90_-y when inverse)."""
    return hard_pulse(90, "-y" if inverse else "y", targets)


def dephase(rho: StateLike, t: float, sys: SpinSystem) -> StateLike:
    """Damp every off-diagonal element by exp(-t / T2star); populations are untouched."""
    if t < 0:
        raise ValueError(f"dephasing time must be >= 0, got {t}")
    if math.isinf(sys.T2star) or t == 0:
        return rho
    matrix = state_matrix(rho)
    decay = math.exp(-t / sys.T2star)
    mask = torch.full((4, 4), decay, dtype=DTYPE)
    mask.fill_diagonal_(1)
    return like_state(rho, matrix * mask)
