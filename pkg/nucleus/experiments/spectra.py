"""Free-induction decay synthesis, Fourier transform and absorption/emission readout.

The receiver observes s(t) = Tr(rho(t) (I+ + S+)); with the Hamiltonian of the
pulse engine each spin appears as a doublet at nu +- J/2. Spectra use the forward
normalisation (1/N), so summing every bin returns s(0) and a multiplet integral is
on the scale of the spin's transverse magnetisation.
"""

import math
from typing import List, NamedTuple, Optional, Tuple

import torch
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator

from nucleus.algebra.matrix import DTYPE, RDTYPE, as_matrix, kron
from nucleus.algebra.states import StateLike, state_matrix
from nucleus.pulses.engine import SpinSystem, hamiltonian_diagonal

# Relative readout strength below which a bit is reported as degraded.
DEGRADED_FRACTION = 0.25
NEAR_ZERO = 1e-6

_RAISE = torch.tensor([[0, 1], [0, 0]], dtype=DTYPE)
RECEIVER = kron(_RAISE, torch.eye(2, dtype=DTYPE)) + kron(torch.eye(2, dtype=DTYPE), _RAISE)


class AliasingError(ValueError):
    """Raised when the spectral width cannot hold every line."""


class ReadoutError(ValueError):
    """Raised when a spectrum carries no signal to classify."""


class Fid(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    samples: torch.Tensor
    dwell: float = Field(gt=0)

    @field_validator("samples")
    @classmethod
    def _check_samples(cls, value: torch.Tensor) -> torch.Tensor:
        n = value.numel()
        if value.dim() != 1 or n < 2 or n & (n - 1):
            raise ValueError(f"FID needs a power-of-two number of points >= 2, got {n}")
        return value.to(DTYPE)

    @property
    def points(self) -> int:
        return self.samples.numel()

    @property
    def times(self) -> torch.Tensor:
        return torch.arange(self.points, dtype=RDTYPE) * self.dwell

    def rows(self) -> List[Tuple[float, float, float]]:
        """(time_s, real, imag) per sample."""
        samples = self.samples
        return list(zip(self.times.tolist(), samples.real.tolist(), samples.imag.tolist()))


class Spectrum(BaseModel):
    """Frequency-domain signal on ascending bins spanning +-1 / (2 dwell)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    freqs: torch.Tensor
    values: torch.Tensor
    phase0: float = 0.0

    @property
    def bin_width(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def phased(self, phase0: float) -> "Spectrum":
        """Apply a further zero-order phase correction of phase0 radians."""
        if phase0 == 0:
            return self
        rotated = self.values * complex(math.cos(phase0), math.sin(phase0))
        return Spectrum(freqs=self.freqs, values=rotated, phase0=self.phase0 + phase0)

    def rows(self) -> List[Tuple[float, float, float]]:
        """(freq_hz, real, imag) per bin."""
        return list(zip(self.freqs.tolist(), self.values.real.tolist(), self.values.imag.tolist()))


class Readout(NamedTuple):
    bit_I: int
    bit_S: int
    integral_I: float
    integral_S: float
    degraded: bool


def default_dwell(sys: SpinSystem) -> float:
    """Dwell giving a spectral width of 4 x the largest of |nu_I|, |nu_S| and J."""
    widest = max(abs(sys.nu_I), abs(sys.nu_S), abs(sys.J)) or 1.0
    return 1.0 / (4.0 * widest)


def synthesize_fid(
    rho: StateLike, sys: SpinSystem, points: int = 4096, dwell: Optional[float] = None
) -> Fid:
    """Sample s(t_k) = Tr(rho(t_k) (I+ + S+)) * exp(-t_k / T2star) at t_k = k dwell.

    Raises:
        AliasingError: If 1 / (2 dwell) does not exceed max |offset| + |J|.
    """
    dwell = default_dwell(sys) if dwell is None else dwell
    nyquist = 1.0 / (2.0 * dwell)
    highest = max(abs(sys.nu_I), abs(sys.nu_S)) + abs(sys.J)
    if nyquist <= highest:
        raise AliasingError(
            f"dwell {dwell:g} s gives a Nyquist frequency of {nyquist:g} Hz, "
            f"lines reach {highest:g} Hz"
        )

    matrix = as_matrix(state_matrix(rho))
    energies = hamiltonian_diagonal(sys)
    gaps = energies[:, None] - energies[None, :]
    times = torch.arange(points, dtype=RDTYPE) * dwell

    # rho_jk(t) = rho_jk exp(-i t (E_j - E_k)); only the entries the receiver sees survive.
    weights = matrix * RECEIVER.transpose(0, 1)
    phases = torch.exp(-1j * times[:, None, None].to(DTYPE) * gaps.to(DTYPE))
    samples = torch.einsum("jk,njk->n", weights, phases)
    if not math.isinf(sys.T2star):
        samples = samples * torch.exp(-times / sys.T2star).to(DTYPE)
    logger.debug(f"FID: {points} points, dwell {dwell:.4e} s, s(0) = {complex(samples[0]):.6f}")
    return Fid(samples=samples, dwell=dwell)


def spectrum(fid: Fid, phase0: float = 0.0) -> Spectrum:
    """Shifted DFT of the FID (1/N normalisation), multiplied by e^{i phase0}."""
    values = torch.fft.fftshift(torch.fft.fft(fid.samples, norm="forward"))
    freqs = torch.fft.fftshift(torch.fft.fftfreq(fid.points, d=fid.dwell, dtype=RDTYPE))
    return Spectrum(freqs=freqs, values=values).phased(phase0)


def _window(spec: Spectrum, centre: float, J: float) -> torch.Tensor:
    half = max(abs(J), spec.bin_width)
    mask = (spec.freqs >= centre - half) & (spec.freqs <= centre + half)
    if not bool(mask.any()):
        raise ReadoutError(f"no spectral bins in the multiplet window {centre:g} +- {half:g} Hz")
    return mask


def multiplet_integral(spec: Spectrum, centre: float, J: float) -> complex:
    """Sum of the complex bins in [centre - |J|, centre + |J|]."""
    return complex(spec.values[_window(spec, centre, J)].sum().item())


def calibrate_phase(reference: Spectrum, sys: SpinSystem) -> float:
    """Zero-order phase (rad) that puts the I multiplet of the reference in pure absorption.

    Raises:
        ReadoutError: If the I multiplet window is empty or holds no signal.
    """
    integral = multiplet_integral(reference, sys.nu_I, sys.J)
    if abs(integral) < NEAR_ZERO:
        raise ReadoutError("the reference spectrum has no I-spin signal to phase against")
    phase0 = -math.atan2(integral.imag, integral.real)
    logger.debug(f"reference phase correction {math.degrees(phase0):+.4f} deg")
    return phase0


def classify(
    spec: Spectrum, sys: SpinSystem, phase0: float = 0.0, reference: Optional[float] = None
) -> Readout:
    """Read one bit per spin from the sign of its phased multiplet integral.

    A bit is 0 in absorption (integral > 0) and 1 in emission. It is degraded when the
    integral's magnitude is below a quarter of `reference`, which defaults to the
    larger of the two integrals.

    Raises:
        ReadoutError: If neither multiplet carries signal.
    """
    phased = spec.phased(phase0)
    integral_I = multiplet_integral(phased, sys.nu_I, sys.J).real
    integral_S = multiplet_integral(phased, sys.nu_S, sys.J).real
    if abs(integral_I) < NEAR_ZERO and abs(integral_S) < NEAR_ZERO:
        raise ReadoutError("both multiplets are empty: the spectrum cannot be classified")

    scale = reference if reference is not None else max(abs(integral_I), abs(integral_S))
    degraded = min(abs(integral_I), abs(integral_S)) < DEGRADED_FRACTION * abs(scale)
    if degraded:
        logger.warning(
            f"weak readout: I integral {integral_I:+.4f}, S integral {integral_S:+.4f}, "
            f"reference {scale:.4f}"
        )
    return Readout(
        bit_I=int(integral_I < 0),
        bit_S=int(integral_S < 0),
        integral_I=integral_I,
        integral_S=integral_S,
        degraded=degraded,
    )


def doublet_splitting(spec: Spectrum, centre: float, J: float) -> float:
    """Distance (Hz) between the two strongest peaks of |spectrum| in a multiplet window."""
    mask = _window(spec, centre, 1.5 * J)
    freqs, magnitude = spec.freqs[mask], spec.values[mask].abs()
    peaks = [
        k
        for k in range(1, magnitude.numel() - 1)
        if magnitude[k] >= magnitude[k - 1] and magnitude[k] > magnitude[k + 1]
    ]
    if len(peaks) < 2:
        raise ReadoutError(f"multiplet at {centre:g} Hz is not resolved into a doublet")
    strongest = sorted(peaks, key=lambda k: float(magnitude[k]), reverse=True)[:2]
    return abs(float(freqs[strongest[0]] - freqs[strongest[1]]))
