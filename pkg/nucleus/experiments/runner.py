import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Literal, Optional, Tuple

import torch
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from nucleus.algebra.matrix import DTYPE, kron
from nucleus.algebra.product_operators import operator
from nucleus.algebra.states import DensityMatrix, PureState, basis_density, expectation
from nucleus.experiments.functions import FunctionId
from nucleus.experiments.spectra import (
    DEGRADED_FRACTION,
    Fid,
    Readout,
    Spectrum,
    calibrate_phase,
    classify,
    multiplet_integral,
    spectrum,
    synthesize_fid,
)
from nucleus.pulses.engine import SpinSystem
from nucleus.sequence.ast import Pulse, Sequence
from nucleus.sequence.builtins import HADAMARD, builtin
from nucleus.sequence.compiler import Mode, ShapedDefaults, apply_sequence

Kind = Literal["classical0", "classical1", "deutsch"]
KINDS: Tuple[str, ...] = ("classical0", "classical1", "deutsch")

# Undoes the pseudo-Hadamard on both spins before the readout pulse.
_INVERSE_PREP = Sequence(events=(Pulse(target="both", flip=90, axis="-y"),), name="deutsch_unprep")


class RunSettings(BaseModel):
    """Everything besides the function, kind and mode that shapes an experiment."""

    model_config = ConfigDict(frozen=True)

    shaped: ShapedDefaults = ShapedDefaults()
    relaxation: bool = False
    explicit_readout: bool = False
    oracle: Literal["merged", "abstract"] = "merged"
    points: int = Field(default=4096, ge=2)
    dwell: Optional[float] = Field(default=None, gt=0)
    workers: int = Field(default=4, ge=1)


class SpectralReadout(BaseModel):
    model_config = ConfigDict(frozen=True)

    bit_I: int
    bit_S: int
    integral_I: float
    integral_S: float
    degraded: bool
    phase0: float

    @classmethod
    def from_readout(cls, readout: Readout, phase0: float) -> "SpectralReadout":
        return cls(phase0=phase0, **readout._asdict())


class ExperimentResult(BaseModel):
    """Outcome of one experiment cell.

    Bits are 0 for a positive expectation (absorption) and 1 otherwise; a bit whose
    expectation is below 0.25 in magnitude marks the result degraded.
    """

    model_config = ConfigDict(frozen=True)

    kind: Kind
    function: FunctionId
    mode: Mode
    ix: float
    sx: float
    bit_I: int = Field(ge=0, le=1)
    bit_S: int = Field(ge=0, le=1)
    verdict: Literal["constant", "balanced", "n/a"]
    degraded: bool = False
    spectral: Optional[SpectralReadout] = None

    @model_validator(mode="after")
    def _check_verdict(self) -> "ExperimentResult":
        if self.kind == "deutsch":
            expected = "balanced" if self.bit_I == 1 else "constant"
        else:
            expected = "n/a"
        if self.verdict != expected:
            raise ValueError(f"verdict {self.verdict!r} does not follow from {self.kind} bits")
        return self

    @property
    def cell(self) -> str:
        return f"{self.kind}_{self.function.value}_{self.mode}"

    @property
    def expected_bits(self) -> Tuple[int, int]:
        """Bits the ideal experiment produces for this function."""
        if self.kind == "deutsch":
            return int(not self.function.constant), 1
        x = int(self.kind[-1])
        return x, self.function(x)

    @property
    def correct(self) -> bool:
        return (self.bit_I, self.bit_S) == self.expected_bits

    @property
    def confident(self) -> bool:
        return not self.degraded and (self.spectral is None or not self.spectral.degraded)


class CellOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    result: ExperimentResult
    fid: Fid
    spectrum: Spectrum


def _bit(value: float) -> int:
    return 0 if value > 0 else 1


def _readout(
    kind: str, function: FunctionId, mode: str, rho: DensityMatrix
) -> ExperimentResult:
    ix, sx = expectation(rho, operator("Ix")), expectation(rho, operator("Sx"))
    bit_I, bit_S = _bit(ix), _bit(sx)
    degraded = min(abs(ix), abs(sx)) < DEGRADED_FRACTION
    if degraded:
        logger.warning(
            f"{kind} {function.value} {mode}: weak signal <Ix> = {ix:+.4f}, <Sx> = {sx:+.4f}"
        )
    verdict = ("balanced" if bit_I else "constant") if kind == "deutsch" else "n/a"
    return ExperimentResult(
        kind=kind,
        function=function,
        mode=mode,
        ix=ix,
        sx=sx,
        bit_I=bit_I,
        bit_S=bit_S,
        verdict=verdict,
        degraded=degraded,
    )


def _oracle(function: FunctionId, settings: RunSettings) -> Sequence:
    return function.sequence(merged=settings.oracle == "merged")


def classical_state(
    function: FunctionId, input_bit: int, sys: SpinSystem, mode: Mode, settings: RunSettings
) -> DensityMatrix:
    """|input_bit>|0> through U_f and the 90_y readout pulse on both spins."""
    if input_bit not in (0, 1):
        raise ValueError(f"input bit must be 0 or 1, got {input_bit}")
    seq = _oracle(function, settings) + builtin("deutsch_prep")
    return apply_sequence(
        seq, basis_density(input_bit, 0), sys, mode, settings.shaped, settings.relaxation
    )


def deutsch_state(
    function: FunctionId, sys: SpinSystem, mode: Mode, settings: RunSettings
) -> DensityMatrix:
    """|0>|1> through the pseudo-Hadamards and U_f.

    The inverse pseudo-Hadamards and readout pulses cancel, so they are omitted unless
    `explicit_readout` asks for them.
    """
    seq = builtin("deutsch_prep") + _oracle(function, settings)
    if settings.explicit_readout:
        seq = seq + _INVERSE_PREP + builtin("deutsch_prep")
    return apply_sequence(seq, basis_density(0, 1), sys, mode, settings.shaped, settings.relaxation)


def run_classical(
    function: FunctionId,
    input_bit: int,
    sys: SpinSystem,
    mode: Mode = "ideal",
    settings: Optional[RunSettings] = None,
) -> ExperimentResult:
    """Evaluate f(input_bit) classically: spin S ends in |f(input_bit)>."""
    settings = settings or RunSettings()
    rho = classical_state(FunctionId(function), input_bit, sys, mode, settings)
    return _readout(f"classical{input_bit}", FunctionId(function), mode, rho)


def run_deutsch(
    function: FunctionId,
    sys: SpinSystem,
    mode: Mode = "ideal",
    settings: Optional[RunSettings] = None,
) -> ExperimentResult:
    """Decide constant or balanced with one oracle call; spin I ends inverted when balanced."""
    settings = settings or RunSettings()
    rho = deutsch_state(FunctionId(function), sys, mode, settings)
    return _readout("deutsch", FunctionId(function), mode, rho)


def phase_kickback_check(function: FunctionId, x: int) -> Tuple[int, bool]:
    """Apply the exact U_f to |x>(|0> - |1>)/sqrt(2).

    Returns:
        Tuple[int, bool]: The sign (-1)^f(x) read from the output and whether the
            output equals that sign times the input within 1e-12.
    """
    function = FunctionId(function)
    minus = torch.tensor([1, -1], dtype=DTYPE) / math.sqrt(2)
    control = torch.zeros(2, dtype=DTYPE)
    control[x] = 1
    psi = torch.kron(control, minus)
    out = function.oracle() @ psi
    sign = 1 if torch.vdot(psi, out).real > 0 else -1
    preserved = bool(torch.allclose(out, sign * psi, rtol=0, atol=1e-12))
    return sign, preserved


def deutsch_exact_hadamard(function: FunctionId) -> PureState:
    """Deutsch's circuit with exact Hadamards: H on both spins around U_f, starting from |0>|1>."""
    function = FunctionId(function)
    psi = PureState.basis(0, 1).amplitudes
    psi = kron(HADAMARD, HADAMARD) @ psi
    psi = function.oracle() @ psi
    psi = kron(HADAMARD, HADAMARD) @ psi
    return PureState(amplitudes=psi)


def readout_state(
    kind: str, function: FunctionId, sys: SpinSystem, mode: Mode, settings: RunSettings
) -> DensityMatrix:
    if kind == "deutsch":
        return deutsch_state(function, sys, mode, settings)
    if kind not in KINDS:
        raise ValueError(f"unknown experiment kind {kind!r}, expected one of {KINDS}")
    return classical_state(function, int(kind[-1]), sys, mode, settings)


def _cell(
    kind: str,
    function: FunctionId,
    sys: SpinSystem,
    mode: Mode,
    settings: RunSettings,
    phase0: float,
    reference: float,
) -> CellOutcome:
    rho = readout_state(kind, function, sys, mode, settings)
    result = _readout(kind, function, mode, rho)
    fid = synthesize_fid(rho, sys, settings.points, settings.dwell)
    spec = spectrum(fid, phase0)
    readout = classify(spec, sys, reference=reference)
    result = result.model_copy(update={"spectral": SpectralReadout.from_readout(readout, phase0)})
    logger.info(
        f"{result.cell}: <Ix> {result.ix:+.4f} <Sx> {result.sx:+.4f} "
        f"bits {result.bit_I}{result.bit_S} spectral {readout.bit_I}{readout.bit_S}"
    )
    return CellOutcome(result=result, fid=fid, spectrum=spec)


def phase_reference(sys: SpinSystem, mode: Mode, settings: RunSettings) -> Tuple[float, float]:
    """Phase correction from the classical f00 run on input 0, and its phased I integral."""
    rho = classical_state(FunctionId.f00, 0, sys, mode, settings)
    reference = spectrum(synthesize_fid(rho, sys, settings.points, settings.dwell))
    phase0 = calibrate_phase(reference, sys)
    magnitude = abs(multiplet_integral(reference, sys.nu_I, sys.J))
    return phase0, magnitude


def run_batch(
    kinds: Iterable[str],
    functions: Iterable[FunctionId],
    sys: SpinSystem,
    mode: Mode = "ideal",
    settings: Optional[RunSettings] = None,
) -> List[CellOutcome]:
    """Run every (kind, function) cell, concurrently, returned in kind-major order.

    All cells share the phase correction and reference magnitude of the classical f00
    run on input 0, so the output does not depend on which cells are requested.
    """
    settings = settings or RunSettings()
    cells = [(kind, FunctionId(function)) for kind in kinds for function in functions]
    phase0, reference = phase_reference(sys, mode, settings)
    logger.info(
        f"running {len(cells)} cell(s) in {mode} mode on {settings.workers} worker(s), "
        f"phase0 {math.degrees(phase0):+.3f} deg"
    )
    with ThreadPoolExecutor(max_workers=settings.workers) as pool:
        futures = [
            pool.submit(_cell, kind, function, sys, mode, settings, phase0, reference)
            for kind, function in cells
        ]
        return [future.result() for future in futures]
