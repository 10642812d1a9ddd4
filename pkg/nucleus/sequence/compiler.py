"""Sequence -> propagator compilation in ideal or shaped mode.

In shaped mode single-spin pulses become calibrated soft pulses expressed in their
ramp frame: the ramp's accumulated z-phase is a phase-coherent frame update and is
not applied to the state.
"""

from functools import lru_cache
from typing import Literal, Optional, Tuple

import torch
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from nucleus.algebra.matrix import MatrixLike, as_matrix, identity, phase_distance, require_unitary
from nucleus.algebra.states import StateLike, evolve
from nucleus.pulses.engine import (
    SpinSystem,
    couple,
    dephase,
    free_evolution,
    hard_pulse,
    in_time_order,
    phase_degrees,
    z_rotation,
)
from nucleus.pulses.shaped import (
    CalibrationError,
    ConvergenceError,
    ShapedPulseSpec,
    calibrate_spectator,
    ramp_frame_propagator,
    require_converged,
)
from nucleus.sequence.ast import Z_AXES, Couple, Delay, Event, Pulse, Sequence, SoftPulse, ZRot

Mode = Literal["ideal", "shaped"]
MODES = ("ideal", "shaped")


class CompileError(ValueError):
    """Raised when a sequence cannot be realised for the given system and mode."""


class ShapedDefaults(BaseModel):
    """Soft-pulse parameters used where a sequence does not give them."""

    model_config = ConfigDict(frozen=True)

    shape: Literal["gaussian", "rectangular"] = "gaussian"
    duration: float = Field(default=6e-3, gt=0)
    truncation: float = Field(default=0.01, gt=0, lt=1)
    slices: int = Field(default=512, ge=32)


@lru_cache(maxsize=512)
def _soft_propagator(sys: SpinSystem, spec: ShapedPulseSpec) -> torch.Tensor:
    require_converged(sys, spec)
    return ramp_frame_propagator(sys, spec)


def soft_propagator(sys: SpinSystem, spec: ShapedPulseSpec) -> torch.Tensor:
    """Ramp-frame propagator of a soft pulse, memoised per (system, spec).

    Raises:
        CompileError: If the slice count has not converged.
    """
    try:
        return _soft_propagator(sys, spec).clone()
    except ConvergenceError as e:
        raise CompileError(f"soft {spec.flip:g} degree pulse on {spec.target}: {e}") from e


def _selective_pulse(
    flip: float, phase: float, target: str, sys: SpinSystem, shaped: ShapedDefaults
) -> Tuple[torch.Tensor, float]:
    spec = ShapedPulseSpec(
        target=target,
        flip=flip,
        phase=phase,
        shape=shaped.shape,
        truncation=shaped.truncation,
        duration=shaped.duration,
        slices=shaped.slices,
        ramp_offset=sys.offset(target),
    )
    try:
        spec = calibrate_spectator(sys, spec)
    except CalibrationError as e:
        raise CompileError(f"selective {flip:g} degree pulse on {target}: {e}") from e
    return soft_propagator(sys, spec), spec.duration


def _pulse(
    flip: float, phase: float, target: str, sys: SpinSystem, mode: str, shaped: ShapedDefaults
) -> Tuple[torch.Tensor, float]:
    if mode == "shaped" and target != "both":
        return _selective_pulse(flip, phase, target, sys, shaped)
    return hard_pulse(flip, phase, target), 0.0


def _z_rotation(
    theta: float, target: str, sys: SpinSystem, mode: str, shaped: ShapedDefaults, composite: bool
) -> Tuple[torch.Tensor, float]:
    if not composite:
        return z_rotation(theta, target), 0.0
    # theta_z = 90_y . theta_x . 90_-y in time order.
    parts = [
        _pulse(90.0, 90.0, target, sys, mode, shaped),
        _pulse(theta, 0.0, target, sys, mode, shaped),
        _pulse(90.0, 270.0, target, sys, mode, shaped),
    ]
    return in_time_order(*(u for u, _ in parts)), sum(t for _, t in parts)


def _soft(event: SoftPulse, sys: SpinSystem, mode: str, shaped: ShapedDefaults):
    phase = phase_degrees(event.axis)
    if mode == "ideal":
        return hard_pulse(event.flip, phase, event.target), 0.0
    spec = ShapedPulseSpec(
        target=event.target,
        flip=event.flip,
        phase=phase,
        shape=shaped.shape,
        truncation=event.truncation if event.truncation is not None else shaped.truncation,
        duration=event.duration,
        slices=event.slices if event.slices is not None else shaped.slices,
        ramp_offset=event.offset if event.offset is not None else sys.offset(event.target),
    )
    return soft_propagator(sys, spec), event.duration


def _interval(fraction: float, sys: SpinSystem) -> float:
    if sys.J == 0:
        raise CompileError("delays in units of 1/J need J != 0")
    return fraction / sys.J


def realize(
    event: Event,
    sys: SpinSystem,
    mode: str = "ideal",
    shaped: Optional[ShapedDefaults] = None,
    composite_z: bool = False,
) -> Tuple[torch.Tensor, float]:
    """Propagator of one event and the time (s) it occupies."""
    shaped = shaped or ShapedDefaults()
    if isinstance(event, Pulse):
        if isinstance(event.axis, str) and event.axis in Z_AXES:
            theta = Z_AXES[event.axis] * event.flip
            return _z_rotation(theta, event.target, sys, mode, shaped, composite_z)
        return _pulse(event.flip, phase_degrees(event.axis), event.target, sys, mode, shaped)
    if isinstance(event, ZRot):
        return _z_rotation(event.theta, event.target, sys, mode, shaped, composite_z)
    if isinstance(event, SoftPulse):
        return _soft(event, sys, mode, shaped)
    if isinstance(event, Delay):
        t = event.value if event.unit == "s" else _interval(event.value, sys)
        return free_evolution(sys, t), t
    if isinstance(event, Couple):
        t = _interval(event.fraction, sys)
        return couple(event.fraction, sys), t
    raise CompileError(f"unsupported event {event!r}")


def _check_mode(mode: str):
    if mode not in MODES:
        raise CompileError(f"unknown mode {mode!r}, expected one of {MODES}")


def compile_sequence(
    seq: Sequence,
    sys: SpinSystem,
    mode: Mode = "ideal",
    shaped: Optional[ShapedDefaults] = None,
    composite_z: bool = False,
) -> torch.Tensor:
    """Ordered product of the event propagators; the first event acts first.

    Args:
        seq (Sequence): The sequence to compile.
        sys (SpinSystem): Offsets and coupling the sequence runs under.
        mode (str): "ideal" for instantaneous pulses, "shaped" for calibrated soft pulses.
        shaped (ShapedDefaults, optional): Soft-pulse parameters for shaped mode.
        composite_z (bool): Realise z-rotations as 90_y . theta_x . 90_-y pulse triples.

    Returns:
        torch.Tensor: The 4x4 propagator.

    Raises:
        CompileError: On an unknown mode, a 1/J interval with J = 0, a selective
            pulse that cannot be calibrated, or a soft pulse whose slices have not converged.
    """
    _check_mode(mode)
    propagator = identity(4)
    for index, event in enumerate(seq.events):
        u, elapsed = realize(event, sys, mode, shaped, composite_z)
        logger.debug(f"{seq.name or 'sequence'}[{index}] {event.kind}: {elapsed * 1e3:.4f} ms")
        propagator = u @ propagator
    require_unitary(propagator, f"compiled {seq.name or 'sequence'}")
    return propagator


def apply_sequence(
    seq: Sequence,
    rho: StateLike,
    sys: SpinSystem,
    mode: Mode = "ideal",
    shaped: Optional[ShapedDefaults] = None,
    relaxation: bool = False,
    composite_z: bool = False,
) -> StateLike:
    """Evolve a state event by event.

    With relaxation on, every event that occupies time (delays, coupling intervals and
    soft pulses) is followed by dephasing over that time.
    """
    _check_mode(mode)
    for event in seq.events:
        u, elapsed = realize(event, sys, mode, shaped, composite_z)
        rho = evolve(rho, u)
        if relaxation and elapsed > 0:
            rho = dephase(rho, elapsed, sys)
    return rho


def check_equivalence(
    seq: Sequence,
    target: MatrixLike,
    sys: SpinSystem,
    mode: Mode = "ideal",
    shaped: Optional[ShapedDefaults] = None,
    composite_z: bool = False,
) -> Tuple[float, float]:
    """phase_distance(compile(seq), target) as (distance, global phase in radians)."""
    target = as_matrix(target)
    require_unitary(target, "target")
    return phase_distance(compile_sequence(seq, sys, mode, shaped, composite_z), target)
