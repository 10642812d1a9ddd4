import cmath
import math

import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from nucleus.algebra.matrix import DTYPE, dagger, identity, is_unitary, phase_distance
from nucleus.algebra.product_operators import po_compose, po_decompose
from nucleus.algebra.states import evolve
from nucleus.pulses.engine import SpinSystem, free_evolution, hard_pulse, z_rotation
from nucleus.sequence.ast import Couple, Delay, Pulse, Sequence, SoftPulse, ZRot
from nucleus.sequence.parser import parse, print_sequence

EXAMPLES = settings(max_examples=1000, deadline=None)

angles = st.floats(min_value=-720, max_value=720, allow_nan=False)
offsets = st.floats(min_value=-2000, max_value=2000, allow_nan=False)
entries = st.lists(st.floats(min_value=-1, max_value=1, allow_nan=False), min_size=32, max_size=32)
targets = st.sampled_from(["I", "S", "both"])
numbers = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
positive = st.floats(min_value=1e-9, max_value=1e3, allow_nan=False)


def _complex_matrix(values):
    data = torch.tensor(values, dtype=torch.float64).reshape(2, 4, 4)
    return torch.complex(data[0], data[1])


def _hermitian(values):
    a = _complex_matrix(values)
    return (a + dagger(a)) / 2


def _unitary(values, scale=1.0):
    return torch.linalg.matrix_exp(-1j * scale * _hermitian(values))


def _system(nu_I, nu_S, J):
    return SpinSystem.model_construct(nu_I=nu_I, nu_S=nu_S, J=J, T2star=math.inf)


@EXAMPLES
@given(theta=angles, phase=angles, target=targets)
def test_pulses_are_unitary(theta, phase, target):
    assert is_unitary(hard_pulse(theta, phase, target))
    assert is_unitary(z_rotation(theta, target))


@EXAMPLES
@given(nu_I=offsets, nu_S=offsets, J=st.floats(0, 20), t=st.floats(0, 1))
def test_free_evolution_is_unitary(nu_I, nu_S, J, t):
    sys = _system(nu_I, nu_S, J)
    assert is_unitary(free_evolution(sys, t))


@EXAMPLES
@given(nu_I=offsets, nu_S=offsets, J=st.floats(0, 20), t1=st.floats(0, 1), t2=st.floats(0, 1))
def test_free_evolution_composes_in_time(nu_I, nu_S, J, t1, t2):
    sys = _system(nu_I, nu_S, J)
    joined = free_evolution(sys, t2) @ free_evolution(sys, t1)
    assert torch.allclose(free_evolution(sys, t1 + t2), joined, atol=1e-9)


@EXAMPLES
@given(theta=angles, phase=angles, target=targets)
def test_a_pulse_is_undone_by_its_negative(theta, phase, target):
    undone = hard_pulse(theta, phase, target) @ hard_pulse(-theta, phase, target)
    assert torch.allclose(undone, identity(4), atol=1e-12)


@EXAMPLES
@given(nu_I=offsets, nu_S=offsets, J=st.floats(0, 20), tau=st.floats(0, 0.1))
def test_spin_echo_refocuses_any_offsets(nu_I, nu_S, J, tau):
    delay = free_evolution(_system(nu_I, nu_S, J), tau)
    refocus = hard_pulse(180, 0, "both")
    echo = delay @ refocus @ delay
    coupling_only = free_evolution(_system(0.0, 0.0, J), 2 * tau)
    assert torch.allclose(echo, coupling_only @ refocus, atol=1e-9)


@EXAMPLES
@given(theta=angles, phase=angles)
def test_half_turn_of_the_phase_reverses_the_pulse(theta, phase):
    assert torch.allclose(
        hard_pulse(theta, phase + 180, "S"), hard_pulse(-theta, phase, "S"), atol=1e-12
    )


@EXAMPLES
@given(values=entries)
def test_product_operator_roundtrip(values):
    h = _hermitian(values)
    assert torch.allclose(po_compose(po_decompose(h)), h, atol=1e-12)


@EXAMPLES
@given(state=entries, generator=entries)
def test_evolution_preserves_trace_hermiticity_and_spectrum(state, generator):
    a = _complex_matrix(state)
    rho = a @ dagger(a)
    rho = rho / torch.trace(rho).real.clamp(min=1e-12)
    out = evolve(rho, _unitary(generator))
    assert abs(complex(torch.trace(out)) - complex(torch.trace(rho))) < 1e-10
    assert torch.allclose(out, dagger(out), atol=1e-10)
    before = torch.linalg.eigvalsh((rho + dagger(rho)) / 2)
    after = torch.linalg.eigvalsh((out + dagger(out)) / 2)
    assert torch.allclose(before, after, atol=1e-9)


@EXAMPLES
@given(u=entries, v=entries, alpha=st.floats(-math.pi, math.pi))
def test_phase_distance_ignores_global_phase(u, v, alpha):
    a = _unitary(u)
    b = _unitary(v, scale=0.2) @ a
    shifted = cmath.exp(1j * alpha) * a
    d1, _ = phase_distance(a, b)
    d2, _ = phase_distance(shifted.to(DTYPE), b)
    assert abs(d1 - d2) < 1e-9


def _axis(transverse_only=False):
    labels = ["x", "y", "-x", "-y"] if transverse_only else ["x", "y", "z", "-x", "-y", "-z"]
    return st.one_of(st.sampled_from(labels), numbers)


events = st.one_of(
    st.builds(Pulse, target=targets, flip=numbers, axis=_axis()),
    st.builds(
        SoftPulse,
        target=st.sampled_from(["I", "S"]),
        flip=numbers,
        axis=_axis(transverse_only=True),
        duration=positive,
        offset=st.none() | numbers,
        truncation=st.none() | st.floats(min_value=1e-3, max_value=0.999),
        slices=st.none() | st.integers(min_value=32, max_value=4096),
    ),
    st.builds(Delay, value=st.floats(0, 1e3), unit=st.sampled_from(["s", "/J"])),
    st.builds(Couple, fraction=st.floats(0, 1e3)),
    st.builds(ZRot, target=targets, theta=numbers),
)


@EXAMPLES
@given(seq=st.builds(Sequence, events=st.lists(events, max_size=8).map(tuple)))
def test_print_parse_roundtrip(seq):
    text = print_sequence(seq)
    assert parse(text) == seq
    assert print_sequence(parse(text)) == text
