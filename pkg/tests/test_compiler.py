import math

import pytest
import torch

from nucleus.algebra.matrix import dagger, identity, is_unitary, phase_distance, trace
from nucleus.algebra.product_operators import operator
from nucleus.algebra.states import evolve, expectation
from nucleus.pulses.engine import SpinSystem, hard_pulse
from nucleus.sequence.ast import Sequence
from nucleus.sequence.builtins import builtin, oracle_matrix, target_matrix
from nucleus.sequence.compiler import (
    CompileError,
    ShapedDefaults,
    apply_sequence,
    check_equivalence,
    compile_sequence,
    realize,
)
from nucleus.sequence.parser import parse


def test_empty_sequence_is_identity(proton_sys):
    assert torch.equal(compile_sequence(Sequence(), proton_sys), identity(4))


def test_u01_is_cnot_up_to_phase(offset_free_sys, cnot):
    distance, phase = check_equivalence(builtin("u01"), cnot, offset_free_sys)
    assert distance < 1e-9
    assert phase == pytest.approx(-math.pi / 4)


def test_u10_phase(offset_free_sys):
    distance, phase = check_equivalence(builtin("u10"), oracle_matrix(1, 0), offset_free_sys)
    assert distance < 1e-9
    assert phase == pytest.approx(math.pi / 4)


def test_merged_oracles_survive_any_offsets(cnot):
    sys = SpinSystem(nu_I=500.0, nu_S=-263.0, J=7.2)
    for name, target in (("u01_merged", cnot), ("u10_merged", oracle_matrix(1, 0))):
        distance, _ = check_equivalence(builtin(name), target, sys)
        assert distance < 1e-9


def test_every_oracle_matches_its_truth_table(proton_sys):
    for f0, f1 in ((0, 0), (0, 1), (1, 0), (1, 1)):
        distance, _ = check_equivalence(builtin(f"u{f0}{f1}"), oracle_matrix(f0, f1), proton_sys)
        assert distance < 1e-9


def test_unconverged_soft_event_is_a_compile_error(proton_sys):
    seq = parse("soft I 90 y dur 0.04 slices 32")
    with pytest.raises(CompileError, match="not converged"):
        compile_sequence(seq, proton_sys, mode="shaped")
    # Ideal mode ignores the slice count.
    assert is_unitary(compile_sequence(seq, proton_sys))


def test_abstract_and_merged_forms_agree(proton_sys):
    for f0, f1 in ((0, 1), (1, 0)):
        abstract = compile_sequence(builtin(f"u{f0}{f1}"), proton_sys)
        merged = compile_sequence(builtin(f"u{f0}{f1}_merged"), proton_sys)
        distance, _ = phase_distance(merged, abstract)
        assert distance < 1e-9


def test_truth_tables(proton_sys, basis):
    """Each oracle maps rho_x0 to rho_x,f(x)."""
    for f0, f1 in ((0, 0), (0, 1), (1, 0), (1, 1)):
        u = compile_sequence(builtin(f"u{f0}{f1}"), proton_sys)
        for x, fx in ((0, f0), (1, f1)):
            out = evolve(basis[(x, 0)], u)
            assert torch.allclose(out.matrix, basis[(x, fx)].matrix, atol=1e-9)


def test_u11_inverts_s(proton_sys, basis):
    out = evolve(basis[(0, 0)], compile_sequence(builtin("u11"), proton_sys))
    assert torch.allclose(out.matrix, basis[(0, 1)].matrix, atol=1e-12)


def test_u10_on_ground_state(proton_sys, basis):
    out = evolve(basis[(0, 0)], compile_sequence(builtin("u10"), proton_sys))
    assert torch.allclose(out.matrix, basis[(0, 1)].matrix, atol=1e-9)


def test_hadamard_builtins(proton_sys):
    for name in ("hadamard_I", "hadamard_S", "pseudo_h", "deutsch_prep"):
        distance, _ = check_equivalence(builtin(name), target_matrix(name), proton_sys)
        assert distance < 1e-12


def test_unknown_builtin():
    with pytest.raises(KeyError):
        builtin("u22")
    with pytest.raises(KeyError):
        target_matrix("hadamard_Q")


def test_compilation_is_associative(proton_sys):
    a, b = builtin("u01_merged"), builtin("hadamard_S")
    whole = compile_sequence(a + b, proton_sys)
    parts = compile_sequence(b, proton_sys) @ compile_sequence(a, proton_sys)
    assert torch.allclose(whole, parts, atol=1e-12)


def test_per_j_delay_needs_coupling():
    sys = SpinSystem(nu_I=100.0, nu_S=-100.0, J=0.0)
    with pytest.raises(CompileError):
        compile_sequence(parse("delay 0.25/J"), sys)
    with pytest.raises(CompileError):
        compile_sequence(parse("couple 0.5"), sys)


def test_seconds_delay_needs_no_coupling():
    sys = SpinSystem(nu_I=100.0, nu_S=-100.0, J=0.0)
    assert is_unitary(compile_sequence(parse("delay 0.01 s"), sys))


def test_unknown_mode(proton_sys):
    with pytest.raises(CompileError):
        compile_sequence(builtin("u11"), proton_sys, mode="fast")


def test_composite_z_matches_exact(proton_sys):
    seq = builtin("u01")
    exact = compile_sequence(seq, proton_sys)
    composite = compile_sequence(seq, proton_sys, composite_z=True)
    distance, _ = phase_distance(composite, exact)
    assert distance < 1e-9


def test_realize_reports_elapsed_time(proton_sys):
    _, t = realize(parse("delay 0.25/J").events[0], proton_sys)
    assert t == pytest.approx(0.25 / 7.2)
    _, t = realize(parse("couple 0.5").events[0], proton_sys)
    assert t == pytest.approx(0.5 / 7.2)
    _, t = realize(parse("pulse I 90 x").events[0], proton_sys)
    assert t == 0.0


def test_soft_event_is_a_hard_pulse_in_ideal_mode(proton_sys):
    u, t = realize(parse("soft I 90 y dur 0.006").events[0], proton_sys)
    assert torch.allclose(u, hard_pulse(90, "y", "I"))
    assert t == 0.0


def test_soft_event_in_shaped_mode(proton_sys):
    event = parse("soft I 90 y dur 0.0065531 slices 256").events[0]
    u, t = realize(event, proton_sys, mode="shaped")
    assert t == 0.0065531
    assert is_unitary(u)
    fidelity = abs(trace(dagger(hard_pulse(90, "y", "I")) @ u)) / 4
    assert fidelity > 0.95


def test_shaped_mode_selective_pulses(proton_sys):
    u, t = realize(parse("pulse I 90 y").events[0], proton_sys, mode="shaped")
    assert 3e-3 <= t <= 9e-3
    fidelity = abs(trace(dagger(hard_pulse(90, "y", "I")) @ u)) / 4
    assert fidelity >= 0.99
    # Pulses on both spins stay hard.
    u, t = realize(parse("pulse both 180 x").events[0], proton_sys, mode="shaped")
    assert t == 0.0


def test_shaped_merged_oracle(proton_sys, cnot):
    u = compile_sequence(builtin("u01_merged"), proton_sys, mode="shaped")
    fidelity = abs(trace(dagger(cnot) @ u)) / 4
    assert fidelity >= 0.95


def test_shaped_calibration_failure_is_a_compile_error(proton_sys):
    shaped = ShapedDefaults(duration=5e-4)
    with pytest.raises(CompileError):
        compile_sequence(parse("pulse I 90 y"), proton_sys, mode="shaped", shaped=shaped)


def test_apply_sequence_matches_compiled_propagator(proton_sys, basis):
    seq = builtin("deutsch_prep") + builtin("u01_merged")
    rho = basis[(0, 1)]
    stepwise = apply_sequence(seq, rho, proton_sys)
    whole = evolve(rho, compile_sequence(seq, proton_sys))
    assert torch.allclose(stepwise.matrix, whole.matrix, atol=1e-12)


def test_relaxation_damps_coherence(proton_sys, basis):
    seq = parse("pulse S 90 y\ndelay 0.1 s")
    rho = basis[(0, 0)]
    coherent = apply_sequence(seq, rho, proton_sys)
    relaxed = apply_sequence(seq, rho, proton_sys, relaxation=True)
    transverse = operator("Sx") + 1j * operator("Sy")
    amplitude = abs(complex(torch.trace(coherent.matrix @ transverse)))
    damped = abs(complex(torch.trace(relaxed.matrix @ transverse)))
    assert damped == pytest.approx(amplitude * math.exp(-0.1 / 0.3), rel=1e-9)
    assert expectation(relaxed, operator("Iz")) == pytest.approx(0.5)
