import cmath
import math

import pytest
import torch
from pydantic import ValidationError

from nucleus.algebra.matrix import DTYPE, identity
from nucleus.algebra.states import evolve
from nucleus.experiments.functions import FunctionId
from nucleus.experiments.runner import RunSettings, classical_state
from nucleus.experiments.spectra import (
    AliasingError,
    Fid,
    ReadoutError,
    calibrate_phase,
    classify,
    default_dwell,
    doublet_splitting,
    multiplet_integral,
    spectrum,
    synthesize_fid,
)
from nucleus.pulses.engine import hard_pulse


@pytest.fixture
def reference_state(proton_sys):
    """Both spins along +x: the classical f00 run on input 0."""
    return classical_state(FunctionId.f00, 0, proton_sys, "ideal", RunSettings())


def test_default_dwell(proton_sys):
    assert default_dwell(proton_sys) == pytest.approx(1 / (4 * 381.5))


def test_fid_starts_at_the_transverse_magnetisation(proton_sys, reference_state):
    fid = synthesize_fid(reference_state, proton_sys)
    assert fid.points == 4096
    assert complex(fid.samples[0]) == pytest.approx(1.0, abs=1e-12)
    assert fid.times[1] == pytest.approx(fid.dwell)


def test_fid_decays_with_t2star(proton_sys, reference_state):
    fid = synthesize_fid(reference_state, proton_sys)
    late = int(round(0.3 / fid.dwell))
    # The envelope of the two doublets never exceeds the decay.
    assert abs(complex(fid.samples[late])) <= math.exp(-1) + 1e-9


def test_aliasing_is_rejected(proton_sys, reference_state):
    with pytest.raises(AliasingError):
        synthesize_fid(reference_state, proton_sys, dwell=0.01)


def test_fid_needs_power_of_two_points():
    with pytest.raises(ValidationError):
        Fid(samples=torch.zeros(1000, dtype=DTYPE), dwell=1e-3)


def test_spectrum_bins_sum_to_the_first_sample(proton_sys, reference_state):
    fid = synthesize_fid(reference_state, proton_sys)
    spec = spectrum(fid)
    assert complex(spec.values.sum()) == pytest.approx(complex(fid.samples[0]), abs=1e-12)
    assert spec.bin_width == pytest.approx(1 / (fid.points * fid.dwell))
    assert float(spec.freqs[0]) < 0 < float(spec.freqs[-1])


def test_lines_sit_at_the_offsets(proton_sys, reference_state):
    spec = spectrum(synthesize_fid(reference_state, proton_sys))
    peak = float(spec.freqs[spec.values.abs().argmax()])
    assert min(abs(peak - 381.5), abs(peak + 381.5)) < 3.6 + 2 * spec.bin_width


def test_doublet_splitting_is_j(proton_sys, reference_state):
    spec = spectrum(synthesize_fid(reference_state, proton_sys))
    for centre in (proton_sys.nu_I, proton_sys.nu_S):
        splitting = doublet_splitting(spec, centre, proton_sys.J)
        assert splitting == pytest.approx(7.2, abs=spec.bin_width)


def test_reference_phase_is_recovered(proton_sys, reference_state):
    fid = synthesize_fid(reference_state, proton_sys)
    baseline = calibrate_phase(spectrum(fid), proton_sys)
    rotated = Fid(samples=fid.samples * cmath.exp(0.7j), dwell=fid.dwell)
    shifted = calibrate_phase(spectrum(rotated), proton_sys)
    assert math.remainder(shifted - baseline + 0.7, 2 * math.pi) == pytest.approx(0.0, abs=1e-9)


def test_absorption_and_emission(proton_sys, reference_state):
    spec = spectrum(synthesize_fid(reference_state, proton_sys))
    phase0 = calibrate_phase(spec, proton_sys)
    readout = classify(spec, proton_sys, phase0)
    assert (readout.bit_I, readout.bit_S) == (0, 0)
    assert readout.integral_I > 0 and readout.integral_S > 0
    assert not readout.degraded

    # Inverting I first turns its line into emission.
    flipped = evolve(reference_state, hard_pulse(180, "y", "I"))
    readout = classify(spectrum(synthesize_fid(flipped, proton_sys)), proton_sys, phase0)
    assert (readout.bit_I, readout.bit_S) == (1, 0)
    assert readout.integral_I < 0


def test_window_integral_scale(proton_sys, reference_state):
    """The one-sided transform puts about half of each spin's signal in its window."""
    spec = spectrum(synthesize_fid(reference_state, proton_sys))
    integral = multiplet_integral(spec, proton_sys.nu_I, proton_sys.J)
    assert 0.15 < abs(integral) < 0.5


def test_weak_line_is_degraded(proton_sys, reference_state):
    spec = spectrum(synthesize_fid(reference_state, proton_sys))
    strong = abs(multiplet_integral(spec, proton_sys.nu_I, proton_sys.J))
    weak = evolve(reference_state, hard_pulse(80, "y", "S"))
    readout = classify(spectrum(synthesize_fid(weak, proton_sys)), proton_sys, reference=strong)
    assert readout.degraded
    assert readout.bit_I == 0


def test_no_signal_is_unclassifiable(proton_sys):
    with pytest.raises(ReadoutError):
        classify(spectrum(synthesize_fid(identity(4) / 4, proton_sys)), proton_sys)
    with pytest.raises(ReadoutError):
        calibrate_phase(spectrum(synthesize_fid(identity(4) / 4, proton_sys)), proton_sys)


def test_rows(proton_sys, reference_state):
    fid = synthesize_fid(reference_state, proton_sys, points=16)
    rows = fid.rows()
    assert len(rows) == 16
    assert rows[0] == (0.0, pytest.approx(1.0), pytest.approx(0.0, abs=1e-12))
    assert len(spectrum(fid).rows()) == 16
