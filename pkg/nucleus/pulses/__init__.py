from nucleus.pulses.engine import (  # noqa: F401
    SpinSystem,
    couple,
    dephase,
    free_evolution,
    hadamard_exact,
    hard_pulse,
    in_time_order,
    pseudo_hadamard,
    z_rotation,
)
from nucleus.pulses.shaped import (  # noqa: F401
    CalibrationError,
    ConvergenceError,
    PulseReport,
    ShapedPulseSpec,
    calibrate_spectator,
    gaussian_envelope,
    pulse_fidelity,
    pulse_report,
    shaped_propagator,
)
