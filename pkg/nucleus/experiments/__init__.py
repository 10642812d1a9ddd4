from nucleus.experiments.functions import FunctionId  # noqa: F401
from nucleus.experiments.spectra import (  # noqa: F401
    AliasingError,
    Fid,
    ReadoutError,
    Spectrum,
    calibrate_phase,
    classify,
    doublet_splitting,
    multiplet_integral,
    spectrum,
    synthesize_fid,
)
from nucleus.experiments.runner import (  # noqa: F401
    KINDS,
    CellOutcome,
    ExperimentResult,
    RunSettings,
    deutsch_exact_hadamard,
    phase_kickback_check,
    run_batch,
    run_classical,
    run_deutsch,
)
