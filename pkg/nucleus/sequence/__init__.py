from nucleus.sequence.ast import (  # noqa: F401
    Couple,
    Delay,
    Event,
    Pulse,
    Sequence,
    SoftPulse,
    ZRot,
)
from nucleus.sequence.lexer import ParseError  # noqa: F401
from nucleus.sequence.parser import parse, print_sequence, to_dash_notation  # noqa: F401
from nucleus.sequence.compiler import (  # noqa: F401
    CompileError,
    ShapedDefaults,
    apply_sequence,
    check_equivalence,
    compile_sequence,
)
from nucleus.sequence.builtins import BUILTIN, builtin, oracle_matrix, target_matrix  # noqa: F401
