import math
from functools import lru_cache
from typing import Tuple

import torch

from nucleus.algebra.matrix import DTYPE, identity, kron
from nucleus.pulses.engine import hard_pulse
from nucleus.sequence.ast import Sequence
from nucleus.sequence.parser import parse

# U_f for f(0) f(1); each text is written in time order.
BUILTIN = {
    "u00": "",
    "u01": """
        pulse S 90 y
        couple 0.5
        pulse I 90 z
        pulse S 90 -z
        pulse S 90 -y
    """,
    "u10": """
        pulse S 90 y
        couple 0.5
        pulse I 90 z
        pulse S 90 z
        pulse S 90 -y
    """,
    "u11": "pulse S 180 x",
    # Spin-echo delays in place of the abstract coupling, with the z-rotations folded
    # into the I and both-spin pulses. The final S phase selects u01 (+x) or u10 (-x).
    "u01_merged": """
        pulse S 90 y
        delay 0.25/J
        pulse both 180 x
        delay 0.25/J
        pulse both 180 x
        pulse I 90 y
        pulse I 90 x
        pulse both 90 -y
        pulse S 90 x
    """,
    "u10_merged": """
        pulse S 90 y
        delay 0.25/J
        pulse both 180 x
        delay 0.25/J
        pulse both 180 x
        pulse I 90 y
        pulse I 90 x
        pulse both 90 -y
        pulse S 90 -x
    """,
    "hadamard_I": """
        pulse I 45 y
        pulse I 180 x
        pulse I 45 -y
    """,
    "hadamard_S": """
        pulse S 45 y
        pulse S 180 x
        pulse S 45 -y
    """,
    "pseudo_h": "pulse I 90 y",
    "deutsch_prep": "pulse both 90 y",
}

HADAMARD = torch.tensor([[1, 1], [1, -1]], dtype=DTYPE) / math.sqrt(2)


@lru_cache(maxsize=None)
def builtin(name: str) -> Sequence:
    """One of the library sequences, by name.

    Raises:
        KeyError: For an unknown name.
    """
    if name not in BUILTIN:
        raise KeyError(f"unknown builtin {name!r}, expected one of {sorted(BUILTIN)}")
    return parse(BUILTIN[name], name=name)


def oracle_matrix(f0: int, f1: int) -> torch.Tensor:
    """Truth-table permutation |x>|y> -> |x>|y xor f(x)>."""
    values = (f0, f1)
    matrix = torch.zeros((4, 4), dtype=DTYPE)
    for x in (0, 1):
        for y in (0, 1):
            matrix[2 * x + (y ^ values[x]), 2 * x + y] = 1
    return matrix


def _oracle_bits(name: str) -> Tuple[int, int]:
    return int(name[1]), int(name[2])


def target_matrix(name: str) -> torch.Tensor:
    """The exact operator a builtin is meant to implement (up to global phase)."""
    if name.startswith("u"):
        builtin(name)
        return oracle_matrix(*_oracle_bits(name))
    targets = {
        "hadamard_I": lambda: kron(HADAMARD, identity(2)),
        "hadamard_S": lambda: kron(identity(2), HADAMARD),
        "pseudo_h": lambda: hard_pulse(90, "y", "I"),
        "deutsch_prep": lambda: hard_pulse(90, "y", "both"),
    }
    if name not in targets:
        raise KeyError(f"unknown builtin {name!r}, expected one of {sorted(BUILTIN)}")
    return targets[name]()
