from enum import Enum
from typing import Tuple

import torch

from nucleus.sequence.ast import Sequence
from nucleus.sequence.builtins import builtin, oracle_matrix


class FunctionId(str, Enum):
    """The four functions from one bit to one bit, named by f(0) f(1)."""

    f00 = "f00"
    f01 = "f01"
    f10 = "f10"
    f11 = "f11"

    @property
    def values(self) -> Tuple[int, int]:
        return int(self.value[1]), int(self.value[2])

    def __call__(self, x: int) -> int:
        return self.values[x]

    @property
    def constant(self) -> bool:
        f0, f1 = self.values
        return f0 == f1

    @property
    def verdict(self) -> str:
        return "constant" if self.constant else "balanced"

    def oracle(self) -> torch.Tensor:
        """Exact U_f from the truth table."""
        return oracle_matrix(*self.values)

    def sequence(self, merged: bool = True) -> Sequence:
        """Pulse sequence implementing U_f.

        Balanced functions use the echo form when merged, the abstract coupling form
        otherwise; constant functions have a single form.
        """
        name = f"u{self.value[1:]}"
        if merged and not self.constant:
            name += "_merged"
        return builtin(name)
