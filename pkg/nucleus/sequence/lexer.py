import re
from typing import Iterator, NamedTuple, Optional


class ParseError(ValueError):
    """A rejected sequence, pinned to a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int, token: Optional[str] = None):
        self.message = message
        self.line = line
        self.column = column
        self.token = token
        super().__init__(str(self))

    def __str__(self) -> str:
        where = f"line {self.line} col {self.column}: {self.message}"
        return where if self.token is None else f"{where} (got {self.token!r})"


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int


TOKEN_SPEC = [
    ("NUMBER", r"[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"),
    ("PER_J", r"/J\b"),
    ("WORD", r"-?[A-Za-z_][A-Za-z0-9_]*"),
    ("COMMENT", r"\#[^\n]*"),
    ("NEWLINE", r"\n"),
    ("SKIP", r"[ \t\r\ufeff]+"),
    ("MISMATCH", r"."),
]
_MASTER = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in TOKEN_SPEC))


def tokenize(text: str) -> Iterator[Token]:
    """Yield NUMBER, PER_J, WORD and NEWLINE tokens; comments and blanks are dropped."""
    line, line_start = 1, 0
    for match in _MASTER.finditer(text):
        kind, value = match.lastgroup, match.group()
        column = match.start() - line_start + 1
        if kind == "NEWLINE":
            yield Token(kind, value, line, column)
            line, line_start = line + 1, match.end()
        elif kind in ("SKIP", "COMMENT"):
            continue
        elif kind == "MISMATCH":
            raise ParseError("unexpected character", line, column, value)
        else:
            yield Token(kind, value, line, column)
