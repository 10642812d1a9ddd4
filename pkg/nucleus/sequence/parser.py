"""Line-oriented pulse-sequence language.

    line    := pulse | soft | delay | couple | zrot
    pulse   := "pulse" target angle axis
    soft    := "soft" target angle axis "dur" seconds
               ["offset" hz] ["trunc" fraction] ["slices" int]
    delay   := "delay" ( seconds "s" | fraction "/J" )
    couple  := "couple" fraction
    zrot    := "zrot" target angle
    target  := "I" | "S" | "both"
    axis    := "x" | "y" | "z" | "-x" | "-y" | "-z" | degrees

'#' starts a comment. Files use the .pseq extension.
"""

import math
from fractions import Fraction
from itertools import groupby
from typing import Callable, Dict, List, Optional, Union

from pydantic import ValidationError

from nucleus.sequence.ast import (
    TRANSVERSE_AXES,
    Couple,
    Delay,
    Event,
    Pulse,
    Sequence,
    SoftPulse,
    ZRot,
)
from nucleus.sequence.lexer import ParseError, Token, tokenize
from nucleus.utils import format_number

TARGETS = ("I", "S", "both")
AXES = ("x", "y", "z", "-x", "-y", "-z")


class _Line:
    """Cursor over the tokens of one source line."""

    def __init__(self, tokens: List[Token], end_column: int):
        self.tokens = tokens
        self.position = 0
        self.end_column = end_column

    @property
    def line(self) -> int:
        return self.tokens[0].line

    def peek(self) -> Optional[Token]:
        return self.tokens[self.position] if self.position < len(self.tokens) else None

    def next(self, expected: str) -> Token:
        token = self.peek()
        if token is None:
            raise ParseError(f"expected {expected} before end of line", self.line, self.end_column)
        self.position += 1
        return token

    def error(self, message: str, token: Token) -> ParseError:
        return ParseError(message, token.line, token.column, token.text)

    def _finite(self, token: Token, expected: str) -> float:
        value = float(token.text)
        if not math.isfinite(value):
            raise self.error(f"malformed {expected}", token)
        return value

    def number(self, expected: str) -> float:
        token = self.next(expected)
        if token.kind != "NUMBER":
            raise self.error(f"malformed {expected}", token)
        return self._finite(token, expected)

    def integer(self, expected: str) -> int:
        token = self.next(expected)
        if token.kind != "NUMBER" or not token.text.lstrip("+-").isdigit():
            raise self.error(f"malformed {expected}", token)
        return int(token.text)

    def target(self, allowed=TARGETS) -> str:
        token = self.next("target")
        if token.kind != "WORD" or token.text not in allowed:
            raise self.error("unknown target", token)
        return token.text

    def axis(self, allowed=AXES) -> Union[str, float]:
        token = self.next("axis")
        if token.kind == "NUMBER":
            return self._finite(token, "axis")
        if token.kind != "WORD" or token.text not in allowed:
            raise self.error("unknown axis", token)
        return token.text

    def finish(self):
        token = self.peek()
        if token is not None:
            raise self.error("trailing input", token)


def _pulse(cursor: _Line) -> dict:
    return dict(cls=Pulse, target=cursor.target(), flip=cursor.number("angle"), axis=cursor.axis())


def _soft(cursor: _Line) -> dict:
    fields = dict(
        cls=SoftPulse,
        target=cursor.target(allowed=("I", "S")),
        flip=cursor.number("angle"),
        axis=cursor.axis(allowed=TRANSVERSE_AXES),
    )
    keyword = cursor.next('"dur"')
    if keyword.text != "dur":
        raise cursor.error('expected "dur"', keyword)
    fields["duration"] = cursor.number("duration")

    options = {"offset": ("offset", cursor.number), "trunc": ("truncation", cursor.number)}
    options["slices"] = ("slices", cursor.integer)
    while cursor.peek() is not None:
        keyword = cursor.next("option")
        if keyword.text not in options:
            raise cursor.error("unknown soft-pulse option", keyword)
        field, read = options.pop(keyword.text)
        fields[field] = read(keyword.text)
    return fields


def _delay(cursor: _Line) -> dict:
    value = cursor.number("delay")
    unit = cursor.next('"s" or "/J"')
    if unit.kind == "PER_J":
        return dict(cls=Delay, value=value, unit="/J")
    if unit.kind == "WORD" and unit.text == "s":
        return dict(cls=Delay, value=value, unit="s")
    raise cursor.error('expected "s" or "/J"', unit)


def _couple(cursor: _Line) -> dict:
    return dict(cls=Couple, fraction=cursor.number("fraction"))


def _zrot(cursor: _Line) -> dict:
    return dict(cls=ZRot, target=cursor.target(), theta=cursor.number("angle"))


MNEMONICS: Dict[str, Callable[[_Line], dict]] = {
    "pulse": _pulse,
    "soft": _soft,
    "delay": _delay,
    "couple": _couple,
    "zrot": _zrot,
}


def _parse_line(cursor: _Line) -> Event:
    head = cursor.next("mnemonic")
    rule = MNEMONICS.get(head.text) if head.kind == "WORD" else None
    if rule is None:
        raise cursor.error("unknown mnemonic", head)
    fields = rule(cursor)
    cursor.finish()
    cls = fields.pop("cls")
    try:
        return cls(**fields)
    except ValidationError as e:
        message = e.errors()[0]["msg"]
        raise ParseError(f"invalid {head.text}: {message}", head.line, head.column, head.text)


def parse(text: str, name: str = "") -> Sequence:
    """Parse sequence text into a Sequence.

    Raises:
        ParseError: With the line and column of the first offending token.
    """
    lines = text.split("\n")
    events = []
    tokens = [t for t in tokenize(text) if t.kind != "NEWLINE"]
    for line_no, group in groupby(tokens, key=lambda t: t.line):
        end_column = len(lines[line_no - 1].rstrip()) + 1
        events.append(_parse_line(_Line(list(group), end_column)))
    return Sequence(events=tuple(events), name=name)


def _axis_text(axis: Union[str, float]) -> str:
    return axis if isinstance(axis, str) else format_number(axis)


def format_event(event: Event) -> str:
    """Canonical text of one event."""
    n = format_number
    if isinstance(event, Pulse):
        return f"pulse {event.target} {n(event.flip)} {_axis_text(event.axis)}"
    if isinstance(event, SoftPulse):
        text = f"soft {event.target} {n(event.flip)} {_axis_text(event.axis)}"
        text += f" dur {n(event.duration)}"
        if event.offset is not None:
            text += f" offset {n(event.offset)}"
        if event.truncation is not None:
            text += f" trunc {n(event.truncation)}"
        if event.slices is not None:
            text += f" slices {event.slices}"
        return text
    if isinstance(event, Delay):
        return f"delay {n(event.value)}/J" if event.unit == "/J" else f"delay {n(event.value)} s"
    if isinstance(event, Couple):
        return f"couple {n(event.fraction)}"
    return f"zrot {event.target} {n(event.theta)}"


def print_sequence(seq: Sequence) -> str:
    """Canonical text; parse(print_sequence(seq), seq.name) == seq."""
    return "".join(format_event(event) + "\n" for event in seq.events)


def _dash_axis(axis: Union[str, float]) -> str:
    return f"_{axis}" if isinstance(axis, str) else f"_{{{format_number(axis)}}}"


def _dash_spin(target: str) -> str:
    return "" if target == "both" else f" {target}"


def to_dash_notation(seq: Sequence) -> str:
    """Render in the dash notation of the NMR literature, e.g. "90 S_y - couple - 90 I_z"."""
    parts = []
    for event in seq.events:
        if isinstance(event, (Pulse, SoftPulse)):
            spin, axis = _dash_spin(event.target), _dash_axis(event.axis)
            text = f"{format_number(event.flip)}{spin}{axis}"
            parts.append(text + (" (soft)" if isinstance(event, SoftPulse) else ""))
        elif isinstance(event, ZRot):
            parts.append(f"{format_number(event.theta)}{_dash_spin(event.target)}_z")
        elif isinstance(event, Couple):
            fraction = format_number(event.fraction)
            parts.append("couple" if event.fraction == 0.5 else f"couple({fraction})")
        elif event.unit == "/J":
            fraction = Fraction(event.value).limit_denominator(64)
            parts.append(f"{fraction.numerator}/{fraction.denominator}J")
        else:
            parts.append(f"{format_number(event.value)}s")
    return " - ".join(parts)
