import json
import math


def json_reader(filepath: str):
    with open(filepath, "r", encoding="utf-8") as file:
        content = json.load(file)
    return content


def json_dumps(data) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, default=str) + "\n"


def format_number(value: float) -> str:
    """Shortest text that parses back to the same float; integers lose the '.0'."""
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def wrap_degrees(angle: float) -> float:
    """Wrap an angle into (-180, 180]."""
    wrapped = math.fmod(angle, 360.0)
    if wrapped <= -180.0:
        wrapped += 360.0
    elif wrapped > 180.0:
        wrapped -= 360.0
    return wrapped
