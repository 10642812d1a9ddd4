from typing import Annotated, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

Axis = Literal["x", "y", "z", "-x", "-y", "-z"]
TRANSVERSE_AXES = ("x", "y", "-x", "-y")
Z_AXES = {"z": 1.0, "-z": -1.0}


class _Event(BaseModel):
    model_config = ConfigDict(frozen=True)


class Pulse(_Event):
    """Instantaneous pulse; a z axis makes it a z-rotation."""

    kind: Literal["pulse"] = "pulse"
    target: Literal["I", "S", "both"]
    flip: float
    axis: Union[Axis, float]


class SoftPulse(_Event):
    """Explicit shaped pulse; omitted options come from the configured defaults."""

    kind: Literal["soft"] = "soft"
    target: Literal["I", "S"]
    flip: float
    axis: Union[Literal["x", "y", "-x", "-y"], float]
    duration: float = Field(gt=0)
    offset: Optional[float] = None
    truncation: Optional[float] = Field(default=None, gt=0, lt=1)
    slices: Optional[int] = Field(default=None, ge=32)


class Delay(_Event):
    """Free precession for `value` seconds, or `value` / J when unit is "/J"."""

    kind: Literal["delay"] = "delay"
    value: float = Field(ge=0)
    unit: Literal["s", "/J"] = "s"


class Couple(_Event):
    """Abstract evolution under the coupling alone for fraction / J."""

    kind: Literal["couple"] = "couple"
    fraction: float = Field(ge=0)


class ZRot(_Event):
    kind: Literal["zrot"] = "zrot"
    target: Literal["I", "S", "both"]
    theta: float


Event = Annotated[Union[Pulse, SoftPulse, Delay, Couple, ZRot], Field(discriminator="kind")]


class Sequence(BaseModel):
    """Time-ordered events; the first event acts first."""

    model_config = ConfigDict(frozen=True)

    events: Tuple[Event, ...] = ()
    name: str = ""

    def __add__(self, other: "Sequence") -> "Sequence":
        name = "+".join(n for n in (self.name, other.name) if n)
        return Sequence(events=self.events + other.events, name=name)

    def __len__(self) -> int:
        return len(self.events)
