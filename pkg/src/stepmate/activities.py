"""Vocabulary of activities the wearable detector can report."""

from __future__ import annotations

from enum import Enum


class ActivityClass(Enum):
    """Discrete activities recognizable from audio and IMU on the wrist.

    The value of each member is the canonical surface string, exactly as it
    appears in conversation lines spoken by the wearable.
    """

    NONE = "none"
    HAMMER = "hammer"
    SAND = "sand"
    DRILL = "drill"
    SCREW = "screw"
    UNSCREW = "unscrew"
    LIFT_FLOOR_CHEST_HEAVY = "lift floor-to-chest heavy"
    LIFT_FLOOR_CHEST_LIGHT = "lift floor-to-chest light"
    LIFT_CHEST_CHEST_HEAVY = "lift chest-to-chest heavy"
    LIFT_KNEE_CHEST_HEAVY = "lift knee-to-chest heavy"
    LIFT_CHEST_KNEE_HEAVY = "lift chest-to-knee heavy"

    @property
    def surface(self) -> str:
        return self.value

    @property
    def short_name(self) -> str:
        return _SHORT_NAMES[self]

    @classmethod
    def from_surface(cls, text: str) -> "ActivityClass":
        try:
            return _BY_SURFACE[text]
        except KeyError:
            raise ValueError(f"unknown activity: {text!r}") from None


_BY_SURFACE = {member.value: member for member in ActivityClass}

# Compact detector-side labels; the five lift variants are numbered in the
# order the assembly needs them.
_SHORT_NAMES = {
    ActivityClass.NONE: "none",
    ActivityClass.HAMMER: "hammer",
    ActivityClass.SAND: "sand",
    ActivityClass.DRILL: "drill",
    ActivityClass.SCREW: "screw",
    ActivityClass.UNSCREW: "unscrew",
    ActivityClass.LIFT_FLOOR_CHEST_HEAVY: "lift1",
    ActivityClass.LIFT_CHEST_CHEST_HEAVY: "lift2",
    ActivityClass.LIFT_FLOOR_CHEST_LIGHT: "lift3",
    ActivityClass.LIFT_KNEE_CHEST_HEAVY: "lift4",
    ActivityClass.LIFT_CHEST_KNEE_HEAVY: "lift5",
}

ALL_SURFACES: tuple[str, ...] = tuple(member.value for member in ActivityClass)
