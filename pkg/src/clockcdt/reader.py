"""Read the time shown by a drawn clock and classify misreadings."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

from .errors import AmbiguousHands, MissingHands
from .geometry import ClockFeatures, HandMark, circular_distance

AMBIGUOUS_RATIO = 0.95
SWAP_WINDOW_MINUTES = 5


class Interpretation(str, Enum):
    SHORT_IS_HOUR = "ShortIsHour"
    SWAPPED = "Swapped"


class ReadingErrorClass(str, Enum):
    CORRECT = "Correct"
    MINUTE_HAND_AS_HOUR = "MinuteHandAsHour"
    SWAPPED_HANDS = "SwappedHands"
    OTHER = "Other"


@dataclass(frozen=True)
class Alternate:
    hour: int
    minute: int
    residual: float
    interpretation: Interpretation


@dataclass(frozen=True)
class TimeReading:
    hour: int
    minute: int
    residual: float
    interpretation: Interpretation
    alternates: tuple[Alternate, ...]

    def alternate(self, interpretation: Interpretation) -> Alternate:
        return next(a for a in self.alternates if a.interpretation is interpretation)

    def to_dict(self) -> dict:
        return {
            "time": "%d:%02d" % (self.hour, self.minute),
            "hour": self.hour,
            "minute": self.minute,
            "residual": self.residual,
            "interpretation": self.interpretation.value,
            "alternates": [
                {"time": "%d:%02d" % (a.hour, a.minute), "hour": a.hour, "minute": a.minute,
                 "residual": a.residual, "interpretation": a.interpretation.value}
                for a in self.alternates
            ],
        }


def _solve(hour_bearing: float, minute_bearing: float, interpretation: Interpretation) -> Alternate:
    minute = math.floor(minute_bearing / 6 + 0.5) % 60
    minute_resid = circular_distance(minute_bearing, 6 * minute)
    best_h, best_err = 12, math.inf
    for h in range(1, 13):
        err = circular_distance(hour_bearing, 30 * (h + minute / 60))
        if err < best_err:
            best_h, best_err = h, err
    return Alternate(best_h, minute, best_err + minute_resid, interpretation)


def _two_hands(features: ClockFeatures) -> tuple[HandMark, HandMark]:
    hands = features.hands
    if len(hands) < 2:
        raise MissingHands(f"need two hands, found {len(hands)}")
    if len(hands) > 2:
        raise AmbiguousHands(f"found {len(hands)} hands, cannot tell hour from minute")
    short, long_ = sorted(hands, key=lambda h: h.length)
    if short.length / long_.length > AMBIGUOUS_RATIO:
        raise AmbiguousHands(f"hand length ratio {short.length / long_.length:.3f} is indistinct")
    return short, long_


def read_time(features: ClockFeatures) -> TimeReading:
    short, long_ = _two_hands(features)
    sb = features.relative_bearing(short.tip_bearing)
    lb = features.relative_bearing(long_.tip_bearing)
    normal = _solve(sb, lb, Interpretation.SHORT_IS_HOUR)
    swapped = _solve(lb, sb, Interpretation.SWAPPED)
    primary = swapped if swapped.residual < normal.residual else normal
    return TimeReading(primary.hour, primary.minute, primary.residual,
                       primary.interpretation, (normal, swapped))


def _dial_minutes(h: int, m: int) -> int:
    return (h % 12) * 60 + m


def classify_reading(
    reported: tuple[int, int], truth: tuple[int, int], features: ClockFeatures | None = None
) -> ReadingErrorClass:
    rh, rm = reported
    if _dial_minutes(rh, rm) == _dial_minutes(*truth):
        return ReadingErrorClass.CORRECT
    if features is None:
        return ReadingErrorClass.OTHER
    try:
        short, long_ = _two_hands(features)
    except (MissingHands, AmbiguousHands):
        return ReadingErrorClass.OTHER
    pointed = math.floor(features.relative_bearing(long_.tip_bearing) / 30 + 0.5) % 12 or 12
    if rm == 0 and (rh % 12 or 12) == pointed:
        return ReadingErrorClass.MINUTE_HAND_AS_HOUR
    swapped = read_time(features).alternate(Interpretation.SWAPPED)
    diff = abs(_dial_minutes(rh, rm) - _dial_minutes(swapped.hour, swapped.minute)) % 720
    if min(diff, 720 - diff) <= SWAP_WINDOW_MINUTES:
        return ReadingErrorClass.SWAPPED_HANDS
    return ReadingErrorClass.OTHER


_TIME_RE = re.compile(r"\b(1[0-2]|0?[1-9])\s*[:.]\s*([0-5]\d)\b")


def parse_reported_time(text: str) -> tuple[int, int] | None:
    """First H:MM time mentioned in a free-text answer."""
    m = _TIME_RE.search(text)
    if not m:
        return None
    return int(m.group(1)), int(m.group(2))
