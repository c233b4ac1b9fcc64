"""
Minkowski 1+1D event algebra.

Lorentz boosts, interval classification and the frame-relative ordering
of events. Natural units throughout (c = 1).
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import InvalidFrameError

# Absolute tolerance on frame-time differences below which two events count
# as simultaneous.
SIMULTANEITY_TOL = 1e-12

# Fraction of the distance between beta* and the light-speed limit that
# order_flip_boost moves past the simultaneity boundary.
FLIP_MARGIN = 0.1


@dataclass(frozen=True)
class Event:
    """A spacetime point in the lab frame."""

    t: float
    x: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.x)):
            raise InvalidFrameError(f"Event components must be finite, got t={self.t}, x={self.x}")


@dataclass(frozen=True)
class Frame:
    """An inertial frame moving with velocity beta relative to the lab."""

    beta: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.beta) or abs(self.beta) >= 1.0:
            raise InvalidFrameError(f"Frame speed |beta| must be < 1, got {self.beta}")

    @property
    def gamma(self) -> float:
        return gamma(self.beta)


LAB = Frame(0.0)


class IntervalKind(str, Enum):
    TIMELIKE = "timelike"
    SPACELIKE = "spacelike"
    LIGHTLIKE = "lightlike"


@dataclass(frozen=True)
class Interval:
    """Invariant separation of two events."""

    kind: IntervalKind
    squared: float


class Order(str, Enum):
    """Where the other event falls relative to the subject event."""

    BEFORE = "before"
    AFTER = "after"
    SIMULTANEOUS = "simultaneous"


def gamma(beta: float) -> float:
    """
    Lorentz factor 1/sqrt(1 - beta^2).

    Raises:
        InvalidFrameError: If |beta| >= 1.
    """
    if not math.isfinite(beta) or abs(beta) >= 1.0:
        raise InvalidFrameError(f"Velocity was {beta}, which is not below c")
    return 1.0 / math.sqrt(1.0 - beta * beta)


def boost_time(e: Event, f: Frame) -> float:
    """Time coordinate of e in frame f: t' = gamma (t - beta x)."""
    return f.gamma * (e.t - f.beta * e.x)


def boost_position(e: Event, f: Frame) -> float:
    """Position coordinate of e in frame f: x' = gamma (x - beta t)."""
    return f.gamma * (e.x - f.beta * e.t)


def boost(e: Event, f: Frame) -> Event:
    """
    Coordinates of e as seen from frame f.

    The result is an Event expressed in f, so boosting it again by
    Frame(-f.beta) recovers the lab coordinates.
    """
    return Event(boost_time(e, f), boost_position(e, f))


def interval_squared(a: Event, b: Event) -> float:
    dt = b.t - a.t
    dx = b.x - a.x
    return dt * dt - dx * dx


def classify_interval(a: Event, b: Event, tol: float = SIMULTANEITY_TOL) -> Interval:
    """
    Classify the separation between two events.

    Args:
        a: First event
        b: Second event
        tol: Absolute band around zero treated as lightlike

    Returns:
        Interval with the invariant Δt² - Δx² and its kind
    """
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    squared = interval_squared(a, b)
    if abs(squared) <= tol:
        kind = IntervalKind.LIGHTLIKE
    elif squared > 0:
        kind = IntervalKind.TIMELIKE
    else:
        kind = IntervalKind.SPACELIKE
    return Interval(kind=kind, squared=squared)


def frame_time_difference(subject: Event, other: Event, f: Frame) -> float:
    """t'(other) - t'(subject) in frame f, computed on coordinate differences."""
    return f.gamma * ((other.t - subject.t) - f.beta * (other.x - subject.x))


def order_in_frame(subject: Event, other: Event, f: Frame, tol: float = SIMULTANEITY_TOL) -> Order:
    """
    Place `other` relative to `subject` on the time axis of frame f.

    Returns Before when the other event already happened at the instant
    the subject event occurs (as judged in f), After when it has not yet
    happened, Simultaneous within tol.
    """
    diff = frame_time_difference(subject, other, f)
    if abs(diff) <= tol:
        return Order.SIMULTANEOUS
    return Order.BEFORE if diff < 0 else Order.AFTER


def simultaneity_beta(a: Event, b: Event, tol: float = SIMULTANEITY_TOL) -> Optional[float]:
    """
    Velocity beta* = Δt/Δx of the frame in which a and b are simultaneous.

    Returns None for timelike or lightlike pairs, which no inertial frame
    renders simultaneous.
    """
    if classify_interval(a, b, tol).kind is not IntervalKind.SPACELIKE:
        return None
    return (b.t - a.t) / (b.x - a.x)


def order_flip_boost(a: Event, b: Event, margin: float = FLIP_MARGIN,
                     tol: float = SIMULTANEITY_TOL) -> Optional[float]:
    """
    Find a frame velocity that reverses the lab-frame order of a and b.

    The boundary value beta* is pushed a fraction `margin` of the way
    toward the light-speed limit on the reversing side. Lab-simultaneous
    pairs are pushed toward +1, which puts a after b.

    Args:
        a: First event
        b: Second event
        margin: Fraction in (0, 1) of the gap to the light-speed limit
        tol: Tolerance used to classify the pair

    Returns:
        A beta with |beta| < 1, or None for timelike/lightlike pairs
    """
    if a == b:
        raise ValueError("order_flip_boost needs two distinct events")
    if not 0.0 < margin < 1.0:
        raise ValueError(f"margin must lie in (0, 1), got {margin}")
    boundary = simultaneity_beta(a, b, tol)
    if boundary is None:
        return None

    dt = b.t - a.t
    dx = b.x - a.x
    # t'(b) - t'(a) = gamma (dt - beta dx) changes sign as beta crosses beta*;
    # the reversing side is where beta dx outgrows dt.
    if dt == 0.0:
        limit = 1.0
    else:
        limit = math.copysign(1.0, dt) * math.copysign(1.0, dx)
    return boundary + margin * (limit - boundary)


def compose_velocities(beta1: float, beta2: float) -> float:
    """Relativistic velocity addition (beta1 + beta2) / (1 + beta1 beta2)."""
    gamma(beta1)
    gamma(beta2)
    return (beta1 + beta2) / (1.0 + beta1 * beta2)


def influence_speed(a: Event, b: Event, f: Frame = LAB) -> float:
    """
    Speed an influence from a to b would need in frame f.

    Infinite when the events are simultaneous in f.
    """
    dt = boost_time(b, f) - boost_time(a, f)
    dx = boost_position(b, f) - boost_position(a, f)
    if dt == 0.0:
        return math.inf
    return abs(dx / dt)
