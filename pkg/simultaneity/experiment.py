"""
Declarative model of the optical setup and its timing classification.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

from .errors import ConfigValidationError, Violation
from .kinematics import (
    SIMULTANEITY_TOL,
    Event,
    Frame,
    Order,
    boost_time,
    order_in_frame,
)

logger = logging.getLogger(__name__)


class DeviceKind(str, Enum):
    SOURCE = "source"
    BEAM_SPLITTER = "beam_splitter"
    DETECTOR = "detector"
    # Fixes arrival times; the delay itself is encoded in detector events.
    DELAY_LINE = "delay_line"


class ChoicePlacement(str, Enum):
    AT_BEAM_SPLITTER = "at_beam_splitter"
    AT_DETECTOR = "at_detector"


class Mode(str, Enum):
    SINGLE_PARTICLE = "single_particle"
    TWO_PARTICLE = "two_particle"


class TimingClass(str, Enum):
    STANDARD_BEFORE_AFTER = "standard_before_after"
    BEFORE_BEFORE = "before_before"
    AFTER_AFTER = "after_after"
    BOUNDARY = "boundary"


SIDES = ("i", "j")
PORTS = ("+", "-")


@dataclass(frozen=True)
class Device:
    """
    One element of the optical setup.

    `beta` is kept as a plain number so that configs with out-of-range
    speeds can still be built and reported by validate(); `frame` raises
    for those.
    """

    id: str
    kind: DeviceKind
    t: float
    x: float
    beta: float = 0.0
    phase: float = 0.0
    reflectivity: float = 0.5
    side: Optional[str] = None
    port: Optional[str] = None

    @property
    def event(self) -> Event:
        return Event(self.t, self.x)

    @property
    def frame(self) -> Frame:
        return Frame(self.beta)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one setup; frozen once built."""

    mode: Mode
    devices: Tuple[Device, ...]
    placement: ChoicePlacement = ChoicePlacement.AT_DETECTOR
    preferred_frame_beta: float = 0.0
    visibility: float = 1.0
    paths_indistinguishable: bool = True

    @property
    def preferred_frame(self) -> Frame:
        return Frame(self.preferred_frame_beta)

    def by_kind(self, kind: DeviceKind) -> List[Device]:
        return [d for d in self.devices if d.kind is kind]

    def device(self, device_id: str) -> Device:
        for d in self.devices:
            if d.id == device_id:
                return d
        raise KeyError(device_id)

    def beam_splitter(self, side: Optional[str] = None) -> Device:
        splitters = self.by_kind(DeviceKind.BEAM_SPLITTER)
        if side is not None:
            splitters = [d for d in splitters if d.side == side]
        if not splitters:
            raise KeyError(f"no beam-splitter on side {side}")
        return splitters[0]

    def detector(self, port: str, side: Optional[str] = None) -> Device:
        for d in self.by_kind(DeviceKind.DETECTOR):
            if d.port == port and (side is None or d.side == side):
                return d
        raise KeyError(f"no detector on port {port} side {side}")


@dataclass(frozen=True)
class ChoiceEvent:
    """Event at which an outcome becomes determined, with its host frame."""

    device_id: str
    event: Event
    frame: Frame


def _finite(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def validate(cfg: ExperimentConfig) -> List[Violation]:
    """
    Check every ExperimentConfig rule.

    Args:
        cfg: Config to check

    Returns:
        List of violations, empty when the config is valid
    """
    violations: List[Violation] = []

    def add(field_name: str, rule: str, message: str):
        violations.append(Violation(field=field_name, rule=rule, message=message))

    seen: Dict[str, int] = {}
    for idx, d in enumerate(cfg.devices):
        prefix = f"devices[{idx}]"
        if d.id in seen:
            add(f"{prefix}.id", "duplicate device id", f"'{d.id}' already used by devices[{seen[d.id]}]")
        else:
            seen[d.id] = idx
        if not (_finite(d.t) and _finite(d.x)):
            add(f"{prefix}.t", "non-finite event", f"t={d.t}, x={d.x}")
        if not _finite(d.beta) or abs(d.beta) >= 1.0:
            add(f"{prefix}.beta", "frame speed violation", f"|beta| must be < 1, got {d.beta}")
        if not _finite(d.phase):
            add(f"{prefix}.phase", "non-finite phase", f"got {d.phase}")
        if not _finite(d.reflectivity) or not 0.0 <= d.reflectivity <= 1.0:
            add(f"{prefix}.reflectivity", "reflectivity range", f"must lie in [0, 1], got {d.reflectivity}")
        if d.kind is DeviceKind.DETECTOR and d.port not in PORTS:
            add(f"{prefix}.port", "detector port", f"detectors need port '+' or '-', got {d.port!r}")

    if not _finite(cfg.preferred_frame_beta) or abs(cfg.preferred_frame_beta) >= 1.0:
        add("preferred_frame_beta", "frame speed violation",
            f"|beta| must be < 1, got {cfg.preferred_frame_beta}")
    if not _finite(cfg.visibility) or not 0.0 <= cfg.visibility <= 1.0:
        add("visibility", "visibility range", f"must lie in [0, 1], got {cfg.visibility}")

    sources = cfg.by_kind(DeviceKind.SOURCE)
    splitters = cfg.by_kind(DeviceKind.BEAM_SPLITTER)
    detectors = cfg.by_kind(DeviceKind.DETECTOR)

    if cfg.mode is Mode.SINGLE_PARTICLE:
        if len(sources) != 1:
            add("devices", "device count violation",
                f"single-particle mode needs exactly one source, found {len(sources)}")
        if len(splitters) != 1:
            add("devices", "device count violation",
                f"single-particle mode needs exactly one beam-splitter, found {len(splitters)}")
        if len(detectors) != 2:
            add("devices", "device count violation",
                f"single-particle mode needs exactly two detectors, found {len(detectors)}")
        elif sorted(str(d.port) for d in detectors) != ["+", "-"]:
            add("devices", "detector port", "the two detectors must sit on ports '+' and '-'")
    else:
        if not sources:
            add("devices", "device count violation", "two-particle mode needs at least one source")
        if len(splitters) != 2 or sorted(str(d.side) for d in splitters) != ["i", "j"]:
            add("devices", "device count violation",
                f"two-particle mode needs one beam-splitter on each side i and j, found {len(splitters)}")
        for side in SIDES:
            ports = sorted(str(d.port) for d in detectors if d.side == side)
            if ports != ["+", "-"]:
                add("devices", "device count violation",
                    f"side {side} needs two detectors on ports '+' and '-', found {len(ports)}")
        stray = [d.id for d in detectors if d.side not in SIDES]
        if stray:
            add("devices", "detector side", f"detectors without side i/j: {', '.join(stray)}")

    return violations


def ensure_valid(cfg: ExperimentConfig) -> None:
    """Raise ConfigValidationError when validate() reports anything."""
    violations = validate(cfg)
    if violations:
        raise ConfigValidationError(violations)


def has_two_choice_sites(cfg: ExperimentConfig) -> bool:
    """False only for single-particle setups choosing at the lone beam-splitter."""
    return not (cfg.mode is Mode.SINGLE_PARTICLE and cfg.placement is ChoicePlacement.AT_BEAM_SPLITTER)


def _choice(device: Device) -> ChoiceEvent:
    return ChoiceEvent(device_id=device.id, event=device.event, frame=device.frame)


def choice_events(cfg: ExperimentConfig) -> Tuple[ChoiceEvent, ChoiceEvent]:
    """
    The two events at which outcomes become determined.

    Single-particle setups at detector placement yield the wave arrivals
    at D(-) and D(+), in that order. Two-particle setups yield side i then
    side j: the beam-splitter impacts, or at detector placement the
    lab-earliest detector arrival of each side.

    Raises:
        ConfigValidationError: Invalid config, or a single-particle setup
            choosing at its only beam-splitter
    """
    ensure_valid(cfg)

    if cfg.mode is Mode.SINGLE_PARTICLE:
        if cfg.placement is ChoicePlacement.AT_BEAM_SPLITTER:
            raise ConfigValidationError([Violation(
                field="placement",
                rule="single choice site",
                message="a single-particle setup choosing at its beam-splitter has only one choice event",
            )])
        return _choice(cfg.detector("-")), _choice(cfg.detector("+"))

    if cfg.placement is ChoicePlacement.AT_BEAM_SPLITTER:
        return _choice(cfg.beam_splitter("i")), _choice(cfg.beam_splitter("j"))

    sides = []
    for side in SIDES:
        arrivals = [d for d in cfg.by_kind(DeviceKind.DETECTOR) if d.side == side]
        sides.append(_choice(min(arrivals, key=lambda d: (d.t, d.id))))
    return sides[0], sides[1]


def remote_order(own: ChoiceEvent, remote: ChoiceEvent, tol: float = SIMULTANEITY_TOL) -> Order:
    """Where the remote choice falls in the own device's rest frame."""
    return order_in_frame(own.event, remote.event, own.frame, tol)


def classify_timing(cfg: ExperimentConfig, tol: float = SIMULTANEITY_TOL) -> TimingClass:
    """
    Classify the two choice events, each judged in its own device frame.

    Args:
        cfg: Setup to classify
        tol: Simultaneity tolerance on frame-time differences

    Returns:
        BeforeBefore when each device sees its own choice first, AfterAfter
        when each sees the remote one first, Boundary when either sees them
        simultaneous, StandardBeforeAfter otherwise
    """
    first, second = choice_events(cfg)
    order_a = remote_order(first, second, tol)
    order_b = remote_order(second, first, tol)

    if Order.SIMULTANEOUS in (order_a, order_b):
        timing = TimingClass.BOUNDARY
    elif order_a is Order.AFTER and order_b is Order.AFTER:
        timing = TimingClass.BEFORE_BEFORE
    elif order_a is Order.BEFORE and order_b is Order.BEFORE:
        timing = TimingClass.AFTER_AFTER
    else:
        timing = TimingClass.STANDARD_BEFORE_AFTER

    logger.debug(f"{first.device_id} sees {second.device_id} {order_a.value}, "
                 f"{second.device_id} sees {first.device_id} {order_b.value} -> {timing.value}")
    return timing


def frame_time_table(cfg: ExperimentConfig) -> List[Dict]:
    """
    Frame times of both choice events in every device's rest frame.

    Returns:
        One row per device with its id, beta and the two frame times
    """
    first, second = choice_events(cfg)
    rows = []
    for d in cfg.devices:
        rows.append({
            "id": d.id,
            "kind": d.kind.value,
            "beta": d.beta,
            "times": {
                first.device_id: boost_time(first.event, d.frame),
                second.device_id: boost_time(second.event, d.frame),
            },
        })
    return rows


def with_device_beta(cfg: ExperimentConfig, device_id: str, beta: float) -> ExperimentConfig:
    """Copy of cfg with one device's speed replaced."""
    devices = tuple(
        replace(d, beta=beta) if d.id == device_id else d
        for d in cfg.devices
    )
    return replace(cfg, devices=devices)


def single_particle_setup(minus: Tuple[float, float] = (9.9, -1.0), plus: Tuple[float, float] = (10.0, 1.0),
                          beta_minus: float = 0.0, beta_plus: float = 0.0,
                          placement: ChoicePlacement = ChoicePlacement.AT_DETECTOR,
                          reflectivity: float = 0.5, preferred_frame_beta: float = 0.0) -> ExperimentConfig:
    """
    Source, 50-50 beam-splitter, delay line and two detectors.

    Defaults reproduce the bundled single-photon geometry with both
    detectors at rest.

    Args:
        minus: (t, x) of the wave arrival at D(-)
        plus: (t, x) of the wave arrival at D(+)
        beta_minus: Speed of D(-)
        beta_plus: Speed of D(+)
    """
    return ExperimentConfig(
        mode=Mode.SINGLE_PARTICLE,
        devices=(
            Device("S", DeviceKind.SOURCE, 0.0, 0.0),
            Device("BS", DeviceKind.BEAM_SPLITTER, 1.0, 0.0, reflectivity=reflectivity),
            Device("DL", DeviceKind.DELAY_LINE, 5.0, -0.5),
            Device("D-", DeviceKind.DETECTOR, minus[0], minus[1], beta=beta_minus, port="-"),
            Device("D+", DeviceKind.DETECTOR, plus[0], plus[1], beta=beta_plus, port="+"),
        ),
        placement=placement,
        preferred_frame_beta=preferred_frame_beta,
    )


def two_particle_setup(impact_i: Tuple[float, float] = (9.9, -1.0), impact_j: Tuple[float, float] = (10.0, 1.0),
                       beta_i: float = 0.0, beta_j: float = 0.0,
                       placement: ChoicePlacement = ChoicePlacement.AT_BEAM_SPLITTER,
                       visibility: float = 1.0, paths_indistinguishable: bool = True,
                       preferred_frame_beta: float = 0.0) -> ExperimentConfig:
    """
    Central source feeding one beam-splitter per side, two detectors each.

    Detectors sit one time unit after their beam-splitter impact and share
    its speed, so detector placement orders the sides like the splitters.
    """
    devices = [Device("S", DeviceKind.SOURCE, 0.0, 0.0)]
    for side, (t, x), beta in (("i", impact_i, beta_i), ("j", impact_j, beta_j)):
        outward = -1.0 if side == "i" else 1.0
        devices.append(Device(f"BS{side}", DeviceKind.BEAM_SPLITTER, t, x, beta=beta, side=side))
        devices.append(Device(f"D{side}+", DeviceKind.DETECTOR, t + 1.0, x + outward, beta=beta, side=side, port="+"))
        devices.append(Device(f"D{side}-", DeviceKind.DETECTOR, t + 1.0, x + 0.8 * outward, beta=beta, side=side, port="-"))
    return ExperimentConfig(
        mode=Mode.TWO_PARTICLE,
        devices=tuple(devices),
        placement=placement,
        preferred_frame_beta=preferred_frame_beta,
        visibility=visibility,
        paths_indistinguishable=paths_indistinguishable,
    )
