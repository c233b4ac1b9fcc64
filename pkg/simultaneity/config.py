"""
Config documents: YAML files describing a setup plus its run plan.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from .errors import ConfigValidationError, Violation
from .experiment import (
    ChoicePlacement,
    Device,
    DeviceKind,
    ExperimentConfig,
    Mode,
)
from .montecarlo import RunPlan
from .theories import TheoryModel

logger = logging.getLogger(__name__)

SCENARIO_DIR = Path(__file__).parent / "scenarios"
# alternate names accepted wherever a bundled scenario is named
SCENARIO_ALIASES = {"fig1_rest": "photon_rest", "fig1_moving": "photon_moving"}

TOP_LEVEL_KEYS = (
    "mode", "placement", "paths_indistinguishable", "visibility",
    "preferred_frame_beta", "model", "settings", "trials", "seed", "devices",
)
DEVICE_KEYS = ("id", "kind", "t", "x", "beta", "phase", "reflectivity", "side", "port")

DEFAULT_TRIALS = 1000
DEFAULT_SEED = 0


@dataclass(frozen=True)
class ConfigDocument:
    """A parsed document: the setup, its run parameters and source lines."""

    config: ExperimentConfig
    model: TheoryModel
    settings: Tuple[Tuple[float, float], ...]
    trials: int
    seed: int
    source: Optional[Path] = field(default=None, compare=False)
    lines: Optional[Dict[str, int]] = field(default=None, compare=False, repr=False)

    def plan(self, model: Optional[TheoryModel] = None, trials: Optional[int] = None,
             seed: Optional[int] = None) -> RunPlan:
        """Run plan of this document, with optional overrides."""
        return RunPlan(
            config=self.config,
            model=model or self.model,
            settings=self.settings,
            trials=self.trials if trials is None else trials,
            seed=self.seed if seed is None else seed,
        )

    def locate(self, violations: List[Violation]) -> List[Violation]:
        """Attach source line numbers to violations by field path."""
        if not self.lines:
            return violations
        return [
            Violation(v.field, v.rule, v.message, v.line or _line_for(self.lines, v.field))
            for v in violations
        ]


def _line_for(lines: Dict[str, int], field_path: str) -> Optional[int]:
    path = field_path
    while path:
        if path in lines:
            return lines[path]
        if "." in path:
            path = path.rsplit(".", 1)[0]
        elif "[" in path:
            path = path.rsplit("[", 1)[0]
        else:
            break
    return None


def _line_index(text: str) -> Dict[str, int]:
    """Map field paths such as devices[2].beta to 1-based source lines."""
    lines: Dict[str, int] = {}
    root = yaml.compose(text, Loader=yaml.SafeLoader)
    if not isinstance(root, yaml.MappingNode):
        return lines
    for key_node, value_node in root.value:
        key = str(key_node.value)
        lines[key] = key_node.start_mark.line + 1
        if key == "devices" and isinstance(value_node, yaml.SequenceNode):
            for idx, item in enumerate(value_node.value):
                lines[f"devices[{idx}]"] = item.start_mark.line + 1
                if isinstance(item, yaml.MappingNode):
                    for dkey, _ in item.value:
                        lines[f"devices[{idx}].{dkey.value}"] = dkey.start_mark.line + 1
        if key == "settings" and isinstance(value_node, yaml.SequenceNode):
            for idx, item in enumerate(value_node.value):
                lines[f"settings[{idx}]"] = item.start_mark.line + 1
    return lines


class _Reader:
    """Collects violations while coercing raw YAML values."""

    def __init__(self, lines: Dict[str, int]):
        self.lines = lines
        self.violations: List[Violation] = []

    def fail(self, field_path: str, rule: str, message: str):
        self.violations.append(Violation(field_path, rule, message, _line_for(self.lines, field_path)))

    def number(self, raw: Dict, key: str, path: str, default: Any = None) -> float:
        value = raw.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, "not a number", f"expected a number, got {value!r}")
            return math.nan
        return float(value)

    def choice(self, raw: Dict, key: str, path: str, enum, default: Any = None):
        value = raw.get(key, default)
        try:
            return enum(value)
        except ValueError:
            allowed = ", ".join(e.value for e in enum)
            self.fail(path, "unknown value", f"expected one of {allowed}, got {value!r}")
            return None

    def unknown_keys(self, raw: Dict, allowed: Tuple[str, ...], prefix: str):
        for key in raw:
            if key not in allowed:
                path = f"{prefix}.{key}" if prefix else str(key)
                self.fail(path, "unknown key", f"'{key}' is not a recognised key")


def _read_device(reader: _Reader, raw: Any, idx: int) -> Optional[Device]:
    prefix = f"devices[{idx}]"
    if not isinstance(raw, dict):
        reader.fail(prefix, "malformed device", "each device must be a mapping")
        return None
    reader.unknown_keys(raw, DEVICE_KEYS, prefix)
    if "id" not in raw:
        reader.fail(f"{prefix}.id", "missing key", "device id is required")
    for key in ("kind", "t", "x"):
        if key not in raw:
            reader.fail(f"{prefix}.{key}", "missing key", f"'{key}' is required")
    kind = reader.choice(raw, "kind", f"{prefix}.kind", DeviceKind)
    side = raw.get("side")
    port = raw.get("port")
    return Device(
        id=str(raw.get("id", f"device{idx}")),
        kind=kind or DeviceKind.SOURCE,
        t=reader.number(raw, "t", f"{prefix}.t"),
        x=reader.number(raw, "x", f"{prefix}.x"),
        beta=reader.number(raw, "beta", f"{prefix}.beta", 0.0),
        phase=reader.number(raw, "phase", f"{prefix}.phase", 0.0),
        reflectivity=reader.number(raw, "reflectivity", f"{prefix}.reflectivity", 0.5),
        side=None if side is None else str(side),
        port=None if port is None else str(port),
    )


def _default_settings(config: ExperimentConfig) -> Tuple[Tuple[float, float], ...]:
    """Settings taken from beam-splitter phases when a document lists none."""
    if config.mode is Mode.TWO_PARTICLE:
        try:
            return ((config.beam_splitter("i").phase, config.beam_splitter("j").phase),)
        except KeyError:
            return ((0.0, 0.0),)
    try:
        return ((config.beam_splitter().phase, 0.0),)
    except KeyError:
        return ((0.0, 0.0),)


def parse_document(text: str, source: Optional[Path] = None) -> ConfigDocument:
    """
    Parse and validate a YAML config document.

    Args:
        text: Document contents
        source: Where the text came from, for messages

    Returns:
        ConfigDocument whose config passes validate()

    Raises:
        ConfigValidationError: Syntax errors, unknown keys, bad values or
            broken config rules, each with its source line when known
    """
    try:
        raw = yaml.safe_load(text)
        lines = _line_index(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigValidationError([Violation("document", "syntax error", str(e).splitlines()[0], line)])

    if not isinstance(raw, dict):
        raise ConfigValidationError([Violation("document", "malformed document", "top level must be a mapping", 1)])

    reader = _Reader(lines)
    reader.unknown_keys(raw, TOP_LEVEL_KEYS, "")
    mode = reader.choice(raw, "mode", "mode", Mode)
    placement = reader.choice(raw, "placement", "placement", ChoicePlacement, ChoicePlacement.AT_DETECTOR.value)
    model = reader.choice(raw, "model", "model", TheoryModel, TheoryModel.PREFERRED_FRAME_QM.value)

    paths = raw.get("paths_indistinguishable", True)
    if not isinstance(paths, bool):
        reader.fail("paths_indistinguishable", "not a boolean", f"expected true or false, got {paths!r}")
        paths = True

    raw_devices = raw.get("devices")
    if not isinstance(raw_devices, list):
        reader.fail("devices", "malformed devices", "devices must be a list")
        raw_devices = []
    devices = tuple(d for d in (_read_device(reader, item, idx) for idx, item in enumerate(raw_devices)) if d)

    trials = raw.get("trials", DEFAULT_TRIALS)
    if isinstance(trials, bool) or not isinstance(trials, int):
        reader.fail("trials", "trial count", f"expected an integer, got {trials!r}")
        trials = DEFAULT_TRIALS
    seed = raw.get("seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int):
        reader.fail("seed", "seed range", f"expected an integer, got {seed!r}")
        seed = DEFAULT_SEED

    config = ExperimentConfig(
        mode=mode or Mode.SINGLE_PARTICLE,
        devices=devices,
        placement=placement or ChoicePlacement.AT_DETECTOR,
        preferred_frame_beta=reader.number(raw, "preferred_frame_beta", "preferred_frame_beta", 0.0),
        visibility=reader.number(raw, "visibility", "visibility", 1.0),
        paths_indistinguishable=paths,
    )

    raw_settings = raw.get("settings")
    if raw_settings is None:
        settings = _default_settings(config)
    else:
        parsed = []
        if not isinstance(raw_settings, list):
            reader.fail("settings", "malformed settings", "settings must be a list of [alpha, beta] pairs")
            raw_settings = []
        for idx, pair in enumerate(raw_settings):
            if (not isinstance(pair, (list, tuple)) or len(pair) != 2
                    or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in pair)):
                reader.fail(f"settings[{idx}]", "malformed setting", f"expected [alpha, beta], got {pair!r}")
                continue
            parsed.append((float(pair[0]), float(pair[1])))
        settings = tuple(parsed)

    document = ConfigDocument(
        config=config,
        model=model or TheoryModel.PREFERRED_FRAME_QM,
        settings=settings,
        trials=trials,
        seed=seed,
        source=source,
        lines=lines,
    )

    if reader.violations:
        raise ConfigValidationError(reader.violations)
    violations = document.locate(document.plan().validate())
    if violations:
        raise ConfigValidationError(violations)
    return document


def resolve_config_path(name: Union[str, Path]) -> Path:
    """A filesystem path, or the stem of a bundled scenario."""
    path = Path(name)
    if path.exists():
        return path
    stem = SCENARIO_ALIASES.get(path.stem, path.stem)
    bundled = SCENARIO_DIR / f"{stem}.yaml"
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"No config file or bundled scenario named '{name}'")


def load_document(name: Union[str, Path]) -> ConfigDocument:
    """
    Read and parse a config document.

    Raises:
        OSError: The file cannot be read
        ConfigValidationError: The document is invalid
    """
    path = resolve_config_path(name)
    logger.info(f"Loading config {path}")
    return parse_document(path.read_text(encoding="utf-8"), source=path)


def bundled_scenarios() -> List[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.yaml"))


def document_to_dict(document: ConfigDocument) -> Dict[str, Any]:
    """Plain mapping that parse_document turns back into an equal document."""
    cfg = document.config
    devices = []
    for d in cfg.devices:
        entry: Dict[str, Any] = {"id": d.id, "kind": d.kind.value, "t": d.t, "x": d.x, "beta": d.beta}
        if d.kind is DeviceKind.BEAM_SPLITTER:
            entry["phase"] = d.phase
            entry["reflectivity"] = d.reflectivity
        elif d.phase != 0.0 or d.reflectivity != 0.5:
            entry["phase"] = d.phase
            entry["reflectivity"] = d.reflectivity
        if d.side is not None:
            entry["side"] = d.side
        if d.port is not None:
            entry["port"] = d.port
        devices.append(entry)
    return {
        "mode": cfg.mode.value,
        "placement": cfg.placement.value,
        "paths_indistinguishable": cfg.paths_indistinguishable,
        "visibility": cfg.visibility,
        "preferred_frame_beta": cfg.preferred_frame_beta,
        "model": document.model.value,
        "settings": [list(s) for s in document.settings],
        "trials": document.trials,
        "seed": document.seed,
        "devices": devices,
    }


def serialize_document(document: ConfigDocument) -> str:
    return yaml.safe_dump(document_to_dict(document), sort_keys=False, default_flow_style=None)

