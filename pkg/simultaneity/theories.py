"""
Analytic prediction engines: preferred-frame QM and Multisimultaneity.

Both engines map a config plus local settings to a JointDistribution
over detector outcomes in a fixed canonical order.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

from .errors import UndefinedRegimeError
from .experiment import (
    ChoicePlacement,
    ExperimentConfig,
    Mode,
    TimingClass,
    choice_events,
    classify_timing,
    ensure_valid,
    has_two_choice_sites,
    remote_order,
)
from .kinematics import Order, boost_time

logger = logging.getLogger(__name__)

# Two-particle outcomes are (sigma_i, sigma_j); single-particle outcomes are
# (D(+) fired, D(-) fired).
Outcome = Tuple[int, int]

TWO_PARTICLE_OUTCOMES: Tuple[Outcome, ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))
SINGLE_PARTICLE_OUTCOMES: Tuple[Outcome, ...] = ((1, 0), (0, 1), (1, 1), (0, 0))

OUTCOME_CODES: Dict[Mode, Tuple[str, ...]] = {
    Mode.TWO_PARTICLE: ("++", "+-", "-+", "--"),
    Mode.SINGLE_PARTICLE: ("exclusive_plus", "exclusive_minus", "joint", "none"),
}

NORMALIZATION_TOL = 1e-12

AFTER_AFTER_NOTE = "after_after_completion"


class TheoryModel(str, Enum):
    PREFERRED_FRAME_QM = "qm"
    MULTISIMULTANEITY = "ms"


def outcomes_for(mode: Mode) -> Tuple[Outcome, ...]:
    return TWO_PARTICLE_OUTCOMES if mode is Mode.TWO_PARTICLE else SINGLE_PARTICLE_OUTCOMES


def outcome_code(mode: Mode, outcome: Outcome) -> str:
    return OUTCOME_CODES[mode][outcomes_for(mode).index(outcome)]


@dataclass(frozen=True)
class JointDistribution:
    """
    Probabilities over the canonical outcomes of one mode.

    `probabilities[k]` belongs to `outcomes_for(mode)[k]`.
    """

    mode: Mode
    probabilities: Tuple[float, ...]
    settings: Tuple[float, float]
    theory: Optional[TheoryModel] = None
    timing: Optional[TimingClass] = None
    notes: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        if len(self.probabilities) != 4:
            raise ValueError(f"expected 4 probabilities, got {len(self.probabilities)}")
        if any(p < 0 or not math.isfinite(p) for p in self.probabilities):
            raise ValueError(f"probabilities must be finite and nonnegative: {self.probabilities}")

    @property
    def outcomes(self) -> Tuple[Outcome, ...]:
        return outcomes_for(self.mode)

    @property
    def total(self) -> float:
        return math.fsum(self.probabilities)

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        return abs(self.total - 1.0) <= tol

    def probability(self, outcome: Outcome) -> float:
        return self.probabilities[self.outcomes.index(outcome)]

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(OUTCOME_CODES[self.mode], self.probabilities))

    def correlation(self) -> float:
        """E = P(++) + P(--) - P(+-) - P(-+)."""
        if self.mode is not Mode.TWO_PARTICLE:
            raise ValueError("correlation is defined for two-particle distributions only")
        pp, pm, mp, mm = self.probabilities
        return (pp + mm) - (pm + mp)

    def marginal(self, side: int, value: int = 1) -> float:
        """P(outcome[side] == value)."""
        return math.fsum(p for o, p in zip(self.outcomes, self.probabilities) if o[side] == value)

    def summary(self) -> Dict[str, float]:
        if self.mode is Mode.TWO_PARTICLE:
            return {"E": self.correlation()}
        plus, minus, joint, none = self.probabilities
        return {"joint": joint, "none": none, "exclusive": plus + minus}

    def with_metadata(self, theory: TheoryModel, timing: Optional[TimingClass],
                      notes: Tuple[str, ...] = ()) -> "JointDistribution":
        return JointDistribution(
            mode=self.mode,
            probabilities=self.probabilities,
            settings=self.settings,
            theory=theory,
            timing=timing,
            notes=tuple(self.notes) + tuple(notes),
        )


def _correlated(cfg: ExperimentConfig, alpha: float, beta_phase: float) -> Tuple[float, ...]:
    c = cfg.visibility * math.cos(alpha + beta_phase)
    same = 0.25 * (1.0 + c)
    diff = 0.25 * (1.0 - c)
    return (same, diff, diff, same)


_UNCORRELATED = (0.25, 0.25, 0.25, 0.25)


def _reflectivity(cfg: ExperimentConfig) -> float:
    return cfg.beam_splitter().reflectivity


def _exclusive(cfg: ExperimentConfig) -> Tuple[float, ...]:
    r = _reflectivity(cfg)
    return (r, 1.0 - r, 0.0, 0.0)


def _independent(cfg: ExperimentConfig) -> Tuple[float, ...]:
    # Each detector fires on its own with its quantum weight.
    r = _reflectivity(cfg)
    return (r * r, (1.0 - r) * (1.0 - r), r * (1.0 - r), (1.0 - r) * r)


def qm_collapse_order(cfg: ExperimentConfig) -> Optional[str]:
    """
    Id of the choice device that acts first in the preferred frame.

    None for single choice-site setups or preferred-frame simultaneity.
    """
    if not has_two_choice_sites(cfg):
        return None
    first, second = choice_events(cfg)
    t_first = boost_time(first.event, cfg.preferred_frame)
    t_second = boost_time(second.event, cfg.preferred_frame)
    if t_first == t_second:
        return None
    return first.device_id if t_first < t_second else second.device_id


def qm_predict(cfg: ExperimentConfig, alpha: float, beta_phase: float) -> JointDistribution:
    """
    Preferred-frame Quantum Mechanics.

    Probabilities ignore every device speed and the preferred frame itself.

    Args:
        cfg: Valid setup
        alpha: Phase setting on side i
        beta_phase: Phase setting on side j

    Returns:
        Distribution stamped with theory=qm
    """
    ensure_valid(cfg)
    if cfg.mode is Mode.TWO_PARTICLE:
        probabilities = _correlated(cfg, alpha, beta_phase)
    else:
        probabilities = _exclusive(cfg)
    return JointDistribution(
        mode=cfg.mode,
        probabilities=probabilities,
        settings=(alpha, beta_phase),
        theory=TheoryModel.PREFERRED_FRAME_QM,
    )


def ms_predict(cfg: ExperimentConfig, alpha: float, beta_phase: float,
               timing: Optional[TimingClass]) -> JointDistribution:
    """
    Multisimultaneity.

    A choice takes account of the remote side only when, in its own
    device frame, the remote choice already happened (and, with two
    particles, the path pairs are indistinguishable).

    Args:
        cfg: Valid setup
        alpha: Phase setting on side i
        beta_phase: Phase setting on side j
        timing: Result of classify_timing; ignored for single-particle
            setups choosing at the beam-splitter

    Raises:
        UndefinedRegimeError: Boundary timing
    """
    ensure_valid(cfg)
    notes: Tuple[str, ...] = ()

    if cfg.mode is Mode.SINGLE_PARTICLE and cfg.placement is ChoicePlacement.AT_BEAM_SPLITTER:
        logger.warning("Single choice site: Multisimultaneity reduces to QM")
        probabilities = _exclusive(cfg)
        timing = None
    else:
        if timing is None:
            raise ValueError("ms_predict needs a timing class for setups with two choice sites")
        if timing is TimingClass.BOUNDARY:
            raise UndefinedRegimeError(
                "undefined regime: choice events are simultaneous in a device frame"
            )
        if timing is TimingClass.AFTER_AFTER:
            notes += (AFTER_AFTER_NOTE,)

        if cfg.mode is Mode.TWO_PARTICLE:
            if not cfg.paths_indistinguishable or timing is TimingClass.BEFORE_BEFORE:
                probabilities = _UNCORRELATED
            else:
                probabilities = _correlated(cfg, alpha, beta_phase)
        elif timing is TimingClass.BEFORE_BEFORE:
            probabilities = _independent(cfg)
        else:
            # The frame-later detector takes the complement of the first.
            first, second = choice_events(cfg)
            leader = first if remote_order(first, second) is Order.AFTER else second
            notes += (f"leader={leader.device_id}",)
            probabilities = _exclusive(cfg)

    return JointDistribution(
        mode=cfg.mode,
        probabilities=probabilities,
        settings=(alpha, beta_phase),
        theory=TheoryModel.MULTISIMULTANEITY,
        timing=timing,
        notes=notes,
    )


def predict(model: TheoryModel, cfg: ExperimentConfig, alpha: float,
            beta_phase: float) -> JointDistribution:
    """
    Route to the engine of `model` and stamp timing metadata.

    Raises:
        ConfigValidationError: Invalid config
        UndefinedRegimeError: Multisimultaneity at Boundary timing
    """
    ensure_valid(cfg)
    timing = classify_timing(cfg) if has_two_choice_sites(cfg) else None

    if model is TheoryModel.PREFERRED_FRAME_QM:
        leader = qm_collapse_order(cfg)
        notes = (f"preferred_frame_leader={leader}",) if leader else ()
        return qm_predict(cfg, alpha, beta_phase).with_metadata(model, timing, notes)

    return ms_predict(cfg, alpha, beta_phase, timing)
