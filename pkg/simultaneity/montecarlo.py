"""
Seed-deterministic trial sampler.

Every settings pair gets its own Philox stream keyed by
sub_seed(master_seed, setting_index), so the records do not depend on
how many worker threads draw them.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .errors import ConfigValidationError, SamplingError, Violation
from .experiment import ExperimentConfig, TimingClass, validate
from .theories import JointDistribution, Outcome, TheoryModel, predict

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

Predictor = Callable[[TheoryModel, ExperimentConfig, float, float], JointDistribution]


@dataclass(frozen=True, slots=True)
class TrialRecord:
    """One sampled trial."""

    trial: int
    settings: Tuple[float, float]
    outcome: Outcome
    theory: Optional[TheoryModel]
    timing: Optional[TimingClass]
    setting_index: int = 0


@dataclass(frozen=True)
class RunPlan:
    """Everything needed to reproduce a sampled run."""

    config: ExperimentConfig
    model: TheoryModel
    settings: Tuple[Tuple[float, float], ...]
    trials: int
    seed: int

    def validate(self) -> List[Violation]:
        violations = list(validate(self.config))
        if not self.settings:
            violations.append(Violation("settings", "empty settings", "at least one (alpha, beta) pair is required"))
        for idx, (alpha, beta) in enumerate(self.settings):
            if not (math.isfinite(alpha) and math.isfinite(beta)):
                violations.append(Violation(f"settings[{idx}]", "non-finite setting",
                                            f"alpha and beta must be finite, got ({alpha}, {beta})"))
        if not isinstance(self.trials, int) or self.trials < 1:
            violations.append(Violation("trials", "trial count", f"must be an integer >= 1, got {self.trials}"))
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MASK64:
            violations.append(Violation("seed", "seed range", f"must be an integer in [0, 2^64), got {self.seed}"))
        return violations


def mix64(value: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    z = value & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def sub_seed(master_seed: int, setting_index: int) -> int:
    """
    Seed for one settings pair.

    sub_seed = mix64(master_seed + (setting_index + 1) * 0x9E3779B97F4A7C15 mod 2^64).
    This rule is part of the output format; changing it changes every
    recorded run.
    """
    return mix64((master_seed + (setting_index + 1) * GOLDEN_GAMMA) & MASK64)


def make_generator(seed: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by seed."""
    return np.random.Generator(np.random.Philox(key=seed & MASK64))


def _cumulative(dist: JointDistribution) -> np.ndarray:
    probabilities = np.asarray(dist.probabilities, dtype=float)
    cdf = np.cumsum(probabilities)
    # close the last interval on the last outcome that can occur
    last = int(np.flatnonzero(probabilities > 0.0)[-1])
    cdf[last:] = 1.0
    return cdf


def sample(dist: JointDistribution, n: int, seed: int, setting_index: int = 0) -> List[TrialRecord]:
    """
    Draw n trials from dist by inverse CDF over its canonical outcomes.

    Outcome k is drawn when cdf[k-1] <= u < cdf[k], so outcomes of zero
    probability own an empty interval and never appear.

    Args:
        dist: Normalized distribution
        n: Number of trials
        seed: Philox key
        setting_index: Stamped into each record

    Returns:
        n records with trial indices 0..n-1
    """
    if not dist.is_normalized():
        raise SamplingError(f"distribution sums to {dist.total!r}, not 1")
    if n < 1:
        raise SamplingError(f"n must be >= 1, got {n}")

    uniforms = make_generator(seed).random(n)
    indices = np.searchsorted(_cumulative(dist), uniforms, side="right")
    outcomes = dist.outcomes
    return [
        TrialRecord(
            trial=trial,
            settings=dist.settings,
            outcome=outcomes[k],
            theory=dist.theory,
            timing=dist.timing,
            setting_index=setting_index,
        )
        for trial, k in enumerate(indices.tolist())
    ]


def run(plan: RunPlan, workers: int = 1, progress: bool = False,
        predictor: Predictor = predict) -> List[TrialRecord]:
    """
    Sample every settings pair of a plan.

    Args:
        plan: Run to execute
        workers: Threads drawing settings pairs concurrently
        progress: Show a tqdm bar over settings pairs
        predictor: Engine dispatcher, replaceable for negative controls

    Returns:
        Records ordered by (setting index, trial index)

    Raises:
        ConfigValidationError: Invalid plan
        UndefinedRegimeError: Multisimultaneity at Boundary timing
    """
    violations = plan.validate()
    if violations:
        raise ConfigValidationError(violations)

    # Predict up front so regime errors surface before any sampling.
    dists = [predictor(plan.model, plan.config, alpha, beta) for alpha, beta in plan.settings]
    logger.info(f"Sampling {plan.trials} trials x {len(dists)} settings with {plan.model.value}, seed {plan.seed}")

    def draw(index: int) -> List[TrialRecord]:
        logger.debug(f"Setting {index}: {dists[index].settings}")
        return sample(dists[index], plan.trials, sub_seed(plan.seed, index), setting_index=index)

    indices: Sequence[int] = range(len(dists))
    with tqdm(total=len(dists), desc="Sampling", unit="setting", disable=not progress) as pbar:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                chunks = []
                for chunk in pool.map(draw, indices):
                    chunks.append(chunk)
                    pbar.update(1)
        else:
            chunks = []
            for index in indices:
                chunks.append(draw(index))
                pbar.update(1)

    records = [record for chunk in chunks for record in chunk]
    logger.info(f"Sampled {len(records)} records")
    return records
