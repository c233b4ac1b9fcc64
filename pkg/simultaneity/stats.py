"""
Estimators over trial records.

Correlators, CHSH, no-signaling marginal tests and single-particle
coincidence rates, each with binomial standard errors. The exact_*
variants evaluate the same estimators on analytic distributions.
"""

import logging
import math
from collections import Counter, OrderedDict
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import StatsError
from .experiment import Mode
from .theories import (
    SINGLE_PARTICLE_OUTCOMES,
    TWO_PARTICLE_OUTCOMES,
    JointDistribution,
)

logger = logging.getLogger(__name__)

DEFAULT_K = 4.0

DEFAULT_CHSH_SETTINGS = (0.0, math.pi / 2, -math.pi / 4, math.pi / 4)

LOCAL_BOUND = 2.0

Settings = Tuple[float, float]


@dataclass(frozen=True)
class Correlator:
    """E estimate for one settings pair; counts ordered (++, +-, -+, --)."""

    settings: Settings
    E: float
    stderr: float
    counts: Optional[Tuple[int, int, int, int]]

    @property
    def n(self) -> int:
        return sum(self.counts) if self.counts else 0


@dataclass(frozen=True)
class ChshResult:
    S: float
    stderr: float
    correlators: Tuple[Correlator, Correlator, Correlator, Correlator]
    violates_local_bound: bool
    k: float = DEFAULT_K


@dataclass(frozen=True)
class SideSignaling:
    side: str
    max_delta: float
    delta: float
    threshold: float
    local_setting: Optional[float]
    remote_settings: Optional[Tuple[float, float]]

    @property
    def signaling(self) -> bool:
        return self.delta > self.threshold


@dataclass(frozen=True)
class SignalingReport:
    sides: Tuple[SideSignaling, SideSignaling]
    k: float

    @property
    def verdict(self) -> str:
        if any(s.signaling for s in self.sides):
            return "signaling detected"
        return "consistent with no-signaling"


@dataclass(frozen=True)
class SingleParticleReport:
    joint: float
    none: float
    exclusive: float
    joint_stderr: float
    none_stderr: float
    exclusive_stderr: float
    n: int


def _binomial_stderr(p: float, n: int) -> float:
    if n <= 0:
        return 0.0
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def _records(records: Iterable) -> list:
    records = list(records)
    if not records:
        raise StatsError("no records given")
    return records


def group_by_setting(records: Iterable) -> "OrderedDict[Settings, list]":
    """Records grouped by settings pair, in order of first appearance."""
    groups: "OrderedDict[Settings, list]" = OrderedDict()
    for record in records:
        groups.setdefault(tuple(record.settings), []).append(record)
    return groups


def _check_two_particle(records: Sequence) -> None:
    allowed = set(TWO_PARTICLE_OUTCOMES)
    if any(r.outcome not in allowed for r in records):
        raise StatsError("expected two-particle records with outcomes in {+1, -1}^2")


def correlator(records: Iterable) -> Correlator:
    """
    Correlator estimate for records sharing one settings pair.

    E = (N++ + N-- - N+- - N-+)/N with stderr sqrt((1 - E^2)/N).

    Raises:
        StatsError: Empty input, mixed settings or single-particle records
    """
    records = _records(records)
    settings = {tuple(r.settings) for r in records}
    if len(settings) != 1:
        raise StatsError(f"records mix {len(settings)} settings pairs")
    _check_two_particle(records)

    tally = Counter(r.outcome for r in records)
    counts = tuple(tally.get(o, 0) for o in TWO_PARTICLE_OUTCOMES)
    n = len(records)
    pp, pm, mp, mm = counts
    e = ((pp + mm) - (pm + mp)) / n
    return Correlator(
        settings=settings.pop(),
        E=e,
        stderr=math.sqrt(max(1.0 - e * e, 0.0) / n),
        counts=counts,
    )


def exact_correlator(dist: JointDistribution) -> Correlator:
    """Correlator of an analytic distribution (no sampling, zero stderr)."""
    return Correlator(settings=tuple(dist.settings), E=dist.correlation(), stderr=0.0, counts=None)


def chsh_from_correlators(correlators: Sequence[Correlator], k: float = DEFAULT_K) -> ChshResult:
    """
    S = E(a,b) + E(a,b') + E(a',b) - E(a',b').

    Args:
        correlators: In the order (a,b), (a,b'), (a',b), (a',b')
        k: Significance multiplier for the local-bound verdict
    """
    if len(correlators) != 4:
        raise StatsError(f"CHSH needs 4 correlators, got {len(correlators)}")
    ab, abp, apb, apbp = correlators
    s = ab.E + abp.E + apb.E - apbp.E
    stderr = math.sqrt(sum(c.stderr ** 2 for c in correlators))
    return ChshResult(
        S=s,
        stderr=stderr,
        correlators=tuple(correlators),
        violates_local_bound=s > LOCAL_BOUND + k * stderr,
        k=k,
    )


def chsh_pairs(chsh_settings: Tuple[float, float, float, float]) -> List[Settings]:
    a, a_prime, b, b_prime = chsh_settings
    return [(a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime)]


def chsh(records: Iterable, chsh_settings: Tuple[float, float, float, float] = DEFAULT_CHSH_SETTINGS,
         k: float = DEFAULT_K) -> ChshResult:
    """
    CHSH statistic from sampled records.

    Args:
        records: Two-particle records covering the four pairs
        chsh_settings: (a, a', b, b')
        k: Significance multiplier

    Raises:
        StatsError: A required settings pair has no records
    """
    groups = group_by_setting(_records(records))
    correlators = []
    for pair in chsh_pairs(chsh_settings):
        if pair not in groups:
            raise StatsError(f"missing records for settings pair {pair}")
        correlators.append(correlator(groups[pair]))
    return chsh_from_correlators(correlators, k)


def exact_chsh(dists: Sequence[JointDistribution], k: float = DEFAULT_K) -> ChshResult:
    """CHSH of four analytic distributions ordered (a,b), (a,b'), (a',b), (a',b')."""
    return chsh_from_correlators([exact_correlator(d) for d in dists], k)


def infer_chsh_settings(settings: Iterable[Settings]) -> Optional[Tuple[float, float, float, float]]:
    """
    Read (a, a', b, b') off a settings list.

    a, a' are the first two distinct alphas and b, b' the first two
    distinct betas in order of appearance. Returns None unless exactly
    two of each occur and all four combinations are present.
    """
    settings = [tuple(s) for s in settings]
    alphas = list(OrderedDict.fromkeys(s[0] for s in settings))
    betas = list(OrderedDict.fromkeys(s[1] for s in settings))
    if len(alphas) != 2 or len(betas) != 2:
        return None
    candidate = (alphas[0], alphas[1], betas[0], betas[1])
    if not set(chsh_pairs(candidate)) <= set(settings):
        return None
    return candidate


def _side_signaling(records: Sequence, side: int, k: float) -> SideSignaling:
    remote = 1 - side
    name = "i" if side == 0 else "j"
    # local setting -> remote setting -> [plus count, total]
    table: Dict[float, Dict[float, List[int]]] = {}
    for r in records:
        cell = table.setdefault(r.settings[side], {}).setdefault(r.settings[remote], [0, 0])
        cell[0] += r.outcome[side] == 1
        cell[1] += 1

    covered = {local: cells for local, cells in table.items() if len(cells) >= 2}
    if not covered:
        raise StatsError(f"side {name} needs at least two remote settings for one local setting")

    worst = SideSignaling(side=name, max_delta=0.0, delta=0.0, threshold=0.0, local_setting=None,
                          remote_settings=None)
    worst_score = -math.inf
    max_delta = 0.0
    for local, cells in covered.items():
        for (b1, (plus1, n1)), (b2, (plus2, n2)) in combinations(cells.items(), 2):
            p1, p2 = plus1 / n1, plus2 / n2
            delta = abs(p1 - p2)
            stderr = math.sqrt(_binomial_stderr(p1, n1) ** 2 + _binomial_stderr(p2, n2) ** 2)
            threshold = max(k * stderr, 1e-12)
            max_delta = max(max_delta, delta)
            score = delta - threshold
            if score > worst_score:
                worst_score = score
                worst = SideSignaling(side=name, max_delta=0.0, delta=delta, threshold=threshold,
                                      local_setting=local, remote_settings=(b1, b2))
    return replace(worst, max_delta=max_delta)


def no_signaling_test(records: Iterable, k: float = DEFAULT_K) -> SignalingReport:
    """
    Compare each side's marginal P(sigma = +1) across remote settings.

    For every local setting with two or more remote settings, the largest
    marginal discrepancy is tested against k times its binomial stderr.
    The reported pair per side is the one closest to (or furthest past)
    its threshold; max_delta is the largest discrepancy over all pairs,
    whatever their sample sizes.

    Raises:
        StatsError: A side never sees two remote settings under one local one
    """
    records = _records(records)
    _check_two_particle(records)
    report = SignalingReport(
        sides=(_side_signaling(records, 0, k), _side_signaling(records, 1, k)),
        k=k,
    )
    logger.debug(f"No-signaling verdict: {report.verdict}")
    return report


def exact_marginals(dists: Iterable[JointDistribution]) -> Dict[Settings, Tuple[float, float]]:
    """P(sigma_i = +1), P(sigma_j = +1) per settings pair of analytic distributions."""
    return {tuple(d.settings): (d.marginal(0), d.marginal(1)) for d in dists}


def single_particle_rates(records: Iterable) -> SingleParticleReport:
    """
    Joint-fire, no-fire and exclusive-fire rates with binomial stderrs.

    Raises:
        StatsError: Empty input or two-particle records
    """
    records = _records(records)
    allowed = set(SINGLE_PARTICLE_OUTCOMES)
    if any(r.outcome not in allowed for r in records):
        raise StatsError("expected single-particle records with fire flags in {0, 1}^2")

    tally = Counter(r.outcome for r in records)
    n = len(records)
    joint_count = tally.get((1, 1), 0)
    none_count = tally.get((0, 0), 0)
    exclusive_count = n - joint_count - none_count
    joint, none, exclusive = joint_count / n, none_count / n, exclusive_count / n
    return SingleParticleReport(
        joint=joint,
        none=none,
        exclusive=exclusive,
        joint_stderr=_binomial_stderr(joint, n),
        none_stderr=_binomial_stderr(none, n),
        exclusive_stderr=_binomial_stderr(exclusive, n),
        n=n,
    )


def exact_single_particle_rates(dist: JointDistribution) -> SingleParticleReport:
    if dist.mode is not Mode.SINGLE_PARTICLE:
        raise StatsError("expected a single-particle distribution")
    summary = dist.summary()
    return SingleParticleReport(
        joint=summary["joint"],
        none=summary["none"],
        exclusive=summary["exclusive"],
        joint_stderr=0.0,
        none_stderr=0.0,
        exclusive_stderr=0.0,
        n=0,
    )
