import math

import pytest
from hypothesis import given, strategies as st

from simultaneity.errors import StatsError
from simultaneity.experiment import Mode, two_particle_setup
from simultaneity.montecarlo import RunPlan, TrialRecord, run, sample
from simultaneity.stats import (
    DEFAULT_CHSH_SETTINGS,
    chsh,
    chsh_pairs,
    correlator,
    exact_chsh,
    exact_marginals,
    exact_single_particle_rates,
    group_by_setting,
    infer_chsh_settings,
    no_signaling_test,
    single_particle_rates,
)
from simultaneity.theories import JointDistribution, TheoryModel, predict
from tests.conftest import CHSH_GRID


def records_with(outcomes, settings=(0.0, 0.0)):
    return [TrialRecord(trial=i, settings=settings, outcome=o, theory=None, timing=None)
            for i, o in enumerate(outcomes)]


class TestCorrelator:
    def test_counts_and_value(self):
        records = records_with([(1, 1)] * 6 + [(1, -1)] * 2 + [(-1, -1)] * 2)
        c = correlator(records)
        assert c.counts == (6, 2, 0, 2)
        assert c.E == pytest.approx(0.6)
        assert c.stderr == pytest.approx(math.sqrt((1 - 0.36) / 10))
        assert c.n == 10

    def test_perfect_correlation_has_zero_stderr(self):
        c = correlator(records_with([(1, 1), (-1, -1)] * 5))
        assert c.E == 1.0
        assert c.stderr == 0.0

    def test_rejects_empty_mixed_and_single_particle(self):
        with pytest.raises(StatsError):
            correlator([])
        with pytest.raises(StatsError):
            correlator(records_with([(1, 1)]) + records_with([(1, 1)], settings=(1.0, 0.0)))
        with pytest.raises(StatsError):
            correlator(records_with([(1, 0)]))

    @given(st.lists(st.sampled_from([(1, 1), (1, -1), (-1, 1), (-1, -1)]), min_size=1, max_size=200))
    def test_flipping_both_signs_keeps_the_value(self, outcomes):
        c = correlator(records_with(outcomes))
        flipped = correlator(records_with([(-i, -j) for i, j in outcomes]))
        assert flipped.E == c.E
        assert flipped.stderr == c.stderr

    def test_three_sigma_coverage_over_replications(self):
        n = 1000
        exact = {tuple(d.settings): d.correlation()
                 for d in (predict(TheoryModel.PREFERRED_FRAME_QM, two_particle_setup(), a, b) for a, b in CHSH_GRID)}
        checks = misses = 0
        for seed in range(100):
            plan = RunPlan(config=two_particle_setup(), model=TheoryModel.PREFERRED_FRAME_QM,
                           settings=CHSH_GRID, trials=n, seed=seed)
            for settings, records in group_by_setting(run(plan)).items():
                e = exact[tuple(settings)]
                checks += 1
                misses += abs(correlator(records).E - e) > 3 * math.sqrt((1 - e * e) / n)
        assert (checks - misses) / checks >= 0.99


class TestChsh:
    def test_default_settings_order(self):
        assert chsh_pairs(DEFAULT_CHSH_SETTINGS) == list(CHSH_GRID)

    def test_sampled_qm_reaches_tsirelson(self):
        plan = RunPlan(config=two_particle_setup(), model=TheoryModel.PREFERRED_FRAME_QM,
                       settings=CHSH_GRID, trials=20000, seed=2024)
        result = chsh(run(plan))
        assert abs(result.S - 2 * math.sqrt(2)) <= result.k * result.stderr
        assert result.violates_local_bound

    def test_exact(self):
        dists = [predict(TheoryModel.PREFERRED_FRAME_QM, two_particle_setup(), a, b) for a, b in CHSH_GRID]
        result = exact_chsh(dists)
        assert result.S == pytest.approx(2 * math.sqrt(2), abs=1e-12)
        assert result.stderr == 0.0

    def test_missing_pair(self):
        with pytest.raises(StatsError):
            chsh(records_with([(1, 1)] * 4, settings=CHSH_GRID[0]))

    def test_infer_settings(self):
        assert infer_chsh_settings(CHSH_GRID) == DEFAULT_CHSH_SETTINGS
        assert infer_chsh_settings(CHSH_GRID[:3]) is None
        assert infer_chsh_settings([(0.0, 0.0)]) is None


def planted(n, shift):
    """2x2 settings grid; side i's P(+) moves by 2*shift with the remote setting."""
    records = []
    grid = [(a, b) for a in (0.0, 1.0) for b in (0.0, 1.0)]
    for index, settings in enumerate(grid):
        p_plus = 0.5 + shift if settings[1] == 0.0 else 0.5 - shift
        half = p_plus / 2
        rest = (1 - p_plus) / 2
        dist = JointDistribution(mode=Mode.TWO_PARTICLE, probabilities=(half, half, rest, rest), settings=settings)
        records.extend(sample(dist, n, seed=100 + index, setting_index=index))
    return records


class TestNoSignaling:
    def test_planted_violation_is_detected(self):
        report = no_signaling_test(planted(20000, 0.1))
        assert report.verdict == "signaling detected"
        side_i = report.sides[0]
        assert side_i.signaling
        assert side_i.local_setting in (0.0, 1.0)
        assert side_i.remote_settings == (0.0, 1.0)
        assert not report.sides[1].signaling
        assert side_i.max_delta == pytest.approx(0.2, abs=0.03)

    def test_max_delta_spans_every_pair(self):
        def cell(settings, plus, n):
            return records_with([(1, 1)] * plus + [(-1, -1)] * (n - plus), settings=settings)

        records = (cell((0.0, 0.0), 3, 4) + cell((0.0, 1.0), 1, 4)
                   + cell((1.0, 0.0), 5500, 10000) + cell((1.0, 1.0), 4500, 10000))
        side_i = no_signaling_test(records).sides[0]
        assert side_i.max_delta == pytest.approx(0.5)
        assert side_i.delta == pytest.approx(0.1)
        assert side_i.local_setting == 1.0
        assert side_i.signaling

    def test_qm_is_consistent(self):
        plan = RunPlan(config=two_particle_setup(), model=TheoryModel.PREFERRED_FRAME_QM,
                       settings=CHSH_GRID, trials=20000, seed=99)
        report = no_signaling_test(run(plan))
        assert report.verdict == "consistent with no-signaling"

    def test_needs_two_remote_settings(self):
        with pytest.raises(StatsError):
            no_signaling_test(records_with([(1, 1), (-1, -1)]))

    def test_exact_marginals_flat(self):
        dists = [predict(TheoryModel.MULTISIMULTANEITY, two_particle_setup(), a, b) for a, b in CHSH_GRID]
        for p_i, p_j in exact_marginals(dists).values():
            assert p_i == pytest.approx(0.5)
            assert p_j == pytest.approx(0.5)


class TestSingleParticleRates:
    def test_rates(self):
        records = records_with([(1, 0)] * 5 + [(0, 1)] * 3 + [(1, 1)] + [(0, 0)])
        report = single_particle_rates(records)
        assert (report.joint, report.none, report.exclusive) == (0.1, 0.1, 0.8)
        assert report.joint_stderr == pytest.approx(math.sqrt(0.09 / 10))
        assert report.n == 10

    def test_rejects_two_particle_records(self):
        with pytest.raises(StatsError):
            single_particle_rates(records_with([(1, -1)]))

    def test_exact(self, photon_moving):
        report = exact_single_particle_rates(predict(TheoryModel.MULTISIMULTANEITY, photon_moving, 0.0, 0.0))
        assert (report.joint, report.none, report.exclusive) == pytest.approx((0.25, 0.25, 0.5))


def test_group_by_setting_keeps_first_appearance_order():
    records = records_with([(1, 1)], settings=(1.0, 0.0)) + records_with([(1, 1)]) + records_with([(1, 1)], (1.0, 0.0))
    groups = group_by_setting(records)
    assert list(groups) == [(1.0, 0.0), (0.0, 0.0)]
    assert len(groups[(1.0, 0.0)]) == 2
