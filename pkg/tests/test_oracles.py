"""Brute-force ground truth and the soundness campaign."""

import numpy as np
import pytest

from qkdbounds.errors import DomainError, ScaleError
from qkdbounds.observed import DECOY, SIGNAL, VACUUM
from qkdbounds.oracles import (
    STRATEGY_FAMILIES,
    AdversaryStrategy,
    ground_truth,
    population_observables,
    soundness_campaign,
    yn_decomposition_check,
)
from qkdbounds.source import SourceSpec, Window


def _reference_strategy(m_hi):
    y = np.zeros((m_hi + 1, m_hi + 1))
    e = np.zeros((m_hi + 1, m_hi + 1))
    for m in range(m_hi + 1):
        for k in range(m + 1):
            y[m, k] = 0.2 + 0.6 * k / (m + 1)
            e[m, k] = 0.03 + 0.2 * k / (m + 1) if k else 0.5
    return AdversaryStrategy(yields=y, errors=e, family="explicit")


def _reference_instance():
    src = SourceSpec(
        mean_photons=20,
        distribution="empirical_histogram",
        histogram={m: 1.0 / 9 for m in range(16, 25)},
    )
    win = Window(delta=0.2, Delta=0.0, epsilon=0.0)
    lams = {SIGNAL: 0.04, DECOY: 0.01, VACUUM: 0.0}
    return src, win, lams, _reference_strategy(24)


class TestGroundTruth:
    def test_frozen_reference_instance(self):
        src, win, lams, strat = _reference_instance()
        truth = ground_truth(src, win, lams, strat)
        assert truth.q1_true == pytest.approx(0.08363838212932063, rel=1e-12)
        assert truth.e1_true == pytest.approx(0.03965991836336067, rel=1e-12)
        assert truth.q0_true == pytest.approx(0.08889233767136356, rel=1e-12)
        assert truth.q_untagged[SIGNAL] == pytest.approx(
            0.22283938884126797, rel=1e-12
        )
        assert truth.eq_untagged[SIGNAL] == pytest.approx(
            0.05037298493984863, rel=1e-12
        )
        assert yn_decomposition_check(truth)

    def test_frozen_threshold_yield_instance(self):
        # Y depends on the kept photon number alone: 0, 1/2, then saturated.
        # Expected digits derive from exact rational arithmetic.
        src = SourceSpec(
            mean_photons=20,
            distribution="empirical_histogram",
            histogram={m: 1.0 / 9 for m in range(16, 25)},
        )
        win = Window(delta=0.2, Delta=0.0, epsilon=0.0)
        y = np.zeros((25, 25))
        e = np.full((25, 25), 0.1)
        e[:, 0] = 0.5
        for m in range(25):
            for k in range(m + 1):
                y[m, k] = min(1.0, k / 2.0)
        truth = ground_truth(
            src, win, {SIGNAL: 0.04}, AdversaryStrategy(yields=y, errors=e)
        )
        assert truth.q1_true == pytest.approx(0.18267811693379693, rel=1e-12)
        assert truth.q_untagged[SIGNAL] == pytest.approx(
            0.3728601947093855, rel=1e-12
        )

    def test_scale_limit(self):
        src = SourceSpec(mean_photons=500)
        win = Window(delta=0.01, Delta=0.0, epsilon=0.0)
        strat = _reference_strategy(505)
        with pytest.raises(ScaleError):
            ground_truth(src, win, {SIGNAL: 1e-3}, strat)

    def test_support_must_cover_window(self):
        src, win, lams, _ = _reference_instance()
        short = _reference_strategy(20)  # window top is 24
        with pytest.raises(DomainError):
            ground_truth(src, win, lams, short)

    def test_no_window_mass(self):
        src = SourceSpec(
            mean_photons=20,
            distribution="empirical_histogram",
            histogram={2: 1.0},
        )
        win = Window(delta=0.2, Delta=0.0, epsilon=0.0)
        with pytest.raises(DomainError):
            ground_truth(src, win, {SIGNAL: 0.04}, _reference_strategy(24))


class TestPopulationObservables:
    def test_hand_check_two_photon(self):
        # All mass at m = 2, every pulse detected, error = k/4 given k kept.
        y = np.ones((3, 3))
        e = np.zeros((3, 3))
        e[2] = [0.0, 0.25, 0.5]
        strat = AdversaryStrategy(yields=y, errors=e)
        src = SourceSpec(
            mean_photons=2,
            distribution="empirical_histogram",
            histogram={2: 1.0},
        )
        obs = population_observables(src, 0.5, strat, SIGNAL)
        assert obs.gain == pytest.approx(1.0, rel=1e-12)
        # B(2, 1/2) over k: 1/4, 1/2, 1/4 -> mean error 0.5*0.25 + 0.25*0.5
        assert obs.qber == pytest.approx(0.25, rel=1e-12)

    def test_zero_gain_reports_half(self):
        y = np.zeros((3, 3))
        e = np.zeros((3, 3))
        strat = AdversaryStrategy(yields=y, errors=e)
        src = SourceSpec(
            mean_photons=2,
            distribution="empirical_histogram",
            histogram={2: 1.0},
        )
        obs = population_observables(src, 0.5, strat, SIGNAL)
        assert obs.gain == 0.0
        assert obs.qber == 0.5

    def test_matches_ground_truth_on_window_only_source(self):
        src, win, lams, strat = _reference_instance()
        truth = ground_truth(src, win, lams, strat)
        obs = population_observables(src, lams[SIGNAL], strat, SIGNAL)
        # histogram lives entirely inside the window and Delta = 0, so the
        # population statistics and the untagged statistics coincide
        assert obs.gain == pytest.approx(truth.q_untagged[SIGNAL], rel=1e-12)
        assert obs.gain * obs.qber == pytest.approx(
            truth.eq_untagged[SIGNAL], rel=1e-12
        )


class TestStrategyValidation:
    def test_shapes(self):
        with pytest.raises(DomainError):
            AdversaryStrategy(yields=np.ones((3, 2)), errors=np.ones((3, 2)))
        with pytest.raises(DomainError):
            AdversaryStrategy(yields=np.ones((3, 3)), errors=np.ones((4, 4)))

    def test_ranges(self):
        y = np.full((3, 3), 1.5)
        with pytest.raises(DomainError):
            AdversaryStrategy(yields=y, errors=np.zeros((3, 3)))


class TestCampaign:
    def test_clean_run(self):
        rep = soundness_campaign(trials=300, seed=42)
        assert rep.violation_count == 0
        assert rep.y1_split_count == 232
        assert {t.family for t in rep.rows} == set(STRATEGY_FAMILIES)

    def test_deterministic(self):
        a = soundness_campaign(trials=60, seed=9)
        b = soundness_campaign(trials=60, seed=9)
        assert [(t.q1_wv, t.q1_od, t.q1_true) for t in a.rows] == [
            (t.q1_wv, t.q1_od, t.q1_true) for t in b.rows
        ]

    def test_corrupt_hook_detected(self):
        bad = soundness_campaign(trials=50, seed=42, corrupt_q1_shift=1.0)
        assert bad.violation_count > 0

    def test_small_corruption_still_detected(self):
        bad = soundness_campaign(trials=50, seed=42, corrupt_q1_shift=0.02)
        assert bad.violation_count > 0

    def test_trials_validated(self):
        with pytest.raises(DomainError):
            soundness_campaign(trials=0, seed=1)
