"""
Tests for includes/harness.py: randomized certification against SVD oracles.
"""

import math

import numpy as np
import pandas as pd
import pytest

from includes import bounds
from includes.errors import (
    EmptyGrid,
    InvalidArgument,
    RankTooLarge,
    SoundnessViolation,
    TrialFailure,
    ZeroSigmaAtRank,
)
from includes.harness import (
    SWEEP_COLUMNS,
    BoundName,
    TightnessRecord,
    TrialConfig,
    check_decay,
    derive_seed,
    gen_block,
    gen_perturbation,
    run_bound_trials,
    run_continuity_sweep,
    run_trial,
    splitmix64,
    summarize,
    tightness_ratio,
    violations,
)
from includes.matrix import numerical_rank, singular_values

SIX_DECADES = [10.0 ** -p for p in range(1, 7)]


class TestSeeds:
    def test_splitmix_reference_value(self):
        assert splitmix64(0) == 0xE220A8397B1DCDAF

    def test_splitmix_fits_64_bits(self):
        for x in (0, 1, 2 ** 63, 2 ** 64 - 1):
            assert 0 <= splitmix64(x) < 2 ** 64

    def test_derive_seed_deterministic_and_distinct(self):
        seeds = [derive_seed(7, s) for s in range(100)]
        assert seeds == [derive_seed(7, s) for s in range(100)]
        assert len(set(seeds)) == 100
        assert derive_seed(7, 0) != derive_seed(8, 0)


class TestGenerators:
    def test_gen_block_contract(self):
        a = gen_block(6, 4, 2, seed=1)
        sv = singular_values(a)
        assert a.shape == (6, 4)
        assert sv[0] == pytest.approx(1.0, rel=1e-12)
        assert numerical_rank(sv, 6, 4) == 2

    def test_gen_block_reproducible(self):
        np.testing.assert_array_equal(gen_block(5, 5, 3, seed=9), gen_block(5, 5, 3, seed=9))
        assert not np.array_equal(gen_block(5, 5, 3, seed=9), gen_block(5, 5, 3, seed=10))

    def test_gen_block_rank_too_large(self):
        with pytest.raises(RankTooLarge):
            gen_block(3, 2, 3, seed=0)

    def test_gen_perturbation_norm(self):
        e = gen_perturbation(5, 3, 0.25, seed=4)
        assert singular_values(e)[0] == pytest.approx(0.25, rel=1e-12)

    def test_gen_perturbation_zero(self):
        np.testing.assert_array_equal(gen_perturbation(3, 2, 0.0, seed=4), np.zeros((3, 2)))


class TestTrialConfig:
    def test_to_dict(self):
        cfg = TrialConfig(8, 4, 3, 4, 0.05, 1, 100)
        assert cfg.to_dict() == {"m": 8, "n": 4, "k": 3, "base_rank": 4, "eps": 0.05, "seed": 1, "trials": 100}

    def test_rank_too_large(self):
        with pytest.raises(RankTooLarge):
            TrialConfig(4, 2, 2, 3, 0.1, 1)

    @pytest.mark.parametrize("kwargs", [
        {"eps": -0.1}, {"eps": math.nan}, {"trials": 0}, {"k": 0}, {"seed": -1},
    ])
    def test_invalid(self, kwargs):
        params = {"m": 4, "n": 4, "k": 2, "base_rank": 2, "eps": 0.1, "seed": 1, "trials": 1}
        params.update(kwargs)
        with pytest.raises(InvalidArgument):
            TrialConfig(**params)


class TestTightnessRatio:
    def test_plain(self):
        assert tightness_ratio(1.0, 4.0) == 0.25

    def test_zero_over_zero(self):
        assert tightness_ratio(0.0, 0.0) == 0.0

    def test_rounding_noise_over_zero(self):
        assert tightness_ratio(1e-17, 0.0, slack=1e-9) == 0.0

    def test_nonzero_over_zero(self):
        assert tightness_ratio(1.0, 0.0) == math.inf

    def test_slack_is_subtracted_before_dividing(self):
        """A value inside bound + slack never reports a ratio above 1."""
        assert tightness_ratio(1.5e-9, 1e-9, slack=1e-9) == pytest.approx(0.5)
        assert tightness_ratio(3e-9, 1e-9, slack=1e-9) == pytest.approx(2.0)

    def test_within_slack_of_a_tiny_bound(self):
        assert tightness_ratio(1.78e-15, 2.6e-18, slack=1e-9) == 0.0

    @pytest.mark.parametrize("actual,bound,slack", [
        (1.5e-9, 1e-9, 1e-9), (3e-9, 1e-9, 1e-9), (1e-17, 0.0, 1e-9),
        (2e-9, 0.0, 1e-9), (0.3, 0.25, 0.0), (0.2, 0.25, 0.0),
    ])
    def test_sound_iff_ratio_at_most_one(self, actual, bound, slack):
        record = TightnessRecord(BoundName.CENTROID, actual, bound,
                                 tightness_ratio(actual, bound, slack), trial=0, seed=0, slack=slack)
        assert record.sound == (actual <= bound + slack)


class TestRunBoundTrials:
    def test_reference_config_is_sound(self):
        records = run_bound_trials(TrialConfig(8, 4, 3, 4, 0.05, 1, 100), workers=1)
        assert violations(records) == []
        names = {r.bound_name for r in records}
        assert names >= {BoundName.GRAM_RIGHT, BoundName.GRAM_LEFT, BoundName.DEVIATION_NONZERO,
                         BoundName.BLOCK_NORM, BoundName.CENTROID, BoundName.CENTROID_ENVELOPE}

    def test_left_gram_never_above_right(self):
        records = run_bound_trials(TrialConfig(6, 3, 4, 2, 0.1, 5, 50), workers=1)
        left = {r.trial: r.bound for r in records if r.bound_name is BoundName.GRAM_LEFT}
        right = {r.trial: r.bound for r in records if r.bound_name is BoundName.GRAM_RIGHT}
        assert all(left[t] <= right[t] * (1 + 1e-12) for t in left)

    def test_zero_eps_gives_zero_ratios(self):
        """Unperturbed trials measure only rounding noise, which the slack absorbs."""
        records = run_bound_trials(TrialConfig(6, 3, 3, 2, 0.0, 3, 20), workers=1)
        perturbation_records = [r for r in records if r.bound_name is not BoundName.BLOCK_NORM]
        assert perturbation_records
        assert all(r.ratio == 0.0 for r in perturbation_records)
        assert not any(r.bound_name is BoundName.CENTROID_ENVELOPE for r in records)

    def test_tiny_eps_ratios_stay_at_most_one(self):
        """Rounding noise far above a 1e-17-scale bound but inside the slack
        is neither a violation nor a ratio above 1."""
        records = run_bound_trials(TrialConfig(8, 4, 3, 4, 1e-17, 1, 50), workers=1)
        assert violations(records) == []
        assert max(r.ratio for r in records) <= 1.0
        assert all(entry["max_ratio"] <= 1.0 for entry in summarize(records).values())

    def test_rank_deficient_base_produces_zero_index_records(self):
        records = run_bound_trials(TrialConfig(8, 4, 1, 2, 0.05, 2, 20), workers=1)
        assert any(r.bound_name is BoundName.DEVIATION_ZERO for r in records)
        assert violations(records) == []

    def test_single_block(self):
        records = run_bound_trials(TrialConfig(5, 5, 1, 3, 0.1, 4, 10), workers=1)
        assert violations(records) == []
        assert not any(r.bound_name is BoundName.CENTROID_ENVELOPE for r in records)

    def test_reproducible(self):
        cfg = TrialConfig(6, 3, 3, 2, 0.05, 42, 10)
        assert run_bound_trials(cfg, workers=1) == run_bound_trials(cfg, workers=1)

    def test_parallel_matches_serial(self):
        """Sub-seeds depend only on (master, trial), so the pool cannot change records."""
        cfg = TrialConfig(6, 3, 3, 2, 0.05, 42, 12)
        assert run_bound_trials(cfg, workers=4) == run_bound_trials(cfg, workers=1)

    def test_seeds_recorded(self):
        records = run_bound_trials(TrialConfig(4, 2, 2, 1, 0.05, 11, 3), workers=1)
        assert {r.seed for r in records} == {derive_seed(11, t) for t in range(3)}

    def test_understated_bound_is_flagged(self, monkeypatch):
        """A Gram bound forced to zero must surface as violations in the records."""
        monkeypatch.setattr(bounds, "gram_left_bound", lambda norms: 0.0)
        records = run_bound_trials(TrialConfig(6, 3, 3, 2, 0.05, 1, 5), workers=1)
        bad = violations(records)
        assert bad
        assert {r.bound_name for r in bad} >= {BoundName.GRAM_LEFT, BoundName.DEVIATION_NONZERO}

    def test_left_above_right_raises(self, monkeypatch):
        """The left Gram bound exceeding the right one is a hard error carrying the seed."""
        monkeypatch.setattr(bounds, "gram_left_bound", lambda norms: 1e6)
        with pytest.raises(SoundnessViolation) as exc:
            run_trial(TrialConfig(6, 3, 3, 2, 0.05, 1, 1), 0)
        assert exc.value.seed == derive_seed(1, 0)

    def test_numerical_failure_tagged_with_seed(self, monkeypatch):
        def fail(*args, **kwargs):
            raise ZeroSigmaAtRank("boom")

        monkeypatch.setattr(bounds, "centroid_bounds", fail)
        with pytest.raises(TrialFailure) as exc:
            run_trial(TrialConfig(6, 3, 3, 2, 0.05, 9, 1), 0)
        assert exc.value.trial == 0
        assert exc.value.seed == derive_seed(9, 0)


class TestSummarize:
    def test_counts(self):
        records = run_bound_trials(TrialConfig(6, 3, 2, 2, 0.05, 1, 4), workers=1)
        summary = summarize(records)
        assert summary["gram_left"]["records"] == 4
        assert summary["block_norm"]["records"] == 4
        assert all(entry["violations"] == 0 for entry in summary.values())
        assert sum(entry["records"] for entry in summary.values()) == len(records)


class TestContinuitySweep:
    def _cfg(self, trials=3):
        return TrialConfig(8, 4, 4, 2, 0.0, 17, trials)

    def test_six_decades_decay_and_stay_sound(self):
        """Deviation stays under the envelope at each eps and falls at least 10x."""
        table = run_continuity_sweep(self._cfg(), SIX_DECADES)
        assert isinstance(table, pd.DataFrame)
        assert list(table.columns) == SWEEP_COLUMNS
        assert len(table) == 6
        assert table["sound"].all()
        assert check_decay(table)
        assert table["envelope"].is_monotonic_decreasing
        assert table["max_deviation"].iloc[-1] <= table["max_deviation"].iloc[0] / 10

    def test_tiny_eps_below_envelope(self):
        table = run_continuity_sweep(self._cfg(), [1e-12])
        assert bool(table["sound"].iloc[0])
        assert table["max_deviation"].iloc[0] <= table["envelope"].iloc[0] + 1e-9

    def test_single_point_grid_passes_decay(self):
        assert check_decay(run_continuity_sweep(self._cfg(1), [1e-3]))

    def test_short_grid_passes_decay(self):
        table = pd.DataFrame({"eps": [1e-1, 1e-2], "max_deviation": [1.0, 1.0]})
        assert check_decay(table)

    def test_decay_failure_detected(self):
        table = pd.DataFrame({"eps": [1e-1, 1e-3], "max_deviation": [1.0, 0.5]})
        assert not check_decay(table)

    def test_empty_grid(self):
        with pytest.raises(EmptyGrid):
            run_continuity_sweep(self._cfg(), [])

    def test_grid_must_decrease(self):
        with pytest.raises(InvalidArgument):
            run_continuity_sweep(self._cfg(), [1e-3, 1e-2])

    def test_needs_two_copies(self):
        with pytest.raises(InvalidArgument):
            run_continuity_sweep(TrialConfig(4, 4, 1, 2, 0.0, 1, 1), SIX_DECADES)

    def test_reproducible(self):
        pd.testing.assert_frame_equal(
            run_continuity_sweep(self._cfg(), SIX_DECADES),
            run_continuity_sweep(self._cfg(), SIX_DECADES),
        )
