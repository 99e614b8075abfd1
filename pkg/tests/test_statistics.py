from __future__ import annotations

import json

import numpy as np
import pytest

from bellrand.scenario import Behavior, Scenario, uniform_behavior
from bellrand.statistics import CountTable, FrequencyStats, frequencies, sample_counts, split_seeds
from randgen import random_quantum_behavior

S22 = Scenario((2,), (2,))


def _counts(s: Scenario, cells: dict) -> CountTable:
    c = np.zeros(s.shape, dtype=np.int64)
    for k, v in cells.items():
        c[k] = v
    return CountTable(s, c)


class TestCountTable:
    def test_csv_round_trip(self, behavior_exp):
        c = sample_counts(behavior_exp, 1000, 7)
        back = CountTable.from_csv(c.to_csv())
        assert back.scenario == c.scenario
        np.testing.assert_array_equal(back.counts, c.counts)

    def test_csv_header_is_one_based(self):
        text = _counts(S22, {(0, 0, 0, 0): 5, (0, 0, 1, 1): 3}).to_csv()
        lines = text.splitlines()
        assert lines[0] == "x,y,a,b,count"
        assert lines[1] == "1,1,1,1,5"

    def test_file_round_trip(self, tmp_path, behavior_exp):
        c = sample_counts(behavior_exp, 100, 1)
        c.save(tmp_path / "c.csv")
        np.testing.assert_array_equal(CountTable.load(tmp_path / "c.csv").counts, c.counts)

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "x,y,a,count\n1,1,1,3\n",
            "x,y,a,b,count\n1,1,1,1,three\n",
            "x,y,a,b,count\n0,1,1,1,3\n",
        ],
    )
    def test_malformed_csv(self, text):
        with pytest.raises(ValueError):
            CountTable.from_csv(text)

    def test_cell_outside_given_scenario(self):
        with pytest.raises(ValueError, match="outside"):
            CountTable.from_csv("x,y,a,b,count\n1,1,3,1,4\n", S22)

    def test_rejects_negative_and_fractional(self):
        with pytest.raises(ValueError):
            CountTable(S22, -np.ones(S22.shape))
        with pytest.raises(ValueError):
            CountTable(S22, np.full(S22.shape, 0.5))

    def test_rejects_counts_in_invalid_cells(self):
        s = Scenario((2, 3), (2,))
        c = np.zeros(s.shape, dtype=int)
        c[0, 0, 2, 0] = 1
        with pytest.raises(ValueError):
            CountTable(s, c)


class TestSampling:
    def test_deterministic_seed(self, behavior_exp):
        a, b = sample_counts(behavior_exp, 10_000, 42), sample_counts(behavior_exp, 10_000, 42)
        np.testing.assert_array_equal(a.counts, b.counts)
        assert a.to_csv() == b.to_csv()
        assert a.seed == 42

    def test_seeds_differ(self, behavior_exp):
        a, b = sample_counts(behavior_exp, 10_000, 1), sample_counts(behavior_exp, 10_000, 2)
        assert not np.array_equal(a.counts, b.counts)

    def test_poisson_mean(self):
        b = uniform_behavior(S22)
        draws = [sample_counts(b, 10_000, seed).counts[0, 0, 0, 0] for seed in split_seeds(5, 1000)]
        assert np.mean(draws) == pytest.approx(2500, abs=50)
        # Poisson: variance equals the mean
        assert np.var(draws) == pytest.approx(2500, rel=0.15)

    def test_deterministic_behavior(self):
        t = np.zeros(S22.shape)
        t[0, 0, 1, 0] = 1.0
        c = sample_counts(Behavior(S22, t), 500, 3)
        assert c.counts[0, 0, 1, 0] == c.totals[0, 0]
        assert c.counts.sum() == c.counts[0, 0, 1, 0]

    def test_totals_are_random(self, behavior_exp):
        tot = sample_counts(behavior_exp, 10_000, 9).totals
        assert len(np.unique(tot)) > 1

    def test_rejects_zero_n(self, behavior_exp):
        with pytest.raises(ValueError):
            sample_counts(behavior_exp, 0, 1)


class TestSplitSeeds:
    def test_reproducible_and_distinct(self):
        a = split_seeds(42, 100)
        assert a == split_seeds(42, 100)
        assert len(set(a)) == 100
        assert all(0 <= s < 2**63 for s in a)

    def test_prefix_stable(self):
        assert split_seeds(7, 10)[:3] == split_seeds(7, 3)


class TestFrequencies:
    def test_thirty_seventy(self):
        fs = frequencies(_counts(S22, {(0, 0, 0, 0): 30, (0, 0, 1, 1): 70}))
        assert fs.freq.freq[0, 0, 0, 0] == pytest.approx(0.3)
        assert fs.freq.freq[0, 0, 1, 1] == pytest.approx(0.7)
        assert fs.sigma[0, 0, 0, 0] == pytest.approx(np.sqrt(30) / 100)
        assert fs.sigma[0, 0, 1, 1] == pytest.approx(np.sqrt(70) / 100)
        assert fs.freq.totals[0, 0] == 100

    def test_equal_counts_uniform(self):
        s = Scenario((2, 3), (2, 2))
        fs = frequencies(CountTable(s, 12 * s.valid_mask().astype(int)))
        for x, y, a, b in s.cells():
            assert fs.freq.freq[x, y, a, b] == pytest.approx(1 / (s.alice_outcomes[x] * s.bob_outcomes[y]))

    def test_zero_count_sigma(self):
        fs = frequencies(_counts(S22, {(0, 0, 0, 0): 40, (0, 0, 1, 1): 60}))
        assert fs.freq.freq[0, 0, 0, 1] == 0.0
        assert fs.sigma[0, 0, 0, 1] == pytest.approx(1 / 100)

    def test_sigma_halves_when_counts_quadruple(self, behavior_exp):
        ratios = []
        for seed in range(10):
            lo = frequencies(sample_counts(behavior_exp, 10_000, seed)).sigma
            hi = frequencies(sample_counts(behavior_exp, 40_000, seed + 100)).sigma
            mask = behavior_exp.table > 0.01
            ratios.append(np.median(hi[mask] / lo[mask]))
        assert np.mean(ratios) == pytest.approx(0.5, abs=0.01)

    def test_sigma_nonnegative(self, behavior_exp):
        assert np.all(frequencies(sample_counts(behavior_exp, 1000, 0)).sigma >= 0)

    def test_zero_total_setting(self):
        with pytest.raises(ValueError, match="without counts"):
            frequencies(_counts(Scenario((2, 2), (2,)), {(0, 0, 0, 0): 5}))

    def test_convergence_rate(self):
        rng = np.random.default_rng(61)
        b = random_quantum_behavior(rng, (2, 3), (2, 2))
        ns = np.array([1e3, 1e4, 1e5, 1e6])
        dist = [
            np.mean([np.abs(frequencies(sample_counts(b, int(n), seed)).freq.freq - b.table).max() for seed in range(20)])
            for n in ns
        ]
        slope = np.polyfit(np.log(ns), np.log(dist), 1)[0]
        assert slope == pytest.approx(-0.5, abs=0.1)

    def test_json_round_trip(self, behavior_exp):
        fs = frequencies(sample_counts(behavior_exp, 1000, 11))
        back = FrequencyStats.from_dict(json.loads(fs.to_json()))
        np.testing.assert_array_equal(back.freq.freq, fs.freq.freq)
        np.testing.assert_array_equal(back.sigma, fs.sigma)
        np.testing.assert_array_equal(back.freq.totals, fs.freq.totals)
        assert back.seed == 11
