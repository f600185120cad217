"""Monte-Carlo oracle tests: agreement with the analytic formulas,
determinism, and conditioning behaviour."""

import math

import numpy as np
import pytest

from doublespend import race, sim
from doublespend.race import HashSplit, NetworkParams
from doublespend.sim import ConditioningError, SimConfig, estimate_negbin, estimate_success, sample_race


def split(q):
    return HashSplit.from_attacker_share(q)


def net_for(q):
    return NetworkParams.for_split(split(q))


class TestSimConfig:
    def test_defaults(self):
        cfg = SimConfig(trials=1000, seed=0, z=6)
        assert cfg.mode == "hybrid"
        assert cfg.deficit_cap == 100
        assert cfg.kappa is None

    def test_validation(self):
        with pytest.raises(ValueError):
            SimConfig(trials=0, seed=0, z=6)
        with pytest.raises(ValueError):
            SimConfig(trials=10, seed=0, z=0)
        with pytest.raises(ValueError):
            SimConfig(trials=10, seed=0, z=6, mode="analytic")
        with pytest.raises(ValueError):
            SimConfig(trials=10, seed=0, z=6, deficit_cap=0)
        with pytest.raises(ValueError):
            SimConfig(trials=10, seed=0, z=6, kappa=-1.0)
        with pytest.raises(ValueError):
            SimConfig(trials=10, seed=0, z=6, kappa=1.0, kappa_window=0.0)


class TestSampleRace:
    def test_even_split_always_wins(self):
        rng = np.random.Generator(np.random.Philox(7))
        for _ in range(200):
            _, _, success = sample_race(split(0.5), net_for(0.5), 3, rng)
            assert success

    def test_returns_sane_values(self):
        rng = np.random.Generator(np.random.Philox(11))
        kappa, blocks, success = sample_race(split(0.3), net_for(0.3), 6, rng)
        assert kappa > 0.0
        assert blocks >= 0
        assert isinstance(success, bool)

    def test_rejects_zero_confirmations(self):
        rng = np.random.Generator(np.random.Philox(0))
        with pytest.raises(ValueError):
            sample_race(split(0.3), net_for(0.3), 0, rng)


class TestEstimateSuccess:
    @pytest.mark.parametrize("q,z", [(0.1, 1), (0.3, 5), (0.1, 6)])
    def test_matches_exact_probability(self, q, z):
        s = split(q)
        result = estimate_success(
            s, net_for(q), SimConfig(trials=1_000_000, seed=2024, z=z)
        )
        exact = race.attacker_success_closed(s, z)
        assert abs(result.p_hat - exact) <= 4.0 * result.std_err

    def test_mean_kappa_and_blocks(self):
        q, z = 0.3, 6
        s = split(q)
        result = estimate_success(
            s, net_for(q), SimConfig(trials=1_000_000, seed=5, z=z)
        )
        # E[kappa] = 1, sd(kappa) = 1/sqrt(z)
        se_kappa = 1.0 / math.sqrt(z * result.trials)
        assert abs(result.mean_kappa - 1.0) <= 4.0 * se_kappa
        # E[N'] = z q / p; var = z q/p (1 + q/p) for the negative binomial
        mean_blocks = z * s.lam
        se_blocks = math.sqrt(mean_blocks * (1.0 + s.lam) / result.trials)
        assert abs(result.mean_attacker_blocks - mean_blocks) <= 4.0 * se_blocks

    def test_deterministic_given_seed(self):
        cfg = SimConfig(trials=300_000, seed=42, z=6)
        a = estimate_success(split(0.1), net_for(0.1), cfg)
        b = estimate_success(split(0.1), net_for(0.1), cfg)
        assert a == b

    def test_trial_count_does_not_shift_early_batches(self):
        # prefix property of the batched substreams: the first batch of a
        # longer run draws the same variates
        small = estimate_success(
            split(0.1), net_for(0.1), SimConfig(trials=sim.BATCH, seed=9, z=3)
        )
        large = estimate_success(
            split(0.1), net_for(0.1), SimConfig(trials=2 * sim.BATCH, seed=9, z=3)
        )
        assert small.trials == sim.BATCH
        assert large.trials == 2 * sim.BATCH

    def test_hybrid_and_full_walk_agree(self):
        q, z, trials = 0.3, 6, 1_000_000
        s = split(q)
        hybrid = estimate_success(s, net_for(q), SimConfig(trials=trials, seed=3, z=z))
        walk = estimate_success(
            s, net_for(q), SimConfig(trials=trials, seed=4, z=z, mode="full_walk")
        )
        combined_se = math.hypot(hybrid.std_err, walk.std_err)
        truncation_bias = s.lam**100
        assert abs(hybrid.p_hat - walk.p_hat) <= max(
            5.0 * combined_se, truncation_bias
        )

    def test_even_split_certain(self):
        result = estimate_success(
            split(0.5), net_for(0.5), SimConfig(trials=2000, seed=1, z=3)
        )
        assert result.p_hat == 1.0

    def test_coverage_across_seeds(self):
        q, z = 0.1, 6
        s = split(q)
        exact = race.attacker_success_closed(s, z)
        hits = 0
        for seed in range(100):
            r = estimate_success(s, net_for(q), SimConfig(trials=60_000, seed=seed, z=z))
            if r.std_err == 0.0:
                continue
            if abs(r.p_hat - exact) <= 3.0 * r.std_err:
                hits += 1
        assert hits >= 95

    def test_conditional_estimate(self):
        # conditioning retains kappa in [1.95, 2.05]; compare against the
        # window-averaged analytic value, not the midpoint alone
        q, z, kappa = 0.1, 3, 2.0
        s = split(q)
        cfg = SimConfig(trials=2_000_000, seed=77, z=z, kappa=kappa)
        result = estimate_success(s, net_for(q), cfg)
        from scipy.integrate import quad
        num, _ = quad(
            lambda k: race.conditional_probability(s, z, k) * race.kappa_density(z, k),
            kappa - cfg.kappa_window, kappa + cfg.kappa_window,
        )
        den, _ = quad(
            lambda k: race.kappa_density(z, k),
            kappa - cfg.kappa_window, kappa + cfg.kappa_window,
        )
        target = num / den
        assert target == pytest.approx(
            race.conditional_probability(s, z, kappa), rel=0.02
        )
        assert abs(result.p_hat - target) <= 4.0 * result.std_err
        assert abs(result.mean_kappa - kappa) <= cfg.kappa_window

    def test_conditioning_error_when_window_unreachable(self):
        # kappa = 6 at z = 6 has tail mass ~2e-10; 10^5 trials cannot
        # populate the window
        with pytest.raises(ConditioningError):
            estimate_success(
                split(0.1),
                net_for(0.1),
                SimConfig(trials=100_000, seed=0, z=6, kappa=6.0),
            )


class TestEstimateNegbin:
    def test_distribution_close_in_total_variation(self):
        q, z, trials = 0.3, 6, 400_000
        s = split(q)
        counts = estimate_negbin(s, z, SimConfig(trials=trials, seed=13, z=z))
        total = counts.sum()
        assert total == trials
        tv = 0.0
        for k in range(z + 31):
            empirical = counts[k] / total if k < counts.size else 0.0
            tv += abs(empirical - race.negbin_pmf(s, z, k))
        assert 0.5 * tv <= 5.0 / math.sqrt(trials)

    def test_geometric_head(self):
        counts = estimate_negbin(
            split(0.1), 1, SimConfig(trials=200_000, seed=21, z=1)
        )
        assert counts[0] / counts.sum() == pytest.approx(0.9, abs=0.005)

    def test_mode_matches_analytic(self):
        q, z = 0.3, 6
        s = split(q)
        counts = estimate_negbin(s, z, SimConfig(trials=400_000, seed=31, z=z))
        analytic_mode = max(range(z + 31), key=lambda k: race.negbin_pmf(s, z, k))
        assert int(np.argmax(counts)) == analytic_mode

    def test_empirical_mean(self):
        q, z, trials = 0.3, 6, 400_000
        s = split(q)
        counts = estimate_negbin(s, z, SimConfig(trials=trials, seed=41, z=z))
        ks = np.arange(counts.size)
        mean = float((ks * counts).sum()) / trials
        expect = z * s.lam
        se = math.sqrt(expect * (1.0 + s.lam) / trials)
        assert abs(mean - expect) <= 4.0 * se
