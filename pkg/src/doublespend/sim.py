"""Seeded Monte-Carlo simulator of the double-spend race.

Independent oracle for the analytic probabilities: the race up to the
z-th honest block is sampled exactly (exponential inter-block times,
Poisson attacker production), then the residual catch-up race is either
resolved analytically by one Bernoulli draw ("hybrid" mode) or walked
step by step until the attacker erases the deficit or falls deficit_cap
blocks behind ("full_walk" mode).

Reproducibility contract: trials are processed in fixed-size batches and
batch b draws from a Philox stream seeded by SeedSequence(seed,
spawn_key=(b,)).  Results are therefore bit-identical for a given
(seed, config) no matter how the batches would be scheduled.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .race import HashSplit, NetworkParams

__all__ = [
    "SimConfig",
    "SimResult",
    "ConditioningError",
    "sample_race",
    "estimate_success",
    "estimate_negbin",
    "BATCH",
]

BATCH = 1 << 14
MIN_RETAINED = 1000

_MODES = ("hybrid", "full_walk")


class ConditioningError(RuntimeError):
    """Too few trials fell inside the kappa conditioning window."""


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int
    z: int
    mode: str = "hybrid"
    deficit_cap: int = 100
    kappa: Optional[float] = None
    kappa_window: float = 0.05

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.z < 1:
            raise ValueError(f"z must be >= 1, got {self.z}")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.deficit_cap < 1:
            raise ValueError(f"deficit_cap must be >= 1, got {self.deficit_cap}")
        if self.kappa is not None:
            if self.kappa <= 0.0:
                raise ValueError(f"kappa must be positive, got {self.kappa}")
            if self.kappa_window <= 0.0:
                raise ValueError(
                    f"kappa_window must be positive, got {self.kappa_window}"
                )


@dataclass(frozen=True)
class SimResult:
    successes: int
    trials: int
    p_hat: float
    std_err: float
    mean_kappa: float
    mean_attacker_blocks: float


def _batch_rng(seed, index):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def _run_batch(split, net, z, mode, deficit_cap, rng, n):
    """Simulate n races; returns (kappa_observed, attacker_blocks, success)."""
    # time to the z-th honest block: sum of z exponential(alpha) variates
    s_z = rng.exponential(1.0 / net.alpha, size=(n, z)).sum(axis=1)
    kappa_obs = split.p * s_z / (z * net.tau0)
    blocks = rng.poisson(net.alpha_prime * s_z)
    caught = blocks >= z
    success = caught.copy()
    behind = np.nonzero(~caught)[0]
    deficit = (z - blocks[behind]).astype(np.int64)
    if mode == "hybrid":
        # resolve the residual race analytically: win prob (q/p)^deficit
        u = rng.random(behind.size)
        success[behind] = u < np.exp(deficit * math.log(split.lam))
    else:
        won = np.zeros(behind.size, dtype=bool)
        active = np.ones(behind.size, dtype=bool)
        while active.any():
            idx = np.nonzero(active)[0]
            step_back = rng.random(idx.size) < split.q
            deficit[idx] = np.where(step_back, deficit[idx] - 1, deficit[idx] + 1)
            # catching up means erasing the deficit: (q/p)^n semantics
            caught_up = deficit[idx] <= 0
            capped = deficit[idx] >= deficit_cap
            won[idx[caught_up]] = True
            active[idx[caught_up | capped]] = False
        success[behind] = won
    return kappa_obs, blocks, success


def sample_race(
    split: HashSplit,
    net: NetworkParams,
    z: int,
    rng: np.random.Generator,
    mode: str = "hybrid",
    deficit_cap: int = 100,
):
    """Draw one race; returns (kappa_observed, attacker_blocks, success)."""
    if z < 1:
        raise ValueError(f"z must be >= 1, got {z}")
    kappa_obs, blocks, success = _run_batch(split, net, z, mode, deficit_cap, rng, 1)
    return float(kappa_obs[0]), int(blocks[0]), bool(success[0])


def estimate_success(
    split: HashSplit, net: NetworkParams, config: SimConfig
) -> SimResult:
    """Empirical success frequency over config.trials independent races.

    With kappa conditioning set, only trials whose observed kappa lands
    within +-kappa_window of the target are retained and the conditional
    frequency is reported.
    """
    conditioning = config.kappa is not None
    successes = 0
    retained = 0
    sum_kappa = 0.0
    sum_blocks = 0.0
    done = 0
    batch_index = 0
    while done < config.trials:
        n = min(BATCH, config.trials - done)
        rng = _batch_rng(config.seed, batch_index)
        kappa_obs, blocks, success = _run_batch(
            split, net, config.z, config.mode, config.deficit_cap, rng, n
        )
        if conditioning:
            keep = np.abs(kappa_obs - config.kappa) <= config.kappa_window
            successes += int(success[keep].sum())
            retained += int(keep.sum())
            sum_kappa += float(kappa_obs[keep].sum())
            sum_blocks += float(blocks[keep].sum())
        else:
            successes += int(success.sum())
            retained += n
            sum_kappa += float(kappa_obs.sum())
            sum_blocks += float(blocks.sum())
        done += n
        batch_index += 1
    if conditioning and retained < MIN_RETAINED:
        raise ConditioningError(
            f"only {retained} of {config.trials} trials fell within "
            f"|kappa - {config.kappa}| <= {config.kappa_window}; "
            f"need at least {MIN_RETAINED}"
        )
    p_hat = successes / retained
    return SimResult(
        successes=successes,
        trials=retained,
        p_hat=p_hat,
        std_err=math.sqrt(p_hat * (1.0 - p_hat) / retained),
        mean_kappa=sum_kappa / retained,
        mean_attacker_blocks=sum_blocks / retained,
    )


def estimate_negbin(split: HashSplit, z: int, config: SimConfig) -> np.ndarray:
    """Histogram of the attacker block count at the z-th honest block.

    Returns counts indexed by k, length at least z + 31; the law is
    independent of the network time scale so tau0 = 1 is used.
    """
    net = NetworkParams.for_split(split, tau0=1.0)
    counts = np.zeros(z + 31, dtype=np.int64)
    done = 0
    batch_index = 0
    while done < config.trials:
        n = min(BATCH, config.trials - done)
        rng = _batch_rng(config.seed, batch_index)
        _, blocks, _ = _run_batch(
            split, net, z, config.mode, config.deficit_cap, rng, n
        )
        batch_counts = np.bincount(blocks, minlength=counts.size)
        if batch_counts.size > counts.size:
            counts = np.concatenate(
                [counts, np.zeros(batch_counts.size - counts.size, dtype=np.int64)]
            )
        counts[: batch_counts.size] += batch_counts
        done += n
        batch_index += 1
    return counts
