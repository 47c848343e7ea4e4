"""Monte Carlo drivers.

Trials are split into fixed-size chunks; chunk ``i`` draws from substream
``(seed, name, i)``. Totals are plain sums, so the result does not depend on
how many workers ran the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .adversary import AttackStrategy, impersonate, prepare_adversary
from .protocol import Params, identify, issue_public_key, keygen
from .rng import stream

CHUNK = 1 << 16


@dataclass(frozen=True)
class Estimate:
    successes: int
    trials: int

    @property
    def p(self) -> float:
        return self.successes / self.trials

    @property
    def stderr(self) -> float:
        p = self.p
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)

    def sigma_at(self, p_ref: float) -> float:
        """Binomial standard deviation of the frequency under reference ``p_ref``."""
        return math.sqrt(p_ref * (1.0 - p_ref) / self.trials)

    def within(self, p_ref: float, k: float = 4.0) -> bool:
        """``|p_hat - p_ref| <= k sigma``; a zero-variance reference must match exactly."""
        return abs(self.p - p_ref) <= k * self.sigma_at(p_ref) + 1e-15

    def at_most(self, p_ref: float, k: float = 4.0) -> bool:
        """One-sided check ``p_hat <= p_ref + k * stderr``."""
        return self.p <= p_ref + k * self.stderr + 1e-15

    def to_dict(self) -> dict:
        return {"successes": self.successes, "trials": self.trials, "estimate": self.p, "stderr": self.stderr}


def _chunked(trials: int, seed: int, name: str, work: Callable[[np.random.Generator, int], int], workers: int) -> Estimate:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sizes = [CHUNK] * (trials // CHUNK)
    if trials % CHUNK:
        sizes.append(trials % CHUNK)
    jobs = [(stream(seed, name, i), n) for i, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda job: work(*job), jobs))
    else:
        counts = [work(*job) for job in jobs]
    return Estimate(int(sum(counts)), trials)


def attack_acceptance(
    strategy: AttackStrategy,
    r: int,
    s: int,
    trials: int,
    seed: int,
    attempts: int = 1,
    workers: int = 1,
) -> Estimate:
    """Probability that Eve makes Bob accept in at least one of ``attempts`` runs.

    Each trial draws a private key, then for every attempt a fresh hidden bit
    per iteration; the per-iteration win probability comes from the Born rule
    on the strategy's POVM. Eve's reference state is re-prepared each attempt.
    """
    table = strategy.success_table(r)

    def work(rng: np.random.Generator, n: int) -> int:
        x = rng.integers(0, 2 * r + 1, size=(n, 1, s))
        b = rng.integers(0, 2, size=(n, attempts, s))
        win = rng.random((n, attempts, s)) < table[x, b]
        return int(np.count_nonzero(win.all(axis=2).any(axis=1)))

    return _chunked(trials, seed, f"attack/{strategy.kind}/{strategy.t}/{r}/{s}/{attempts}", work, workers)


def honest_acceptance(r: int, s: int, trials: int, seed: int) -> Estimate:
    """Run ``trials`` honest identifications end to end, refreshing the key every ``r`` runs."""
    accepted = 0
    params = Params(s=s, r=r)
    done = 0
    key_index = 0
    while done < trials:
        rng = stream(seed, "honest", r, s, key_index)
        issuer = keygen(params, rng)
        for _ in range(min(r, trials - done)):
            accepted += identify(issuer, issue_public_key(issuer), rng).accepted
            done += 1
        key_index += 1
    return Estimate(accepted, trials)


def impersonation_acceptance(
    strategy: AttackStrategy, r: int, s: int, t_prime: int, trials: int, seed: int
) -> Estimate:
    """Full-protocol impersonation, one fresh key per trial (slow path)."""
    params = Params(s=s, r=r)
    accepted = 0
    for i in range(trials):
        rng = stream(seed, "impersonate", i)
        issuer = keygen(params, rng)
        ledger = prepare_adversary(issuer, t_prime)
        accepted += impersonate(strategy, ledger, issuer, issue_public_key(issuer), rng).accepted
    return Estimate(accepted, trials)
