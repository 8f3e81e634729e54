"""Monte Carlo revenue estimates.

Randomness comes from numpy's Philox counter-based generator.  Samples are
drawn in fixed-size shards; shard ``s`` uses the ``s``-th child of
``SeedSequence(seed)``, so a run is reproducible for a given
``(samples, seed)`` and shards can be evaluated in any order.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .core import DirectMechanism, Instance, UsageError
from .mechanisms import LoserPayMechanism, MenuMechanism, PostedPriceMechanism, to_direct
from .virtual import tie_levels

SHARD_SIZE = 100_000


@dataclass(frozen=True)
class SimulationResult:
    mean: float
    std_error: float
    samples: int
    seed: int

    def within(self, target: float, n_se: float = 4.0) -> bool:
        if self.std_error == 0.0:
            return abs(self.mean - target) <= 1e-12 * max(1.0, abs(target))
        return abs(self.mean - target) <= n_se * self.std_error


def shard_generators(samples: int, seed: int):
    shards = math.ceil(samples / SHARD_SIZE)
    children = np.random.SeedSequence(seed).spawn(shards)
    for s, child in enumerate(children):
        size = min(SHARD_SIZE, samples - s * SHARD_SIZE)
        yield np.random.Generator(np.random.Philox(child)), size


@functools.singledispatch
def play(mech, inst: Instance, rng: np.random.Generator, size: int) -> np.ndarray:
    """Total payment collected in each of ``size`` independent runs."""
    raise UsageError(f"cannot simulate {type(mech).__name__}")


def _draw(inst, rng, shape):
    return rng.choice(inst.K, size=shape, p=inst.pmf)


@play.register
def _(mech: PostedPriceMechanism, inst, rng, size):
    to_direct(mech, inst)  # validates the pairing
    k = _draw(inst, rng, size)
    accept = k >= mech.v_star_index
    pays = rng.random(size) < mech.p_high
    return np.where(accept & pays, inst.z_max, 0.0)


@play.register
def _(mech: MenuMechanism, inst, rng, size):
    to_direct(mech, inst)
    k = _draw(inst, rng, size)
    opts = [mech.chosen(i) for i in range(inst.K)]
    x = np.array([o.x for o in opts])[k]
    w1 = np.array([o.w1 for o in opts])[k]
    w0 = np.array([o.w0 for o in opts])[k]
    won = rng.random(size) < x
    pay_prob = np.where(won, w1, w0)
    return np.where(rng.random(size) < pay_prob, inst.z_max, 0.0)


@play.register
def _(mech: LoserPayMechanism, inst, rng, size):
    if mech.n != inst.n or mech.x.size != inst.K:
        raise UsageError("loser-pay mechanism does not match the instance dimensions")
    n = inst.n
    k = _draw(inst, rng, (size, n))
    levels = tie_levels(mech.phi_ironed)
    eligible = mech.phi_ironed > 1e-12
    # rank by level, break ties with uniform keys; ineligible bids never win
    score = np.where(eligible[k], levels[k].astype(float), -np.inf)
    keys = rng.random((size, n))
    best = score.max(axis=1, keepdims=True)
    top = (score == best) & np.isfinite(score)
    tie_keys = np.where(top, keys, -1.0)
    winner = np.where(top.any(axis=1), tie_keys.argmax(axis=1), -1)
    lost = np.arange(n)[None, :] != winner[:, None]
    pays = (rng.random((size, n)) < mech.q[k]) & lost
    return pays.sum(axis=1) * inst.z_max


@play.register
def _(mech: DirectMechanism, inst, rng, size):
    if not mech.matches(inst):
        raise UsageError("direct mechanism dimensions do not match the instance")
    n, K, M = inst.n, inst.K, inst.M
    k = _draw(inst, rng, (size, n))
    flat = np.ravel_multi_index(tuple(k.T), (K,) * n) if n > 1 else k[:, 0]
    total = np.zeros(size)
    for i in range(n):
        # per-profile payment distribution for buyer i
        dist = (mech.y0[i] + mech.y1[i]).reshape(M, -1)[:, flat].T  # (size, M)
        cdf = np.cumsum(dist, axis=1)
        u = rng.random(size)[:, None] * cdf[:, -1:]
        j = (u >= cdf).sum(axis=1).clip(max=M - 1)
        total += inst.payments[j]
    return total


def simulate_revenue(mech, inst: Instance, samples: int = 100_000, seed: int = 0) -> SimulationResult:
    if samples < 1:
        raise UsageError("samples must be at least 1")
    if seed < 0 or seed >= 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    total = 0.0
    total_sq = 0.0
    for rng, size in shard_generators(samples, seed):
        r = play(mech, inst, rng, size)
        total += float(r.sum())
        total_sq += float(np.dot(r, r))
    mean = total / samples
    var = max(0.0, total_sq / samples - mean * mean)
    if samples > 1:
        var *= samples / (samples - 1)
    return SimulationResult(mean, math.sqrt(var / samples), samples, seed)
