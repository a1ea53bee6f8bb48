"""Deterministic, splittable random-number streams and noise couplings.

Every Monte Carlo path owns a few independent Philox streams, one per
channel (gamma, xi, eta, init).  Streams are keyed by (seed, path, channel)
so a path's draws never depend on how many paths run concurrently or on the
order in which workers finish.  The same key always reproduces the same
sequence bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHANNEL_GAMMA = 0   # white-noise / position increments
CHANNEL_XI = 1      # independent complement for the inertial noise pair
CHANNEL_ETA = 2     # Ornstein-Uhlenbeck driving draws
CHANNEL_INIT = 3    # initial conditions

_MAX_PATH = 1 << 60


@dataclass(frozen=True)
class StreamKey:
    """Identifies one random stream: a seed, a path index and a channel."""

    seed: int
    path_index: int
    channel: int

    def __post_init__(self):
        if not 0 <= self.path_index < _MAX_PATH:
            raise ValueError("path_index out of range")
        if not 0 <= self.channel < 8:
            raise ValueError("channel must be a small integer in [0, 8)")


def generator(key: StreamKey) -> np.random.Generator:
    """Fresh Philox generator for a stream key.

    The 128-bit Philox key packs the seed in one word and
    (path_index << 3) | channel in the other, so distinct StreamKeys map to
    distinct cipher keys and hence independent streams.
    """
    k0 = np.uint64(key.seed & 0xFFFFFFFFFFFFFFFF)
    k1 = np.uint64((key.path_index << 3) | key.channel)
    return np.random.Generator(np.random.Philox(key=np.array([k0, k1], dtype=np.uint64)))


@dataclass(frozen=True, eq=False)
class PathStreams:
    """The per-path generator bundle used by the integration drivers."""

    gamma: np.random.Generator
    xi: np.random.Generator
    eta: np.random.Generator
    init: np.random.Generator

    @classmethod
    def for_path(cls, seed: int, path_index: int) -> "PathStreams":
        return cls(
            gamma=generator(StreamKey(seed, path_index, CHANNEL_GAMMA)),
            xi=generator(StreamKey(seed, path_index, CHANNEL_XI)),
            eta=generator(StreamKey(seed, path_index, CHANNEL_ETA)),
            init=generator(StreamKey(seed, path_index, CHANNEL_INIT)),
        )


def gaussian_vector(stream: np.random.Generator, dim: int) -> np.ndarray:
    """dim i.i.d. standard normals, advancing the stream."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return stream.standard_normal(dim)


def coupled_increments(streams: PathStreams, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """One (gamma, xi) pair for coupling passive and inertial steps.

    gamma is shared between the passive increment sigma*sqrt(dt)*gamma and
    the inertial position noise alpha*xi + delta_g*gamma; xi is the
    independent complement.  As tau -> 0 the inertial noise collapses onto
    the passive one with the same gamma.
    """
    return gaussian_vector(streams.gamma, dim), gaussian_vector(streams.xi, dim)


@dataclass(frozen=True, eq=False)
class BrownianIncrements:
    """A Brownian path held at its finest generated resolution.

    `base` stores increments at step `dt_base`; `level` views the path at
    step dt_base * 2**level by summing runs of 2**level base increments
    pairwise, so any two levels are consistent realizations of one path and
    pair sums reproduce the coarser level bit-exactly.
    """

    base: np.ndarray        # (n_base, dim), increments at dt_base
    dt_base: float
    level: int

    @property
    def dt(self) -> float:
        return self.dt_base * (1 << self.level)

    @property
    def values(self) -> np.ndarray:
        out = self.base
        for _ in range(self.level):
            out = _pair_sums(out)
        return out

    def at_level(self, level: int) -> "BrownianIncrements":
        if not 0 <= level <= _max_level(self.base.shape[0]):
            raise ValueError(f"level {level} not representable by this path")
        return BrownianIncrements(self.base, self.dt_base, level)


def _pair_sums(incr: np.ndarray) -> np.ndarray:
    if incr.shape[0] % 2:
        raise ValueError("increment count must be even to coarsen")
    return incr[0::2] + incr[1::2]


def _max_level(n_base: int) -> int:
    level = 0
    while n_base % 2 == 0 and n_base > 1:
        n_base //= 2
        level += 1
    return level


def sample_brownian(stream: np.random.Generator, n_steps: int, dt: float,
                    dim: int, refinements: int = 0) -> BrownianIncrements:
    """Draw a Brownian path with headroom for `refinements` halvings.

    The finest increments are generated first (n_steps * 2**refinements
    draws at step dt / 2**refinements); every coarser view is a pairwise
    sum, so coarse and fine drivers share one path.
    """
    if n_steps < 1 or dt <= 0 or refinements < 0:
        raise ValueError("need n_steps >= 1, dt > 0, refinements >= 0")
    factor = 1 << refinements
    dt_base = dt / factor
    base = stream.standard_normal((n_steps * factor, dim)) * np.sqrt(dt_base)
    return BrownianIncrements(base=base, dt_base=dt_base, level=refinements)


def brownian_refine(coarse: BrownianIncrements) -> BrownianIncrements:
    """Increments at half the step of `coarse`, on the same Brownian path.

    Requires that `coarse` was sampled with refinement headroom; summing
    each returned pair reproduces the coarse increments bit-exactly.
    """
    if coarse.level == 0:
        raise ValueError("path has no finer increments; sample with more refinements")
    return coarse.at_level(coarse.level - 1)
