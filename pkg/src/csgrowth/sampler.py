"""Monte Carlo classical sequential growth for real-positive couplings.

Streams use the Philox-4x64 counter generator from numpy.  Sample ``i`` of
seed ``s`` draws from ``Philox(key=s, counter=[0, 0, 0, i])``, so every
sample is reproducible on its own and the result does not depend on how
samples are split across workers.  This scheme is named ``philox4x64-v1``.
"""
from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .causet import MAX_ELEMENTS, GrowthTree, LabelledCauset, _walk_ideals, default_tree, pair_index, pair_list
from .dynamics import Couplings, classical_prob, lam, q_from_t
from .errors import ConfigError, ConsistencyError, UnsupportedDynamics

RNG_NAME = "philox4x64-v1"
SUM_TOL = 1e-12


@dataclass(frozen=True)
class SampleConfig:
    couplings: Couplings
    n: int
    count: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.couplings.is_real_positive():
            raise UnsupportedDynamics(
                f"classical sampling needs real non-negative couplings; got {self.couplings}"
            )
        if not 1 <= self.n <= MAX_ELEMENTS:
            raise ConfigError(f"n must be in [1, {MAX_ELEMENTS}], got {self.n}")
        if self.count < 0:
            raise ConfigError(f"count must be non-negative, got {self.count}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def stream(seed: int, index: int) -> np.random.Generator:
    """The random stream of sample ``index``."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


@lru_cache(maxsize=256)
def stage_probabilities(c: Couplings, n: int) -> np.ndarray:
    """Probability of each transition type out of an ``n``-element causet.

    Values are ``lambda(varpi, m) / lambda(n, 0)``, which is nonnegative
    term by term for real-positive couplings; they are cross-checked against
    the alternating form in :func:`classical_prob`.
    """
    denom = lam(c, n, 0).real
    probs = np.array([lam(c, v, m).real / denom for v, m in pair_list(n)])
    q = [q_from_t(c, k).real for k in range(n + 1)]
    for (v, m), p in zip(pair_list(n), probs):
        alt = classical_prob(q, n, v, m)
        if abs(alt - p) > SUM_TOL:
            raise ConsistencyError(f"transition ({v}, {m}) at stage {n}: {p!r} vs {alt!r}")
    return probs


def _draw(c: Couplings, n: int, rng: np.random.Generator) -> LabelledCauset:
    past: list[int] = [0]
    for k in range(1, n):
        probs = stage_probabilities(c, k)
        ideals = _walk_ideals(past)
        weights = [probs[pair_index(mem.bit_count(), mx.bit_count())] for mem, mx in ideals]
        total = math.fsum(weights)
        if abs(total - 1) > SUM_TOL:
            raise ConsistencyError(f"stage {k} probabilities sum to {total!r}")
        u = rng.random() * total
        acc = 0.0
        pick = len(ideals) - 1
        for j, w in enumerate(weights):
            acc += w
            if u < acc:
                pick = j
                break
        while weights[pick] == 0:  # u landed on the closed end of the last bin
            pick -= 1
        past.append(ideals[pick][0])
    return LabelledCauset(tuple(past))


def sample_causet(cfg: SampleConfig, index: int = 0) -> LabelledCauset:
    """Grow one ``cfg.n``-element causet; deterministic in (seed, index)."""
    return _draw(cfg.couplings, cfg.n, stream(cfg.seed, index))


def sample_many(cfg: SampleConfig, threads: int | None = None) -> list[LabelledCauset]:
    """All ``cfg.count`` samples, in index order for any thread count."""
    threads = threads or os.cpu_count() or 1
    if threads <= 1 or cfg.count < 2 * threads:
        return [sample_causet(cfg, i) for i in range(cfg.count)]
    bounds = np.linspace(0, cfg.count, threads + 1).astype(int)

    def chunk(lo: int, hi: int) -> list[LabelledCauset]:
        return [sample_causet(cfg, i) for i in range(lo, hi)]

    with ThreadPoolExecutor(threads) as pool:
        parts = pool.map(chunk, bounds[:-1], bounds[1:])
    return [c for part in parts for c in part]


def prefix(c: LabelledCauset, n: int) -> LabelledCauset:
    """The first ``n`` elements; a node of level ``n`` under natural labelling."""
    return LabelledCauset(c.past[:n])


def empirical_counts(
    cfg: SampleConfig,
    n: int | None = None,
    threads: int | None = None,
    tree: GrowthTree | None = None,
) -> np.ndarray:
    """Number of samples landing on each level-``n`` node, in catalog order."""
    n = cfg.n if n is None else n
    if not 1 <= n <= cfg.n:
        raise ConfigError(f"level must be in [1, {cfg.n}], got {n}")
    cat = (tree or default_tree()).level(n)
    tally = Counter(cat.index_of(prefix(c, n)) for c in sample_many(cfg, threads))
    counts = np.zeros(len(cat), dtype=np.int64)
    for i, k in tally.items():
        counts[i] = k
    return counts


def empirical_frequencies(cfg: SampleConfig, n: int | None = None, threads: int | None = None) -> dict[int, float]:
    """Observed frequency of each visited level-``n`` node, keyed by catalog index."""
    counts = empirical_counts(cfg, n, threads)
    total = counts.sum()
    return {int(i): float(counts[i] / total) for i in np.nonzero(counts)[0]}
