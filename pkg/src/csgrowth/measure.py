"""Complex measures of cylinder sets, per-node colinearity defects and S_n.

The engine works level by level on a :class:`~csgrowth.causet.GrowthTree`.
Transition amplitudes depend only on the transition type ``(varpi, m)``, so
each level needs one amplitude per type; node measures then follow from the
parent links (child measure = parent measure x amplitude).
"""
from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .causet import GrowthTree, LabelledCauset, _walk_ideals, default_tree, pair_count, pair_list
from .dynamics import Couplings, abs_lam, lam, lambda_n0
from .errors import ConsistencyError, ContractError, DegenerateDynamics
from .numeric import csum, mp_context

# zeta in (-ZETA_CLAMP, 0) is rounding noise; below -ZETA_FAIL it is a bug
ZETA_CLAMP = 1e-12
ZETA_FAIL = 1e-9


@dataclass(frozen=True)
class Event:
    """A finite union of level-``n`` cylinder sets, given by node indices."""

    n: int
    members: frozenset[int]

    def __init__(self, n: int, members: Iterable[int]):
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "members", frozenset(int(i) for i in members))

    def complement(self, size: int) -> Event:
        return Event(self.n, set(range(size)) - self.members)


@dataclass(frozen=True, eq=False)
class ZetaRow:
    n: int
    zeta: np.ndarray
    zeta_max: float
    zeta_min: float
    argmax: int
    argmin: int
    s_n: float

    def summary(self, chain_index: int) -> dict:
        return {
            "n": self.n,
            "zeta_max": self.zeta_max,
            "zeta_min": self.zeta_min,
            "argmax_is_antichain": self.argmax == 0,
            "argmin_is_chain": self.argmin == chain_index,
            "s_n": self.s_n,
        }


def clamp_zeta(values: np.ndarray, n: int) -> np.ndarray:
    """Clamp rounding noise below zero; fail loudly on genuinely negative values."""
    real = np.asarray([float(v) for v in values], dtype=float)
    worst = real.min(initial=0.0)
    if worst < -ZETA_FAIL:
        raise ConsistencyError(f"zeta = {worst:.3e} < 0 at level {n}; colinearity defect cannot be negative")
    return np.where(real < 0, 0.0, real)


def _fsum_complex(values) -> complex:
    return csum(complex(v) for v in values)


class MeasureEngine:
    """Measures for one coupling family over a shared growth tree.

    ``precision=None`` works in complex128; an integer selects an mpmath
    working precision in bits, with object arrays of ``mpc``.
    """

    def __init__(self, couplings: Couplings, tree: GrowthTree | None = None, precision: int | None = None):
        self.couplings = couplings
        self.tree = tree or default_tree()
        self.precision = precision
        self._ctx = mp_context(precision) if precision else None
        self._amps: dict[int, np.ndarray] = {}
        self._measures: dict[int, np.ndarray] = {1: self._array([1])}
        self._lock = threading.Lock()

    # -- numeric backend ---------------------------------------------------

    def _array(self, values) -> np.ndarray:
        if self._ctx is None:
            return np.asarray(values, dtype=complex)
        return np.asarray([self._ctx.mpc(v) for v in values], dtype=object)

    def _lam(self, a: int, b: int):
        if self._ctx is None:
            return lam(self.couplings, a, b)
        ctx = self._ctx
        c = self.couplings
        return ctx.fsum(ctx.mpf(math.comb(a - b, k - b)) * ctx.mpc(c.t_value(k)) for k in range(b, a + 1))

    def _sum(self, values):
        if self._ctx is None:
            return _fsum_complex(values)
        return self._ctx.fsum(values)

    def _abs_sum(self, values) -> float:
        if self._ctx is None:
            return math.fsum(abs(complex(v)) for v in values)
        return self._ctx.fsum(abs(v) for v in values)

    # -- per-level quantities ----------------------------------------------

    def amplitudes(self, n: int) -> np.ndarray:
        """Amplitude of each transition type out of level ``n`` (see :func:`pair_list`)."""
        amps = self._amps.get(n)
        if amps is None:
            denom = lambda_n0(self.couplings, n)
            if self._ctx is not None:
                denom = self._lam(n, 0)
            amps = self._array([self._lam(v, m) / denom for v, m in pair_list(n)])
            self._amps[n] = amps
        return amps

    def measures(self, n: int) -> np.ndarray:
        """Measure of every level-``n`` cylinder set, in catalog order."""
        cached = self._measures.get(n)
        if cached is not None:
            return cached
        self.tree.level(n)  # cap check before any work
        with self._lock:
            top = max(k for k in self._measures if k <= n)
            for k in range(top + 1, n + 1):
                cat = self.tree.level(k)
                self._measures[k] = self._measures[k - 1][cat.parent] * self.amplitudes(k - 1)[cat.via]
        return self._measures[n]

    def _typed_sums(self, n: int, absolute: bool) -> np.ndarray:
        cat = self.tree.level(n)
        amps = self.amplitudes(n)
        if absolute:
            amps = np.abs(amps)
        counts = cat.pair_counts
        acc = np.zeros(len(cat), dtype=amps.dtype)
        for p in range(counts.shape[1]):
            acc = acc + counts[:, p] * amps[p]
        return acc

    def markov_sums(self, n: int) -> np.ndarray:
        """Sum of the amplitudes out of each level-``n`` node (1 by the sum rule)."""
        return self._typed_sums(n, absolute=False)

    def zeta(self, n: int) -> np.ndarray:
        """Colinearity defect ``sum |A| - 1`` of every level-``n`` node."""
        return clamp_zeta(self._typed_sums(n, absolute=True) - 1, n)

    def node_measure(self, n: int, index: int):
        meas = self.measures(n)
        if not 0 <= index < len(meas):
            raise ContractError(f"level {n} has {len(meas)} nodes; index {index} is out of range")
        return meas[index]

    def event_measure(self, event: Event):
        meas = self.measures(event.n)
        bad = [i for i in event.members if not 0 <= i < len(meas)]
        if bad:
            raise ContractError(f"event members {sorted(bad)} are not nodes of level {event.n}")
        return self._sum(meas[i] for i in sorted(event.members))

    def s_n(self, n: int) -> float:
        return float(self._abs_sum(self.measures(n)))

    def level_zeta(self, n: int) -> ZetaRow:
        z = self.zeta(n)
        zmax, zmin = float(z.max()), float(z.min())
        tol = ZETA_CLAMP * max(1.0, abs(zmax))
        # ties are resolved toward the catalog ends: antichain first, chain last
        argmax = int(np.nonzero(z >= zmax - tol)[0][0])
        argmin = int(np.nonzero(z <= zmin + tol)[0][-1])
        return ZetaRow(n, z, zmax, zmin, argmax, argmin, self.s_n(n))

    def s_n_series(self, n_max: int) -> list[float]:
        return [self.s_n(n) for n in range(1, n_max + 1)]


_ENGINES: OrderedDict[tuple, MeasureEngine] = OrderedDict()
_ENGINE_LOCK = threading.Lock()
_ENGINE_LIMIT = 32


def engine_for(couplings: Couplings, precision: int | None = None, tree: GrowthTree | None = None) -> MeasureEngine:
    """Shared engine per (couplings, precision); evicts least recently used."""
    tree = tree or default_tree()
    key = (couplings, precision, id(tree))
    with _ENGINE_LOCK:
        engine = _ENGINES.get(key)
        if engine is None:
            engine = MeasureEngine(couplings, tree, precision)
            _ENGINES[key] = engine
            if len(_ENGINES) > _ENGINE_LIMIT:
                _ENGINES.popitem(last=False)
        else:
            _ENGINES.move_to_end(key)
    return engine


def node_measure(n: int, index: int, c: Couplings, precision: int | None = None):
    return engine_for(c, precision).node_measure(n, index)


def event_measure(event: Event, c: Couplings, precision: int | None = None):
    return engine_for(c, precision).event_measure(event)


def level_zeta(n: int, c: Couplings, precision: int | None = None) -> ZetaRow:
    return engine_for(c, precision).level_zeta(n)


def s_n_series(n_max: int, c: Couplings, precision: int | None = None) -> list[float]:
    return engine_for(c, precision).s_n_series(n_max)


def transition_types(c: LabelledCauset) -> list[tuple[int, int]]:
    """The (varpi, m) list of every transition out of ``c``."""
    return [(mem.bit_count(), mx.bit_count()) for mem, mx in _walk_ideals(c.past)]


def node_zeta(c: LabelledCauset, couplings: Couplings) -> float:
    """Colinearity defect of a single node, from its own order ideals.

    Works without enumerating the whole level, so it reaches sizes where the
    catalog would be too large.
    """
    n = c.n
    denom = abs(lambda_n0(couplings, n))
    types = transition_types(c)
    cache: dict[tuple[int, int], float] = {}
    for v, m in set(types):
        cache[(v, m)] = abs(lam(couplings, v, m))
    z = math.fsum(cache[t] for t in types) / denom - 1
    return float(clamp_zeta(np.array([z]), n)[0])
