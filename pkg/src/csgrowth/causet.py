"""Naturally labelled causal sets, their order ideals, and the growth tree.

A causet on ``n`` elements is stored as ``n`` past-set rows: bit ``j`` of
``past[i]`` is set iff ``j`` precedes ``i``.  Natural labelling means every
row ``i`` only uses bits below ``i``.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapExceeded, ContractError

MAX_ELEMENTS = 62
DEFAULT_CAP = 12


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def pair_index(varpi: int, m: int) -> int:
    """Position of the transition type (varpi, m) in the global pair ordering.

    (0, 0) comes first, then (1, 1), (2, 1), (2, 2), (3, 1), ...  The layout is
    independent of the level, so the pairs reachable from level n are exactly
    the first ``pair_count(n)`` entries.
    """
    if varpi == 0:
        return 0
    return varpi * (varpi - 1) // 2 + m


def pair_count(n: int) -> int:
    return n * (n + 1) // 2 + 1


def pair_list(n: int) -> list[tuple[int, int]]:
    pairs = [(0, 0)]
    for varpi in range(1, n + 1):
        pairs.extend((varpi, m) for m in range(1, varpi + 1))
    return pairs


@dataclass(frozen=True)
class LabelledCauset:
    past: tuple[int, ...]

    def __post_init__(self):
        past = tuple(int(r) for r in self.past)
        object.__setattr__(self, "past", past)
        n = len(past)
        if n == 0:
            raise ContractError("a causet needs at least one element")
        if n > MAX_ELEMENTS:
            raise ContractError(f"at most {MAX_ELEMENTS} elements are supported, got {n}")
        for i, row in enumerate(past):
            if row < 0 or row >> i:
                raise ContractError(f"element {i} has a past outside [0, {i}); labelling is not natural")
            for j in iter_bits(row):
                if past[j] & ~row:
                    raise ContractError(f"past of element {i} is not transitively closed at {j}")

    @property
    def n(self) -> int:
        return len(self.past)

    @classmethod
    def from_relations(cls, n: int, relations: Iterable[tuple[int, int]]) -> LabelledCauset:
        """Build from pairs ``(a, b)`` meaning a precedes b, taking the transitive closure."""
        rows = [0] * n
        for a, b in relations:
            if not 0 <= a < b < n:
                raise ContractError(f"relation {a}<{b} is not compatible with a natural labelling")
            rows[b] |= 1 << a
        for i in range(n):
            closed = rows[i]
            for j in iter_bits(rows[i]):
                closed |= rows[j]
            rows[i] = closed
        return cls(tuple(rows))

    def relations(self) -> list[tuple[int, int]]:
        return [(j, i) for i, row in enumerate(self.past) for j in iter_bits(row)]

    def future(self, i: int) -> int:
        bit = 1 << i
        return sum(1 << j for j in range(i + 1, self.n) if self.past[j] & bit)

    def precedes(self, a: int, b: int) -> bool:
        return bool(self.past[b] >> a & 1)

    def relabel(self, perm: Sequence[int]) -> LabelledCauset:
        """Move element ``i`` to label ``perm[i]``; the result must stay naturally labelled."""
        if sorted(perm) != list(range(self.n)):
            raise ContractError("relabelling must be a permutation of the elements")
        rows = [0] * self.n
        for i, row in enumerate(self.past):
            rows[perm[i]] = sum(1 << perm[j] for j in iter_bits(row))
        return LabelledCauset(tuple(rows))

    def __repr__(self) -> str:
        return f"LabelledCauset({list(self.past)})"


def singleton() -> LabelledCauset:
    return LabelledCauset((0,))


def chain(n: int) -> LabelledCauset:
    return LabelledCauset(tuple((1 << i) - 1 for i in range(n)))


def antichain(n: int) -> LabelledCauset:
    return LabelledCauset((0,) * n)


@dataclass(frozen=True, order=True)
class Ideal:
    """A downward-closed subset, with its size and number of maximal elements."""

    members: int
    size: int
    maximal_count: int
    maximal: int = 0

    @property
    def elements(self) -> tuple[int, ...]:
        return tuple(iter_bits(self.members))


def _walk_ideals(past: Sequence[int]) -> list[tuple[int, int]]:
    """All (members, maximal) masks, built by deciding elements in label order."""
    found = [(0, 0)]
    for i, row in enumerate(past):
        bit = 1 << i
        found += [(mem | bit, (mx & ~row) | bit) for mem, mx in found if mem & row == row]
    found.sort()
    return found


def order_ideals(c: LabelledCauset) -> list[Ideal]:
    """Every downward-closed subset of ``c``, ordered by member bitmask."""
    return [Ideal(mem, mem.bit_count(), mx.bit_count(), mx) for mem, mx in _walk_ideals(c.past)]


def is_ideal(c: LabelledCauset, members: int) -> bool:
    if members < 0 or members >> c.n:
        return False
    return all(c.past[i] & ~members == 0 for i in iter_bits(members))


def extend(c: LabelledCauset, p: Ideal | int) -> LabelledCauset:
    """Add a new maximal element whose past is ``p``; ``c`` itself is untouched."""
    members = p.members if isinstance(p, Ideal) else int(p)
    if not is_ideal(c, members):
        raise ContractError(f"precursor set {bin(members)} is not an order ideal of {c!r}")
    return LabelledCauset(c.past + (members,))


def children(c: LabelledCauset) -> list[LabelledCauset]:
    return [extend(c, ideal) for ideal in order_ideals(c)]


def partial_stems(c: LabelledCauset, m: int) -> list[Ideal]:
    if not 0 <= m <= c.n:
        raise ContractError(f"stem size must lie in [0, {c.n}], got {m}")
    return [ideal for ideal in order_ideals(c) if ideal.size == m]


def is_originary(c: LabelledCauset) -> bool:
    """True iff element 0 precedes every other element."""
    return all(row & 1 for row in c.past[1:])


def restrict(c: LabelledCauset, members: int) -> LabelledCauset:
    """The sub-causet on ``members``, relabelled order-preservingly."""
    elems = list(iter_bits(members))
    new = {e: k for k, e in enumerate(elems)}
    return LabelledCauset(tuple(sum(1 << new[j] for j in iter_bits(c.past[e] & members)) for e in elems))


@dataclass(frozen=True, order=True)
class CanonicalKey:
    data: bytes

    def hex(self) -> str:
        return self.data.hex()


def canonical_form(c: LabelledCauset) -> CanonicalKey:
    """Lexicographically least row encoding over all natural labellings.

    Labels are assigned one at a time.  Only candidates achieving the least
    possible row at the current position can lead to the minimum, and among
    those, candidates with identical past and future are swapped by an
    automorphism, so one representative per future set is explored.
    """
    n = c.n
    past = c.past
    futures = [c.future(i) for i in range(n)]
    new_label = [0] * n
    rows: list[int] = []
    best: list[int] | None = None

    def descend(placed: int) -> None:
        nonlocal best
        depth = len(rows)
        if depth == n:
            if best is None or rows < best:
                best = rows.copy()
            return
        row_min = None
        tied: dict[int, int] = {}
        for x in range(n):
            if placed >> x & 1 or past[x] & ~placed:
                continue
            row = sum(1 << new_label[j] for j in iter_bits(past[x]))
            if row_min is None or row < row_min:
                row_min, tied = row, {futures[x]: x}
            elif row == row_min:
                tied.setdefault(futures[x], x)
        if best is not None:
            prefix = best[: depth + 1]
            if rows + [row_min] > prefix:
                return
        for x in tied.values():
            new_label[x] = depth
            rows.append(row_min)
            descend(placed | 1 << x)
            rows.pop()

    descend(0)
    width = max(1, (n + 7) // 8)
    return CanonicalKey(bytes([n]) + b"".join(r.to_bytes(width, "big") for r in best))


# ---------------------------------------------------------------------------
# Growth tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LevelCatalog:
    """All naturally labelled causets of one size, in lexicographic row order.

    ``parent[i]`` indexes level ``n-1``; ``via[i]`` is the transition type
    (as a :func:`pair_index`) that produced node ``i`` from its parent.  The
    order ideals of every node are kept flat: node ``i`` owns
    ``ideal_mask[ideal_ptr[i]:ideal_ptr[i+1]]``.
    """

    n: int
    rows: np.ndarray
    parent: np.ndarray
    via: np.ndarray
    ideal_ptr: np.ndarray
    ideal_mask: np.ndarray
    ideal_max: np.ndarray

    def __len__(self) -> int:
        return len(self.rows)

    def node(self, i: int) -> LabelledCauset:
        return LabelledCauset(tuple(int(r) for r in self.rows[i]))

    @cached_property
    def nodes(self) -> list[LabelledCauset]:
        return [self.node(i) for i in range(len(self))]

    @cached_property
    def iso_class(self) -> list[CanonicalKey]:
        return [canonical_form(c) for c in self.nodes]

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(r) for r in row): i for i, row in enumerate(self.rows)}

    def index_of(self, c: LabelledCauset) -> int:
        try:
            return self._index[c.past]
        except KeyError:
            raise ContractError(f"{c!r} is not a node of level {self.n}") from None

    @property
    def antichain_index(self) -> int:
        return 0

    @property
    def chain_index(self) -> int:
        return len(self) - 1

    def child_counts(self) -> np.ndarray:
        return np.diff(self.ideal_ptr)

    def ideals_of(self, i: int) -> list[Ideal]:
        lo, hi = self.ideal_ptr[i], self.ideal_ptr[i + 1]
        return [
            Ideal(int(mem), int(mem).bit_count(), int(mx).bit_count(), int(mx))
            for mem, mx in zip(self.ideal_mask[lo:hi], self.ideal_max[lo:hi])
        ]

    @cached_property
    def pair_counts(self) -> np.ndarray:
        """``counts[i, p]``: number of transitions of type ``p`` out of node ``i``."""
        owner = np.repeat(np.arange(len(self)), self.child_counts())
        varpi = np.bitwise_count(self.ideal_mask).astype(np.int64)
        m = np.bitwise_count(self.ideal_max).astype(np.int64)
        idx = np.where(varpi == 0, 0, varpi * (varpi - 1) // 2 + m)
        counts = np.zeros((len(self), pair_count(self.n)), dtype=np.int64)
        np.add.at(counts, (owner, idx), 1)
        return counts

    def export_rows(self) -> Iterator[dict]:
        keys = self.iso_class
        for i in range(len(self)):
            yield {
                "n": self.n,
                "index": i,
                "parent": int(self.parent[i]),
                "past": [list(iter_bits(int(r))) for r in self.rows[i]],
                "iso_key": keys[i].hex(),
            }

    def to_jsonl(self) -> str:
        return "".join(json.dumps(row, separators=(",", ":")) + "\n" for row in self.export_rows())


def _root_level() -> LevelCatalog:
    return LevelCatalog(
        n=1,
        rows=np.zeros((1, 1), dtype=np.int64),
        parent=np.array([-1], dtype=np.int64),
        via=np.array([-1], dtype=np.int64),
        ideal_ptr=np.array([0, 2], dtype=np.int64),
        ideal_mask=np.array([0, 1], dtype=np.int64),
        ideal_max=np.array([0, 1], dtype=np.int64),
    )


def _grow(level: LevelCatalog) -> LevelCatalog:
    """Children of every node, in parent order and ideal order within a parent."""
    n = level.n
    bit = np.int64(1) << np.int64(n)
    rows_out, parent_out, via_out, ptr_out, mask_out, max_out = [], [], [], [], [], []
    total = 0
    counts = level.child_counts()
    for i in range(len(level)):
        lo, hi = level.ideal_ptr[i], level.ideal_ptr[i + 1]
        mem = level.ideal_mask[lo:hi]
        mx = level.ideal_max[lo:hi]
        k = hi - lo
        # contains[a, b]: ideal b includes ideal a, so b | {new} is an ideal of child a
        contains = (mem[None, :] & mem[:, None]) == mem[:, None]
        a_idx, b_idx = np.nonzero(contains)
        extra = contains.sum(axis=1)
        sizes = k + extra
        starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
        block_mem = np.empty(int(sizes.sum()), dtype=np.int64)
        block_max = np.empty_like(block_mem)
        pos_a = (starts[:, None] + np.arange(k)[None, :]).ravel()
        block_mem[pos_a] = np.tile(mem, k)
        block_max[pos_a] = np.tile(mx, k)
        first = np.concatenate(([0], np.cumsum(extra)[:-1]))
        rank = np.arange(len(a_idx)) - first[a_idx]
        pos_b = starts[a_idx] + k + rank
        block_mem[pos_b] = mem[b_idx] | bit
        block_max[pos_b] = (mx[b_idx] & ~mem[a_idx]) | bit

        rows_out.append(np.hstack((np.repeat(level.rows[i : i + 1], k, axis=0), mem[:, None])))
        parent_out.append(np.full(k, i, dtype=np.int64))
        varpi = np.bitwise_count(mem).astype(np.int64)
        mcount = np.bitwise_count(mx).astype(np.int64)
        via_out.append(np.where(varpi == 0, 0, varpi * (varpi - 1) // 2 + mcount))
        ptr_out.append(total + starts)
        total += int(sizes.sum())
        mask_out.append(block_mem)
        max_out.append(block_max)
    assert sum(len(p) for p in parent_out) == int(counts.sum())
    return LevelCatalog(
        n=n + 1,
        rows=np.vstack(rows_out),
        parent=np.concatenate(parent_out),
        via=np.concatenate(via_out),
        ideal_ptr=np.concatenate(ptr_out + [np.array([total], dtype=np.int64)]),
        ideal_mask=np.concatenate(mask_out),
        ideal_max=np.concatenate(max_out),
    )


class GrowthTree:
    """Lazily enumerated tree of naturally labelled causets (levels 1, 2, ...).

    Levels are built once and shared; building is serialised by a lock, reads
    of finished levels are lock-free.
    """

    def __init__(self, cap: int = DEFAULT_CAP):
        self.cap = cap
        self._levels: list[LevelCatalog] = [_root_level()]
        self._lock = threading.Lock()

    def level(self, n: int, cap: int | None = None) -> LevelCatalog:
        limit = self.cap if cap is None else cap
        if n < 1:
            raise ContractError(f"levels start at n=1, got {n}")
        if n > limit:
            raise CapExceeded(n, limit)
        if n <= len(self._levels):
            return self._levels[n - 1]
        with self._lock:
            while len(self._levels) < n:
                self._levels.append(_grow(self._levels[-1]))
        return self._levels[n - 1]

    def ancestors(self, n: int, m: int) -> np.ndarray:
        """For each node at level ``m >= n``, the index of its level-``n`` ancestor."""
        if m < n:
            raise ContractError("descendant level must not precede the ancestor level")
        idx = np.arange(len(self.level(m)))
        for k in range(m, n, -1):
            idx = self.level(k).parent[idx]
        return idx

    def descendants(self, n: int, index: int, m: int) -> np.ndarray:
        return np.nonzero(self.ancestors(n, m) == index)[0]


_default_tree = GrowthTree()


def default_tree() -> GrowthTree:
    return _default_tree


def enumerate_level(n: int, cap: int | None = None) -> LevelCatalog:
    return _default_tree.level(n, cap=cap)
