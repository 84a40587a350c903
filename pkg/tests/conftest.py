"""Shared helpers: random coupling draws and brute-force oracles."""
import itertools
import math

import numpy as np
import pytest

from csgrowth.dynamics import Couplings


def random_couplings(rng: np.random.Generator, length: int = 7) -> Couplings:
    """An explicit family with t_0 = 1 and complex t_1..t_{length-1}."""
    mods = rng.uniform(0.1, 2.0, length - 1)
    phases = rng.uniform(-math.pi, math.pi, length - 1)
    t = [1 + 0j] + [m * complex(math.cos(p), math.sin(p)) for m, p in zip(mods, phases)]
    return Couplings.explicit(t)


def random_draws(count: int, seed: int = 2024, length: int = 7) -> list[Couplings]:
    rng = np.random.default_rng(seed)
    return [random_couplings(rng, length) for _ in range(count)]


def brute_force_posets(n: int) -> list[tuple[int, ...]]:
    """Every naturally labelled causet on n elements, as past-mask rows.

    Tries all subsets of the pairs i < j and keeps the transitive ones.
    """
    pairs = [(i, j) for j in range(n) for i in range(j)]
    found = []
    for bits in range(1 << len(pairs)):
        rel = {p for b, p in enumerate(pairs) if bits >> b & 1}
        if all((i, k) in rel for (i, j) in rel for (jj, k) in rel if j == jj):
            rows = [0] * n
            for i, j in rel:
                rows[j] |= 1 << i
            found.append(tuple(rows))
    return found


def brute_force_ideals(rows) -> list[int]:
    """Down-closed subsets of a causet, by checking every subset."""
    n = len(rows)
    return [s for s in range(1 << n) if all(rows[j] & ~s == 0 for j in range(n) if s >> j & 1)]


def brute_force_iso_key(rows) -> tuple:
    """Smallest relation matrix over all relabellings (natural or not)."""
    n = len(rows)
    rel = {(i, j) for j in range(n) for i in range(n) if rows[j] >> i & 1}
    best = None
    for perm in itertools.permutations(range(n)):
        key = tuple(sorted((perm[i], perm[j]) for i, j in rel))
        if best is None or key < best:
            best = key
    return best


def links(rows) -> list[int]:
    """Number of past links (covering relations) of each element."""
    out = []
    for j, r in enumerate(rows):
        cover = r
        for i in range(len(rows)):
            if r >> i & 1:
                cover &= ~rows[i]
        out.append(bin(cover).count("1"))
    return out


@pytest.fixture(scope="session")
def draws() -> list[Couplings]:
    return random_draws(50)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
