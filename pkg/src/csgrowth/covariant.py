"""Measures of the originary event and its complement, stem(c_2^a)."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Couplings, lambda_n0
from .measure import engine_for
from .numeric import csum
from .variation import ClassifyOptions, Status, classify

CONVERGENCE_STREAK = 8
GEOMETRIC_RATIO = 1 - 1e-6


@dataclass(frozen=True)
class ProductState:
    """Running product ``prod_{i=1}^{n_terms} (1 - qhat_i)``."""

    n_terms: int
    value: complex
    converged: bool
    last_delta: float
    formal: bool = False
    precluded: bool = False

    def to_json(self) -> dict:
        return {
            "value_re": self.value.real,
            "value_im": self.value.imag,
            "n_terms": self.n_terms,
            "converged": self.converged,
            "formal": self.formal,
            "precluded": self.precluded,
        }


def gregarious_amplitude(c: Couplings, n: int) -> complex:
    """Amplitude ``t_0 / lambda(n, 0)`` of adding an element unrelated to all others."""
    return c.t_value(0) / lambda_n0(c, n)


def originary_measure(
    c: Couplings,
    n_max: int = 500,
    tol: float = 1e-12,
    extends: bool | None = None,
) -> ProductState:
    """Partial products of ``prod (1 - qhat_i)`` until the value settles.

    Convergence is declared after ``CONVERGENCE_STREAK`` consecutive updates
    smaller than ``tol``, or earlier once ``|qhat_n|`` shrinks geometrically
    and the bound on the remaining tail falls below ``tol``.  A zero factor
    makes the product exactly zero for good.

    ``extends`` overrides the bounded-variation check; when the measure does
    not extend, the result is marked ``formal``.
    """
    if extends is None:
        extends = classify(c, ClassifyOptions(evidence=False)).status is Status.EXTENDS
    value = 1 + 0j
    streak = 0
    delta = 0.0
    prev_abs = None
    converged = False
    n = 0
    for i in range(1, n_max + 1):
        qhat = gregarious_amplitude(c, i)
        step = value * qhat
        new = value - step
        if not cmath.isfinite(new):
            break
        n = i
        delta = abs(step)
        value = new
        if value == 0:
            converged = True
            break
        streak = streak + 1 if delta < tol else 0
        if streak >= CONVERGENCE_STREAK:
            converged = True
            break
        a = abs(qhat)
        if prev_abs and a < prev_abs:
            ratio = a / prev_abs
            if ratio < GEOMETRIC_RATIO:
                tail = a * ratio / (1 - ratio)
                if tail < 0.5 and abs(value) * math.expm1(tail * 1.5) < tol:
                    converged = True
                    break
        prev_abs = a
    precluded = converged and abs(value) < tol
    return ProductState(n, complex(value), converged, delta, formal=not extends, precluded=precluded)


def stem_event_measure(c: Couplings, n_max: int = 500, tol: float = 1e-12, extends: bool | None = None) -> complex:
    """Measure of stem(c_2^a), the complement of the originary event."""
    return 1 - originary_measure(c, n_max, tol, extends).value


def originary_nodes(rows: np.ndarray) -> np.ndarray:
    """Mask of catalog rows whose element 0 precedes every other element."""
    if rows.shape[1] == 1:
        return np.ones(len(rows), dtype=bool)
    return np.all(rows[:, 1:] & 1, axis=1)


def originary_truncation(n: int, c: Couplings, precision: int | None = None) -> complex:
    """Summed measure of the level-``n`` nodes that are themselves originary.

    A finite-level stand-in for the originary event, which is only reached
    in the limit ``n -> infinity``.
    """
    engine = engine_for(c, precision)
    cat = engine.tree.level(n)
    meas = engine.measures(n)
    picked = np.nonzero(originary_nodes(cat.rows))[0]
    return csum(complex(meas[i]) for i in picked)
