"""Closed-form colinearity defects of the antichain and chain nodes, and
classification of coupling families by bounded variation.

Everything here runs in a private mpmath context.  The default working
precision is a double-width mantissa; the unbounded exponent is what matters,
because ``lambda(n, 0)`` over- or underflows doubles long before n = 4096.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .dynamics import DEGENERACY_RTOL, DIRECT_SUM_LIMIT, REAL_TOL, Couplings, lambda_n0
from .errors import ConsistencyError, ContractError, DegenerateDynamics
from .numeric import DOUBLE_BITS, mp_context

GUARD_BITS = 64


class Status(str, enum.Enum):
    EXTENDS = "Extends"
    DOES_NOT_EXTEND = "DoesNotExtend"
    INCONCLUSIVE = "Inconclusive"


class Basis(str, enum.Enum):
    CLAIM3 = "AnalyticClaim3"
    CLAIM4 = "AnalyticClaim4"
    CP = "AnalyticCP"
    REAL_POSITIVE = "AnalyticRealPositive"
    NUMERIC = "NumericDiagnostic"


@dataclass(frozen=True)
class Verdict:
    status: Status
    basis: Basis
    evidence: dict = field(default_factory=dict)
    note: str = ""

    def to_json(self) -> dict:
        ev = {
            "n_window": list(self.evidence.get("n_window", [])),
            "fitted_x_a": _json_float(self.evidence.get("fitted_x_a")),
            "fitted_x_c": _json_float(self.evidence.get("fitted_x_c")),
            "U_a_tail": _json_float(self.evidence.get("U_a_tail")),
            "U_c_tail": _json_float(self.evidence.get("U_c_tail")),
        }
        return {"status": self.status.value, "basis": self.basis.value, "evidence": ev}


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class ClassifyOptions:
    window: tuple[int, int] = (64, 4096)
    margin: float = 0.1
    real_tol: float = REAL_TOL
    # None: gather numeric evidence only where no analytic rule settles the case
    evidence: bool | None = None
    analytic: bool = True
    precision: int | None = None
    fit_points: int = 64

    def __post_init__(self):
        lo, hi = self.window
        if not 1 <= lo < hi:
            raise ContractError(f"window must satisfy 1 <= a < b, got {self.window}")
        if self.margin < 0:
            raise ContractError("margin must be non-negative")


# ---------------------------------------------------------------------------
# lambda in mpmath, per family
# ---------------------------------------------------------------------------


def _binomial_tail(N: int, j0: int, r, ctx):
    """``sum_{j=j0}^{N} C(N, j) r^j`` without losing the small tail to cancellation."""
    if j0 > N:
        return ctx.zero
    if j0 <= 0:
        return (1 + r) ** N
    if N - j0 <= DIRECT_SUM_LIMIT:
        return ctx.fsum(math.comb(N, j) * r**j for j in range(j0, N + 1))
    extra = GUARD_BITS
    while True:
        with ctx.workprec(ctx.prec + extra):
            total = (1 + r) ** N
            val = total - ctx.fsum(math.comb(N, j) * r**j for j in range(j0))
            if val > 0 and total / val < ctx.mpf(2) ** (extra - 8):
                return +val
        extra *= 2


def _perc_t(c: Couplings, ctx):
    """``(1 - q) / q`` at working precision, not rounded through a double."""
    q = ctx.mpc(c.q)
    return (1 - q) / q


def _groups(c: Couplings, a: int, b: int, ctx) -> list:
    """Terms whose sum is ``lambda(a, b)``; colinear terms of one phase are merged.

    The sum of their moduli is ``sum_k C(a-b, k-b) |t_k|``.
    """
    if c.kind == "percolation":
        t = _perc_t(c, ctx)
        return [math.comb(a - b, k - b) * t**k for k in range(b, a + 1)]
    if c.kind == "tail_colinear":
        out = [math.comb(a - b, k - b) * ctx.mpc(v) for k, v in c.terms if b <= k <= a and v != 0]
        first = max(b, c.head_len)
        if a >= first:
            r = ctx.mpf(c.ratio)
            tail = _binomial_tail(a - b, first - b, r, ctx) * r**b
            out.append(tail * ctx.mpf(c.tail_scale) * ctx.expj(ctx.mpf(c.phase)))
        return out
    return [math.comb(a - b, k - b) * ctx.mpc(v) for k, v in c.terms if b <= k <= a]


def lam_mp(c: Couplings, a: int, b: int, ctx):
    if not 0 <= b <= a:
        raise ContractError(f"lambda(a, b) needs 0 <= b <= a, got a={a}, b={b}")
    if c.kind == "percolation" and a - b > DIRECT_SUM_LIMIT:
        q = ctx.mpc(c.q)
        return _perc_t(c, ctx) ** b * q ** (b - a)
    return ctx.fsum(_groups(c, a, b, ctx))


def abs_lam_mp(c: Couplings, a: int, b: int, ctx):
    if c.kind == "percolation":
        t = abs(_perc_t(c, ctx))
        return t**b * (1 + t) ** (a - b)
    return ctx.fsum(abs(z) for z in _groups(c, a, b, ctx))


def _pairwise_defect(terms: list, ctx):
    """``sum |z| - |sum z|`` computed without cancellation."""
    mods = [abs(z) for z in terms if z != 0]
    args = [ctx.arg(z) for z in terms if z != 0]
    num = ctx.fsum(
        4 * mods[i] * mods[j] * ctx.sin((args[i] - args[j]) / 2) ** 2
        for i in range(len(mods))
        for j in range(i + 1, len(mods))
    )
    if num == 0:
        return ctx.zero
    return num / (ctx.fsum(mods) + abs(ctx.fsum(terms)))


def _checked_lambda_n0(c: Couplings, n: int, ctx):
    value = lam_mp(c, n, 0, ctx)
    if c.kind == "percolation":
        return value  # q^-n, never zero
    # same relative threshold as the double path, scaled to the working precision
    rtol = DEGENERACY_RTOL * ctx.mpf(2) ** (DOUBLE_BITS - ctx.prec)
    if abs(value) <= rtol * abs_lam_mp(c, n, 0, ctx):
        raise DegenerateDynamics(n)
    return value


def _zeta_a_mp(c: Couplings, n: int, ctx):
    with ctx.workprec(ctx.prec + GUARD_BITS):
        return +_zeta_a_raw(c, n, ctx)


def _zeta_a_raw(c: Couplings, n: int, ctx):
    denom = abs(_checked_lambda_n0(c, n, ctx))
    if c.kind == "percolation":
        t = _perc_t(c, ctx)
        one_plus = abs(1 + t)
        step = _pairwise_defect([ctx.mpc(1), t], ctx) / one_plus
        return ctx.expm1(n * ctx.log1p(step))
    return _pairwise_defect(_groups(c, n, 0, ctx), ctx) / denom


def zeta_a(c: Couplings, n: int, precision: int | None = None) -> float:
    """Antichain defect ``sum_k C(n,k)|t_k| / |lambda(n,0)| - 1``."""
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    return float(_zeta_a_mp(c, n, mp_context(precision)))


def _zeta_c_from(abs_sum, denom, ctx):
    z = abs_sum / denom - 1
    if z < 0:
        if z < -1e-9:
            raise ConsistencyError(f"chain defect {float(z):.3e} is negative")
        return ctx.zero
    return z


def zeta_c(c: Couplings, n: int, precision: int | None = None) -> float:
    """Chain defect ``(sum_{w=1}^n |lambda(w,1)| + |lambda(0,0)|) / |lambda(n,0)| - 1``."""
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    ctx = mp_context(precision)
    with ctx.workprec(ctx.prec + GUARD_BITS):
        denom = abs(_checked_lambda_n0(c, n, ctx))
        total = ctx.fsum([abs(lam_mp(c, 0, 0, ctx))] + [abs(lam_mp(c, w, 1, ctx)) for w in range(1, n + 1)])
        return float(_zeta_c_from(total, denom, ctx))


def cp_zeta_c(q: complex, n: int, precision: int | None = None) -> float:
    """Chain defect of complex percolation straight from ``q``:
    ``|1-q| sum_{w=1}^n |q|^(n-w) + |q|^n - 1``.
    """
    q = complex(q)
    if q == 0:
        raise ContractError("percolation needs q != 0")
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    ctx = mp_context(precision)
    with ctx.workprec(ctx.prec + GUARD_BITS):
        aq = abs(ctx.mpc(q))
        value = abs(1 - ctx.mpc(q)) * ctx.fsum(aq ** (n - w) for w in range(1, n + 1)) + aq**n - 1
        return float(value)


def zeta_sweep(c: Couplings, n_max: int, precision: int | None = None) -> Iterator[tuple[int, float, float]]:
    """Yield ``(n, zeta_a, zeta_c)`` for n = 1..n_max in one incremental pass."""
    ctx = mp_context(precision)
    with ctx.workprec(ctx.prec + GUARD_BITS):
        chain_sum = abs(lam_mp(c, 0, 0, ctx))
        for n in range(1, n_max + 1):
            chain_sum += abs(lam_mp(c, n, 1, ctx))
            denom = abs(_checked_lambda_n0(c, n, ctx))
            za = _zeta_a_mp(c, n, ctx)
            zc = _zeta_c_from(chain_sum, denom, ctx)
            yield n, float(za), float(zc)


def partial_sums(c: Couplings, n_max: int, precision: int | None = None) -> tuple[list[float], list[float]]:
    """Running sums ``U_a(n)``, ``U_c(n)`` for n = 1..n_max."""
    if n_max < 1:
        raise ContractError(f"n_max must be >= 1, got {n_max}")
    ua, uc = [], []
    sa = sc = 0.0
    for stage, za, zc in zeta_sweep(c, n_max, precision):
        sa += za
        sc += zc
        ua.append(sa)
        uc.append(sc)
    return ua, uc


def fit_exponent(ns, values) -> float:
    """Least-squares ``x`` in ``values ~ const * n^-x`` on a log-log scale.

    Zero values (exactly colinear stages) are dropped; if nothing is left the
    decay is faster than any power and ``inf`` is returned.
    """
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    if keep.sum() < 2:
        return math.inf
    slope, _ = np.polyfit(np.log(ns[keep]), np.log(values[keep]), 1)
    return float(-slope)


def numeric_evidence(c: Couplings, opts: ClassifyOptions) -> dict:
    lo, hi = opts.window
    grid = set(np.unique(np.geomspace(lo, hi, opts.fit_points).astype(int)).tolist())
    ns, za_pts, zc_pts = [], [], []
    ua = uc = 0.0
    for n, za, zc in zeta_sweep(c, hi, opts.precision):
        ua += za
        uc += zc
        if n in grid:
            ns.append(n)
            za_pts.append(za)
            zc_pts.append(zc)
    return {
        "n_window": [lo, hi],
        "fitted_x_a": fit_exponent(ns, za_pts),
        "fitted_x_c": fit_exponent(ns, zc_pts),
        "U_a_tail": ua,
        "U_c_tail": uc,
    }


def _numeric_verdict(evidence: dict, margin: float) -> Status:
    if evidence["fitted_x_a"] > 1 + margin:
        return Status.EXTENDS
    if evidence["fitted_x_c"] < 1 - margin:
        return Status.DOES_NOT_EXTEND
    return Status.INCONCLUSIVE


def _on_unit_interval(q: complex, tol: float) -> bool:
    return abs(q.imag) <= tol * max(1.0, abs(q)) and 0 <= q.real <= 1


def _analytic(c: Couplings, tol: float) -> tuple[Status, Basis, str] | None:
    if c.kind == "percolation":
        if _on_unit_interval(c.q, tol):
            return Status.EXTENDS, Basis.CP, "q in [0, 1]"
        return Status.DOES_NOT_EXTEND, Basis.CP, "q outside [0, 1]"
    if c.is_real_positive(tol):
        return Status.EXTENDS, Basis.REAL_POSITIVE, "all t_k on R+"
    if c.kind == "tail_colinear":
        return Status.EXTENDS, Basis.CLAIM4, f"colinear {c.rule} tail beyond k0={c.head_len - 1}"
    ks = [k for k in c.support() if k > 0]
    if len(ks) == 1:
        if ks[0] > 1:
            return Status.EXTENDS, Basis.CLAIM3, f"single coupling at k={ks[0]} > 1"
        return Status.DOES_NOT_EXTEND, Basis.CLAIM3, "single coupling t_1 off R+"
    gap = ks[-1] - ks[-2]
    if gap > 1:
        return Status.EXTENDS, Basis.CLAIM3, f"top gap k_m - k_(m-1) = {gap} > 1"
    return Status.INCONCLUSIVE, Basis.CLAIM3, "top gap k_m - k_(m-1) = 1 is undecided"


def _assert_nondegenerate(c: Couplings, n_max: int) -> None:
    for n in range(1, n_max + 1):
        lambda_n0(c, n)


def classify(c: Couplings, opts: ClassifyOptions | None = None) -> Verdict:
    """Decide whether the measure has bounded variation (extends to the sigma-algebra).

    Analytic rules take precedence; the power-law fit of the closed-form
    defects is only advisory and runs when no rule applies, when a rule
    leaves the case open, or when evidence is requested.
    """
    opts = opts or ClassifyOptions()
    decided = _analytic(c, opts.real_tol) if opts.analytic else None
    want_evidence = opts.evidence
    if want_evidence is None:
        want_evidence = decided is None or decided[0] is Status.INCONCLUSIVE
    if want_evidence:
        evidence = numeric_evidence(c, opts)
    else:
        _assert_nondegenerate(c, min(opts.window[0], DIRECT_SUM_LIMIT))
        evidence = {}
    if decided is not None:
        status, basis, note = decided
        return Verdict(status, basis, evidence, note)
    return Verdict(_numeric_verdict(evidence, opts.margin), Basis.NUMERIC, evidence, "power-law fit of closed forms")


__all__ = [
    "Basis",
    "ClassifyOptions",
    "Status",
    "Verdict",
    "classify",
    "cp_zeta_c",
    "fit_exponent",
    "lam_mp",
    "partial_sums",
    "zeta_a",
    "zeta_c",
    "zeta_sweep",
    "DOUBLE_BITS",
]
