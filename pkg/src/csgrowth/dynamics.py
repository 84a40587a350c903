"""Coupling families and the transition amplitudes they induce.

Every family is normalised on construction so that ``t_0 == 1``; the original
``t_0`` is kept in :attr:`Couplings.scale`.  Amplitudes are ratios of
``lambda`` values and therefore do not see the rescaling.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Any, Sequence

from .errors import ConfigError, ContractError, DegenerateDynamics
from .numeric import csum, format_complex, parse_complex

FAMILIES = ("explicit", "single_k", "finite_set", "percolation", "tail_colinear")
TAIL_RULES = {"geometric": "geometric", "power4": "power4", "power_of_4": "power4"}

# |lambda(n,0)| below this multiple of sum_k C(n,k)|t_k| is treated as an exact zero
DEGENERACY_RTOL = 64 * 2.0**-53
# terms with |Im t| <= REAL_TOL * |t| and Re t >= 0 count as lying on R+
REAL_TOL = 1e-14
# beyond this many binomial terms the closed forms are used
DIRECT_SUM_LIMIT = 64


@dataclass(frozen=True)
class Couplings:
    """An immutable coupling family ``t_0, t_1, ...``.

    ``terms`` holds the non-zero normalised couplings ``(k, t_k)`` of the
    finite families, or the head ``t_0..t_k0`` of ``tail_colinear``.  The
    tail of ``tail_colinear`` is ``tail_scale * ratio**k * exp(i*phase)``.
    """

    kind: str
    terms: tuple[tuple[int, complex], ...] = ()
    q: complex | None = None
    rule: str | None = None
    ratio: float = 0.0
    phase: float = 0.0
    tail_scale: float = 1.0
    head_len: int = 0
    scale: complex = 1.0
    source: str = field(default="", compare=False)

    # -- constructors -----------------------------------------------------

    @classmethod
    def explicit(cls, t: Sequence[complex | str]) -> Couplings:
        values = [parse_complex(v) for v in t]
        if not values:
            raise ConfigError("explicit family needs at least t_0")
        t0 = values[0]
        if t0 == 0:
            raise ConfigError("t_0 must be non-zero")
        terms = tuple((k, v / t0) for k, v in enumerate(values) if v != 0)
        terms = ((0, 1 + 0j),) + terms[1:]
        src = {"family": "explicit", "t": [format_complex(v) for v in values]}
        return cls("explicit", terms=terms, scale=t0, source=json.dumps(src))

    @classmethod
    def single_k(cls, k: int, s: float, phi: float) -> Couplings:
        return cls._finite("single_k", [(k, s, phi)], {"family": "single_k", "k": k, "s": s, "phi": phi})

    @classmethod
    def finite_set(cls, terms: Sequence[tuple[int, float, float]]) -> Couplings:
        src = {"family": "finite_set", "terms": [{"k": k, "s": s, "phi": p} for k, s, p in terms]}
        return cls._finite("finite_set", list(terms), src)

    @classmethod
    def _finite(cls, kind: str, triples: list, src: dict) -> Couplings:
        if not triples:
            raise ConfigError(f"{kind} needs at least one (k, s, phi) term")
        prev = 0
        out = [(0, 1 + 0j)]
        for k, s, phi in triples:
            k, s, phi = int(k), float(s), float(phi)
            if k <= prev:
                raise ConfigError(f"{kind}: k values must be strictly increasing and >= 1, got k={k}")
            if not (s > 0 and math.isfinite(s)) or not math.isfinite(phi):
                raise ConfigError(f"{kind}: need s > 0 and finite phi, got s={s}, phi={phi}")
            out.append((k, cmath.rect(s, phi)))
            prev = k
        return cls(kind, terms=tuple(out), source=json.dumps(src))

    @classmethod
    def percolation(cls, q: complex | str) -> Couplings:
        qv = parse_complex(q)
        if qv == 0:
            raise ConfigError("percolation needs q != 0")
        src = {"family": "percolation", "q": format_complex(qv)}
        return cls("percolation", q=qv, source=json.dumps(src))

    @classmethod
    def tail_colinear(
        cls, head: Sequence[complex | str], rule: str = "geometric", s: float = 1.0, phi0: float = 0.0
    ) -> Couplings:
        values = [parse_complex(v) for v in head]
        if not values or values[0] == 0:
            raise ConfigError("tail_colinear needs a head starting with a non-zero t_0")
        if rule not in TAIL_RULES:
            raise ConfigError(f"unknown tail rule {rule!r}; expected one of {sorted(TAIL_RULES)}")
        rule = TAIL_RULES[rule]
        s = float(s)
        if rule == "geometric" and not (s > 0 and math.isfinite(s)):
            raise ConfigError(f"geometric tail needs s > 0, got {s}")
        t0 = values[0]
        ratio = s if rule == "geometric" else 4.0
        src = {"family": "tail_colinear", "head": [format_complex(v) for v in values], "rule": rule, "phi0": phi0}
        if rule == "geometric":
            src["s"] = s
        return cls(
            "tail_colinear",
            terms=tuple((k, v / t0) for k, v in enumerate(values)),
            rule=rule,
            ratio=ratio,
            phase=float(phi0) - cmath.phase(t0),
            tail_scale=1.0 / abs(t0),
            head_len=len(values),
            scale=t0,
            source=json.dumps(src),
        )

    # -- queries ----------------------------------------------------------

    @property
    def t(self) -> complex:
        """Percolation parameter ``(1 - q) / q``."""
        if self.kind != "percolation":
            raise AttributeError("t is only defined for the percolation family")
        return (1 - self.q) / self.q

    def t_value(self, k: int) -> complex:
        if k < 0:
            raise ContractError(f"coupling index must be non-negative, got {k}")
        if self.kind == "percolation":
            return self.t**k if k else 1 + 0j
        if self.kind == "tail_colinear":
            if k < self.head_len:
                return self.terms[k][1]
            return self.tail_scale * cmath.rect(self.ratio**k, self.phase)
        for kk, v in self.terms:
            if kk == k:
                return v
        return 0j

    def support(self) -> list[int] | None:
        """Indices of non-zero couplings, or ``None`` for infinite support."""
        if self.kind in ("percolation", "tail_colinear"):
            return None
        return [k for k, _ in self.terms]

    @property
    def nonreal_t0(self) -> bool:
        """The supplied ``t_0`` was off the positive real axis before rescaling."""
        z = complex(self.scale)
        return not (z.real > 0 and abs(z.imag) <= REAL_TOL * abs(z))

    def is_real_positive(self, tol: float = REAL_TOL) -> bool:
        """Every normalised ``t_k`` lies on the closed positive real half-line."""

        def on_axis(z: complex) -> bool:
            return z == 0 or (z.real > 0 and abs(z.imag) <= tol * abs(z))

        if self.kind == "percolation":
            return on_axis(self.t)
        if self.kind == "tail_colinear":
            return all(on_axis(v) for _, v in self.terms) and on_axis(cmath.rect(1.0, self.phase))
        return all(on_axis(v) for _, v in self.terms)

    def to_spec(self) -> dict[str, Any]:
        return json.loads(self.source) if self.source else {"family": self.kind}

    def rescaled(self, factor: complex) -> Couplings:
        """The same family with every ``t_k`` multiplied by ``factor``."""
        factor = complex(factor)
        if factor == 0:
            raise ContractError("rescale factor must be non-zero")
        if self.kind == "percolation":
            return self  # t_0 = 1 is built into the family
        if self.kind == "tail_colinear":
            return Couplings.tail_colinear(
                [format_complex(v * self.scale * factor) for _, v in self.terms],
                rule=self.rule,
                s=self.ratio,
                phi0=self.phase + cmath.phase(self.scale) + cmath.phase(factor),
            )._with_tail_scale(self.tail_scale)
        t = [0j] * (self.terms[-1][0] + 1)
        for k, v in self.terms:
            t[k] = v * self.scale * factor
        return Couplings.explicit(t)

    def _with_tail_scale(self, tail_scale: float) -> Couplings:
        return Couplings(**{**self.__dict__, "tail_scale": tail_scale})

    def __str__(self) -> str:
        return self.source or self.kind


# ---------------------------------------------------------------------------
# lambda and amplitudes
# ---------------------------------------------------------------------------


def t_value(c: Couplings, k: int) -> complex:
    return c.t_value(k)


def _check_pair(a: int, b: int) -> None:
    if not 0 <= b <= a:
        raise ContractError(f"lambda(a, b) needs 0 <= b <= a, got a={a}, b={b}")


def lam(c: Couplings, a: int, b: int) -> complex:
    """``lambda(a, b) = sum_{k=b}^{a} C(a-b, k-b) t_k`` in double precision."""
    _check_pair(a, b)
    if c.kind == "percolation":
        # sum_k C(a-b, k-b) t^k = t^b (1 + t)^(a-b), and 1 + t = 1/q
        return c.t**b * c.q ** (b - a)
    support = c.support()
    ks = range(b, a + 1) if support is None else (k for k in support if b <= k <= a)
    return csum(comb(a - b, k - b) * c.t_value(k) for k in ks)


def abs_lam(c: Couplings, a: int, b: int) -> float:
    """``sum_{k=b}^{a} C(a-b, k-b) |t_k|``, the colinear upper bound on |lambda(a, b)|."""
    _check_pair(a, b)
    support = c.support()
    ks = range(b, a + 1) if support is None else (k for k in support if b <= k <= a)
    return math.fsum(comb(a - b, k - b) * abs(c.t_value(k)) for k in ks)


def lambda_n0(c: Couplings, n: int) -> complex:
    """``lambda(n, 0)``, raising :class:`DegenerateDynamics` when it vanishes."""
    value = lam(c, n, 0)
    if c.kind == "percolation":
        return value  # q^-n, never zero
    if abs(value) <= DEGENERACY_RTOL * abs_lam(c, n, 0):
        raise DegenerateDynamics(n)
    return value


def amplitude(c: Couplings, n: int, varpi: int, m: int) -> complex:
    """Transition amplitude ``lambda(varpi, m) / lambda(n, 0)`` out of a level-n node."""
    if not 0 <= m <= varpi <= n:
        raise ContractError(f"need 0 <= m <= varpi <= n, got n={n}, varpi={varpi}, m={m}")
    return lam(c, varpi, m) / lambda_n0(c, n)


def q_from_t(c: Couplings, n: int) -> complex:
    """Gregarious coupling ``q_n = 1 / lambda(n, 0)``."""
    return 1 / lambda_n0(c, n)


def t_from_q(q: Sequence[complex]) -> list[complex]:
    """Binomial inversion ``t_n = sum_k (-1)^(n-k) C(n, k) / q_k``."""
    inv = []
    for k, qk in enumerate(q):
        if qk == 0:
            raise DegenerateDynamics(k, "q_k = 0")
        inv.append(1 / qk)
    return [csum((-1) ** (n - k) * comb(n, k) * inv[k] for k in range(n + 1)) for n in range(len(inv))]


def classical_prob(q: Sequence[float], n: int, varpi: int, m: int) -> float:
    """Classical transition probability from the gregarious couplings ``q_k``.

    ``P = sum_{k=0}^{m} (-1)^k C(m, k) q_n / q_{varpi-k}``.
    """
    if not 0 <= m <= varpi <= n:
        raise ContractError(f"need 0 <= m <= varpi <= n, got n={n}, varpi={varpi}, m={m}")
    if len(q) <= n:
        raise ContractError(f"need q_0..q_{n}, got {len(q)} values")
    for k in [n] + [varpi - j for j in range(m + 1)]:
        if q[k] == 0:
            raise DegenerateDynamics(k, "q_k = 0")
    terms = [(-1) ** j * comb(m, j) * q[n] / q[varpi - j] for j in range(m + 1)]
    if all(isinstance(x, complex) for x in terms):
        return csum(terms)
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# coupling grammar
# ---------------------------------------------------------------------------

_FIELDS = {
    "explicit": {"family", "t"},
    "single_k": {"family", "k", "s", "phi"},
    "finite_set": {"family", "terms"},
    "percolation": {"family", "q"},
    "tail_colinear": {"family", "head", "rule", "s", "phi0"},
}
_REQUIRED = {
    "explicit": {"t"},
    "single_k": {"k", "s", "phi"},
    "finite_set": {"terms"},
    "percolation": {"q"},
    "tail_colinear": {"head", "rule"},
}


def couplings_from_spec(spec: dict[str, Any] | str) -> Couplings:
    """Build a family from its JSON specification (a dict, JSON text, or a file path)."""
    if isinstance(spec, str):
        text = spec
        if not spec.lstrip().startswith("{"):
            try:
                text = Path(spec).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read coupling file {spec!r}: {exc}") from None
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"coupling specification is not valid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise ConfigError("coupling specification must be a JSON object")
    family = spec.get("family")
    if family not in _FIELDS:
        raise ConfigError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    unknown = set(spec) - _FIELDS[family]
    if unknown:
        raise ConfigError(f"unknown field(s) for family {family}: {', '.join(sorted(unknown))}")
    missing = _REQUIRED[family] - set(spec)
    if missing:
        raise ConfigError(f"family {family} is missing field(s): {', '.join(sorted(missing))}")
    try:
        if family == "explicit":
            return Couplings.explicit(spec["t"])
        if family == "single_k":
            return Couplings.single_k(spec["k"], spec["s"], spec["phi"])
        if family == "finite_set":
            terms = []
            for term in spec["terms"]:
                if set(term) != {"k", "s", "phi"}:
                    raise ConfigError("each finite_set term needs exactly the fields k, s, phi")
                terms.append((term["k"], term["s"], term["phi"]))
            return Couplings.finite_set(terms)
        if family == "percolation":
            return Couplings.percolation(spec["q"])
        if spec["rule"] == "geometric" and "s" not in spec:
            raise ConfigError("geometric tail_colinear family is missing field: s")
        return Couplings.tail_colinear(spec["head"], spec["rule"], spec.get("s", 1.0), spec.get("phi0", 0.0))
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed {family} specification: {exc}") from None
