"""Small numeric helpers: complex literals, exact-rounded sums, mpmath contexts."""
from __future__ import annotations

import cmath
import math
import re
from typing import Iterable

import mpmath

from .errors import ConfigError

DOUBLE_BITS = 53

_LITERAL_CHARS = re.compile(r"^[0-9.eE+\-i]+$")


def parse_complex(text: str | float | int | complex) -> complex:
    """Parse a literal of the form ``a+bi`` (``3``, ``-2i``, ``i``, ``0.5-1e-3i`` ...)."""
    if isinstance(text, bool):
        raise ConfigError(f"not a complex literal: {text!r}")
    if isinstance(text, (int, float, complex)):
        value = complex(text)
    else:
        s = str(text).strip().replace(" ", "")
        if not s or not _LITERAL_CHARS.match(s) or s.count("i") > 1 or ("i" in s and not s.endswith("i")):
            raise ConfigError(f"unparseable complex literal {text!r}; expected the form 'a+bi'")
        try:
            value = complex(s.replace("i", "j"))
        except ValueError:
            raise ConfigError(f"unparseable complex literal {text!r}; expected the form 'a+bi'") from None
    if not cmath.isfinite(value):
        raise ConfigError(f"complex literal {text!r} is not finite")
    return value


def format_complex(z: complex) -> str:
    z = complex(z)
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def csum(values: Iterable[complex]) -> complex:
    """Correctly rounded complex sum; the result does not depend on term order."""
    re_parts = []
    im_parts = []
    for v in values:
        re_parts.append(v.real)
        im_parts.append(v.imag)
    return complex(math.fsum(re_parts), math.fsum(im_parts))


def mp_context(bits: int | None = None) -> mpmath.ctx_mp.MPContext:
    """A private mpmath context; ``None`` means a double-width mantissa."""
    ctx = mpmath.MPContext()
    ctx.prec = DOUBLE_BITS if bits is None else int(bits)
    if ctx.prec < DOUBLE_BITS:
        raise ConfigError(f"precision must be at least {DOUBLE_BITS} bits, got {bits}")
    return ctx


def is_finite(z) -> bool:
    try:
        return cmath.isfinite(complex(z))
    except (OverflowError, TypeError):
        return False
