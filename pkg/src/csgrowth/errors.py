"""Exception hierarchy shared by every module."""


class CSGError(Exception):
    """Base class for all package errors."""


class ContractError(CSGError, ValueError):
    """An argument violates an operation's precondition."""


class ConfigError(CSGError, ValueError):
    """A coupling specification or run configuration is malformed."""


class CapExceeded(CSGError):
    """A requested level exceeds the configured enumeration cap."""

    def __init__(self, n: int, cap: int):
        self.n = n
        self.cap = cap
        super().__init__(
            f"level n={n} exceeds the enumeration cap ({cap}); raise the cap explicitly to proceed"
        )


class DegenerateDynamics(CSGError):
    """lambda(n, 0) vanishes, so the transition amplitudes at stage n are undefined."""

    def __init__(self, stage: int, detail: str = ""):
        self.stage = stage
        msg = f"degenerate dynamics at stage n={stage}: lambda(n,0) = 0"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class UnsupportedDynamics(CSGError):
    """The operation needs real non-negative couplings."""


class ConsistencyError(CSGError):
    """An internal invariant failed beyond floating-point noise."""
