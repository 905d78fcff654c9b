"""Core value types for the entanglement switch model.

A switch connects ``k`` users, each over its own link.  Every link produces
link entanglements as a Poisson process with rate ``mu``; the switch stores
at most ``buffer_size`` qubits per link, and every stored qubit decoheres
after an exponential time with rate ``alpha``.  Policies are randomized and
described by three probabilities ``r1, r2, r3``.

All types are frozen dataclasses.  They do not validate themselves on
construction; :func:`validate_config` is the single gate every public
operation passes through.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Integral, Real

MAX_LINKS = 10**6


class ValidationError(ValueError):
    """Raised when a configuration or policy violates a model invariant."""


@dataclass(frozen=True)
class SwitchConfig:
    """System parameters: link count, generation and decoherence rates, buffer size."""

    k: int
    mu: float = 1.0
    alpha: float = 0.0
    buffer_size: int = 1


@dataclass(frozen=True)
class PolicyParams:
    """Randomized switching policy.

    ``r1``: probability of a BSM when a second link entanglement appears
    while one is stored (buffer size one only).
    ``r2``: probability of a GHZ measurement (instead of a BSM) when a third
    distinct link produces an entanglement.
    ``r3``: probability of a BSM (instead of a drop) when a full link
    produces another entanglement.
    """

    r1: float
    r2: float
    r3: float

    @classmethod
    def parse(cls, text: str) -> PolicyParams:
        """Build a policy from a comma-separated triple such as ``"0,1,0.5"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValidationError(f"policy needs three comma-separated values, got {text!r}")
        try:
            r1, r2, r3 = (float(p) for p in parts)
        except ValueError as exc:
            raise ValidationError(f"policy values must be numbers: {text!r}") from exc
        return cls(r1, r2, r3)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r1, self.r2, self.r3)


@dataclass(frozen=True)
class CapacityPoint:
    """Tripartite (GHZ/s) and bipartite (BSM/s) capacity reached by ``policy``."""

    c3: float
    c2: float
    policy: PolicyParams | None = None


def _is_probability(x) -> bool:
    return isinstance(x, Real) and not isinstance(x, bool) and 0.0 <= x <= 1.0


def validate_config(
    cfg: SwitchConfig, pol: PolicyParams
) -> tuple[SwitchConfig, PolicyParams]:
    """Check every model invariant and return the pair unchanged.

    Raises:
        ValidationError: naming the first invariant that fails.
    """
    k = cfg.k
    if isinstance(k, bool) or not isinstance(k, Integral):
        raise ValidationError(f"k must be an integer, got {k!r}")
    if k < 3:
        raise ValidationError(f"k >= 3 required (got k={k})")
    if k > MAX_LINKS:
        raise ValidationError(f"k <= {MAX_LINKS} required (got k={k})")
    if not (isinstance(cfg.mu, Real) and math.isfinite(cfg.mu) and cfg.mu > 0):
        raise ValidationError(f"mu must be a positive finite rate (got mu={cfg.mu!r})")
    if not (isinstance(cfg.alpha, Real) and math.isfinite(cfg.alpha) and cfg.alpha >= 0):
        raise ValidationError(f"alpha must be a nonnegative finite rate (got alpha={cfg.alpha!r})")
    if cfg.buffer_size not in (1, 2) or isinstance(cfg.buffer_size, bool):
        raise ValidationError(f"buffer_size must be 1 or 2 (got {cfg.buffer_size!r})")
    for name in ("r1", "r2", "r3"):
        value = getattr(pol, name)
        if not _is_probability(value):
            raise ValidationError(f"{name} must be a probability in [0, 1] (got {value!r})")
    if cfg.buffer_size == 2 and pol.r1 != 0:
        raise ValidationError(f"r1 must be 0 for B=2 (got r1={pol.r1})")
    return cfg, pol


def rate_from_slot(tau: float, p: float) -> float:
    """Convert a slotted link (slot length ``tau``, success probability ``p``) to a rate.

    The time to the first successful slot is approximated by an exponential
    with mean ``tau / p``.
    """
    if not (tau > 0 and math.isfinite(tau)):
        raise ValidationError(f"tau must be positive (got {tau!r})")
    if not (0 < p <= 1):
        raise ValidationError(f"p must lie in (0, 1] (got {p!r})")
    return p / tau
