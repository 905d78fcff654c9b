"""Closed-form results for the buffer-size-one switch.

The capacity expressions accept numpy arrays for the policy arguments, which
is how :mod:`qswitch.region` evaluates whole policy grids at once.

Area convention: the area under the TDM segment is taken as
``(C2*^2 + C3*^2) / 4``, the square of the segment length over four.  This
is the quantity whose ratio to the area above TDM simplifies to the
rational function in :func:`area_rational`.  The true triangle area
``C2* C3* / 2`` is smaller unless ``C2* == C3*``; it is reported alongside
as ``a_tdm_geometric``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CapacityPoint, PolicyParams, SwitchConfig, ValidationError, validate_config

FARTHEST_POLICY = PolicyParams(0.0, 1.0, 1.0)
C2_MAX_POLICY = PolicyParams(1.0, 0.0, 0.0)
C3_MAX_POLICY = PolicyParams(0.0, 1.0, 0.0)


@dataclass(frozen=True)
class Extremes:
    c2_max: float
    c3_max: float
    c2_hat: float
    c3_hat: float


@dataclass(frozen=True)
class BoundingLines:
    line1: tuple[float, float]  # (slope, intercept) through (0, C2*) and the farthest point
    line2: tuple[float, float]  # (slope, intercept) through the farthest point and (C3*, 0)
    anchor_points: tuple[tuple[float, float], ...]  # (c3, c2) pairs

    def upper(self, c3):
        """Smallest of the two bounds at ``c3``."""
        (s1, b1), (s2, b2) = self.line1, self.line2
        return np.minimum(s1 * np.asarray(c3) + b1, s2 * np.asarray(c3) + b2)

    def intersection(self) -> tuple[float, float]:
        (s1, b1), (s2, b2) = self.line1, self.line2
        x = (b2 - b1) / (s1 - s2)
        return x, s1 * x + b1


@dataclass(frozen=True)
class AreaBreakdown:
    a_triangle: float
    a_tdm: float
    a_total: float
    ratio: float
    a_tdm_geometric: float = math.nan

    @property
    def ratio_geometric(self) -> float:
        return self.a_triangle / (self.a_triangle + self.a_tdm_geometric)


def _require_b1(cfg: SwitchConfig, *, alpha_zero: bool) -> None:
    if cfg.buffer_size != 1:
        raise ValidationError("closed forms exist for B=1 only; use the CTMC solver for B=2")
    if alpha_zero and cfg.alpha != 0:
        raise ValidationError("this closed form assumes alpha=0; use the decoherence variant")


def b1_capacities(k, mu, r1, r2, r3):
    """(C3, C2) for B=1 without decoherence; array-friendly."""
    rb1 = 1 - r1
    d = (k - 2 + 2 * r3) * ((k - 1) * r1 + k) + (k - 1) * rb1 * ((k - 2) * r2 + k)
    c2 = k * (k - 1) * mu * (k - 2 + 2 * r3 - (k - 2) * r2 * rb1) / d
    c3 = k * (k - 1) * (k - 2) * mu * r2 * rb1 / d
    return c3, c2


def b1_capacities_decoherence(k, mu, alpha, r1, r2, r3):
    """(C3', C2') for B=1 with decoherence rate ``alpha``; array-friendly."""
    rb1 = 1 - r1
    d = (k - 1) * mu * rb1 * ((k - 2) * mu * r2 + k * mu) + (
        k * mu + (k - 1) * mu * r1 + alpha
    ) * ((k - 2 + 2 * r3) * mu + 2 * alpha)
    c2 = k * (k - 1) * mu**2 * (2 * (alpha * r1 + mu * r3) + (k - 2) * mu * (1 - r2 * rb1)) / d
    c3 = k * mu**3 * (k - 1) * (k - 2) * rb1 * r2 / d
    return c3, c2


def stationary_b1(cfg: SwitchConfig, pol: PolicyParams) -> dict[tuple[int, int], float]:
    """Closed-form stationary probabilities of the B=1 chain (alpha=0)."""
    validate_config(cfg, pol)
    _require_b1(cfg, alpha_zero=True)
    k = cfg.k
    r1, r2, r3 = pol.as_tuple()
    d = (k - 2 + 2 * r3) * ((k - 1) * r1 + k) + (k - 1) * (1 - r1) * ((k - 2) * r2 + k)
    p11 = k * (k - 1) * (1 - r1) / d
    p10 = k * (k - 2 + 2 * r3) / d
    return {(0, 0): 1 - p10 - p11, (1, 0): p10, (1, 1): p11}


def capacities_b1(cfg: SwitchConfig, pol: PolicyParams) -> CapacityPoint:
    validate_config(cfg, pol)
    _require_b1(cfg, alpha_zero=True)
    c3, c2 = b1_capacities(cfg.k, cfg.mu, *pol.as_tuple())
    return CapacityPoint(c3=float(c3), c2=float(c2), policy=pol)


def capacities_b1_decoherence(cfg: SwitchConfig, pol: PolicyParams) -> CapacityPoint:
    validate_config(cfg, pol)
    _require_b1(cfg, alpha_zero=False)
    c3, c2 = b1_capacities_decoherence(cfg.k, cfg.mu, cfg.alpha, *pol.as_tuple())
    return CapacityPoint(c3=float(c3), c2=float(c2), policy=pol)


def extremes_b1(cfg: SwitchConfig) -> Extremes:
    """Maximum C2, maximum C3 and the point farthest above TDM.

    Without decoherence the maxima are ``k(k-1)mu/(2k-1)`` and
    ``k(k-1)(k-2)mu / (k(2k-3) + (k-1)(k-2))``.  With decoherence they are
    evaluated at the policies (1,0,0) and (0,1,0); the farthest point is at
    (0,1,1) in both cases.
    """
    validate_config(cfg, FARTHEST_POLICY)
    _require_b1(cfg, alpha_zero=False)
    k, mu, alpha = cfg.k, cfg.mu, cfg.alpha
    if alpha == 0:
        c2_max = k * mu * (k - 1) / (2 * k - 1)
        c3_max = k * (k - 1) * (k - 2) * mu / (k * (2 * k - 3) + (k - 1) * (k - 2))
        c3_hat, c2_hat = b1_capacities(k, mu, *FARTHEST_POLICY.as_tuple())
    else:
        _, c2_max = b1_capacities_decoherence(k, mu, alpha, *C2_MAX_POLICY.as_tuple())
        c3_max, _ = b1_capacities_decoherence(k, mu, alpha, *C3_MAX_POLICY.as_tuple())
        c3_hat, c2_hat = b1_capacities_decoherence(k, mu, alpha, *FARTHEST_POLICY.as_tuple())
    return Extremes(float(c2_max), float(c3_max), float(c2_hat), float(c3_hat))


def bounding_lines_b1(cfg: SwitchConfig) -> BoundingLines:
    """The two lines bounding the B=1 capacity region from above."""
    _require_b1(cfg, alpha_zero=False)
    ext = extremes_b1(cfg)
    k, mu, a = cfg.k, cfg.mu, cfg.alpha
    if a == 0:
        line1 = (-(3 * k - 2) / (2 * k - 1), mu * k * (k - 1) / (2 * k - 1))
        line2 = (-(k * (k - 2) + 2 * (k - 1) ** 2) / (k * (k - 2)), mu * (k - 1))
    else:
        line1 = (
            -(mu * (3 * k - 2) * (a + (k - 2) * mu) + 2 * a**2)
            / (mu * (k - 2) * ((2 * k - 1) * mu + a)),
            k * (k - 1) * mu**2 / ((2 * k - 1) * mu + a),
        )
        line2 = (
            -(2 * (k - 1) ** 2 * mu**2 + (k * mu + a) * ((k - 2) * mu + 2 * a))
            / (mu * (k - 2) * (k * mu + a)),
            k * (k - 1) * mu**2 / (k * mu + a),
        )
    anchors = ((0.0, ext.c2_max), (ext.c3_hat, ext.c2_hat), (ext.c3_max, 0.0))
    return BoundingLines(line1, line2, anchors)


def tdm_gap(c3, c2, c2_max: float, c3_max: float):
    """Signed vertical gap f(x, y) = y - C2*(1 - x/C3*) above the TDM line."""
    return c2 - c2_max * (1 - c3 / c3_max)


def tdm_distance(c3, c2, c2_max: float, c3_max: float):
    """Signed Euclidean distance above the TDM line."""
    return tdm_gap(c3, c2, c2_max, c3_max) / math.sqrt(1 + (c2_max / c3_max) ** 2)


def triangle_areas(c2_max: float, c3_max: float, gap: float) -> AreaBreakdown:
    """Areas of the triangle above TDM (apex height ``gap``) and under TDM."""
    a_tri = abs(gap) * c3_max / 2
    a_tdm = (c2_max**2 + c3_max**2) / 4
    a_total = a_tri + a_tdm
    return AreaBreakdown(
        a_triangle=a_tri,
        a_tdm=a_tdm,
        a_total=a_total,
        ratio=a_tri / a_total,
        a_tdm_geometric=c2_max * c3_max / 2,
    )


def area_ratio_b1(cfg: SwitchConfig) -> AreaBreakdown:
    """Share of the capacity-region area that lies above the TDM segment (alpha=0)."""
    _require_b1(cfg, alpha_zero=True)
    ext = extremes_b1(cfg)
    gap = tdm_gap(ext.c3_hat, ext.c2_hat, ext.c2_max, ext.c3_max)
    return triangle_areas(ext.c2_max, ext.c3_max, gap)


def area_rational(k: int) -> float:
    """(C2*^2 + C3*^2) / (2 |f(hat)| C3*) as a rational function of k."""
    num = 39 * k**6 - 220 * k**5 + 493 * k**4 - 568 * k**3 + 362 * k**2 - 120 * k + 16
    den = 4 * (6 * k**5 - 33 * k**4 + 67 * k**3 - 62 * k**2 + 26 * k - 4)
    return num / den


def area_ratio_rational(k: int) -> float:
    return 1.0 / (1.0 + area_rational(k))
