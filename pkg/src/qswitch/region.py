"""Capacity regions from policy sweeps.

A sweep evaluates (C3, C2) on a regular grid of policies, then derives the
TDM segment between the two extreme points, the Pareto frontier, the point
farthest above TDM, and the area split above/below TDM.

For B=2 (and for any sweep) the frontier is the sampled Pareto set joined
piecewise-linearly, so it depends on the grid resolution.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytic, ctmc
from .analytic import AreaBreakdown
from .model import CapacityPoint, PolicyParams, SwitchConfig, ValidationError, validate_config

ENGINES = ("analytic", "ctmc")


@dataclass(frozen=True)
class RegionResult:
    cfg: SwitchConfig
    engine: str
    grid_step: float
    points: tuple[CapacityPoint, ...]
    tdm_segment: tuple[tuple[float, float], tuple[float, float]]
    upper_boundary: tuple[CapacityPoint, ...]
    on_frontier: tuple[bool, ...]
    areas: AreaBreakdown
    farthest_point: CapacityPoint

    @property
    def c2_max(self) -> float:
        return self.tdm_segment[0][1]

    @property
    def c3_max(self) -> float:
        return self.tdm_segment[1][0]

    def frontier_array(self) -> np.ndarray:
        return np.array([(p.c3, p.c2) for p in self.upper_boundary])

    def summary(self) -> dict:
        fp = self.farthest_point
        return {
            "k": self.cfg.k,
            "mu": self.cfg.mu,
            "alpha": self.cfg.alpha,
            "buffer_size": self.cfg.buffer_size,
            "engine": self.engine,
            "grid_step": self.grid_step,
            "n_points": len(self.points),
            "n_frontier": len(self.upper_boundary),
            "c2_max": self.c2_max,
            "c3_max": self.c3_max,
            "farthest_point": {
                "c3": fp.c3,
                "c2": fp.c2,
                "policy": list(fp.policy.as_tuple()),
                "tdm_distance": float(analytic.tdm_distance(fp.c3, fp.c2, self.c2_max, self.c3_max)),
            },
            "areas": {
                "a_triangle": self.areas.a_triangle,
                "a_tdm": self.areas.a_tdm,
                "a_total": self.areas.a_total,
                "ratio": self.areas.ratio,
                "a_tdm_geometric": self.areas.a_tdm_geometric,
                "ratio_geometric": self.areas.ratio_geometric,
            },
            "frontier_area": frontier_area(self.frontier_array()),
        }


@dataclass(frozen=True)
class BufferComparison:
    b1: RegionResult
    b2: RegionResult
    delta_c2_max: float
    delta_c3_max: float


def policy_grid(step: float) -> np.ndarray:
    """Probabilities 0, step, 2*step, ... with 1 always included."""
    if not (isinstance(step, (int, float)) and 0 < step <= 0.5):
        raise ValidationError(f"grid_step must lie in (0, 0.5] (got {step!r})")
    n = round(1 / step)
    if math.isclose(n * step, 1.0, rel_tol=1e-9):
        return np.linspace(0.0, 1.0, n + 1)
    vals = np.arange(0.0, 1.0, step)
    return np.append(vals, 1.0)


def _policies(cfg: SwitchConfig, step: float) -> list[PolicyParams]:
    g = [float(x) for x in policy_grid(step)]
    r1_values = g if cfg.buffer_size == 1 else [0.0]
    return [PolicyParams(r1, r2, r3) for r1, r2, r3 in itertools.product(r1_values, g, g)]


def _evaluate(cfg: SwitchConfig, policies: list[PolicyParams], engine: str) -> np.ndarray:
    if engine == "analytic":
        r = np.array([p.as_tuple() for p in policies])
        if cfg.alpha == 0:
            c3, c2 = analytic.b1_capacities(cfg.k, cfg.mu, r[:, 0], r[:, 1], r[:, 2])
        else:
            c3, c2 = analytic.b1_capacities_decoherence(
                cfg.k, cfg.mu, cfg.alpha, r[:, 0], r[:, 1], r[:, 2]
            )
        return np.column_stack((c3, c2))
    out = np.empty((len(policies), 2))
    for i, pol in enumerate(policies):
        _, cp = ctmc.solve(cfg, pol)
        out[i] = (cp.c3, cp.c2)
    return out


def pareto_frontier(values: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Indices of the nondominated (c3, c2) rows, ordered by increasing c3.

    Points closer than ``tol`` (relative to the largest capacity) count as
    equal; among equal points the one with larger c2 is kept.
    """
    scale = tol * max(1.0, float(np.abs(values).max(initial=0.0)))
    order = np.lexsort((-values[:, 1], -values[:, 0]))
    keep = []
    best = -np.inf
    for i in order:
        if values[i, 1] > best + scale:
            keep.append(i)
            best = values[i, 1]
    return np.array(keep[::-1], dtype=np.int64)


def frontier_value(frontier: np.ndarray, c3):
    """Piecewise-linear frontier height at ``c3``; -inf beyond the largest c3."""
    c3 = np.asarray(c3, dtype=float)
    y = np.interp(c3, frontier[:, 0], frontier[:, 1])
    return np.where(c3 > frontier[-1, 0] * (1 + 1e-12) + 1e-300, -np.inf, y)


def frontier_dominates(
    upper: np.ndarray, lower: np.ndarray, tol: float = 1e-9, strict: bool = False
) -> bool:
    """True when every vertex of ``lower`` lies on or below the ``upper`` frontier.

    With ``strict`` every vertex must sit more than ``tol`` below it.
    """
    gap = frontier_value(upper, lower[:, 0]) - lower[:, 1]
    if strict:
        return bool(np.all(gap > tol))
    return bool(np.all(gap >= -tol))


def frontier_area(frontier: np.ndarray) -> float:
    """Area under the frontier, closed down to the axes (shoelace)."""
    poly = np.vstack(([0.0, 0.0], [0.0, frontier[0, 1]], frontier, [frontier[-1, 0], 0.0]))
    x, y = poly[:, 0], poly[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def area_above_tdm(frontier: np.ndarray, c2_max: float, c3_max: float) -> float:
    """Area between the frontier and the TDM line where the frontier lies above it.

    The gap is piecewise linear between frontier vertices, so each segment's
    positive part is integrated exactly.
    """
    x = frontier[:, 0]
    d = frontier[:, 1] - (c2_max - c2_max / c3_max * x)
    total = 0.0
    for x0, x1, d0, d1 in zip(x[:-1], x[1:], d[:-1], d[1:]):
        dx = x1 - x0
        if d0 >= 0 and d1 >= 0:
            total += 0.5 * (d0 + d1) * dx
        elif d0 > 0 or d1 > 0:
            pos = max(d0, d1)
            total += 0.5 * pos * pos / (abs(d0) + abs(d1)) * dx
    return float(total)


def sweep(cfg: SwitchConfig, grid_step: float = 0.05, engine: str = "analytic") -> RegionResult:
    """Sample the capacity region of ``cfg`` over the policy grid."""
    if engine not in ENGINES:
        raise ValidationError(f"engine must be one of {ENGINES} (got {engine!r})")
    if engine == "analytic" and cfg.buffer_size != 1:
        raise ValidationError("engine=analytic is only valid for B=1")
    policies = _policies(cfg, grid_step)
    validate_config(cfg, policies[0])
    vals = _evaluate(cfg, policies, engine)
    points = tuple(CapacityPoint(float(c3), float(c2), p) for (c3, c2), p in zip(vals, policies))

    c2_max = float(vals[:, 1].max())
    c3_max = float(vals[:, 0].max())
    tdm = ((0.0, c2_max), (c3_max, 0.0))

    front = pareto_frontier(vals)
    flags = np.zeros(len(points), dtype=bool)
    flags[front] = True
    boundary = tuple(points[i] for i in front)

    # first maximum in grid order wins ties
    dist = analytic.tdm_distance(vals[:, 0], vals[:, 1], c2_max, c3_max)
    far = points[int(np.argmax(dist))]

    gap = float(analytic.tdm_gap(far.c3, far.c2, c2_max, c3_max))
    if cfg.buffer_size == 1:
        # the region above TDM is the triangle under the two bounding lines
        areas = analytic.triangle_areas(c2_max, c3_max, gap)
    else:
        above = area_above_tdm(vals[front], c2_max, c3_max)
        a_tdm = (c2_max**2 + c3_max**2) / 4
        areas = AreaBreakdown(
            a_triangle=above,
            a_tdm=a_tdm,
            a_total=above + a_tdm,
            ratio=above / (above + a_tdm),
            a_tdm_geometric=c2_max * c3_max / 2,
        )
    return RegionResult(
        cfg=cfg,
        engine=engine,
        grid_step=float(grid_step),
        points=points,
        tdm_segment=tdm,
        upper_boundary=boundary,
        on_frontier=tuple(bool(f) for f in flags),
        areas=areas,
        farthest_point=far,
    )


def default_engine(cfg: SwitchConfig) -> str:
    return "analytic" if cfg.buffer_size == 1 else "ctmc"


def extreme_capacities(cfg: SwitchConfig, grid_step: float = 0.05) -> tuple[float, float]:
    """(C2*, C3*): closed form for B=1, sampled maxima for B=2."""
    if cfg.buffer_size == 1:
        ext = analytic.extremes_b1(cfg)
        return ext.c2_max, ext.c3_max
    reg = sweep(cfg, grid_step, "ctmc")
    return reg.c2_max, reg.c3_max


def tdm_point(cfg: SwitchConfig, share: float, grid_step: float = 0.05) -> CapacityPoint:
    """Capacity of time-sharing: ``share`` of the time in pure-GHZ mode."""
    if not (0.0 <= share <= 1.0):
        raise ValidationError(f"share must lie in [0, 1] (got {share!r})")
    c2_max, c3_max = extreme_capacities(cfg, grid_step)
    return CapacityPoint(c3=share * c3_max, c2=(1 - share) * c2_max)


def compare_buffers(
    cfg_b1: SwitchConfig, cfg_b2: SwitchConfig, grid_step: float = 0.05
) -> BufferComparison:
    for name in ("k", "mu", "alpha"):
        if getattr(cfg_b1, name) != getattr(cfg_b2, name):
            raise ValidationError(f"configs differ in {name}; only buffer_size may differ")
    r1 = sweep(cfg_b1, grid_step, default_engine(cfg_b1))
    r2 = sweep(cfg_b2, grid_step, default_engine(cfg_b2))
    return BufferComparison(r1, r2, r2.c2_max - r1.c2_max, r2.c3_max - r1.c3_max)


def write_region(result: RegionResult, out_dir: Path, prefix: str = "") -> list[Path]:
    """Write points, frontier, TDM segment and summary files; return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    p = out_dir / f"{prefix}points.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r1", "r2", "r3", "c3", "c2", "on_frontier"])
        for pt, flag in zip(result.points, result.on_frontier):
            w.writerow([*map(repr, pt.policy.as_tuple()), repr(pt.c3), repr(pt.c2), int(flag)])
    paths.append(p)

    p = out_dir / f"{prefix}frontier.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["c3", "c2", "r1", "r2", "r3"])
        for pt in result.upper_boundary:
            w.writerow([repr(pt.c3), repr(pt.c2), *map(repr, pt.policy.as_tuple())])
    paths.append(p)

    p = out_dir / f"{prefix}tdm.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["c3", "c2"])
        for c3, c2 in result.tdm_segment:
            w.writerow([repr(c3), repr(c2)])
    paths.append(p)

    p = out_dir / f"{prefix}summary.json"
    p.write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
    paths.append(p)
    return paths
