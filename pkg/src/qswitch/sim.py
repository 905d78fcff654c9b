"""Discrete-event Monte Carlo simulator of the physical switch.

Unlike the CTMC, the simulator tracks every link separately: each link has
its own next-generation time, each stored qubit carries its creation time
(for oldest-first matching) and its own decoherence deadline.  It applies
the switching rules directly to the physical configuration and reports
empirical BSM/GHZ rates, so agreement with :mod:`qswitch.ctmc` is a
genuine cross-check of the lumped chain.

Randomness comes from a counter-based Philox stream; exponentials are drawn
by inversion.  The same ``(cfg, pol, duration, seed)`` always produces the
same counters.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO

import numpy as np
from scipy import stats

from . import _simkernel as K
from .ctmc import STATES_B1, STATES_B2
from .model import PolicyParams, SwitchConfig, ValidationError, validate_config

log = logging.getLogger(__name__)

CHUNK = 1 << 16
TRACE_CHUNK = 1 << 14
MIN_BATCHES = 20

_ACTIONS = {
    K.ACT_STORE: "store",
    K.ACT_DROP: "drop",
    K.ACT_BSM: "bsm",
    K.ACT_GHZ: "ghz",
    K.ACT_DECOHERE: "decohere",
}
_EVENTS = {K.EV_GENERATION: "generation", K.EV_DECOHERENCE: "decoherence"}


@dataclass(frozen=True)
class SimState:
    """Switch state and counters at the end of a run."""

    link_counts: tuple[int, ...]
    clock: float
    generated: int
    bsm_events: int
    ghz_events: int
    dropped_qubits: int
    decohered_qubits: int

    @property
    def stored(self) -> int:
        return sum(self.link_counts)

    def accounting_gap(self) -> int:
        """Generated qubits minus every way a qubit can leave or stay; zero when consistent."""
        used = 2 * self.bsm_events + 3 * self.ghz_events
        return self.generated - (used + self.dropped_qubits + self.decohered_qubits + self.stored)


@dataclass(frozen=True)
class SimulationEstimate:
    c2_hat: float
    c3_hat: float
    ci2: float
    ci3: float
    total_events: int
    seed: int
    duration: float
    states: tuple[tuple[int, int], ...] = ()
    occupancy: tuple[float, ...] = ()
    occupancy_ci: tuple[float, ...] = ()
    n_batches: int = 0
    n_reps: int = 1
    final: SimState | None = field(default=None, compare=False)


def _seed_sequence(seed: int) -> np.random.SeedSequence:
    # SeedSequence rejects negative entropy; fold the sign into a second word
    seed = int(seed)
    return np.random.SeedSequence(seed if seed >= 0 else [-seed, 1])


def _t_halfwidth(samples: np.ndarray, axis: int = 0) -> np.ndarray:
    n = samples.shape[axis]
    sd = samples.std(axis=axis, ddof=1)
    return stats.t.ppf(0.975, n - 1) * sd / np.sqrt(n)


def simulate(
    cfg: SwitchConfig,
    pol: PolicyParams,
    duration: float,
    seed: int,
    *,
    n_batches: int = MIN_BATCHES,
    warmup_fraction: float = 0.01,
    trace: IO[str] | None = None,
) -> SimulationEstimate:
    """Simulate the switch for ``duration`` seconds from an empty buffer.

    Rates are estimated over the window after the first ``warmup_fraction``
    of the run; confidence half-widths (95%) come from ``n_batches`` batch
    means over that window.  If ``trace`` is a writable text stream, every
    event is written to it as ``time,event_type,link,action`` CSV.
    """
    validate_config(cfg, pol)
    if not duration > 0:
        raise ValidationError(f"duration must be positive (got {duration!r})")
    if n_batches < MIN_BATCHES:
        raise ValidationError(f"at least {MIN_BATCHES} batches required (got {n_batches})")
    if not 0 <= warmup_fraction < 1:
        raise ValidationError("warmup_fraction must lie in [0, 1)")

    k, B = cfg.k, cfg.buffer_size
    states = STATES_B1 if B == 1 else STATES_B2
    state_index = np.full((B + 1, B + 1), -1, dtype=np.int64)
    for i, (a, b) in enumerate(states):
        state_index[a, b] = i

    rng = np.random.Generator(np.random.Philox(_seed_sequence(seed)))
    u = rng.random(max(CHUNK, 4 * k))

    counts = np.zeros(k, dtype=np.int64)
    qtime = np.full((k, B), np.inf)
    qexp = np.full((k, B), np.inf)
    next_gen = -np.log1p(-u[:k]) / cfg.mu
    pos = k
    warm = warmup_fraction * duration
    clock = np.array([0.0, float(duration), warm, (duration - warm) / n_batches])
    counters = np.zeros(K.N_COUNTERS, dtype=np.int64)
    bsm_b = np.zeros(n_batches, dtype=np.int64)
    ghz_b = np.zeros(n_batches, dtype=np.int64)
    occ_b = np.zeros((n_batches, len(states)))

    tracing = trace is not None
    tsize = TRACE_CHUNK if tracing else 1
    tr_time = np.zeros(tsize)
    tr_type = np.zeros(tsize, dtype=np.int64)
    tr_link = np.zeros(tsize, dtype=np.int64)
    tr_action = np.zeros(tsize, dtype=np.int64)
    writer = csv.writer(trace, lineterminator="\n") if tracing else None
    if writer is not None:
        writer.writerow(["time", "event_type", "link", "action"])

    while True:
        status, pos = K.run(
            k, B, float(cfg.mu), float(cfg.alpha), float(pol.r1), float(pol.r2), float(pol.r3),
            counts, qtime, qexp, next_gen, clock, counters,
            u, pos,
            state_index, bsm_b, ghz_b, occ_b,
            tracing, tr_time, tr_type, tr_link, tr_action,
        )
        if writer is not None:
            n = int(counters[K.N_TRACE])
            for i in range(n):
                writer.writerow(
                    [repr(float(tr_time[i])), _EVENTS[tr_type[i]], int(tr_link[i]),
                     _ACTIONS[tr_action[i]]]
                )
            counters[K.N_TRACE] = 0
        if status == K.DONE:
            break
        if status == K.INVARIANT_BROKEN:
            raise RuntimeError(f"simulator invariant broken at t={clock[K.T_NOW]}: counts={counts}")
        if status == K.NEED_UNIFORMS:
            u = np.concatenate((u[pos:], rng.random(CHUNK)))
            pos = 0

    width = clock[K.T_BATCH]
    bsm_rates = bsm_b / width
    ghz_rates = ghz_b / width
    occ_frac = occ_b / width
    final = SimState(
        link_counts=tuple(int(c) for c in counts),
        clock=float(clock[K.T_NOW]),
        generated=int(counters[K.N_GENERATED]),
        bsm_events=int(counters[K.N_BSM]),
        ghz_events=int(counters[K.N_GHZ]),
        dropped_qubits=int(counters[K.N_DROPPED]),
        decohered_qubits=int(counters[K.N_DECOHERED]),
    )
    est = SimulationEstimate(
        c2_hat=float(bsm_rates.mean()),
        c3_hat=float(ghz_rates.mean()),
        ci2=float(_t_halfwidth(bsm_rates)),
        ci3=float(_t_halfwidth(ghz_rates)),
        total_events=int(counters[K.N_EVENTS]),
        seed=int(seed),
        duration=float(duration),
        states=states,
        occupancy=tuple(float(x) for x in occ_frac.mean(axis=0)),
        occupancy_ci=tuple(float(x) for x in _t_halfwidth(occ_frac)),
        n_batches=n_batches,
        final=final,
    )
    log.debug("simulated %s %s: %s", cfg, pol, est)
    return est


def replication_seeds(base_seed: int, n_reps: int) -> list[int]:
    ss = np.random.SeedSequence(base_seed)
    return [int(s) for s in ss.generate_state(n_reps, dtype=np.uint64)]


def replicate(
    cfg: SwitchConfig,
    pol: PolicyParams,
    duration: float,
    n_reps: int,
    base_seed: int,
    *,
    n_batches: int = MIN_BATCHES,
    workers: int | None = None,
) -> SimulationEstimate:
    """Run ``n_reps`` independent replications and pool them.

    The returned half-widths are across-replication 95% t-intervals.
    Replications run concurrently; results do not depend on scheduling.
    """
    if n_reps < 2:
        raise ValidationError(f"reps >= 2 required (got {n_reps})")
    validate_config(cfg, pol)
    seeds = replication_seeds(base_seed, n_reps)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        runs = list(
            pool.map(lambda s: simulate(cfg, pol, duration, s, n_batches=n_batches), seeds)
        )
    c2 = np.array([r.c2_hat for r in runs])
    c3 = np.array([r.c3_hat for r in runs])
    occ = np.array([r.occupancy for r in runs])
    return SimulationEstimate(
        c2_hat=float(c2.mean()),
        c3_hat=float(c3.mean()),
        ci2=float(_t_halfwidth(c2)),
        ci3=float(_t_halfwidth(c3)),
        total_events=sum(r.total_events for r in runs),
        seed=int(base_seed),
        duration=float(duration),
        states=runs[0].states,
        occupancy=tuple(float(x) for x in occ.mean(axis=0)),
        occupancy_ci=tuple(float(x) for x in _t_halfwidth(occ)),
        n_batches=n_batches,
        n_reps=n_reps,
    )
