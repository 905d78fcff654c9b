"""CTMC models of the switch for buffer sizes one and two.

The state ``(a, b)`` tracks the number of stored qubits on the most loaded
link (``a``) and the second most loaded link (``b``).  Under the
oldest-link-entanglement-first rule at most two links ever hold qubits, so
this pair is a complete description.

Every transition carries the expected number of BSMs and GHZ measurements
emitted when it fires; capacities are the stationary reward rates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CapacityPoint, PolicyParams, SwitchConfig, validate_config

State = tuple[int, int]

STATES_B1: tuple[State, ...] = ((0, 0), (1, 0), (1, 1))
STATES_B2: tuple[State, ...] = ((0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2))

# Condition number above which the normalized balance system is rejected.
_COND_LIMIT = 1e12


class SingularChainError(RuntimeError):
    """The balance equations do not determine a unique stationary vector."""


@dataclass(frozen=True)
class Transition:
    src: State
    dst: State
    rate: float
    bsm: float = 0.0
    ghz: float = 0.0
    kind: str = "arrival"  # "arrival" or "decoherence"


@dataclass(frozen=True)
class MarkovChain:
    cfg: SwitchConfig
    pol: PolicyParams
    states: tuple[State, ...]
    transitions: tuple[Transition, ...]

    def index(self, state: State) -> int:
        return self.states.index(state)

    @property
    def generator(self) -> np.ndarray:
        """Rate matrix Q: summed off-diagonal rates, negative row sums on the diagonal."""
        n = len(self.states)
        pos = {s: i for i, s in enumerate(self.states)}
        q = np.zeros((n, n))
        for t in self.transitions:
            if t.src != t.dst:
                q[pos[t.src], pos[t.dst]] += t.rate
        q[np.diag_indices(n)] = -q.sum(axis=1)
        return q

    def outflow(self, state: State) -> float:
        """Total physical event rate leaving ``state``, self-loops included."""
        return sum(t.rate for t in self.transitions if t.src == state)

    def dump(self) -> str:
        lines = []
        for t in self.transitions:
            lines.append(
                f"{_fmt_state(t.src)} -> {_fmt_state(t.dst)}  "
                f"rate={t.rate:.12g}  bsm={t.bsm:.12g}  ghz={t.ghz:.12g}"
            )
        return "\n".join(lines)


@dataclass(frozen=True)
class StationaryDistribution:
    states: tuple[State, ...]
    pi: tuple[float, ...]
    residual: float

    def __getitem__(self, state: State) -> float:
        return self.pi[self.states.index(state)]

    def as_dict(self) -> dict[str, float]:
        return {_fmt_state(s): p for s, p in zip(self.states, self.pi)}


def _fmt_state(s: State) -> str:
    return f"({s[0]},{s[1]})"


class _Builder:
    """Collects branches, merging those that share (src, dst, kind)."""

    def __init__(self) -> None:
        self._arcs: dict[tuple[State, State, str], list[float]] = {}

    def add(self, src, dst, rate, bsm=0.0, ghz=0.0, kind="arrival"):
        if rate <= 0:
            return
        key = (src, dst, kind)
        acc = self._arcs.setdefault(key, [0.0, 0.0, 0.0])
        acc[0] += rate
        acc[1] += rate * bsm
        acc[2] += rate * ghz

    def transitions(self) -> tuple[Transition, ...]:
        out = []
        for (src, dst, kind), (rate, bsm_rate, ghz_rate) in self._arcs.items():
            out.append(Transition(src, dst, rate, bsm_rate / rate, ghz_rate / rate, kind))
        return tuple(out)


def _arrivals_b1(b: _Builder, k: int, mu: float, pol: PolicyParams) -> None:
    r1, r2, r3 = pol.as_tuple()
    b.add((0, 0), (1, 0), k * mu)
    # (1,0): new qubit on the occupied link cannot be stored
    b.add((1, 0), (1, 0), mu)
    b.add((1, 0), (0, 0), (k - 1) * mu * r1, bsm=1.0)
    b.add((1, 0), (1, 1), (k - 1) * mu * (1 - r1))
    # (1,1): arrival on one of the two occupied links
    b.add((1, 1), (1, 0), 2 * mu * r3, bsm=1.0)
    b.add((1, 1), (1, 1), 2 * mu * (1 - r3))
    # (1,1): arrival on a third link
    b.add((1, 1), (0, 0), (k - 2) * mu * r2, ghz=1.0)
    b.add((1, 1), (1, 0), (k - 2) * mu * (1 - r2), bsm=1.0)


def _arrivals_b2(b: _Builder, k: int, mu: float, pol: PolicyParams) -> None:
    r2, r3 = pol.r2, pol.r3
    b.add((0, 0), (1, 0), k * mu)

    b.add((1, 0), (2, 0), mu)
    b.add((1, 0), (1, 1), (k - 1) * mu)

    b.add((2, 0), (2, 0), mu)
    b.add((2, 0), (2, 1), (k - 1) * mu)

    # (1,1): room on both occupied links, so the new qubit is kept
    b.add((1, 1), (2, 1), 2 * mu)
    b.add((1, 1), (0, 0), (k - 2) * mu * r2, ghz=1.0)
    b.add((1, 1), (1, 0), (k - 2) * mu * (1 - r2), bsm=1.0)

    b.add((2, 1), (2, 2), mu)
    # full link: BSM with the single-qubit link, else drop
    b.add((2, 1), (2, 0), mu * r3, bsm=1.0)
    b.add((2, 1), (2, 1), mu * (1 - r3))
    # third link: GHZ over all three, else BSM with the full link's oldest qubit
    b.add((2, 1), (1, 0), (k - 2) * mu * r2, ghz=1.0)
    b.add((2, 1), (1, 1), (k - 2) * mu * (1 - r2), bsm=1.0)

    # r3 is reused here for symmetry with (2,1); the model leaves it implicit
    b.add((2, 2), (2, 1), 2 * mu * r3, bsm=1.0)
    b.add((2, 2), (2, 2), 2 * mu * (1 - r3))
    b.add((2, 2), (1, 1), (k - 2) * mu * r2, ghz=1.0)
    b.add((2, 2), (2, 1), (k - 2) * mu * (1 - r2), bsm=1.0)


def _decoherence(b: _Builder, alpha: float, buffer_size: int) -> None:
    arcs = [((1, 0), (0, 0), 1), ((1, 1), (1, 0), 2)]
    if buffer_size == 2:
        arcs += [
            ((2, 0), (1, 0), 2),
            ((2, 1), (1, 1), 2),
            ((2, 1), (2, 0), 1),
            ((2, 2), (2, 1), 4),
        ]
    for src, dst, n in arcs:
        b.add(src, dst, n * alpha, kind="decoherence")


def build_chain(cfg: SwitchConfig, pol: PolicyParams) -> MarkovChain:
    """Build the CTMC for ``(cfg, pol)``.

    Zero-rate branches are omitted, so a chain built with ``alpha=0`` is the
    decoherence-free chain exactly.
    """
    validate_config(cfg, pol)
    b = _Builder()
    if cfg.buffer_size == 1:
        states = STATES_B1
        _arrivals_b1(b, cfg.k, cfg.mu, pol)
    else:
        states = STATES_B2
        _arrivals_b2(b, cfg.k, cfg.mu, pol)
    _decoherence(b, cfg.alpha, cfg.buffer_size)
    return MarkovChain(cfg, pol, states, b.transitions())


def solve_stationary(chain: MarkovChain) -> StationaryDistribution:
    """Solve pi Q = 0 with sum(pi) = 1 by a dense direct solve.

    The last balance equation is replaced by the normalization row.  One
    step of iterative refinement keeps the residual at round-off level.
    """
    q = chain.generator
    n = q.shape[0]
    a = q.T.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularChainError(f"balance system is ill-conditioned (cond ~ {cond:.3g})")
    pi = np.linalg.solve(a, rhs)
    pi += np.linalg.solve(a, rhs - a @ pi)
    # exact zeros (transient states) may come back as -1e-17
    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)
    pi /= pi.sum()
    residual = float(np.max(np.abs(pi @ q)))
    return StationaryDistribution(chain.states, tuple(float(x) for x in pi), residual)


def capacities(chain: MarkovChain, pi: StationaryDistribution) -> CapacityPoint:
    """Stationary BSM and GHZ rates: sum over transitions of pi(src) * rate * reward."""
    c2 = 0.0
    c3 = 0.0
    for t in chain.transitions:
        w = pi[t.src] * t.rate
        c2 += w * t.bsm
        c3 += w * t.ghz
    return CapacityPoint(c3=c3, c2=c2, policy=chain.pol)


def solve(cfg: SwitchConfig, pol: PolicyParams) -> tuple[StationaryDistribution, CapacityPoint]:
    """Build, solve and evaluate in one call."""
    chain = build_chain(cfg, pol)
    pi = solve_stationary(chain)
    return pi, capacities(chain, pi)
