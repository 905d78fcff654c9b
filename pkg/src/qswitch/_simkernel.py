"""Event loop of the switch simulator, compiled with numba.

The loop consumes a caller-supplied buffer of uniforms and returns when it
finishes, runs low on uniforms, or fills the trace buffer; all state lives
in the arrays passed in, so the caller can refill and resume.

Random draws per event, in order:
  generation on link i: (1) next interarrival of link i, (2) a policy coin
  if the switch faces a choice, (3) a lifetime if the new qubit is stored
  and alpha > 0.
  decoherence: none.
"""

import math

import numpy as np
from numba import njit

DONE = 0
NEED_UNIFORMS = 1
TRACE_FULL = 2
INVARIANT_BROKEN = 3

EV_GENERATION = 0
EV_DECOHERENCE = 1

ACT_STORE = 0
ACT_DROP = 1
ACT_BSM = 2
ACT_GHZ = 3
ACT_DECOHERE = 4

# clock layout
T_NOW = 0
T_END = 1
T_WARM = 2
T_BATCH = 3

# counter layout
N_GENERATED = 0
N_BSM = 1
N_GHZ = 2
N_DROPPED = 3
N_DECOHERED = 4
N_EVENTS = 5
N_TRACE = 6
N_COUNTERS = 7

INF = np.inf


@njit(cache=True, nogil=True)
def _exp(u, rate):
    return -math.log(1.0 - u) / rate


@njit(cache=True, nogil=True)
def _remove(counts, qtime, qexp, link, slot):
    n = counts[link]
    for s in range(slot, n - 1):
        qtime[link, s] = qtime[link, s + 1]
        qexp[link, s] = qexp[link, s + 1]
    qtime[link, n - 1] = INF
    qexp[link, n - 1] = INF
    counts[link] = n - 1


@njit(cache=True, nogil=True)
def _state_index(counts, state_index):
    a = 0
    b = 0
    for c in counts:
        if c > a:
            b = a
            a = c
        elif c > b:
            b = c
    return state_index[a, b]


@njit(cache=True, nogil=True)
def _accumulate(occ, t0, t1, warm, width, nb, s):
    # time in state s over [t0, t1] restricted to the measurement window
    if t1 <= warm:
        return
    if t0 < warm:
        t0 = warm
    j = int((t0 - warm) / width)
    if j >= nb:
        j = nb - 1
    # step the batch index rather than recomputing it: t0 can sit on a batch
    # edge after rounding, and recomputing would then never advance
    while t0 < t1:
        edge = warm + (j + 1) * width
        if j == nb - 1 or edge > t1:
            edge = t1
        if edge > t0:
            occ[j, s] += edge - t0
            t0 = edge
        j += 1


@njit(cache=True, nogil=True)
def run(
    k, buffer_size, mu, alpha, r1, r2, r3,
    counts, qtime, qexp, next_gen, clock, counters,
    u, pos,
    state_index, bsm_b, ghz_b, occ_b,
    trace_on, tr_time, tr_type, tr_link, tr_action,
):
    nu = u.shape[0]
    nb = bsm_b.shape[0]
    t_end = clock[T_END]
    warm = clock[T_WARM]
    width = clock[T_BATCH]
    trace_cap = tr_time.shape[0]
    while True:
        if pos + 3 > nu:
            return NEED_UNIFORMS, pos
        if trace_on and counters[N_TRACE] >= trace_cap:
            return TRACE_FULL, pos

        gl = 0
        tg = next_gen[0]
        for i in range(1, k):
            if next_gen[i] < tg:
                tg = next_gen[i]
                gl = i
        td = INF
        dl = -1
        ds = -1
        if alpha > 0.0:
            for i in range(k):
                for s in range(counts[i]):
                    if qexp[i, s] < td:
                        td = qexp[i, s]
                        dl = i
                        ds = s

        now = clock[T_NOW]
        t_next = tg if tg <= td else td
        s_cur = _state_index(counts, state_index)
        if t_next >= t_end:
            _accumulate(occ_b, now, t_end, warm, width, nb, s_cur)
            clock[T_NOW] = t_end
            return DONE, pos
        _accumulate(occ_b, now, t_next, warm, width, nb, s_cur)
        now = t_next
        clock[T_NOW] = now
        counters[N_EVENTS] += 1
        batch = -1
        if now >= warm:
            batch = int((now - warm) / width)
            if batch >= nb:
                batch = nb - 1

        if td < tg:
            _remove(counts, qtime, qexp, dl, ds)
            counters[N_DECOHERED] += 1
            if trace_on:
                n = counters[N_TRACE]
                tr_time[n] = now
                tr_type[n] = EV_DECOHERENCE
                tr_link[n] = dl
                tr_action[n] = ACT_DECOHERE
                counters[N_TRACE] = n + 1
            continue

        link = gl
        next_gen[link] = now + _exp(u[pos], mu)
        pos += 1
        counters[N_GENERATED] += 1

        # occupied links other than the arrival's link
        o1 = -1
        o2 = -1
        n_occ = 0
        for i in range(k):
            if counts[i] > 0:
                n_occ += 1
                if o1 < 0:
                    o1 = i
                else:
                    o2 = i
        if n_occ > 2:
            return INVARIANT_BROKEN, pos
        own = counts[link]

        action = ACT_STORE
        if n_occ == 0:
            action = ACT_STORE
        elif n_occ == 1:
            if own > 0:
                # only the arrival's own link holds qubits
                action = ACT_STORE if own < buffer_size else ACT_DROP
            elif buffer_size == 1:
                coin = u[pos]
                pos += 1
                if coin < r1:
                    action = ACT_BSM
                    _remove(counts, qtime, qexp, o1, 0)
                else:
                    action = ACT_STORE
            else:
                action = ACT_STORE
        else:
            if own > 0:
                other = o2 if link == o1 else o1
                if own < buffer_size:
                    action = ACT_STORE
                else:
                    coin = u[pos]
                    pos += 1
                    if coin < r3:
                        action = ACT_BSM
                        _remove(counts, qtime, qexp, other, 0)
                    else:
                        action = ACT_DROP
            else:
                coin = u[pos]
                pos += 1
                if coin < r2:
                    action = ACT_GHZ
                    _remove(counts, qtime, qexp, o1, 0)
                    _remove(counts, qtime, qexp, o2, 0)
                else:
                    action = ACT_BSM
                    # partner: the fuller link, ties to the oldest stored qubit
                    if counts[o1] > counts[o2]:
                        partner = o1
                    elif counts[o2] > counts[o1]:
                        partner = o2
                    elif qtime[o1, 0] <= qtime[o2, 0]:
                        partner = o1
                    else:
                        partner = o2
                    _remove(counts, qtime, qexp, partner, 0)

        if action == ACT_STORE:
            c = counts[link]
            qtime[link, c] = now
            if alpha > 0.0:
                qexp[link, c] = now + _exp(u[pos], alpha)
                pos += 1
            else:
                qexp[link, c] = INF
            counts[link] = c + 1
            if counts[link] > buffer_size:
                return INVARIANT_BROKEN, pos
        elif action == ACT_DROP:
            counters[N_DROPPED] += 1
        elif action == ACT_BSM:
            counters[N_BSM] += 1
            if batch >= 0:
                bsm_b[batch] += 1
        else:
            counters[N_GHZ] += 1
            if batch >= 0:
                ghz_b[batch] += 1

        if trace_on:
            n = counters[N_TRACE]
            tr_time[n] = now
            tr_type[n] = EV_GENERATION
            tr_link[n] = link
            tr_action[n] = action
            counters[N_TRACE] = n + 1
