"""Event-driven numba kernels behind :func:`spstsim.engine.run`.

Between an arrival and the next arrival or completion no discipline here
changes its choice (the served job only improves its own rank), so jumping
from event to event gives the same schedule as re-deciding every slot.
"""

import numpy as np
from numba import njit

FCFS, LCFS, SJF, SRPT, PSJF, SPST = 0, 1, 2, 3, 4, 5

_NEVER = np.iinfo(np.int64).max
# float slack when matching a PS completion against an integer arrival epoch
_EPS = 1e-9


@njit(cache=True)
def run_single(arrivals, sizes, kind, most_recent, horizon):
    n = arrivals.shape[0]
    rem = sizes.copy()
    dep = np.full(n, -1, np.int64)
    active = np.empty(max(n, 1), np.int64)
    pstart = np.empty(n, np.int64)
    pend = np.empty(n, np.int64)
    pfirst = np.empty(n, np.int64)
    plast = np.empty(n, np.int64)
    nb = 0
    m = 0
    nxt = 0
    current = -1
    t = arrivals[0] if n > 0 else 0
    while True:
        if m == 0:
            if nxt == n:
                break
            if arrivals[nxt] > t:
                t = arrivals[nxt]
            if t >= horizon:
                break
            pstart[nb] = t
            pfirst[nb] = nxt
        while nxt < n and arrivals[nxt] <= t:
            active[m] = nxt
            m += 1
            nxt += 1

        if kind == SJF and current >= 0:
            k = current
            kq = 0
            while active[kq] != k:
                kq += 1
        else:
            k = -1
            kq = -1
            bkey = 0
            btie = 0
            for q in range(m):
                i = active[q]
                if kind == FCFS:
                    key = arrivals[i]
                elif kind == LCFS:
                    key = -arrivals[i]
                elif kind == SRPT:
                    key = rem[i]
                elif kind == SPST:
                    # predicted sojourn minus the common "now"
                    key = rem[i] - arrivals[i]
                else:
                    key = sizes[i]
                tie = -arrivals[i] if most_recent else arrivals[i]
                if (k < 0 or key < bkey or (key == bkey and tie < btie)
                        or (key == bkey and tie == btie and i < k)):
                    k = i
                    kq = q
                    bkey = key
                    btie = tie
            current = k

        done = t + rem[k]
        na = arrivals[nxt] if nxt < n else _NEVER
        if done <= na:
            if done > horizon:
                break
            t = done
            rem[k] = 0
            dep[k] = t
            m -= 1
            active[kq] = active[m]
            current = -1
            if m == 0:
                pend[nb] = t
                plast[nb] = nxt - 1
                nb += 1
        else:
            rem[k] -= na - t
            t = na
    return dep, pstart[:nb], pend[:nb], pfirst[:nb], plast[:nb]


@njit(cache=True)
def run_ps(arrivals, sizes, horizon):
    # Virtual-time form of egalitarian sharing: every active job has received
    # the same service ``v`` since the period started, so a job finishes when
    # ``v`` reaches its tag (v at arrival + size). The clock ``u`` is kept
    # relative to the period start to hold float error down on long traces.
    n = arrivals.shape[0]
    dep = np.full(n, np.nan)
    tag = np.empty(n)
    active = np.empty(max(n, 1), np.int64)
    pstart = np.empty(n, np.int64)
    pend = np.empty(n, np.int64)
    pfirst = np.empty(n, np.int64)
    plast = np.empty(n, np.int64)
    nb = 0
    m = 0
    nxt = 0
    start = 0
    u = 0.0
    v = 0.0
    work = 0
    while True:
        if m == 0:
            if nxt == n:
                break
            start = arrivals[nxt]
            if start >= horizon:
                break
            pstart[nb] = start
            pfirst[nb] = nxt
            u = 0.0
            v = 0.0
            work = 0
        while nxt < n and arrivals[nxt] - start <= u + _EPS:
            tag[nxt] = v + sizes[nxt]
            work += sizes[nxt]
            active[m] = nxt
            m += 1
            nxt += 1

        fmin = tag[active[0]]
        for q in range(1, m):
            if tag[active[q]] < fmin:
                fmin = tag[active[q]]
        done = u + (fmin - v) * m
        na = float(arrivals[nxt] - start) if nxt < n else np.inf
        if abs(done - na) < _EPS:
            done = na
        if done <= na:
            if start + done > horizon:
                break
            u = done
            v = fmin
            q = 0
            while q < m:
                i = active[q]
                if tag[i] <= fmin + 1e-12:
                    m -= 1
                    active[q] = active[m]
                    if m == 0:
                        # unit-rate server: the period closes at start + work
                        u = float(work)
                    dep[i] = start + u
                else:
                    q += 1
            if m == 0:
                pend[nb] = start + work
                plast[nb] = nxt - 1
                nb += 1
        else:
            v += (na - u) / m
            u = na
    return dep, pstart[:nb], pend[:nb], pfirst[:nb], plast[:nb]
