"""Compiled inner loops for replica simulation.

Random numbers come from an inline xoshiro256** generator whose 256-bit state
is seeded from ``numpy.random.SeedSequence``.  numba's own ``np.random``
(Mersenne Twister) costs 35-60 ns per bounded draw here against ~5 ns for the
inline generator, and the rewiring step is draw-bound.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_INV53 = 1.0 / 9007199254740992.0


def seed_state(*key: int) -> np.ndarray:
    """256-bit xoshiro state for the stream identified by ``key``."""
    state = np.random.SeedSequence([int(k) for k in key]).generate_state(4, dtype=np.uint64)
    if not state.any():
        state[0] = 1
    return state


@njit(inline="always")
def _rotl(x, r):
    return (x << np.uint64(r)) | (x >> np.uint64(64 - r))


@njit(inline="always")
def _next(s):
    s0, s1, s2, s3 = s[0], s[1], s[2], s[3]
    out = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    s[0], s[1], s[2], s[3] = s0, s1, s2, s3
    return out


@njit(inline="always")
def _below(s, bound):
    """Uniform integer in ``[0, bound)``; 53-bit float scaling, bias < bound / 2**53."""
    return np.int64((_next(s) >> np.uint64(11)) * _INV53 * bound)


@njit(cache=True)
def partial_swap(order, js):
    """Partial Fisher-Yates: swap ``order[i]`` with ``order[js[i]]`` in sequence."""
    for i in range(js.shape[0]):
        j = js[i]
        tmp = order[i]
        order[i] = order[j]
        order[j] = tmp


@njit(inline="always")
def _rewire(s, st, buf, k, cur):
    """One rewiring step; marks every rewired half-edge with ``cur``.

    The k edges are drawn through uniform half-edges with rejection of edges
    already taken this step, which gives a uniform k-subset without a slot
    table.  ``cur`` must differ from every mark already present.
    """
    ell = st.shape[0]
    kk = 2 * k
    i = 0
    while i < kk:
        h = _below(s, ell)
        if st[h, 1] == cur:
            continue
        g = st[h, 0]
        st[h, 1] = cur
        st[g, 1] = cur
        buf[i] = h
        buf[i + 1] = g
        i += 2
    # uniform matching of the 2k half-edges: partner of buf[i] uniform among the rest
    for i in range(0, kk, 2):
        j = i + 1 + _below(s, kk - i - 1)
        b = buf[j]
        buf[j] = buf[i + 1]
        buf[i + 1] = b
        a = buf[i]
        st[a, 0] = b
        st[b, 0] = a


@njit(cache=True)
def joint_batch(pair0, vertex_of, offsets, degrees, x0, k, horizon,
                n_rep, state, fresh, traj):
    """Run ``n_rep`` independent replicas of the rewire-then-step chain.

    Each time step rewires ``k`` edges (``k == 0`` disables rewiring), checks
    whether the previous position lies in the rewired set so far, then takes a
    non-backtracking step in the new configuration.

    With ``fresh`` each replica starts from its own uniform pairing and
    uniform half-edge; otherwise every replica starts from ``(pair0, x0)``.
    ``traj`` is either empty or an ``(n_rep, horizon + 1)`` array that receives
    full trajectories.

    Returns ``(x_final, tau, sa_break)``; ``tau`` and ``sa_break`` (first time
    a vertex is revisited) are -1 when the event did not happen by ``horizon``.
    """
    ell = pair0.shape[0]
    n = degrees.shape[0]
    st = np.zeros((ell, 2), np.int32)
    for h in range(ell):
        st[h, 0] = pair0[h]
    buf = np.empty(max(2 * k, 2), np.int32)
    visited = np.zeros(n, np.int64)
    log = np.empty(max(2 * k * horizon, 1), np.int32)
    perm = np.arange(ell)
    keep = traj.shape[0] > 0

    x_final = np.empty(n_rep, np.int64)
    taus = np.full(n_rep, -1, np.int64)
    sa_break = np.full(n_rep, -1, np.int64)

    for r in range(n_rep):
        # marks of replica r live in (base, base + horizon]; no reset needed
        base = r * (horizon + 1)
        if fresh:
            for i in range(0, ell, 2):
                j = i + 1 + _below(state, ell - i - 1)
                b = perm[j]
                perm[j] = perm[i + 1]
                perm[i + 1] = b
                a = perm[i]
                st[a, 0] = b
                st[b, 0] = a
            x = _below(state, ell)
        else:
            x = x0
        nlog = 0
        visited[vertex_of[x]] = r + 1
        if keep:
            traj[r, 0] = x
        tau = -1
        brk = -1
        for t in range(1, horizon + 1):
            if k > 0:
                _rewire(state, st, buf, k, base + t)
                if not fresh:
                    for i in range(2 * k):
                        log[nlog + i] = buf[i]
                    nlog += 2 * k
                if tau < 0 and st[x, 1] > base:
                    tau = t
            y = st[x, 0]
            v = vertex_of[y]
            z = offsets[v] + _below(state, degrees[v] - 1)
            if z >= y:
                z += 1
            x = z
            v = vertex_of[x]
            if visited[v] == r + 1:
                if brk < 0:
                    brk = t
            else:
                visited[v] = r + 1
            if keep:
                traj[r, t] = x
        x_final[r] = x
        taus[r] = tau
        sa_break[r] = brk
        for i in range(nlog):
            h = log[i]
            st[h, 0] = pair0[h]
    return x_final, taus, sa_break


@njit(cache=True)
def rewire_stamps(pair0, k, horizon, watch, n_rep, state):
    """First-rewire times of the half-edges ``watch[r]`` over ``horizon`` steps.

    ``watch`` has shape ``(n_rep, w)``; entry ``[r, i]`` of the result is the
    first step at which ``watch[r, i]`` was rewired in replica ``r``, or 0 if
    it was not rewired by ``horizon``.
    """
    ell = pair0.shape[0]
    st = np.zeros((ell, 2), np.int32)
    for h in range(ell):
        st[h, 0] = pair0[h]
    buf = np.empty(max(2 * k, 2), np.int32)
    log = np.empty(max(2 * k * horizon, 1), np.int32)
    w = watch.shape[1]
    out = np.zeros((n_rep, w), np.int64)
    for r in range(n_rep):
        base = r * (horizon + 1)
        nlog = 0
        for t in range(1, horizon + 1):
            _rewire(state, st, buf, k, base + t)
            for i in range(2 * k):
                log[nlog + i] = buf[i]
            nlog += 2 * k
            for i in range(w):
                h = watch[r, i]
                if out[r, i] == 0 and st[h, 1] == base + t:
                    out[r, i] = t
        for i in range(nlog):
            h = log[i]
            st[h, 0] = pair0[h]
    return out
