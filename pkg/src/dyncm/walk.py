"""Non-backtracking walk on the static and on the dynamic configuration model."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamics import RewiringEngine, RewiringTrace, config_space
from .halfedge import (
    Configuration,
    DegreeSequence,
    first_sibling,
    forward_degree,
    sample_uniform_configuration,
    siblings,
)

MAX_DENSE_ELL = 2000
MAX_PATH_ELL = 12
MAX_PATH_T = 5


@dataclass
class WalkRecord:
    trajectory: np.ndarray
    tau: int | None
    self_avoiding: bool
    visited_vertices: set[int]
    resets: frozenset[int] = frozenset()
    trace: RewiringTrace | None = field(default=None, repr=False)

    @property
    def t(self) -> int:
        return len(self.trajectory) - 1

    def to_text(self) -> str:
        lines = []
        for s, x in enumerate(self.trajectory):
            line = f"s {s} X {int(x)}"
            if self.tau is not None and s == self.tau:
                line += " TAU"
            if s in self.resets:
                line += " RESET"
            lines.append(line)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ResetSet:
    T: frozenset[int]
    t: int

    def __post_init__(self):
        bad = [s for s in self.T if not 1 <= s <= self.t]
        if bad:
            raise ValueError(f"reset times {sorted(bad)} outside [1, {self.t}]")

    def __contains__(self, s) -> bool:
        return s in self.T


def nbrw_step(ds: DegreeSequence, config: Configuration, x: int, rng: np.random.Generator) -> int:
    """Uniform sibling of ``config[x]``, never ``config[x]`` itself."""
    y = int(config.pair[x])
    v = int(ds.vertex_of[y])
    d = int(ds.degrees[v])
    if d < 2:
        raise ValueError(f"half-edge {y} sits on a vertex of degree {d}; walk undefined")
    z = int(ds.offsets[v]) + int(rng.integers(d - 1))
    return z + 1 if z >= y else z


def transition_matrix_P(ds: DegreeSequence, config: Configuration) -> np.ndarray:
    """Dense non-backtracking transition matrix on half-edges."""
    ell = ds.ell
    if ell > MAX_DENSE_ELL:
        raise ValueError(f"ell={ell} exceeds the dense-matrix limit {MAX_DENSE_ELL}")
    P = np.zeros((ell, ell))
    for x in range(ell):
        y = int(config.pair[x])
        targets = siblings(ds, y)
        P[x, targets] = 1.0 / len(targets)
    return P


def run_joint(ds: DegreeSequence, eta: Configuration, x: int, t: int, k: int,
              rng: np.random.Generator, *, record: bool = False) -> WalkRecord:
    """One replica of the rewire-then-step chain from ``(eta, x)``.

    ``k == 0`` disables rewiring.
    """
    if t < 0:
        raise ValueError("horizon must be nonnegative")
    engine = RewiringEngine(eta, k, record=record)
    traj = np.empty(t + 1, dtype=np.int64)
    traj[0] = x
    visited = {int(ds.vertex_of[x])}
    sa = True
    tau = None
    for s in range(1, t + 1):
        engine.rewire_step(rng)
        prev = int(traj[s - 1])
        if tau is None and engine.trace.rewired_by(prev, s):
            tau = s
        nxt = nbrw_step(ds, engine.config, prev, rng)
        traj[s] = nxt
        v = int(ds.vertex_of[nxt])
        if v in visited:
            sa = False
        visited.add(v)
    return WalkRecord(traj, tau, sa, visited, trace=engine.trace)


def run_static(ds: DegreeSequence, eta: Configuration, x: int, t: int,
               rng: np.random.Generator) -> WalkRecord:
    return run_joint(ds, eta, x, t, 0, rng)


def run_modified(ds: DegreeSequence, eta: Configuration, x: int, t: int, T,
                 rng: np.random.Generator) -> WalkRecord:
    """Static walk that jumps to a uniform half-edge at the times in ``T``."""
    resets = T if isinstance(T, ResetSet) else ResetSet(frozenset(T), t)
    if resets.t != t:
        raise ValueError("reset set horizon does not match t")
    traj = np.empty(t + 1, dtype=np.int64)
    traj[0] = x
    visited = {int(ds.vertex_of[x])}
    sa = True
    for s in range(1, t + 1):
        if s in resets:
            nxt = int(rng.integers(ds.ell))
        else:
            nxt = nbrw_step(ds, eta, int(traj[s - 1]), rng)
        traj[s] = nxt
        v = int(ds.vertex_of[nxt])
        if v in visited:
            sa = False
        visited.add(v)
    return WalkRecord(traj, None, sa, visited, resets=resets.T)


def tau_from_trace(trajectory, trace: RewiringTrace) -> int | None:
    """Recompute the first time the previous position lies in the rewired set."""
    for s in range(1, len(trajectory)):
        if trace.rewired_by(int(trajectory[s - 1]), s):
            return s
    return None


def is_self_avoiding(ds: DegreeSequence, seq) -> bool:
    verts = [int(ds.vertex_of[h]) for h in seq]
    return len(set(verts)) == len(verts)


# -- bulk replicas ----------------------------------------------------------


@dataclass
class ReplicaBatch:
    x_final: np.ndarray
    tau: np.ndarray       # -1 when not set within the horizon
    sa_break: np.ndarray  # first revisit time, -1 when self-avoiding throughout
    trajectories: np.ndarray | None = None

    def tau_gt(self, t: int) -> np.ndarray:
        return (self.tau < 0) | (self.tau > t)

    def self_avoiding(self, t: int) -> np.ndarray:
        return (self.sa_break < 0) | (self.sa_break > t)


def simulate_replicas(ds: DegreeSequence, eta: Configuration | None, x: int, t: int, k: int,
                      n_rep: int, state: np.ndarray, *, fresh: bool = False,
                      trajectories: bool = False) -> ReplicaBatch:
    """``n_rep`` compiled replicas of the joint chain sharing one random stream.

    ``state`` is a xoshiro state from ``_kernels.seed_state`` and is advanced
    in place.  With ``fresh`` every replica draws its own start from the
    uniform product measure and ``eta``/``x`` are ignored.
    """
    if eta is None:
        if not fresh:
            raise ValueError("a fixed start needs a configuration")
        eta = Configuration(np.arange(ds.ell) ^ 1, check=False)
    if n_rep * (t + 1) >= 2**31:
        raise ValueError("batch too large for 32-bit rewire marks; split it")
    traj = np.empty((n_rep, t + 1) if trajectories else (0, 0), dtype=np.int64)
    xf, tau, brk = _kernels.joint_batch(
        eta.pair, ds.vertex_of, ds.offsets, ds.degrees, int(x), int(k), int(t),
        int(n_rep), state, bool(fresh), traj,
    )
    return ReplicaBatch(xf, tau, brk, traj if trajectories else None)


def _kernel_state(rng: np.random.Generator) -> np.ndarray:
    state = rng.integers(0, 2**64, size=4, dtype=np.uint64)
    if not state.any():
        state[0] = 1
    return state


# -- reset sets -------------------------------------------------------------


def first_sibling_path(ds: DegreeSequence, eta: Configuration, x: int, t: int) -> list[int]:
    """The eta-path from ``x`` that always moves to the lowest-numbered sibling."""
    path = [int(x)]
    for _ in range(t):
        path.append(first_sibling(ds, int(eta.pair[path[-1]])))
    return path


def sample_reset_set(ds: DegreeSequence, k: int, t: int, rng: np.random.Generator,
                     size: int | None = None):
    """Sample rewiring-history patterns ``T`` along a self-avoiding path.

    For each draw: a fresh uniform configuration and uniform start, the
    first-sibling eta-path of length ``t`` (resampled if it is not
    self-avoiding), then ``t`` steps of the rewiring chain, recording
    ``T = {s : x_{s-1} rewired by time s}``.  The path is fixed before the
    dynamics run, so every accepted draw has the law ``p_t``.

    Returns one ``ResetSet`` (``size=None``) or a list of them.
    """
    count = 1 if size is None else int(size)
    out: list[ResetSet] = []
    attempts = rejections = 0
    while len(out) < count:
        attempts += 1
        eta = sample_uniform_configuration(ds, rng)
        x = int(rng.integers(ds.ell))
        path = first_sibling_path(ds, eta, x, t)
        if not is_self_avoiding(ds, path):
            rejections += 1
            if attempts >= 20 and rejections > 0.5 * attempts:
                raise RuntimeError(
                    f"self-avoidance rejection rate {rejections}/{attempts} above 50%: "
                    f"t={t} too large for ell={ds.ell}"
                )
            continue
        if k == 0 or t == 0:
            out.append(ResetSet(frozenset(), t))
            continue
        watch = np.asarray(path[:t], dtype=np.int64).reshape(1, t)
        stamps = _kernels.rewire_stamps(
            eta.pair, int(k), int(t), watch, 1, _kernel_state(rng)
        )[0]
        T = frozenset(s for s in range(1, t + 1) if 1 <= stamps[s - 1] <= s)
        out.append(ResetSet(T, t))
    return out[0] if size is None else out


def find_self_avoiding_path(ds: DegreeSequence, eta: Configuration, t: int,
                            start: int | None = None) -> list[int] | None:
    """First self-avoiding eta-path of length ``t`` in depth-first order."""
    starts = range(ds.ell) if start is None else [start]
    for x in starts:
        for path in _sa_paths_from(ds, eta, int(x), t):
            return path
    return None


def _sa_paths_from(ds, eta, x, t):
    stack = [[x]]
    while stack:
        path = stack.pop()
        if len(path) == t + 1:
            yield path
            continue
        used = {int(ds.vertex_of[h]) for h in path}
        for z in reversed(siblings(ds, int(eta.pair[path[-1]]))):
            if int(ds.vertex_of[z]) not in used:
                stack.append(path + [z])


def _subset_from_mask(mask: int, t: int) -> frozenset[int]:
    return frozenset(s for s in range(1, t + 1) if mask >> (s - 1) & 1)


def _check_exact_size(ds: DegreeSequence, t: int, k: int, ell_max: int):
    if ds.ell > ell_max or t > 3 or k > 3:
        raise ValueError(
            f"exhaustive history enumeration limited to ell <= {ell_max}, t <= 3, k <= 3 "
            f"(got ell={ds.ell}, t={t}, k={k})"
        )


def exact_reset_law(ds: DegreeSequence, k: int, t: int, eta: Configuration | None = None,
                    path=None, *, ell_max: int = 8) -> dict[frozenset[int], float]:
    """Exact law of the rewiring-history pattern along a fixed path.

    Enumerates every (edge choice x re-pairing) history of the chain started
    at ``eta`` and returns ``T -> P(A(path; T))`` for all ``T`` in ``[t]``.
    Defaults: the first configuration with a self-avoiding path of length
    ``t`` and that path.
    """
    _check_exact_size(ds, t, k, ell_max)
    if eta is None or path is None:
        eta, path = _default_path(ds, t, eta)
    path = [int(h) for h in path]
    if len(path) != t + 1:
        raise ValueError(f"path must list t+1 = {t + 1} half-edges")
    space = config_space(ds.ell)
    table = space.outcomes(k)
    # state: (config index, positions rewired so far, decided pattern bits)
    states = {(space.index_of(eta), 0, 0): 1.0}
    for s in range(1, t + 1):
        nxt: dict[tuple[int, int, int], float] = {}
        for (ci, rew, pat), p in states.items():
            for cj, rmask, q in table[ci]:
                new_rew = rew
                for i in range(t):
                    if rmask >> path[i] & 1:
                        new_rew |= 1 << i
                new_pat = pat | ((new_rew >> (s - 1) & 1) << (s - 1))
                key = (cj, new_rew, new_pat)
                nxt[key] = nxt.get(key, 0.0) + p * q
        states = nxt
    law = {_subset_from_mask(mask, t): 0.0 for mask in range(1 << t)}
    for (_, _, pat), p in states.items():
        law[_subset_from_mask(pat, t)] += p
    return law


def _default_path(ds, t, eta=None):
    space = config_space(ds.ell)
    candidates = [eta] if eta is not None else space.configs
    for c in candidates:
        path = find_self_avoiding_path(ds, c, t)
        if path is not None:
            return c, path
    raise ValueError(f"no self-avoiding path of length {t} exists")


def exact_path_given_history(ds: DegreeSequence, k: int, eta: Configuration, path, T,
                             *, ell_max: int = 10) -> tuple[float, float]:
    """``(P(X_[1,t] = path_[1,t], A(path; T)), P(A(path; T)))`` by enumeration."""
    t = len(path) - 1
    _check_exact_size(ds, t, k, ell_max)
    T = frozenset(T)
    path = [int(h) for h in path]
    space = config_space(ds.ell)
    table = space.outcomes(k)
    walk = {(space.index_of(eta), 0): 1.0}
    hist = {(space.index_of(eta), 0): 1.0}
    for s in range(1, t + 1):
        want = s in T
        new_walk: dict = {}
        new_hist: dict = {}
        for source, target, follow in ((walk, new_walk, True), (hist, new_hist, False)):
            for (ci, rew), p in source.items():
                for cj, rmask, q in table[ci]:
                    new_rew = rew
                    for i in range(t):
                        if rmask >> path[i] & 1:
                            new_rew |= 1 << i
                    if bool(new_rew >> (s - 1) & 1) != want:
                        continue
                    w = p * q
                    if follow:
                        w *= _step_prob(ds, space.configs[cj], path[s - 1], path[s])
                        if w == 0.0:
                            continue
                    key = (cj, new_rew)
                    target[key] = target.get(key, 0.0) + w
        walk, hist = new_walk, new_hist
    return sum(walk.values()), sum(hist.values())


def _step_prob(ds, config, x, y) -> float:
    z = int(config.pair[x])
    if z == y or ds.vertex_of[z] != ds.vertex_of[y]:
        return 0.0
    return 1.0 / forward_degree(ds, z)


# -- segmented paths and the modified walk ----------------------------------


@dataclass
class SegmentedPathSet:
    paths: list[tuple[int, ...]]
    x: int
    y: int
    t: int
    T: frozenset[int]

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def weight(self, ds: DegreeSequence) -> float:
        """Sum over paths of ``prod_{i not in T} 1/deg(x_i) * ell^{-|T|}``."""
        total = 0.0
        scale = float(ds.ell) ** -len(self.T)
        for p in self.paths:
            w = scale
            for i in range(1, self.t + 1):
                if i not in self.T:
                    w /= forward_degree(ds, p[i])
            total += w
        return total


def enumerate_segmented_paths(ds: DegreeSequence, eta: Configuration, x: int, y: int,
                              t: int, T) -> SegmentedPathSet:
    """All self-avoiding segmented paths from ``x`` to ``y`` with resets at ``T``."""
    if ds.ell > MAX_PATH_ELL or t > MAX_PATH_T:
        raise ValueError(f"enumeration limited to ell <= {MAX_PATH_ELL}, t <= {MAX_PATH_T}")
    T = frozenset(T)
    ResetSet(T, t)
    out: list[tuple[int, ...]] = []

    def extend(seq: list[int], used: set[int]):
        s = len(seq)
        if s == t + 1:
            if seq[-1] == y:
                out.append(tuple(seq))
            return
        if s in T:
            candidates = range(ds.ell)
        else:
            candidates = siblings(ds, int(eta.pair[seq[-1]]))
        for z in candidates:
            v = int(ds.vertex_of[z])
            if v in used:
                continue
            used.add(v)
            seq.append(int(z))
            extend(seq, used)
            seq.pop()
            used.discard(v)

    extend([int(x)], {int(ds.vertex_of[x])})
    return SegmentedPathSet(out, int(x), int(y), t, T)


def modified_walk_exact(ds: DegreeSequence, eta: Configuration, x: int, t: int, T) -> np.ndarray:
    """Exact ``P(X_t = y, SA_t | resets at T)`` for every ``y``.

    Forward propagation of the modified walk's transition rule over
    (position, visited vertices), dropping mass that revisits a vertex.
    """
    T = frozenset(T)
    ell = ds.ell
    P = transition_matrix_P(ds, eta)
    front = {(int(x), frozenset([int(ds.vertex_of[x])])): 1.0}
    for s in range(1, t + 1):
        nxt: dict = {}
        for (cur, seen), p in front.items():
            if s in T:
                row = [(z, 1.0 / ell) for z in range(ell)]
            else:
                nz = np.flatnonzero(P[cur])
                row = [(int(z), P[cur, z]) for z in nz]
            for z, q in row:
                v = int(ds.vertex_of[z])
                if v in seen:
                    continue
                key = (z, seen | {v})
                nxt[key] = nxt.get(key, 0.0) + p * q
        front = nxt
    out = np.zeros(ell)
    for (cur, _), p in front.items():
        out[cur] += p
    return out


def all_reset_sets(t: int):
    for r in range(t + 1):
        for T in itertools.combinations(range(1, t + 1), r):
            yield frozenset(T)
