"""Exact-oracle verification suite."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from .dynamics import RewiringEngine, config_space, q_from_distance, rewiring_outcomes
from .halfedge import Configuration, DegreeSequence, build_degree_sequence, hamming_distance, sample_uniform_configuration
from .mixing import exact_joint_law
from .walk import (
    all_reset_sets,
    enumerate_segmented_paths,
    _sa_paths_from,
    exact_reset_law,
    modified_walk_exact,
    nbrw_step,
    simulate_replicas,
    transition_matrix_P,
)

TOL = 1e-12
Q_CASES = ((2, 2), (3, 2), (3, 3), (4, 2))


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def add(self, name: str, passed: bool, detail: str) -> None:
        self.checks.append(CheckResult(name, bool(passed), detail))

    def to_text(self) -> str:
        width = max(len(c.name) for c in self.checks)
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}" for c in self.checks]
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [c.__dict__ for c in self.checks]}


# -- oracles ------------------------------------------------------------------


def brute_force_kernel(m: int, k: int) -> np.ndarray:
    """Transition matrix on all pairings of ``2m`` points by listing every outcome."""
    space = config_space(2 * m)
    mat = np.zeros((len(space), len(space)))
    for i, eta in enumerate(space.configs):
        for zeta, _, p in rewiring_outcomes(eta, k):
            mat[i, space.index_of(zeta)] += p
    return mat


def kernel_from(q_function, m: int, k: int) -> np.ndarray:
    space = config_space(2 * m)
    return np.array([[q_function(hamming_distance(a, b), k, m) for b in space.configs]
                     for a in space.configs])


def exact_tau_position_law(ds: DegreeSequence, k: int, eta: Configuration, x: int, t: int) -> dict:
    """Exact joint law of ``(min(tau, t+1), X_t)`` for the rewire-then-step chain.

    Keys are ``(s, y)`` with ``s = 0`` standing for ``tau > t``.
    """
    space = config_space(ds.ell)
    table = space.outcomes(k)
    Ps = [transition_matrix_P(ds, c) for c in space.configs]
    # (config, position, rewired mask or -1 once tau is known, tau)
    states = {(space.index_of(eta), int(x), 0, 0): 1.0}
    for s in range(1, t + 1):
        nxt: dict = {}
        for (ci, cur, mask, tau), p in states.items():
            for cj, rmask, q in table[ci]:
                new_mask, new_tau = mask, tau
                if tau == 0:
                    new_mask = mask | rmask
                    if new_mask >> cur & 1:
                        new_tau, new_mask = s, -1
                row = Ps[cj][cur]
                for y in np.flatnonzero(row):
                    key = (cj, int(y), new_mask, new_tau)
                    nxt[key] = nxt.get(key, 0.0) + p * q * row[y]
        states = nxt
    law: dict = {}
    for (_, y, _, tau), p in states.items():
        law[(tau, y)] = law.get((tau, y), 0.0) + p
    return law


def _kernel_simulator(ds, eta, x, t, k, N, seed):
    b = simulate_replicas(ds, eta, x, t, k, N, _kernels.seed_state(seed))
    return np.where(b.tau < 0, 0, b.tau), b.x_final


def _walk_first_simulator(ds, eta, x, t, k, N, seed):
    """Deliberately wrong chain: step in the old graph, then rewire."""
    rng = np.random.default_rng(seed)
    taus = np.zeros(N, dtype=np.int64)
    xs = np.empty(N, dtype=np.int64)
    for r in range(N):
        engine = RewiringEngine(eta, k)
        cur, tau = int(x), 0
        for s in range(1, t + 1):
            nxt = nbrw_step(ds, engine.config, cur, rng)
            engine.rewire_step(rng)
            if tau == 0 and engine.trace.rewired_by(cur, s):
                tau = s
            cur = nxt
        taus[r], xs[r] = tau, cur
    return taus, xs


# -- the suite ----------------------------------------------------------------


def run_verification_suite(*, q_function=None, step_order: str = "rewire-first",
                           seed: int = 0, mc_samples: int = 20_000) -> VerificationReport:
    """Run every exact-oracle check.

    ``q_function(d, k, m)`` and ``step_order`` exist so that deliberately
    broken variants can be fed in; the defaults test the real implementation.
    """
    if step_order not in ("rewire-first", "walk-first"):
        raise ValueError(f"unknown step order {step_order!r}")
    q_function = q_from_distance if q_function is None else q_function
    rep = VerificationReport()
    rng = np.random.default_rng(seed)

    # rewiring kernel against outcome enumeration
    worst_bf = worst_sym = worst_row = 0.0
    for m, k in Q_CASES:
        Q = kernel_from(q_function, m, k)
        worst_bf = max(worst_bf, float(np.abs(Q - brute_force_kernel(m, k)).max()))
        worst_sym = max(worst_sym, float(np.abs(Q - Q.T).max()))
        worst_row = max(worst_row, float(np.abs(Q.sum(axis=1) - 1.0).max()))
    rep.add("Q brute force", worst_bf <= TOL, f"max |Q - enumeration| = {worst_bf:.3g}")
    rep.add("Q symmetric", worst_sym == 0.0, f"max |Q - Q^T| = {worst_sym:.3g}")
    rep.add("Q row sums", worst_row <= TOL, f"max |row sum - 1| = {worst_row:.3g}")

    # walk kernel: doubly stochastic and pairing-symmetric
    deg50 = rng.choice([3, 4], size=50)
    deg50[0] += deg50.sum() % 2
    ds50 = build_degree_sequence(deg50, "R*")
    worst_ds = worst_ps = 0.0
    for _ in range(100):
        eta = sample_uniform_configuration(ds50, rng)
        P = transition_matrix_P(ds50, eta)
        worst_ds = max(worst_ds, float(np.abs(P.sum(0) - 1).max()), float(np.abs(P.sum(1) - 1).max()))
        # P(x, y) = P(eta(y), eta(x))
        worst_ps = max(worst_ps, float(np.abs(P - P[np.ix_(eta.pair, eta.pair)].T).max()))
    rep.add("P doubly stochastic", worst_ds <= TOL, f"max deviation {worst_ds:.3g} over 100 graphs")
    rep.add("P pairing symmetry", worst_ps <= TOL, f"max deviation {worst_ps:.3g} over 100 graphs")

    # annealed stationarity of the uniform half-edge law
    ds8 = build_degree_sequence([3, 3, 2], "R")
    space8 = config_space(8)
    law = np.full((len(space8), 8), 1.0 / (len(space8) * 8))
    worst_st = 0.0
    for _ in range(5):
        law = exact_joint_law(ds8, 2, law, 1)
        worst_st = max(worst_st, float(np.abs(law.sum(0) - 1 / 8).max()))
    rep.add("annealed stationarity", worst_st <= TOL, f"max |marginal - 1/ell| = {worst_st:.3g}, t <= 5")

    # reset-pattern law does not depend on the path or the configuration
    laws = []
    for eta in _configs_with_sa_paths(ds8, 2, 2):
        for path in _two_paths(ds8, eta, 2):
            laws.append(exact_reset_law(ds8, 2, 2, eta, path))
    spread = max(abs(a[T] - laws[0][T]) for a in laws for T in laws[0])
    total = abs(sum(laws[0].values()) - 1.0)
    rep.add("reset law invariance", len(laws) >= 4 and spread <= TOL and total <= TOL,
            f"{len(laws)} (config, path) pairs, spread {spread:.3g}, |sum - 1| = {total:.3g}")

    # modified walk restricted to SA equals the segmented-path sum
    ds10 = build_degree_sequence([3, 3, 2, 2], "R")
    eta10 = sample_uniform_configuration(ds10, rng)
    worst_mw = 0.0
    for x in range(ds10.ell):
        for T in all_reset_sets(3):
            law_mw = modified_walk_exact(ds10, eta10, x, 3, T)
            for y in range(ds10.ell):
                w = enumerate_segmented_paths(ds10, eta10, x, y, 3, T).weight(ds10)
                worst_mw = max(worst_mw, abs(law_mw[y] - w))
    rep.add("modified walk identity", worst_mw <= TOL, f"max |law - path sum| = {worst_mw:.3g}")

    # (tau, X_t) from a fixed start: simulation against the exact law
    ds_tau = build_degree_sequence([2, 2, 2, 2], "R")
    eta_tau = Configuration.from_edges([(0, 2), (1, 4), (3, 6), (5, 7)])
    t, k = 2, 2
    exact = exact_tau_position_law(ds_tau, k, eta_tau, 0, t)
    simulate = _kernel_simulator if step_order == "rewire-first" else _walk_first_simulator
    taus, xs = simulate(ds_tau, eta_tau, 0, t, k, mc_samples, seed)
    cells = sorted(exact)
    index = {c: i for i, c in enumerate(cells)}
    observed = np.zeros(len(cells))
    stray = 0
    for s, y in zip(taus.tolist(), xs.tolist()):
        if (s, y) in index:
            observed[index[(s, y)]] += 1
        else:
            stray += 1
    expected = np.array([exact[c] for c in cells]) * mc_samples
    pval = float(stats.chisquare(observed, expected).pvalue) if stray == 0 else 0.0
    p_tail = sum(p for (s, _), p in exact.items() if s == 0)
    rep.add("tau tail", pval > 1e-4,
            f"P(tau>{t}) exact {p_tail:.5f} vs simulated {np.mean(taus == 0):.5f}; "
            f"joint (tau, X_t) chi-square p = {pval:.3g}")
    return rep


def _configs_with_sa_paths(ds: DegreeSequence, t: int, count: int):
    out = []
    for c in config_space(ds.ell).configs:
        if len(list(itertools.islice(_all_sa_paths(ds, c, t), 2))) >= 2:
            out.append(c)
        if len(out) == count:
            break
    return out


def _two_paths(ds: DegreeSequence, eta: Configuration, t: int):
    return list(itertools.islice(_all_sa_paths(ds, eta, t), 2))


def _all_sa_paths(ds: DegreeSequence, eta: Configuration, t: int):
    for x in range(ds.ell):
        yield from _sa_paths_from(ds, eta, x, t)
