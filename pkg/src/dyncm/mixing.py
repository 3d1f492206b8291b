"""Total-variation estimates, exact annealed laws and the limiting profiles."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import MAX_EXACT_ELL, config_space
from .halfedge import Configuration, DegreeSequence
from .regularity import Regime
from .walk import _kernel_state, simulate_replicas, transition_matrix_P

LOW_CONFIDENCE = 100
BEYOND_HORIZON = -1
UNDEFINED = math.nan  # theory value at the cutoff point itself


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support sizes differ: {p.shape} vs {q.shape}")
    for name, v in (("p", p), ("q", q)):
        if abs(v.sum() - 1.0) > 1e-9 or (v < 0).any():
            raise ValueError(f"{name} is not a probability vector (sum {v.sum():.12g})")
    return 0.5 * float(np.abs(p - q).sum())


@dataclass
class EmpiricalDistribution:
    counts: np.ndarray
    N: int
    tag: str = "all"  # "all" | "tau>t" | "tau<=t" | "SA"

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if int(self.counts.sum()) != self.N:
            raise ValueError(f"counts sum to {int(self.counts.sum())}, expected N={self.N}")

    @property
    def ell(self) -> int:
        return int(self.counts.shape[0])

    @property
    def low_confidence(self) -> bool:
        return self.N < LOW_CONFIDENCE

    def probabilities(self) -> np.ndarray:
        if self.N == 0:
            raise ValueError(f"empty distribution ({self.tag})")
        return self.counts / self.N

    def __add__(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        if other.tag != self.tag:
            raise ValueError(f"cannot merge {self.tag} with {other.tag}")
        return EmpiricalDistribution(self.counts + other.counts, self.N + other.N, self.tag)

    @classmethod
    def empty(cls, ell: int, tag: str = "all") -> "EmpiricalDistribution":
        return cls(np.zeros(ell, dtype=np.int64), 0, tag)


@dataclass
class DistributionEstimate:
    all: EmpiricalDistribution
    tau_gt: EmpiricalDistribution
    tau_le: EmpiricalDistribution
    n_sa: int

    @property
    def N(self) -> int:
        return self.all.N

    @property
    def sa_rate(self) -> float:
        return self.n_sa / self.N if self.N else math.nan

    @property
    def p_tau_gt(self) -> float:
        return self.tau_gt.N / self.N if self.N else math.nan

    def __add__(self, other: "DistributionEstimate") -> "DistributionEstimate":
        return DistributionEstimate(self.all + other.all, self.tau_gt + other.tau_gt,
                                    self.tau_le + other.tau_le, self.n_sa + other.n_sa)

    def __iter__(self):
        yield from (self.all, self.tau_gt, self.tau_le, self.sa_rate, self.p_tau_gt)


def estimate_from_batch(ell: int, batch, t: int) -> DistributionEstimate:
    gt = batch.tau_gt(t)
    xf = batch.x_final
    return DistributionEstimate(
        EmpiricalDistribution(np.bincount(xf, minlength=ell), xf.size, "all"),
        EmpiricalDistribution(np.bincount(xf[gt], minlength=ell), int(gt.sum()), "tau>t"),
        EmpiricalDistribution(np.bincount(xf[~gt], minlength=ell), int((~gt).sum()), "tau<=t"),
        int(batch.self_avoiding(t).sum()),
    )


def estimate_distribution(ds: DegreeSequence, eta: Configuration | None, x: int, t: int, k: int,
                          N: int, rng, *, fresh: bool = False) -> DistributionEstimate:
    """``N`` replicas of the joint chain from ``(eta, x)``, split by the outcome of tau.

    ``rng`` is a numpy Generator or a xoshiro state array from
    ``_kernels.seed_state``.  Iterating the result gives
    ``(all, tau>t, tau<=t, sa_rate, p_tau_gt)``.
    """
    if N < 1:
        raise ValueError(f"need N >= 1 replicas, got {N}")
    state = rng if isinstance(rng, np.ndarray) else _kernel_state(rng)
    batch = simulate_replicas(ds, eta, x, t, k, N, state, fresh=fresh)
    return estimate_from_batch(ds.ell, batch, t)


def _tv_uniform_counts(counts: np.ndarray, N: int) -> np.ndarray:
    """Raw TV to uniform of each row of a count matrix."""
    ell = counts.shape[-1]
    return 0.5 * np.abs(counts / N - 1.0 / ell).sum(axis=-1)


def uniform_baseline(ell: int, N: int, rng: np.random.Generator, B: int = 20) -> tuple[float, float]:
    """Mean and standard deviation of the raw TV of ``B`` exact-uniform ``N``-samples."""
    if B < 1:
        raise ValueError("need at least one baseline draw")
    draws = rng.multinomial(N, np.full(ell, 1.0 / ell), size=B)
    vals = _tv_uniform_counts(draws, N)
    return float(vals.mean()), float(vals.std(ddof=1)) if B > 1 else 0.0


class TVEstimate(NamedTuple):
    tv_raw: float
    tv_debiased: float
    stderr: float


def debiased_tv(emp: EmpiricalDistribution, rng: np.random.Generator, *, B: int = 20,
                n_boot: int = 50, baseline: tuple[float, float] | None = None,
                clamp: bool = True) -> TVEstimate:
    """TV to uniform minus the finite-sample baseline, with a bootstrap stderr.

    ``baseline`` may be passed as ``(mean, sd)`` to reuse one computed by
    ``uniform_baseline`` for the same ``(ell, N)``.
    """
    if emp.N == 0:
        raise ValueError("cannot estimate TV from zero samples")
    if B < 20 and baseline is None:
        raise ValueError(f"need B >= 20 baseline draws, got {B}")
    N, ell = emp.N, emp.ell
    raw = float(_tv_uniform_counts(emp.counts, N))
    base, base_sd = uniform_baseline(ell, N, rng, B) if baseline is None else baseline
    boot = _tv_uniform_counts(rng.multinomial(N, emp.counts / N, size=n_boot), N)
    stderr = math.sqrt(float(boot.var(ddof=1)) + base_sd ** 2 / max(B, 1))
    deb = raw - base
    if clamp:
        deb = min(max(deb, 0.0), 1.0)
    return TVEstimate(raw, deb, stderr)


def _walk_matrices(ds: DegreeSequence) -> np.ndarray:
    space = config_space(ds.ell)
    return np.stack([transition_matrix_P(ds, c) for c in space.configs])


def exact_joint_law(ds: DegreeSequence, k: int, init: np.ndarray, t: int) -> np.ndarray:
    """Iterate the rewire-then-step kernel on ``Conf_H x H`` for ``t`` steps.

    ``init`` has shape ``(n_configs, ell)``; ``k == 0`` freezes the graph.
    """
    if ds.ell > MAX_EXACT_ELL:
        raise ValueError(f"state space too large for ell={ds.ell} (limit {MAX_EXACT_ELL})")
    space = config_space(ds.ell)
    law = np.asarray(init, dtype=float)
    if law.shape != (len(space), ds.ell):
        raise ValueError(f"initial law must have shape {(len(space), ds.ell)}")
    Ps = _walk_matrices(ds)
    Q = space.kernel(k) if k else None
    for _ in range(t):
        if Q is not None:
            law = Q.T @ law
        law = np.einsum("cx,cxy->cy", law, Ps)
    return law


def exact_annealed_distribution(ds: DegreeSequence, k: int, eta: Configuration | None,
                                x: int | None, t: int) -> np.ndarray:
    """Exact law of ``X_t``; ``eta``/``x`` set to None mean uniform starts."""
    if ds.ell > MAX_EXACT_ELL:
        raise ValueError(f"state space too large for ell={ds.ell} (limit {MAX_EXACT_ELL})")
    space = config_space(ds.ell)
    cw = np.full(len(space), 1.0 / len(space)) if eta is None else np.eye(len(space))[space.index_of(eta)]
    xw = np.full(ds.ell, 1.0 / ds.ell) if x is None else np.eye(ds.ell)[int(x)]
    return exact_joint_law(ds, k, np.outer(cw, xw), t).sum(axis=0)


def theory_profile(regime, beta: float, c_stat: float, c: float) -> float:
    """Limiting value of the distance at profile abscissa ``c``.

    Returns ``UNDEFINED`` (nan) at ``c == c_stat`` in the critical and
    subcritical regimes, where the limit is not specified.
    """
    regime = Regime(regime)
    if c < 0:
        raise ValueError(f"c must be nonnegative, got {c}")
    if beta is not None and beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if regime is Regime.SUPERCRITICAL:
        return math.exp(-c * c / 2)
    if c == c_stat:
        return UNDEFINED
    if c > c_stat:
        return 0.0
    if regime is Regime.CRITICAL:
        return math.exp(-beta * c * c / 2)
    return 1.0


def decomposition_bounds(p_tau_gt: float, tv_given_gt: float, tv_given_le: float) -> tuple[float, float]:
    """Triangle-inequality sandwich for the distance given the split at tau."""
    for name, v in (("p_tau_gt", p_tau_gt), ("tv_given_gt", tv_given_gt), ("tv_given_le", tv_given_le)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} = {v} outside [0, 1]")
    a = p_tau_gt * tv_given_gt
    b = (1.0 - p_tau_gt) * tv_given_le
    return max(0.0, a - b), a + b


@dataclass
class MixingPoint:
    c: float
    t: int
    tv_raw: float
    tv_debiased: float
    stderr: float
    p_tau_gt: float
    theory: float
    lower_bound: float
    upper_bound: float
    tv_unclamped: float = math.nan
    low_confidence: bool = False


def mixing_time(profile, epsilon: float) -> int:
    """Smallest grid time with debiased distance at most ``epsilon``."""
    if not profile:
        raise ValueError("empty profile")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    for pt in sorted(profile, key=lambda p: p.t):
        if pt.tv_debiased <= epsilon:
            return pt.t
    return BEYOND_HORIZON
