"""The k-edge rewiring chain on configurations."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _kernels
from .halfedge import (
    Configuration,
    DegreeSequence,
    double_factorial_odd,
    enumerate_configurations,
    enumerate_pairings,
    hamming_distance,
)

NEVER = np.iinfo(np.int64).max
MAX_EXACT_ELL = 8
MAX_SPACE_ELL = 10
EXACT_RATIONAL_M = 8


def k_from_alpha(alpha: float, m: int, *, warn: bool = True) -> int:
    """Edges rewired per step for a rewiring fraction ``alpha``.

    ``round(alpha * m)`` clamped to ``[2, m]``.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if m < 2:
        raise ValueError(f"need at least two edges to rewire, m={m}")
    raw = int(round(alpha * m))
    if raw < 2 and warn:
        warnings.warn(
            f"alpha*m = {alpha * m:.3g} < 2; k clamped to 2 (alpha effectively raised to {2 / m:.3g})",
            stacklevel=2,
        )
    return min(max(raw, 2), m)


@dataclass
class RewiringTrace:
    """First-rewire time of every half-edge, optionally with each step's set."""

    first_rewire: np.ndarray
    per_step: list[np.ndarray] | None = None

    @classmethod
    def empty(cls, ell: int, record: bool = False) -> "RewiringTrace":
        return cls(np.full(ell, NEVER, dtype=np.int64), [] if record else None)

    def rewired_by(self, x: int, t: int) -> bool:
        """Whether ``x`` lies in the union of the rewired sets up to time ``t``."""
        return bool(self.first_rewire[x] <= t)

    def to_text(self) -> str:
        if self.per_step is None:
            raise ValueError("trace was not recording per-step sets")
        return "".join(
            f"t {s} R {' '.join(str(int(h)) for h in r)}\n"
            for s, r in enumerate(self.per_step, start=1)
        )


class RewiringEngine:
    """Mutable state of the rewiring chain ``C_t``.

    ``k == 0`` is accepted as a test mode in which steps do nothing; any other
    value must satisfy ``2 <= k <= m``.
    """

    def __init__(self, config: Configuration, k: int, *, record: bool = False):
        m = config.ell // 2
        if k != 0 and not 2 <= k <= m:
            raise ValueError(f"need 2 <= k <= m = {m} (or k = 0 for no rewiring), got k={k}")
        self.k = int(k)
        self.m = m
        self.pair = config.pair.copy()
        self.edges = config.edge_array().copy()
        self.order = np.arange(m)
        self.t = 0
        self.trace = RewiringTrace.empty(config.ell, record)

    @property
    def config(self) -> Configuration:
        return Configuration(self.pair, check=False)

    def rewire_step(self, rng: np.random.Generator) -> np.ndarray:
        """Advance one step; returns the ``2k`` rewired half-edges ``R_t``."""
        self.t += 1
        k, m = self.k, self.m
        if k == 0:
            r_t = np.empty(0, dtype=np.int64)
        else:
            js = rng.integers(np.arange(k), m)
            _kernels.partial_swap(self.order, js)
            chosen = self.order[:k]
            halves = rng.permutation(self.edges[chosen].ravel())
            self.edges[chosen] = halves.reshape(k, 2)
            self.pair[halves[0::2]] = halves[1::2]
            self.pair[halves[1::2]] = halves[0::2]
            r_t = np.sort(halves)
            first = self.trace.first_rewire
            first[r_t] = np.minimum(first[r_t], self.t)
        if self.trace.per_step is not None:
            self.trace.per_step.append(r_t)
        return r_t


def rewire_step(engine: RewiringEngine, rng: np.random.Generator) -> np.ndarray:
    return engine.rewire_step(rng)


def _log_binom(n: int, r: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)


def exact_Q(eta: Configuration, zeta: Configuration, k: int, m: int | None = None) -> float:
    """One-step transition probability of the rewiring chain."""
    if m is None:
        m = eta.ell // 2
    if eta.ell != zeta.ell or eta.ell != 2 * m:
        raise ValueError("configurations must live on the same 2m half-edges")
    if not 2 <= k <= m:
        raise ValueError(f"need 2 <= k <= m, got k={k}, m={m}")
    return q_from_distance(hamming_distance(eta, zeta), k, m)


def q_from_distance(d: int, k: int, m: int) -> float:
    if d > k:
        return 0.0
    if m <= EXACT_RATIONAL_M:
        val = Fraction(math.comb(m - d, k - d), math.comb(m, k) * double_factorial_odd(2 * k))
        return float(val)
    log_df = math.lgamma(2 * k + 1) - k * math.log(2) - math.lgamma(k + 1)
    return math.exp(_log_binom(m - d, k - d) - _log_binom(m, k) - log_df)


def rewiring_outcomes(eta: Configuration, k: int):
    """Every (k-edge choice x re-pairing) outcome of one step from ``eta``.

    Yields ``(zeta, rewired_half_edges, probability)``; probabilities are
    ``1 / (C(m, k) (2k-1)!!)`` each.  Brute force, for tiny ``m`` only.
    """
    edges = eta.edges()
    m = len(edges)
    p = 1.0 / (math.comb(m, k) * double_factorial_odd(2 * k))
    for chosen in itertools.combinations(range(m), k):
        halves = [h for i in chosen for h in edges[i]]
        kept = [edges[i] for i in range(m) if i not in chosen]
        for pairing in enumerate_pairings(halves):
            yield Configuration.from_edges(kept + pairing, eta.ell), frozenset(halves), p


class ConfigSpace:
    """Indexed enumeration of all configurations on ``ell <= 10`` half-edges."""

    def __init__(self, ell: int):
        if ell > MAX_SPACE_ELL:
            raise ValueError(f"state space too large for ell={ell} (limit {MAX_SPACE_ELL})")
        self.ell = ell
        self.configs = list(enumerate_configurations(ell))
        self.index = {c.key(): i for i, c in enumerate(self.configs)}

    def __len__(self) -> int:
        return len(self.configs)

    def index_of(self, config: Configuration) -> int:
        return self.index[config.key()]

    def kernel(self, k: int) -> np.ndarray:
        return _kernel_matrix(self.ell, k)

    def outcomes(self, k: int):
        """Per source index: list of ``(target index, rewired mask, probability)``."""
        return _outcome_table(self.ell, k)


@lru_cache(maxsize=None)
def config_space(ell: int) -> ConfigSpace:
    return ConfigSpace(ell)


@lru_cache(maxsize=None)
def _kernel_matrix(ell: int, k: int) -> np.ndarray:
    space = config_space(ell)
    m = ell // 2
    size = len(space)
    mat = np.empty((size, size))
    for i, a in enumerate(space.configs):
        for j, b in enumerate(space.configs):
            mat[i, j] = q_from_distance(hamming_distance(a, b), k, m)
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=None)
def _outcome_table(ell: int, k: int):
    space = config_space(ell)
    table = []
    for eta in space.configs:
        acc: dict[tuple[int, int], float] = {}
        for zeta, halves, p in rewiring_outcomes(eta, k):
            mask = 0
            for h in halves:
                mask |= 1 << h
            key = (space.index_of(zeta), mask)
            acc[key] = acc.get(key, 0.0) + p
        table.append([(j, mask, p) for (j, mask), p in acc.items()])
    return table


def apply_Q(ds: DegreeSequence | int, k: int, dist) -> np.ndarray:
    """One exact step of the rewiring chain applied to a distribution.

    ``dist`` is indexed like ``config_space(ell).configs``.
    """
    ell = ds if isinstance(ds, int) else ds.ell
    if ell > MAX_EXACT_ELL:
        raise ValueError(f"state space too large for ell={ell} (limit {MAX_EXACT_ELL})")
    space = config_space(ell)
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (len(space),):
        raise ValueError(f"distribution must have length {len(space)}")
    return dist @ space.kernel(k)
