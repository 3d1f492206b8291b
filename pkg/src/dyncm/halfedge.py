"""Half-edge representation of configuration-model multigraphs.

Half-edges are numbered vertex-major: the ``d(v)`` half-edges of vertex ``v``
occupy the contiguous block ``offsets[v] .. offsets[v+1]-1``.  A configuration
is a fixed-point-free involution on ``0 .. ell-1`` stored as an integer array.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

MAX_ENUMERATION_ELL = 12


class Mode(str, enum.Enum):
    """Degree-floor mode: ``R`` needs every degree >= 2, ``R*`` needs >= 3."""

    R = "R"
    RSTAR = "R*"

    @property
    def floor(self) -> int:
        return 2 if self is Mode.R else 3


def _as_mode(mode) -> Mode:
    if isinstance(mode, Mode):
        return mode
    try:
        return Mode(str(mode).upper().replace("STAR", "*"))
    except ValueError:
        raise ValueError(f"unknown degree mode {mode!r}; expected 'R' or 'R*'") from None


@dataclass(frozen=True, eq=False)
class DegreeSequence:
    degrees: np.ndarray
    mode: Mode
    offsets: np.ndarray = field(repr=False)
    vertex_of: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.degrees.shape[0])

    @property
    def ell(self) -> int:
        return int(self.offsets[-1])

    @property
    def m(self) -> int:
        return self.ell // 2

    @property
    def d_max(self) -> int:
        return int(self.degrees.max())

    @property
    def forward_degrees(self) -> np.ndarray:
        """``deg(x)`` for every half-edge, as an array of length ``ell``."""
        return self.degrees[self.vertex_of] - 1

    def half_edges(self, v: int) -> range:
        return range(int(self.offsets[v]), int(self.offsets[v + 1]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DegreeSequence):
            return NotImplemented
        return self.mode is other.mode and np.array_equal(self.degrees, other.degrees)

    def __hash__(self) -> int:
        return hash((self.mode, self.degrees.tobytes()))


def build_degree_sequence(degrees: Sequence[int], mode="R") -> DegreeSequence:
    """Validate ``degrees`` and build the half-edge layout tables."""
    mode = _as_mode(mode)
    deg = np.asarray(list(degrees), dtype=np.int64)
    if deg.ndim != 1 or deg.size == 0:
        raise ValueError("degree sequence must be a nonempty list of integers")
    low = deg.min()
    if low < mode.floor:
        raise ValueError(
            f"degree {int(low)} below the {mode.value}-mode floor of {mode.floor}"
        )
    ell = int(deg.sum())
    if ell % 2:
        raise ValueError(f"total number of half-edges ell={ell} is odd")
    offsets = np.zeros(deg.size + 1, dtype=np.int64)
    np.cumsum(deg, out=offsets[1:])
    vertex_of = np.repeat(np.arange(deg.size, dtype=np.int64), deg)
    for arr in (deg, offsets, vertex_of):
        arr.setflags(write=False)
    return DegreeSequence(degrees=deg, mode=mode, offsets=offsets, vertex_of=vertex_of)


def forward_degree(ds: DegreeSequence, x: int) -> int:
    return int(ds.degrees[ds.vertex_of[x]]) - 1


def siblings(ds: DegreeSequence, x: int) -> list[int]:
    v = int(ds.vertex_of[x])
    return [y for y in ds.half_edges(v) if y != x]


def first_sibling(ds: DegreeSequence, x: int) -> int:
    """Lowest-numbered sibling of ``x``."""
    lo = int(ds.offsets[ds.vertex_of[x]])
    return lo if lo != x else lo + 1


def double_factorial_odd(ell: int) -> int:
    """``(ell-1)!!``, the number of perfect matchings of ``ell`` points."""
    out = 1
    for j in range(ell - 1, 0, -2):
        out *= j
    return out


class Configuration:
    """A pairing of half-edges: ``pair[x]`` is the half-edge matched to ``x``."""

    __slots__ = ("pair",)

    def __init__(self, pair, *, check: bool = True):
        arr = np.array(pair, dtype=np.int64)
        if check:
            validate_pairing(arr)
        arr.setflags(write=False)
        self.pair = arr

    @property
    def ell(self) -> int:
        return int(self.pair.shape[0])

    def __len__(self) -> int:
        return self.ell

    def __getitem__(self, x):
        return self.pair[x]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return np.array_equal(self.pair, other.pair)

    def __hash__(self) -> int:
        return hash(self.pair.tobytes())

    def __repr__(self) -> str:
        return f"Configuration({self.edges()})"

    def key(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.pair)

    def edges(self) -> list[tuple[int, int]]:
        """Canonical edge list: ``(min, max)`` pairs in ascending order."""
        idx = np.flatnonzero(np.arange(self.ell) < self.pair)
        return [(int(a), int(self.pair[a])) for a in idx]

    def edge_array(self) -> np.ndarray:
        """Canonical edges as an ``(m, 2)`` integer array."""
        lo = np.flatnonzero(np.arange(self.ell) < self.pair)
        return np.stack([lo, self.pair[lo]], axis=1)

    @classmethod
    def from_edges(cls, edges, ell: int | None = None) -> "Configuration":
        edges = [tuple(map(int, e)) for e in edges]
        if ell is None:
            ell = 2 * len(edges)
        pair = np.full(ell, -1, dtype=np.int64)
        for a, b in edges:
            if pair[a] != -1 or pair[b] != -1:
                raise ValueError(f"half-edge used twice in edge ({a}, {b})")
            pair[a], pair[b] = b, a
        return cls(pair)

    def to_text(self) -> str:
        lines = [f"ell={self.ell}"]
        lines.extend(f"{a} {b}" for a, b in self.edges())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Configuration":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("ell="):
            raise ValueError("configuration text must start with 'ell=<ell>'")
        ell = int(lines[0][4:])
        edges = [tuple(int(tok) for tok in ln.split()) for ln in lines[1:]]
        if len(edges) * 2 != ell:
            raise ValueError(f"expected {ell // 2} pairs, found {len(edges)}")
        return cls.from_edges(edges, ell)


def validate_pairing(pair: np.ndarray) -> None:
    ell = pair.shape[0]
    if ell % 2:
        raise ValueError("pairing on an odd number of half-edges")
    if ell == 0:
        return
    if pair.min() < 0 or pair.max() >= ell:
        raise ValueError("pairing entries out of range")
    idx = np.arange(ell)
    if np.any(pair == idx):
        raise ValueError("pairing has a fixed point")
    if np.any(pair[pair] != idx):
        raise ValueError("pairing is not an involution")


def pairing_from_order(order: np.ndarray) -> np.ndarray:
    """Pair consecutive entries ``order[0]-order[1]``, ``order[2]-order[3]``, ..."""
    pair = np.empty(order.shape[0], dtype=np.int64)
    pair[order[0::2]] = order[1::2]
    pair[order[1::2]] = order[0::2]
    return pair


def sample_uniform_configuration(ds: DegreeSequence | int, rng: np.random.Generator) -> Configuration:
    """Uniform pairing of the half-edges: shuffle, then pair consecutive entries."""
    ell = ds if isinstance(ds, int) else ds.ell
    order = rng.permutation(ell)
    return Configuration(pairing_from_order(order), check=False)


def hamming_distance(eta: Configuration, zeta: Configuration) -> int:
    """Number of edges of ``eta`` that are not edges of ``zeta``."""
    if eta.ell != zeta.ell:
        raise ValueError(f"configurations on {eta.ell} and {zeta.ell} half-edges")
    return int(np.count_nonzero(eta.pair != zeta.pair)) // 2


def _pairings(items: list[int]) -> Iterator[list[tuple[int, int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, other in enumerate(rest):
        for tail in _pairings(rest[:i] + rest[i + 1:]):
            yield [(first, other)] + tail


def enumerate_pairings(items: Sequence[int]) -> Iterator[list[tuple[int, int]]]:
    """All perfect matchings of ``items`` (no size guard)."""
    items = list(items)
    if len(items) % 2:
        raise ValueError("cannot pair an odd number of items")
    return _pairings(items)


def enumerate_configurations(ds: DegreeSequence | int) -> Iterator[Configuration]:
    """Every configuration on ``ell <= 12`` half-edges, each exactly once."""
    ell = ds if isinstance(ds, int) else ds.ell
    if ell > MAX_ENUMERATION_ELL:
        raise ValueError(
            f"ell={ell} too large to enumerate ({double_factorial_odd(ell)} pairings)"
        )
    for edges in enumerate_pairings(range(ell)):
        yield Configuration.from_edges(edges, ell)


def read_degrees(path: str | Path) -> list[int]:
    """Degree-sequence file: one integer per line (blank lines and ``#`` ignored)."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(int(line))
    return out


def write_degrees(path: str | Path, degrees: Sequence[int]) -> None:
    Path(path).write_text("".join(f"{int(d)}\n" for d in degrees))
