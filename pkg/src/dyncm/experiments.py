"""Experiment configuration, degree generators and profile orchestration."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import _kernels
from .dynamics import k_from_alpha
from .halfedge import Configuration, DegreeSequence, build_degree_sequence, sample_uniform_configuration
from .mixing import (
    DistributionEstimate,
    EmpiricalDistribution,
    MixingPoint,
    _tv_uniform_counts,
    debiased_tv,
    decomposition_bounds,
    estimate_from_batch,
    theory_profile,
    uniform_baseline,
)
from .regularity import Regime, degree_statistics
from .walk import simulate_replicas

log = logging.getLogger(__name__)

CONFIG_KEYS = ("model", "n", "d", "d1", "d2", "frac1", "gamma", "regime", "beta", "alpha",
               "c_grid", "N", "B", "seed", "out")
CSV_COLUMNS = ("regime", "n", "ell", "alpha", "k", "c", "t", "N", "tv_raw", "tv_debiased",
               "stderr", "p_tau_gt", "sa_rate", "theory", "lower", "upper", "seed")
BATCH_SIZE = 50_000  # replicas per task; fixed so results do not depend on worker count
MODELS = ("regular", "bivalued", "powerlaw")


@dataclass
class ExperimentConfig:
    model: str = "bivalued"
    n: int = 10_000
    d: int | None = None
    d1: int | None = 3
    d2: int | None = 4
    frac1: float | None = 0.5
    gamma: float | None = None
    regime: str = "supercritical"
    beta: float | None = None
    alpha: float | None = None
    c_grid: list = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0])
    N: int = 10_000
    B: int = 20
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown degree model {self.model!r}; expected one of {MODELS}")
        self.regime = Regime(self.regime).value
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.N < 0:
            raise ValueError(f"N must be nonnegative, got {self.N}")
        if self.B < 20:
            raise ValueError(f"need B >= 20 baseline draws, got {self.B}")
        if self.regime == Regime.CRITICAL.value and self.alpha is None and self.beta is None:
            raise ValueError("critical regime needs beta (or an explicit alpha)")
        if not self.c_grid:
            raise ValueError("empty c grid")

    @property
    def log_n(self) -> float:
        return math.log(self.n)

    def resolved_alpha(self) -> float:
        if self.alpha is not None:
            return float(self.alpha)
        if self.regime == Regime.SUPERCRITICAL.value:
            return 1.0 / self.log_n
        if self.regime == Regime.CRITICAL.value:
            return self.beta / self.log_n ** 2
        return self.log_n ** -3

    def effective_beta(self) -> float:
        """beta used for the theory column; inf in the supercritical regime."""
        if self.regime == Regime.SUPERCRITICAL.value:
            return math.inf
        if self.regime == Regime.SUBCRITICAL.value:
            return 0.0
        return self.beta if self.beta is not None else self.resolved_alpha() * self.log_n ** 2

    def time_scale(self) -> float:
        if self.regime == Regime.SUPERCRITICAL.value:
            return self.resolved_alpha() ** -0.5
        return self.log_n

    def resolve_c(self, c_stat: float) -> list[float]:
        """Numeric c grid; entries may be written as multiples of ``c_stat``."""
        out = []
        for c in self.c_grid:
            if isinstance(c, str):
                tok = c.replace(" ", "")
                if tok.endswith("c_stat"):
                    mult = tok[:-len("c_stat")].rstrip("*")
                    c = (float(mult) if mult else 1.0) * c_stat
                else:
                    c = float(tok)
            out.append(float(c))
        if any(c <= 0 for c in out):
            raise ValueError(f"c grid must be positive: {out}")
        return sorted(out)

    def to_text(self) -> str:
        lines = []
        for key in CONFIG_KEYS:
            v = getattr(self, key)
            if v is None:
                continue
            if key == "c_grid":
                v = ",".join(str(c) for c in v)
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"


_INT_KEYS = {"n", "d", "d1", "d2", "N", "B", "seed"}
_FLOAT_KEYS = {"frac1", "gamma", "beta", "alpha"}


def _parse_int(key: str, raw: str) -> int:
    val = float(raw)
    if not val.is_integer():
        raise ValueError(f"{key} must be an integer, got {raw!r}")
    return int(val)


def parse_config(text: str) -> ExperimentConfig:
    """Flat ``key = value`` text; ``#`` starts a comment."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if key in _INT_KEYS:
            values[key] = _parse_int(key, raw)
        elif key in _FLOAT_KEYS:
            values[key] = float(raw)
        elif key == "c_grid":
            values[key] = [tok.strip() if "c_stat" in tok else float(tok)
                           for tok in raw.split(",") if tok.strip()]
        else:
            values[key] = raw
    return ExperimentConfig(**values)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def parse_model_spec(text: str, seed: int = 0) -> ExperimentConfig:
    """``name[:key=value,...]``, e.g. ``bivalued:n=10000,d1=3,d2=4,frac1=0.5``."""
    name, _, rest = text.partition(":")
    values: dict = {"model": name.strip(), "seed": seed}
    for item in filter(None, (tok.strip() for tok in rest.split(","))):
        key, eq, raw = item.partition("=")
        key = key.strip()
        if not eq or key not in ("n", "d", "d1", "d2", "frac1", "gamma"):
            raise ValueError(f"bad model parameter {item!r}")
        values[key] = _parse_int(key, raw) if key in _INT_KEYS else float(raw)
    if values["model"] != "bivalued":
        values.setdefault("d1", None)
        values.setdefault("d2", None)
        values.setdefault("frac1", None)
    return ExperimentConfig(**values)


def _repair_parity(deg: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if deg.sum() % 2:
        deg[rng.integers(deg.size)] += 1
    return deg


def generate_degrees(config: ExperimentConfig, rng: np.random.Generator) -> DegreeSequence:
    """Degree sequence of the configured model; odd totals get one vertex bumped."""
    n, model = config.n, config.model
    if model == "regular":
        if config.d is None or config.d < 2:
            raise ValueError(f"regular model needs d >= 2, got {config.d}")
        deg = np.full(n, config.d, dtype=np.int64)
    elif model == "bivalued":
        d1, d2, f = config.d1, config.d2, config.frac1
        if d1 is None or d2 is None or f is None:
            raise ValueError("bivalued model needs d1, d2 and frac1")
        if min(d1, d2) < 2 or not 0.0 <= f <= 1.0:
            raise ValueError(f"infeasible bivalued parameters d1={d1}, d2={d2}, frac1={f}")
        n1 = int(round(f * n))
        deg = np.concatenate([np.full(n1, d1), np.full(n - n1, d2)]).astype(np.int64)
    else:
        gamma = config.gamma
        if gamma is None or gamma <= 2:
            raise ValueError(f"power law needs gamma > 2, got {gamma}")
        cap = math.ceil(n ** (1.0 / max(gamma - 1.0, 2.0)))
        if cap < 3:
            raise ValueError(f"power-law cap {cap} below the degree floor 3 at n={n}")
        support = np.arange(3, cap + 1)
        w = support.astype(float) ** -gamma
        deg = rng.choice(support, size=n, p=w / w.sum()).astype(np.int64)
    deg = _repair_parity(deg, rng)
    mode = "R*" if deg.min() >= 3 else "R"
    return build_degree_sequence(deg, mode)


def sample_typical_start(ds: DegreeSequence, rng: np.random.Generator) -> tuple[Configuration, int]:
    """Independent uniform pairing and uniform half-edge."""
    eta = sample_uniform_configuration(ds, rng)
    return eta, int(rng.integers(ds.ell))


@dataclass
class ResultRow:
    regime: str
    n: int
    ell: int
    alpha: float
    k: int
    c: float
    t: int
    N: int
    tv_raw: float
    tv_debiased: float
    stderr: float
    p_tau_gt: float
    sa_rate: float
    theory: float
    lower: float
    upper: float
    seed: int
    wall: float = 0.0
    tv_unclamped: float = math.nan
    low_confidence: bool = False

    def point(self) -> MixingPoint:
        return MixingPoint(self.c, self.t, self.tv_raw, self.tv_debiased, self.stderr,
                           self.p_tau_gt, self.theory, self.lower, self.upper,
                           self.tv_unclamped, self.low_confidence)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def row_to_csv(row: ResultRow) -> list[str]:
    out = []
    for col in CSV_COLUMNS:
        v = getattr(row, col)
        if col == "theory" and isinstance(v, float) and math.isnan(v):
            out.append("undefined")
        else:
            out.append(_fmt(v))
    return out


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(row_to_csv(r))
    return buf.getvalue()


def _task(args):
    degrees, mode, pair, x, t, k, n_rep, key, fresh = args
    ds = build_degree_sequence(degrees, mode)
    eta = None if pair is None else Configuration(pair, check=False)
    start = time.perf_counter()
    batch = simulate_replicas(ds, eta, x, t, k, n_rep, _kernels.seed_state(*key), fresh=fresh)
    est = estimate_from_batch(ds.ell, batch, t)
    return est, time.perf_counter() - start


def _batches(N: int) -> list[int]:
    full, rest = divmod(N, BATCH_SIZE)
    return [BATCH_SIZE] * full + ([rest] if rest else [])


@dataclass
class ExperimentSetup:
    config: ExperimentConfig
    ds: DegreeSequence
    alpha: float
    k: int
    c_stat: float
    grid: list[tuple[float, int]]
    eta: Configuration | None
    x: int


def prepare_experiment(config: ExperimentConfig, *, fresh: bool = False) -> ExperimentSetup:
    ds = generate_degrees(config, np.random.default_rng([config.seed, 1]))
    alpha = config.resolved_alpha()
    k = k_from_alpha(alpha, ds.m)
    c_stat = degree_statistics(ds).c_stat
    scale = config.time_scale()
    # round before the ceiling so that c * scale landing on an integer is not bumped by float noise
    grid = [(c, math.ceil(round(c * scale, 9))) for c in config.resolve_c(c_stat)]
    if fresh:
        eta, x = None, 0
    else:
        eta, x = sample_typical_start(ds, np.random.default_rng([config.seed, 2]))
    return ExperimentSetup(config, ds, alpha, k, c_stat, grid, eta, x)


def _make_row(setup: ExperimentSetup, ci: int, c: float, t: int, est: DistributionEstimate | None,
              wall: float) -> ResultRow:
    cfg = setup.config
    theory = theory_profile(cfg.regime, cfg.effective_beta(), setup.c_stat, c)
    common = dict(regime=cfg.regime, n=setup.ds.n, ell=setup.ds.ell, alpha=setup.alpha, k=setup.k,
                  c=c, t=t, N=cfg.N, theory=theory, seed=cfg.seed, wall=wall)
    nan = math.nan
    if est is None or est.N == 0:
        return ResultRow(tv_raw=nan, tv_debiased=nan, stderr=nan, p_tau_gt=nan, sa_rate=nan,
                         lower=nan, upper=nan, **common)
    rng = np.random.default_rng([cfg.seed, 4, ci])
    baseline = uniform_baseline(setup.ds.ell, est.N, rng, cfg.B)
    raw, deb, se = debiased_tv(est.all, rng, B=cfg.B, baseline=baseline)
    unclamped = raw - baseline[0]
    a = float(_tv_uniform_counts(est.tau_gt.counts, est.tau_gt.N)) if est.tau_gt.N else 0.0
    b = float(_tv_uniform_counts(est.tau_le.counts, est.tau_le.N)) if est.tau_le.N else 0.0
    lower, upper = decomposition_bounds(est.p_tau_gt, a, b)
    low = 0 < min(est.tau_gt.N, est.tau_le.N) < 100
    return ResultRow(tv_raw=raw, tv_debiased=deb, stderr=se, p_tau_gt=est.p_tau_gt,
                     sa_rate=est.sa_rate, lower=lower, upper=upper, tv_unclamped=unclamped,
                     low_confidence=low, **common)


def run_profile_experiment(config: ExperimentConfig, *, workers: int = 1, fresh: bool = False,
                           out: str | Path | None = None) -> list[ResultRow]:
    """One row per c: ``t = ceil(c * scale)`` and ``N`` replicas of the joint chain.

    By default every replica starts from one mu_n-typical ``(eta, x)`` drawn
    from the master seed; ``fresh`` gives every replica its own start.  When
    ``out`` is set, rows are appended to that CSV as they complete.
    """
    setup = prepare_experiment(config, fresh=fresh)
    ds = setup.ds
    pair = None if setup.eta is None else setup.eta.pair
    tasks, owner = [], []
    if config.N > 0:
        for ci, (c, t) in enumerate(setup.grid):
            for bi, size in enumerate(_batches(config.N)):
                tasks.append((ds.degrees, ds.mode.value, pair, setup.x, t, setup.k, size,
                              (config.seed, 3, ci, bi), fresh))
                owner.append(ci)
    log.info("profile: n=%d ell=%d alpha=%.5g k=%d, %d rows, %d tasks",
             ds.n, ds.ell, setup.alpha, setup.k, len(setup.grid), len(tasks))

    handle = None
    if out is not None:
        handle = open(out, "w", newline="")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        handle.flush()
    rows: list[ResultRow] = []
    pending = {ci: owner.count(ci) for ci in range(len(setup.grid))}
    acc: dict[int, DistributionEstimate] = {}
    wall: dict[int, float] = {}
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 and tasks else None
    try:
        results = pool.map(_task, tasks) if pool else map(_task, tasks)
        ti = iter(range(len(tasks)))
        next_row = 0

        def flush_ready():
            nonlocal next_row
            while next_row < len(setup.grid) and pending[next_row] == 0:
                c, t = setup.grid[next_row]
                row = _make_row(setup, next_row, c, t, acc.get(next_row), wall.get(next_row, 0.0))
                rows.append(row)
                if handle is not None:
                    writer.writerow(row_to_csv(row))
                    handle.flush()
                log.info("row c=%.4g t=%d tv=%.4g theory=%.4g", c, t, row.tv_debiased, row.theory)
                next_row += 1

        flush_ready()
        # results arrive in task order, so the merge is deterministic
        for (est, dt) in results:
            ci = owner[next(ti)]
            acc[ci] = est if ci not in acc else acc[ci] + est
            wall[ci] = wall.get(ci, 0.0) + dt
            pending[ci] -= 1
            flush_ready()
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
        if handle is not None:
            handle.close()
    return rows


def write_csv(rows, path: str | Path) -> None:
    Path(path).write_text(rows_to_csv(rows))


def write_svg(rows, path: str | Path) -> None:
    """Estimate vs theory per regime as a standalone SVG line chart."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    regimes = sorted({r.regime for r in rows})
    fig, axes = plt.subplots(1, max(len(regimes), 1), figsize=(4.5 * max(len(regimes), 1), 3.5),
                             squeeze=False)
    for ax, reg in zip(axes[0], regimes):
        sel = sorted((r for r in rows if r.regime == reg), key=lambda r: r.c)
        cs = [r.c for r in sel]
        ax.errorbar(cs, [r.tv_debiased for r in sel], yerr=[r.stderr for r in sel],
                    marker="o", label="estimate")
        ax.plot(cs, [r.theory for r in sel], "k--", marker="x", label="theory")
        ax.set_title(reg)
        ax.set_xlabel("c")
        ax.set_ylim(-0.05, 1.05)
    axes[0][0].set_ylabel("TV distance to uniform")
    axes[0][0].legend()
    fig.tight_layout()
    # fixed hash salt keeps the SVG ids reproducible
    with matplotlib.rc_context({"svg.hashsalt": "dyncm"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
