"""Degree-sequence statistics and finite-n regularity diagnostics."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .halfedge import DegreeSequence, Mode, _as_mode


class Regime(str, enum.Enum):
    SUPERCRITICAL = "supercritical"
    CRITICAL = "critical"
    SUBCRITICAL = "subcritical"


@dataclass(frozen=True)
class DegreeStatistics:
    nu: float
    lambda1: float
    lambda2: float
    lambda3: float
    d_max: int
    c_stat: float
    lambda_valid: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    value: float
    status: str  # "pass" | "warn" | "fail"
    note: str


@dataclass
class RegularityReport:
    mode: Mode
    n: int
    ell: int
    statistics: DegreeStatistics
    checks: list[ConditionCheck] = field(default_factory=list)

    def __getitem__(self, name: str) -> ConditionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def exact_ok(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "n": self.n,
            "ell": self.ell,
            "statistics": self.statistics.to_dict(),
            "checks": [asdict(c) for c in self.checks],
        }

    def to_text(self) -> str:
        s = self.statistics
        lines = [
            f"n = {self.n}   ell = {self.ell}   mode = {self.mode.value}",
            f"nu = {s.nu:.6g}   lambda1 = {s.lambda1:.6g}   lambda2 = {s.lambda2:.6g}   "
            f"lambda3 = {s.lambda3:.6g}   d_max = {s.d_max}   c_stat = {s.c_stat:.6g}",
        ]
        width = max(len(c.name) for c in self.checks)
        for c in self.checks:
            lines.append(f"{c.name:<{width}}  {c.status:<4}  {c.value:>12.6g}  {c.note}")
        return "\n".join(lines)


def degree_statistics(ds: DegreeSequence) -> DegreeStatistics:
    """Moments of the forward degree of a uniform half-edge.

    Sums run over vertices with weight ``d(v)`` (one term per half-edge class)
    and use ``math.fsum`` so that sequences with ~1e7 half-edges stay exact to
    double rounding.
    """
    deg = ds.degrees
    ell = ds.ell
    values, counts = np.unique(deg, return_counts=True)
    weights = [int(d) * int(c) for d, c in zip(values, counts)]
    fwd = [int(d) - 1 for d in values]
    nu = math.fsum(w * f for w, f in zip(weights, fwd)) / ell
    logs = [math.log(f) for f in fwd]
    lam1 = math.fsum(w * lg for w, lg in zip(weights, logs)) / ell
    if len(logs) == 1:
        # (ell * x) / ell can miss x by an ulp; keep regular sequences at lambda2 = 0 exactly
        lam1 = logs[0]
    lam2 = math.fsum(w * abs(lg - lam1) ** 2 for w, lg in zip(weights, logs)) / ell
    lam3 = math.fsum(w * abs(lg - lam1) ** 3 for w, lg in zip(weights, logs)) / ell
    valid = lam1 > 0.0
    return DegreeStatistics(
        nu=nu,
        lambda1=lam1,
        lambda2=lam2,
        lambda3=lam3,
        d_max=int(deg.max()),
        c_stat=1.0 / lam1 if valid else math.inf,
        lambda_valid=valid,
    )


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return math.inf if num > 0 else 0.0
    return num / den


def check_conditions(ds: DegreeSequence, mode=None) -> RegularityReport:
    """Evaluate the regularity conditions of ``mode`` at the given finite n.

    Parity and degree floors are decided exactly (pass/fail).  Asymptotic
    requirements are reported as raw ratios against a comparison quantity and
    only ever raise a warning.
    """
    mode = ds.mode if mode is None else _as_mode(mode)
    st = degree_statistics(ds)
    ell, n = ds.ell, ds.n
    log_ell = math.log(ell) if ell > 1 else 0.0
    checks: list[ConditionCheck] = []

    if mode is Mode.R:
        ratio = ell / n
        checks.append(ConditionCheck(
            "R1", ratio, "pass" if ell % 2 == 0 else "fail",
            f"ell={ell} {'even' if ell % 2 == 0 else 'odd'}; ell/n = {ratio:.4g} (Theta(n) not decidable at one n)",
        ))
        checks.append(ConditionCheck(
            "R2", st.nu, "pass" if math.isfinite(st.nu) else "warn",
            f"nu = {st.nu:.4g} (expected forward degree of a uniform half-edge)",
        ))
        low = int(ds.degrees.min())
        checks.append(ConditionCheck(
            "R3", float(low), "pass" if low >= 2 else "fail", f"minimum degree {low}, need >= 2",
        ))
    else:
        # d_max = ell^{o(1)}: exponent compared against 1/log log ell
        expo = math.log(st.d_max) / log_ell if log_ell > 0 else math.inf
        ref = 1.0 / math.log(log_ell) if log_ell > 1 else math.inf
        checks.append(ConditionCheck(
            "R1*", expo, "pass" if expo <= ref else "warn",
            f"log d_max / log ell = {expo:.4g} vs 1/log log ell = {ref:.4g}",
        ))
        if st.lambda2 == 0.0:
            checks.append(ConditionCheck(
                "R2*", 0.0, "warn", "lambda2 = 0: condition fails for regular sequences",
            ))
        elif not st.lambda_valid:
            checks.append(ConditionCheck("R2*", math.nan, "warn", "lambda1 = 0: ratios undefined"))
        else:
            r_a = st.lambda2 / st.lambda1 ** 3
            ref_a = math.log(log_ell) ** 2 / log_ell if log_ell > 1 else math.inf
            r_b = _ratio(st.lambda2 ** 1.5, st.lambda3 * math.sqrt(st.lambda1))
            ref_b = 1.0 / math.sqrt(log_ell) if log_ell > 0 else math.inf
            ok = r_a > ref_a and r_b > ref_b
            checks.append(ConditionCheck(
                "R2*", r_a, "pass" if ok else "warn",
                f"lambda2/lambda1^3 = {r_a:.4g} vs (log log ell)^2/log ell = {ref_a:.4g}; "
                f"lambda2^1.5/(lambda3 sqrt(lambda1)) = {r_b:.4g} vs 1/sqrt(log ell) = {ref_b:.4g}",
            ))
        low = int(ds.degrees.min())
        checks.append(ConditionCheck(
            "R3*", float(low), "pass" if low >= 3 else "fail", f"minimum degree {low}, need >= 3",
        ))
    return RegularityReport(mode=mode, n=n, ell=ell, statistics=st, checks=checks)


def classify_regime(beta: float) -> Regime:
    """Map ``beta = lim alpha_n (log n)^2`` to its regime."""
    beta = float(beta)
    if math.isnan(beta) or beta < 0:
        raise ValueError(f"beta must lie in [0, inf], got {beta}")
    if math.isinf(beta):
        return Regime.SUPERCRITICAL
    if beta == 0.0:
        return Regime.SUBCRITICAL
    return Regime.CRITICAL
