import csv
import io
import math

import numpy as np
import pytest
from scipy import stats

from dyncm.dynamics import config_space
from dyncm.experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    ResultRow,
    _task,
    generate_degrees,
    load_config,
    parse_config,
    parse_model_spec,
    prepare_experiment,
    rows_to_csv,
    run_profile_experiment,
    sample_typical_start,
    write_svg,
)
from dyncm.halfedge import build_degree_sequence
from dyncm.regularity import degree_statistics

SMALL = """
model = bivalued
n = 300
d1 = 3
d2 = 4
frac1 = 0.5
regime = critical
beta = 2
c_grid = 0.5, 0.5c_stat, 1.5*c_stat
N = 3000
B = 20
seed = 5
"""


# -- config ---------------------------------------------------------------------

def test_parse_config_roundtrip(tmp_path):
    cfg = parse_config(SMALL)
    assert cfg.regime == "critical" and cfg.beta == 2 and cfg.N == 3000
    assert cfg.c_grid == [0.5, "0.5c_stat", "1.5*c_stat"]
    grid = cfg.resolve_c(1.2)
    assert grid == sorted(grid) and grid[1] == pytest.approx(0.6) and grid[2] == pytest.approx(1.8)
    p = tmp_path / "cfg.txt"
    p.write_text(cfg.to_text())
    assert load_config(p) == cfg


@pytest.mark.parametrize("text,msg", [
    ("colour = red", "unknown key"),
    ("n = 10\nn = 20", "duplicate"),
    ("n 10", "expected"),
    ("regime = critical", "beta"),
    ("B = 5", "B >= 20"),
    ("model = lattice", "unknown degree model"),
    ("regime = hypercritical", "hypercritical"),
    ("c_grid = 0.5, -1", "positive"),
])
def test_config_errors(text, msg):
    with pytest.raises(ValueError, match=msg):
        parse_config(text).resolve_c(1.0)


def test_regime_schedules():
    log_n = math.log(10_000)
    assert ExperimentConfig(regime="supercritical").resolved_alpha() == pytest.approx(1 / log_n)
    assert ExperimentConfig(regime="critical", beta=2).resolved_alpha() == pytest.approx(2 / log_n ** 2)
    assert ExperimentConfig(regime="subcritical").resolved_alpha() == pytest.approx(log_n ** -3)
    assert ExperimentConfig(regime="subcritical", alpha=0.3).resolved_alpha() == 0.3
    assert ExperimentConfig(regime="supercritical").time_scale() == pytest.approx(log_n ** 0.5)


def test_model_spec():
    cfg = parse_model_spec("bivalued:n=10000,d1=3,d2=4,frac1=0.5")
    assert (cfg.n, cfg.d1, cfg.d2, cfg.frac1) == (10_000, 3, 4, 0.5)
    assert parse_model_spec("regular:n=10,d=3").d == 3
    with pytest.raises(ValueError):
        parse_model_spec("regular:n=10,q=3")


# -- degree generators --------------------------------------------------------------

def test_regular_parity_repair(rng):
    ds = generate_degrees(ExperimentConfig(model="regular", n=101, d=3, d1=None, d2=None, frac1=None), rng)
    assert ds.ell == 304 and sorted(ds.degrees)[-1] == 4 and (ds.degrees == 3).sum() == 100
    even = generate_degrees(ExperimentConfig(model="regular", n=100, d=3, d1=None, d2=None, frac1=None), rng)
    assert even.ell == 300


def test_bivalued_preset(rng):
    ds = generate_degrees(ExperimentConfig(), rng)
    assert ds.ell == 35_000 and ds.mode.value == "R*"
    assert degree_statistics(ds).c_stat == pytest.approx(1.0813, abs=1e-4)


def test_power_law_bounds(rng):
    for gamma in (2.5, 3.0, 4.0):
        cfg = ExperimentConfig(model="powerlaw", n=5000, gamma=gamma, d1=None, d2=None, frac1=None)
        ds = generate_degrees(cfg, rng)
        cap = math.ceil(5000 ** (1 / max(gamma - 1, 2)))
        assert ds.degrees.min() >= 3 and ds.degrees.max() <= cap + 1 and ds.ell % 2 == 0
    with pytest.raises(ValueError):
        generate_degrees(ExperimentConfig(model="powerlaw", n=50, gamma=2.0), rng)


def test_infeasible_models(rng):
    with pytest.raises(ValueError):
        generate_degrees(ExperimentConfig(model="regular", n=10, d=1), rng)
    with pytest.raises(ValueError):
        generate_degrees(ExperimentConfig(model="bivalued", frac1=1.5), rng)


# -- typical start ------------------------------------------------------------------

def test_typical_start_marginals():
    rng = np.random.default_rng(31)
    ds = build_degree_sequence([3, 3], "R*")
    space = config_space(6)
    xs = np.zeros(6)
    cs = np.zeros(len(space))
    for _ in range(100_000):
        eta, x = sample_typical_start(ds, rng)
        xs[x] += 1
        cs[space.index_of(eta)] += 1
    assert stats.chisquare(xs).pvalue > 1e-3
    assert stats.chisquare(cs).pvalue > 1e-3


def _mutual_information(a, b):
    joint = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(joint, (a, b), 1)
    joint /= joint.sum()
    pa, pb = joint.sum(1, keepdims=True), joint.sum(0, keepdims=True)
    nz = joint > 0
    return float((joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])).sum())


def test_typical_start_independence():
    rng = np.random.default_rng(32)
    ds = build_degree_sequence([2, 2], "R")
    space = config_space(4)
    draws = [sample_typical_start(ds, rng) for _ in range(20_000)]
    ci = np.array([space.index_of(e) for e, _ in draws])
    xs = np.array([x for _, x in draws])
    mi = _mutual_information(ci, xs)
    null = [_mutual_information(ci, rng.permutation(xs)) for _ in range(100)]
    assert mi <= np.mean(null) + 3 * np.std(null)


# -- profile runs ---------------------------------------------------------------------

def test_profile_rows(tmp_path):
    cfg = parse_config(SMALL)
    out = tmp_path / "rows.csv"
    rows = run_profile_experiment(cfg, out=out)
    setup = prepare_experiment(cfg)
    assert [r.t for r in rows] == [t for _, t in setup.grid]
    for r in rows:
        assert r.N == 3000 and r.lower <= r.upper
        assert 0 <= r.tv_debiased <= 1 and -0.02 <= r.tv_unclamped <= 1.02
        assert r.t == math.ceil(round(r.c * math.log(300), 9))
    assert not math.isnan(rows[1].theory)
    assert out.read_text() == rows_to_csv(rows)


def test_theory_undefined_at_c_stat():
    cfg = parse_config(SMALL.replace("0.5c_stat, 1.5*c_stat", "c_stat").replace("N = 3000", "N = 200"))
    row = run_profile_experiment(cfg)[-1]
    assert math.isnan(row.theory)
    assert rows_to_csv([row]).splitlines()[1].split(",")[13] == "undefined"


def test_supercritical_theory_column():
    cfg = ExperimentConfig(n=300, c_grid=[1.0], N=200)
    assert run_profile_experiment(cfg)[0].theory == pytest.approx(math.exp(-0.5))


def test_zero_replicas():
    rows = run_profile_experiment(parse_config(SMALL.replace("N = 3000", "N = 0")))
    assert len(rows) == 3
    for r in rows:
        assert math.isnan(r.tv_raw) and math.isnan(r.p_tau_gt) and r.N == 0
    assert all(line.split(",")[8] == "" for line in rows_to_csv(rows).splitlines()[1:])


def test_csv_header_and_types():
    rows = run_profile_experiment(parse_config(SMALL.replace("N = 3000", "N = 500")))
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert CSV_COLUMNS == ("regime", "n", "ell", "alpha", "k", "c", "t", "N", "tv_raw", "tv_debiased",
                           "stderr", "p_tau_gt", "sa_rate", "theory", "lower", "upper", "seed")
    recs = list(csv.DictReader(io.StringIO(text)))
    assert float(recs[0]["alpha"]) == rows[0].alpha and int(recs[0]["t"]) == rows[0].t


def test_determinism_across_workers():
    cfg = parse_config(SMALL.replace("N = 3000", "N = 120000"))
    one = rows_to_csv(run_profile_experiment(cfg, workers=1))
    two = rows_to_csv(run_profile_experiment(cfg, workers=2))
    assert one == two == rows_to_csv(run_profile_experiment(cfg, workers=1))


def test_fresh_start_mode():
    cfg = parse_config(SMALL.replace("N = 3000", "N = 20000"))
    rows = run_profile_experiment(cfg, fresh=True)
    # pooled fresh starts sample the stationary law exactly
    for r in rows:
        assert r.tv_debiased <= 3 * r.stderr + 0.01


def test_wall_clock_linear_in_N():
    ds = build_degree_sequence([3, 4] * 2000, "R*")
    rng = np.random.default_rng(0)
    from dyncm.halfedge import sample_uniform_configuration
    pair = sample_uniform_configuration(ds, rng).pair
    args = lambda N: (ds.degrees, "R*", pair, 0, 30, 40, N, (0, 3, 0, 0), False)
    _task(args(1000))  # compile
    t1 = min(_task(args(40_000))[1] for _ in range(3))
    t2 = min(_task(args(80_000))[1] for _ in range(3))
    assert 2 * 0.7 <= t2 / t1 <= 2 * 1.3


def test_svg_output(tmp_path):
    rows = run_profile_experiment(parse_config(SMALL.replace("N = 3000", "N = 300")))
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    write_svg(rows, p1)
    write_svg(rows, p2)
    text = p1.read_text()
    assert text.lstrip().startswith("<?xml") and "<svg" in text
    assert text == p2.read_text()
