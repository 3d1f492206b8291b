import pytest
from click.testing import CliRunner

from dyncm.cli import main
from dyncm.halfedge import write_degrees


@pytest.fixture
def runner():
    return CliRunner()


def test_check_file_and_model(runner, tmp_path):
    f = tmp_path / "deg.txt"
    write_degrees(f, [3, 4] * 20)
    res = runner.invoke(main, ["check", str(f)])
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["check", "bivalued:n=1000,d1=3,d2=4,frac1=0.5", "--json"])
    assert res.exit_code == 0 and '"ell": 3500' in res.output
    assert runner.invoke(main, ["check", "nonsense:q=1"]).exit_code != 0


def test_simulate(runner, tmp_path):
    dump = tmp_path / "eta.txt"
    res = runner.invoke(main, ["simulate", "regular:n=20,d=3", "-t", "5", "-k", "2", "--trace",
                               "--dump", str(dump), "--seed", "3"])
    assert res.exit_code == 0, res.output
    assert res.output.startswith("# ell=60 k=2")
    assert dump.read_text().startswith("ell=60")


def test_profile_csv_deterministic(runner, tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("model = bivalued\nn = 200\nregime = subcritical\nc_grid = 0.5, 1.5*c_stat\n"
                   "N = 1000\nB = 20\nseed = 9\n")
    a = runner.invoke(main, ["profile", "--config", str(cfg)])
    b = runner.invoke(main, ["profile", "--config", str(cfg), "--workers", "2"])
    assert a.exit_code == 0, a.output
    assert a.output == b.output and a.output.startswith("regime,n,ell,alpha")
    out, svg = tmp_path / "rows.csv", tmp_path / "rows.svg"
    res = runner.invoke(main, ["profile", "--config", str(cfg), "--out", str(out), "--svg", str(svg)])
    assert res.exit_code == 0 and out.read_text() == a.output and "<svg" in svg.read_text()


def test_exact(runner):
    res = runner.invoke(main, ["exact"])
    assert res.exit_code == 0 and "9/9 checks passed" in res.output


def test_reset_law(runner):
    res = runner.invoke(main, ["reset-law", "--degrees", "3,3,2", "-k", "2", "-t", "2"])
    assert res.exit_code == 0
    lines = dict(l.split() for l in res.output.splitlines() if not l.startswith("#"))
    assert float(lines["{}"]) == pytest.approx(1 / 12) and float(lines["{1,2}"]) == pytest.approx(1 / 3)
    bad = runner.invoke(main, ["reset-law", "--degrees", "3,3,3,3"])
    assert bad.exit_code != 0 and "reset-law" in bad.output
