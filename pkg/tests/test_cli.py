import json
from pathlib import Path

import pytest

from padelab.cli import Cache, ConfigError, ExperimentConfig, main, parse_config, run_experiment
from padelab.pade import PadePair
from padelab.testfn import TestFunctionSpec

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """\
precision_bits = 256
n_min = 4
n_max = 10
rhos = ["1.5"]
probes = ["2", "-3"]

[spec]
segments = [["-1", "1"]]
factors = [[{C = "2", exp = "1/2"}, {C = "3", exp = "1/2"}]]
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# --- subcommands ------------------------------------------------------------------


def test_equilibrium_unit(capsys):
    code, out, _ = run(capsys, "equilibrium", "--intervals", "-1,1")
    assert code == 0
    assert "capacity = 0.5" in out


def test_green_at_two(capsys):
    code, out, _ = run(capsys, "green", "--intervals", "-1,1", "--z", "2", "--json")
    assert code == 0
    assert float(json.loads(out)["2"]) == pytest.approx(1.3169578969248166, rel=1e-14)


def test_pade_geometric(capsys, tmp_path):
    code, out, _ = run(capsys, "pade", "--coeffs", "0, 1, 1/2, 1/4, 1/8", "--n", "1", "--cache", str(tmp_path))
    assert code == 0
    assert "Q = z - 0.5" in out
    assert "residual order = inf" in out


def test_germ_json(capsys):
    code, out, _ = run(capsys, "germ", "--A", "2", "--B", "3", "--N", "6", "--json")
    assert code == 0
    d = json.loads(out)
    assert len(d["coeffs"]) == 7
    assert d["coeffs"][0].startswith("2.449489742783178")


def test_oracle_two_intervals(capsys):
    code, out, _ = run(capsys, "oracle", "--intervals", "-2,-1; 1,2", "--M", "400", "--json")
    assert code == 0
    d = json.loads(out)
    assert float(d["capacity_analytic"]) == pytest.approx(3**0.5 / 2, abs=1e-8)
    assert abs(float(d["capacity_oracle"]) - 3**0.5 / 2) < 1e-2


# --- configuration --------------------------------------------------------------------


def test_shipped_configs_parse():
    for path in sorted(CONFIGS.glob("*.toml")):
        cfg = parse_config(path.read_text())
        assert cfg.n_min >= 1


def test_unknown_spec_key_rejected():
    with pytest.raises(ConfigError):
        parse_config(SMALL + "K = 96\n")


def test_config_unknown_key_has_line_number():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config('n_min = 3\nbogus = 1\n[spec]\nsegments = [["-1", "1"]]\nfactors = [[{C = "2", exp = "1/2"}]]\n')


@pytest.mark.parametrize(
    "old, new",
    [('rhos = ["1.5"]', 'rhos = ["1.0"]'), ("n_min = 4", "n_min = 0"), ("n_max = 10", "n_max = 999")],
)
def test_config_invariants(old, new):
    with pytest.raises(ConfigError):
        parse_config(SMALL.replace(old, new))


def test_config_hash_sensitive_to_every_field():
    base = parse_config(SMALL)
    variants = [
        SMALL.replace("precision_bits = 256", "precision_bits = 320"),
        SMALL.replace("n_max = 10", "n_max = 11"),
        SMALL.replace('rhos = ["1.5"]', 'rhos = ["1.6"]'),
        SMALL.replace('probes = ["2", "-3"]', 'probes = ["2", "-4"]'),
        SMALL.replace('C = "3"', 'C = "4"'),
        SMALL.replace("[spec]", "K = 96\n[spec]"),
        SMALL.replace("[spec]", "seed = 3\n[spec]"),
    ]
    hashes = {base.hash()} | {parse_config(v).hash() for v in variants}
    assert len(hashes) == len(variants) + 1
    # output locations do not change results
    assert parse_config(SMALL.replace("[spec]", 'out = "elsewhere"\n[spec]')).hash() == base.hash()


def test_verify_without_config_is_config_error(capsys):
    code, _, err = run(capsys, "verify")
    assert code == 2
    assert "config" in err


def test_bad_config_file_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("n_min = [\n")
    code, _, _ = run(capsys, "verify", "--config", str(bad), "--out", str(tmp_path / "o"))
    assert code == 2


def test_bad_segment_exit_code(capsys):
    code, _, _ = run(capsys, "germ", "--segment", "1,-1")
    assert code == 2


# --- cache ------------------------------------------------------------------------------


def test_cache_roundtrip_bit_exact(tmp_path):
    spec = TestFunctionSpec.sqrt_product(2, 3)
    c1 = Cache(tmp_path)
    g1 = c1.germ(spec, 30)
    p1 = c1.pair(g1, 12)
    c2 = Cache(tmp_path)
    g2 = c2.germ(spec, 30)
    p2 = c2.pair(g2, 12)
    assert c2.hits == 2
    assert g1.coeffs == g2.coeffs
    assert p1 == p2
    assert PadePair.from_json(p1.to_json()) == p1


# --- runs ---------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    cfg = parse_config(SMALL)
    cache = root / "cache"
    a = run_experiment(cfg, out=root / "a", cache=cache)
    b = run_experiment(cfg, out=root / "b", cache=cache)
    return root, a, b


def test_run_writes_artifacts(small_runs):
    root, (code, checks), _ = small_runs
    assert code == 0 and checks
    names = {p.name for p in (root / "a").iterdir()}
    assert {"report.csv", "report.json", "equilibrium.json", "MANIFEST", "plot"} <= names
    manifest = json.loads((root / "a" / "MANIFEST").read_text())
    assert {"report.csv", "report.json", "equilibrium.json"} <= set(manifest["files"])
    assert any(k.startswith("plot/") for k in manifest["files"])


def test_rerun_byte_identical(small_runs):
    root, _, _ = small_runs
    for name in ("report.csv", "report.json", "equilibrium.json", "MANIFEST"):
        assert (root / "a" / name).read_bytes() == (root / "b" / name).read_bytes()


def test_plot_files_are_two_columns(small_runs):
    root, _, _ = small_runs
    lines = (root / "a" / "plot" / "sup_S_Q.dat").read_text().splitlines()
    assert [int(l.split()[0]) for l in lines] == list(range(4, 11))
    assert all(len(l.split()) == 2 for l in lines)


def test_rational_config(tmp_path, capsys):
    cfg = tmp_path / "r.toml"
    cfg.write_text((CONFIGS / "rational.toml").read_text().replace("n_max = 20", "n_max = 8"))
    code, out, _ = run(capsys, "verify", "--config", str(cfg), "--out", str(tmp_path / "o"), "--cache", str(tmp_path / "c"), "--assert")
    assert code == 0
    assert out.count("[PASS]") == 2
    rows = (tmp_path / "o" / "report.csv").read_text().splitlines()[1:]
    assert all(r.split(",")[3] == "inf" and r.split(",")[5] == "0" for r in rows)


def test_assert_failure_exit_code(tmp_path, capsys):
    # n <= 10 is far too early for the late-window thresholds
    cfg = tmp_path / "s.toml"
    cfg.write_text(SMALL)
    code, out, _ = run(capsys, "verify", "--config", str(cfg), "--out", str(tmp_path / "o"), "--cache", str(tmp_path / "c"), "--assert")
    assert code == 1
    assert "[FAIL]" in out


def test_experiment_config_defaults():
    cfg = ExperimentConfig(spec=TestFunctionSpec.sqrt_product())
    assert cfg.ns == list(range(5, 61))
