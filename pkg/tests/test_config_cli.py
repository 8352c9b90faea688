import json
import math

import pytest

from mmwpt import cli
from mmwpt.config import build_scenario, load_config, parse_text, scenario_to_mapping
from mmwpt.exceptions import ConfigError
from mmwpt.scenario import default_scenario


def test_empty_file_gives_reference_scenario(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("# nothing here\n\n")
    assert load_config(p) == default_scenario()
    assert load_config() == default_scenario()


def test_reference_values():
    s = load_config()
    assert s.k == 2 and s.pb_array.size == 16 and s.macro.array.size == 64
    assert s.tiers[0].parent_intensity == pytest.approx(1e-3)
    assert s.macro.intensity == pytest.approx(2e-4)
    assert s.tiers[0].pb_power == pytest.approx(0.1) and s.macro.power == pytest.approx(10.0)
    assert s.energy_threshold == pytest.approx(1e-3) and s.ge.order == 10
    assert (s.channel.r_min, s.channel.r_max, s.channel.alpha_los, s.channel.alpha_nlos) == (100, 200, 2, 4)
    assert s.harvester.p_max == pytest.approx(4.927e-3) and s.harvester.p_th == pytest.approx(0.064e-3)


def test_unit_conversions(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("tier1.lambda_per_km2 = 1000\ntier2.pb_power_dbm=30\nmbs.power_dbm = 43  # comment\n")
    s = load_config(p)
    assert s.tiers[0].parent_intensity == pytest.approx(1e-3, rel=1e-15)
    assert s.tiers[1].pb_power == pytest.approx(1.0)
    assert s.macro.power == pytest.approx(10 ** (43 / 10) * 1e-3, rel=1e-14)
    g = load_config(overrides=["gamma_th_dbm=0"])
    assert g.energy_threshold == pytest.approx(1e-3)


def test_strategy_and_mode_keys():
    s = load_config(overrides=["strategy=na", "lobe_prob_mode=one_over_n", "nb=8"])
    assert s.strategy == "nearest"
    assert s.pb_array.lobe_hit_probability == pytest.approx(1 / 8)
    assert s.macro.array.lobe_hit_probability == pytest.approx(1 / 64)


def test_gamma_threshold_above_saturation_zero_coverage():
    from mmwpt.analytic import coverage
    assert coverage(load_config(overrides=["gamma_th_mw=10"])) == 0.0


@pytest.mark.parametrize("text,fragment", [
    ("bogus=1", "bogus"),
    ("tier1.pb_power=20", "tier1.pb_power"),
    ("mbs.power=40", "mbs.power"),
    ("p_max=4", "p_max"),
    ("gamma_th=1", "gamma_th"),
    ("tier3.sigma_b_m=10", "tier3.sigma_b_m"),
    ("tier1.colour=red", "tier1.colour"),
    ("nb=sixteen", "nb"),
    ("lobe_prob_mode=wide", "lobe_prob_mode"),
    ("strategy=best", "strategy"),
    ("just a line", "key=value"),
    ("ge_L=40", "GE order"),
])
def test_config_errors_name_the_key(text, fragment):
    with pytest.raises(ConfigError) as info:
        build_scenario(parse_text(text))
    assert fragment in str(info.value)


def test_both_gamma_units_rejected():
    with pytest.raises(ConfigError):
        load_config(overrides=["gamma_th_mw=1", "gamma_th_dbm=0"])


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/file.cfg")


def test_mapping_round_trip(tmp_path):
    s = load_config(overrides=["k=3", "tier3.mean_pb=7", "typical_tier=3", "strategy=nearest"])
    m = scenario_to_mapping(s)
    lines = [f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in m.items()
             if k not in ("rho_b", "rho_m")]
    p = tmp_path / "rt.cfg"
    p.write_text("\n".join(lines))
    again = load_config(p)
    assert again.k == 3 and again.typical.mean_pb_count == 7
    assert again.tiers == s.tiers or all(
        math.isclose(getattr(a, f), getattr(b, f), rel_tol=1e-12)
        for a, b in zip(again.tiers, s.tiers) for f in a.__dataclass_fields__)


def test_sweep_overrides():
    assert cli.sweep_overrides("nb", 32.0, 2, 1) == {"nb": "32"}
    assert cli.sweep_overrides("sigma_u", 5.0, 2, 1) == {"tier1.sigma_u_m": "5.0", "tier2.sigma_u_m": "5.0"}
    assert cli.sweep_overrides("mean_pb_count.typical", 3.0, 2, 2) == {"tier2.mean_pb": "3.0"}


@pytest.mark.parametrize("kw", [
    dict(mode="sweep"),
    dict(sweep_param="alpha_los", sweep_values=(1.0, 2.0)),
    dict(sweep_param="nb.typical", sweep_values=(1.0, 2.0)),
    dict(sweep_param="nb", sweep_values=(4.0,)),
    dict(mode="fast"),
    dict(strategy="all"),
    dict(trials=0),
])
def test_run_request_validation(kw):
    with pytest.raises(ConfigError):
        cli.RunRequest(**kw)


def test_csv_round_trip():
    rows = [cli.ResultRow(None, "ra", 0.1 + 0.2, None, None, None, None, None, None, None),
            cli.ResultRow(4.0, "na", 1 / 3, 0.25, 0.2, 0.3, 1 / 3 - 0.25, 100, 7, 1.5e-3)]
    text = cli.rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(cli.CSV_COLUMNS)
    assert cli.rows_from_csv(text) == rows
    assert cli.CSV_COLUMNS == ("sweep_value", "strategy", "analytic_p", "mc_p", "mc_ci_low", "mc_ci_high",
                               "abs_gap", "trials", "seed", "runtime_seconds")


def test_cli_analytic_sweep(tmp_path, capsys):
    out, js, svg = tmp_path / "a.csv", tmp_path / "a.json", tmp_path / "a.svg"
    rc = cli.main(["--sweep", "nb", "--values", "4,16,64", "--strategy", "ra",
                   "--out", str(out), "--json", str(js), "--svg", str(svg)])
    assert rc == 0
    rows = cli.rows_from_csv(out.read_text())
    assert [r.sweep_value for r in rows] == [4.0, 16.0, 64.0]
    p = [r.analytic_p for r in rows]
    assert p == sorted(p)
    rep = json.loads(js.read_text())
    assert rep["lobe_prob_mode"] == "pi_n" and rep["config"]["nb"] == 16
    assert [c["nb"] for c in rep["point_configs"]] == [4, 16, 64]
    assert "inter_tail_bound" in rep["diagnostics"][0]["analytic"]
    assert svg.read_text().lstrip().startswith("<?xml")


def test_cli_validate_reproducible(tmp_path):
    args = ["--mode", "validate", "--trials", "300", "--seed", "5", "--set", "tier1.mean_pb=4"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = cli.rows_from_csv(a.read_text())
    assert all(r.abs_gap == abs(r.analytic_p - r.mc_p) for r in rows)
    assert all(r.runtime_seconds is None for r in rows)
    assert {r.strategy for r in rows} == {"ra", "na"}


def test_cli_timing_column(tmp_path):
    out = tmp_path / "t.csv"
    assert cli.main(["--strategy", "na", "--timing", "--out", str(out)]) == 0
    assert cli.rows_from_csv(out.read_text())[0].runtime_seconds > 0


def test_cli_error_exit_codes(tmp_path, capsys):
    assert cli.main(["--set", "pb_power=3"]) != 0
    assert cli.main(["--sweep", "alpha", "--values", "1,2"]) != 0
    assert cli.main(["--mode", "sweep"]) != 0
    assert cli.main(["--config", str(tmp_path / "missing.cfg")]) != 0


def test_cli_quadrature_failure_exit(monkeypatch):
    from mmwpt import analytic
    from mmwpt.exceptions import QuadratureError

    def boom(*a, **k):
        raise QuadratureError("forced", panel=(0.0, 1.0), error=1.0)

    monkeypatch.setattr(analytic, "analyze", boom)
    assert cli.main([]) == 3


def test_cli_gamma_sweep_crosses_zero(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["--sweep", "gamma_th_dbm", "--values=-10,0,6.9,7.0,8", "--out", str(out)]) == 0
    rows = cli.rows_from_csv(out.read_text())
    for strat in ("ra", "na"):
        p = {r.sweep_value: r.analytic_p for r in rows if r.strategy == strat}
        assert p[6.9] > 0 and p[7.0] == 0.0 and p[8.0] == 0.0
        assert p[-10.0] >= p[0.0] >= p[6.9]


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "mmwpt", "--strategy", "ra"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("sweep_value,strategy")
