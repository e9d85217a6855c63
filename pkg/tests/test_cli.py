import csv
import io
import math

import numpy as np
import pytest

from neutron_zeno import cli


def run_cli(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def data_rows(text, delimiter=","):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(lines)), delimiter=delimiter))
    return rows[0], rows[1:]


@pytest.mark.parametrize(
    "text,value",
    [("1.5", 1.5), ("pi", math.pi), ("pi/20", math.pi / 20), ("-2*pi", -2 * math.pi),
     ("sqrt(2)", math.sqrt(2)), ("2**3", 8.0), ("1e-3", 1e-3), ("4*sqrt(3)/9", 4 * math.sqrt(3) / 9)],
)
def test_parse_number(text, value):
    assert cli.parse_number(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["", "pi pi", "__import__('os')", "abs(-1)", "x", "1/0", "[1]", "'a'"])
def test_parse_number_rejects(text):
    with pytest.raises(ValueError):
        cli.parse_number(text)


def test_grid_and_list_values():
    g = cli.parse_value("zeta", "0:1.2:5")
    assert np.allclose(g.values(), np.linspace(0, 1.2, 5))
    assert cli.parse_value("ka", "0.1, pi/2") == pytest.approx((0.1, math.pi / 2))
    assert cli.format_value(cli.parse_value("N", "1:10:10")) == "1:10:10"
    for bad in ("0:1:1", "0:1", "a:b:3"):
        with pytest.raises(cli.ConfigError):
            cli.parse_value("zeta", bad)


@pytest.mark.parametrize("command", cli.COMMANDS)
def test_round_trip(command):
    cfg = cli.resolve_config(command, {}, "tsv", "out.tsv")
    again = cli.config_from_text(cfg.to_text())
    assert again == cfg


def test_round_trip_with_overrides():
    assign = cli.parse_assignments(["ka = pi/3", "zeta = 0:0.4:7  # grid", "N = 12"])
    cfg = cli.resolve_config("scatter", assign)
    assert cli.config_from_text(cfg.to_text()) == cfg


def test_unknown_key_names_allowed_keys():
    with pytest.raises(cli.ConfigError, match="allowed: .*ka"):
        cli.resolve_config("scatter", cli.parse_assignments(["kaa = 1"], "cfg"))


def test_config_line_diagnostics():
    with pytest.raises(cli.ConfigError, match="cfg:2"):
        cli.parse_assignments(["ka = 1", "oops"], "cfg")


def test_ideal_survival_monotone(capsys):
    code, out, _ = run_cli(["ideal"], capsys)
    assert code == 0
    header, rows = data_rows(out)
    surv = [float(r[header.index("survival")]) for r in rows]
    assert len(surv) == 11
    assert all(b > a for a, b in zip(surv, surv[1:]))
    assert surv[-1] > 0.997


def test_fig6_rows(capsys):
    code, out, _ = run_cli(["fig6"], capsys)
    assert code == 0
    header, rows = data_rows(out)
    assert header == ["n", "T_down_free", "T_up_insensitive", "T_up_sensitive"]
    assert len(rows) == 20
    for r in rows:
        assert float(r[2]) == pytest.approx(1, abs=1e-12)
        assert float(r[1]) == pytest.approx(1, abs=1e-9)
        assert 0 <= float(r[3]) <= 1


def test_fig5a_small_grid(capsys):
    code, out, _ = run_cli(["fig5a", "--set", "kD=0:30:6", "--set", "zeta=0:1.2:5"], capsys)
    assert code == 0
    _, rows = data_rows(out)
    assert len(rows) == 30
    assert all(0 <= float(r[2]) <= 1 + 1e-12 for r in rows)


def test_fig5b_small_grid(capsys):
    code, out, _ = run_cli(["fig5b", "--set", "B1=0:10:3", "--set", "kD=0.5:30:4"], capsys)
    assert code == 0
    header, rows = data_rows(out)
    assert header == ["B1", "kD", "T_up"] and len(rows) == 12


def test_output_is_deterministic(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert cli.main(["scatter", "--set", "zeta=0:1.2:12", "--set", "N=4", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_workers_do_not_change_output(capsys):
    args = ["zeno-scatter", "--set", "zeta=0:1.2:9", "--set", "regime=finite", "--set", "N=20"]
    _, one, _ = run_cli(args, capsys)
    _, two, _ = run_cli(args + ["--set", "workers=2"], capsys)
    strip = lambda t: [ln for ln in t.splitlines() if not ln.startswith("#")]
    assert strip(one) == strip(two)


def test_tsv_format(capsys):
    code, out, _ = run_cli(["abstract", "--format", "tsv", "--set", "T=0:pi:3"], capsys)
    assert code == 0
    header, rows = data_rows(out, "\t")
    assert header[-1] == "total"
    assert all(float(r[-1]) == pytest.approx(1, abs=1e-10) for r in rows)


def test_physical_units(capsys):
    code, out, _ = run_cli(["scatter", "--set", "units=physical", "--set", "muB=0.1"], capsys)
    assert code == 0
    header, rows = data_rows(out)
    assert float(rows[0][header.index("flux")]) == pytest.approx(1, abs=1e-9)


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# scan\nka = 0.5\nzeta = 0.2\nN = 3\n")
    code, out, _ = run_cli(["scatter", "--config", str(cfg)], capsys)
    assert code == 0
    assert len(data_rows(out)[1]) == 1


@pytest.mark.parametrize(
    "args",
    [["scatter", "--set", "bogus=1"], ["scatter", "--set", "zeta=0:1:1"], ["scatter", "--set", "zeta=0.5"],
     ["ideal", "--set", "omega=-1"], ["zeno-scatter", "--set", "scheme=strong"], ["abstract", "--set", "workers=0"]],
)
def test_validation_errors_exit_1(args, capsys):
    code, _, err = run_cli(args, capsys)
    assert code == 1
    assert err.startswith("error:")


def test_io_errors_exit_3(tmp_path, capsys):
    code, _, _ = run_cli(["ideal", "--config", str(tmp_path / "missing.cfg")], capsys)
    assert code == 3
    code, _, _ = run_cli(["ideal", "--out", str(tmp_path / "no" / "such" / "dir.csv")], capsys)
    assert code == 3


def test_verify_all(capsys):
    code, out, err = run_cli(["verify-all"], capsys)
    assert code == 0
    assert "0 failed" in err
    _, rows = data_rows(out)
    assert len(rows) >= 20 and all(r[-1] == "1" for r in rows)


def test_verify_appendix(capsys):
    code, out, _ = run_cli(["verify-appendix", "--set", "ka=pi/4:pi:4", "--set", "zeta=0:0.45:3"], capsys)
    assert code == 0
    header, rows = data_rows(out)
    assert len(rows) == 12
    for r in rows:
        assert max(float(x) for x in r[2:]) < 1e-10
