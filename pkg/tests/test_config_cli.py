import csv
import json
import subprocess
import sys

import pytest

from bgkfr import cli
from bgkfr.config import ConfigError, parse_config, parse_config_text, serialize

SOD = """\
# first Sod study
case = sod
p = 3
n_elements = 50
n_v = 16
n_zeta = 16
kn_h = 0.1
t_final = 0.2
"""

SMALL_PULSE = """\
case = pulse
p = 2
n_elements = 8
n_v = 32
kn = 1e-2
t_final = 0.02
output_interval = 0.005
fu_locations = 0.25, 0.5
"""


def test_sod_config_defaults():
    c = parse_config_text(SOD)
    assert (c.case, c.p, c.n_elements, c.n_v, c.n_zeta, c.kn_h, c.t_final) == \
        ("sod", 3, 50, 16, 16, 0.1, 0.2)
    assert c.cfl == 0.5 and c.eps_u == 1e-15 and c.eps_zeta == 1e-6
    assert c.dvm is True and c.dvm_iters == 2 and c.init_iters == 5
    assert c.kn is None and c.tau is None


def test_empty_config_lists_required_keys():
    with pytest.raises(ConfigError) as info:
        parse_config_text("")
    for key in ("case", "p", "n_elements", "t_final", "n_v"):
        assert key in str(info.value)


@pytest.mark.parametrize("text,line,fragment", [
    ("case = sod\nbogus = 1\n", 2, "unknown key"),
    ("case = sod\np = three\n", 2, "bad value"),
    ("case = sod\ncase = pulse\n", 2, "duplicate"),
    ("case = sod\n\n# c\np\n", 4, "key = value"),
    (SOD + "dvm = maybe\n", 9, "bad value"),
    (SOD.replace("n_v = 16", "n_v = 15"), 5, "even"),
    (SOD.replace("p = 3", "p = 0"), 3, "at least 1"),
    (SOD + "bc_left = wall\n", 9, "bc_left"),
    (SOD + "domain = 1, 0\n", 9, "domain"),
])
def test_parse_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text)
    assert info.value.line == line
    assert fragment in str(info.value)
    assert f"line {line}" in str(info.value)


def test_exactly_one_collision_parameter():
    with pytest.raises(ConfigError):
        parse_config_text(SOD + "kn = 1e-3\n")
    with pytest.raises(ConfigError):
        parse_config_text(SOD.replace("kn_h = 0.1\n", ""))


def test_normal_shock_needs_mach():
    text = "case = normal_shock\np = 3\nn_elements = 10\nn_v = 8\nkn = 1\nt_final = 1\n"
    with pytest.raises(ConfigError):
        parse_config_text(text)
    assert parse_config_text(text + "mach = 3.8\n").mach == 3.8


def test_polar_counts_map_to_n_v():
    c = parse_config_text(SOD.replace("n_v = 16", "n_r = 16\nn_phi = 1"))
    assert c.n_v == 16
    with pytest.raises(ConfigError):
        parse_config_text(SOD.replace("n_v = 16", "n_r = 16\nn_phi = 8"))


def test_round_trip():
    c = parse_config_text(SMALL_PULSE + "domain = 0, 1\nsmooth_ic = yes\n")
    assert c.fu_locations == [0.25, 0.5] and c.domain == (0.0, 1.0) and c.smooth_ic
    text = serialize(c)
    assert parse_config_text(text) == c
    assert serialize(parse_config_text(text)) == text


def test_parse_config_file(tmp_path):
    p = tmp_path / "sod.cfg"
    p.write_text(SOD)
    assert parse_config(p) == parse_config_text(SOD)


def _read(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_run_case_outputs(tmp_path):
    c = parse_config_text(SMALL_PULSE)
    assert cli.run_case(c, tmp_path) == 0
    prof = _read(tmp_path / "profile.csv")
    assert prof[0] == ["x", "rho", "u", "p", "e", "theta"]
    assert len(prof) - 1 == 8 * 3
    xs = [float(r[0]) for r in prof[1:]]
    assert xs == sorted(xs)
    ts = _read(tmp_path / "timeseries.csv")
    assert ts[0] == ["t", "mass", "momentum", "energy", "mass_err", "min_f", "residual_linf"]
    # one row at the first step past each output time, plus the first and last
    t = [float(r[0]) for r in ts[1:]]
    assert len(t) == 5 and t[0] == 0.0 and t[-1] == 0.02
    assert all(a >= k * 0.005 for k, a in enumerate(t))
    assert float(ts[-1][4]) <= 1e-10
    # 17 significant digits
    assert len(ts[-1][1].replace(".", "").replace("-", "").split("e")[0].lstrip("0")) >= 15
    fu = _read(tmp_path / "fu_slice.csv")
    assert fu[0] == ["x", "u", "f_u"] and len(fu) - 1 == 2 * 32
    assert parse_config(tmp_path / "config.txt") == c


def test_run_case_is_byte_identical(tmp_path):
    c = parse_config_text(SMALL_PULSE)
    cli.run_case(c, tmp_path / "a")
    cli.run_case(c, tmp_path / "b")
    for name in ("profile.csv", "timeseries.csv", "fu_slice.csv", "config.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_case_failure_keeps_partial_log(tmp_path):
    # far too few velocity nodes for the expansion: the DVM breaks down
    c = parse_config_text("case = expansion\np = 3\nn_elements = 10\nn_v = 2\nn_zeta = 2\n"
                          "kn = 1e-3\nt_final = 0.1\n")
    assert cli.run_case(c, tmp_path) == 1
    assert (tmp_path / "timeseries.csv").exists()
    assert not (tmp_path / "profile.csv").exists()


def test_cli_run_and_errors(tmp_path, capsys):
    cfg = tmp_path / "pulse.cfg"
    cfg.write_text(SMALL_PULSE)
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "out"), "--threads", "1"]) == 0
    assert (tmp_path / "out" / "profile.csv").exists()
    empty = tmp_path / "empty.cfg"
    empty.write_text("")
    assert cli.main(["run", str(empty)]) == 2
    assert "missing required keys" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "nope.cfg")]) == 2


def test_cli_tabulate_zeta(capsys):
    assert cli.main(["tabulate-zeta", "--delta", "4", "--eps", "1e-6"]) == 0
    assert capsys.readouterr().out.strip() == "16.626509"
    assert cli.main(["tabulate-zeta", "--delta", "2", "--eps", "1e-2"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(4.605, abs=1e-3)
    assert cli.main(["tabulate-zeta", "--delta", "0", "--eps", "1e-2"]) == 2


def test_cli_validate_writes_report(tmp_path, capsys):
    report = tmp_path / "zeta.jsonl"
    rc = cli.main(["validate", "zeta_table", "--report", str(report)])
    out = capsys.readouterr().out
    lines = [json.loads(s) for s in report.read_text().splitlines()]
    assert len(lines) == 28
    assert out.count("[PASS]") + out.count("[FAIL]") == 28
    assert rc == (0 if all(r["passed"] for r in lines) else 1)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "bgkfr", "tabulate-zeta", "--delta", "4",
                          "--eps", "1e-6"], capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "16.626509"
