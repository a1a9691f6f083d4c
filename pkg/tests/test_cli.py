import csv
import io
import json
import math

import pytest

from wormhole_waveguide import __version__
from wormhole_waveguide.cli import main, parse_range


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    """Header lines and {table name: list of row dicts}."""
    header, tables, name, block = [], {}, "main", []

    def flush():
        if block:
            tables[name] = list(csv.DictReader(io.StringIO("\n".join(block))))

    for line in text.splitlines():
        if line.startswith("# table: "):
            flush()
            name, block = line[len("# table: "):], []
        elif line.startswith("#"):
            header.append(line[2:])
        elif line:
            block.append(line)
    flush()
    return header, tables


class TestPotential:
    def test_r_table(self, capsys):
        code, out, _ = run(capsys, "potential", "--b0", "1", "--L", "0", "--r-range", "0:10:100")
        assert code == 0
        header, tables = parse_csv(out)
        rows = tables["main"]
        assert len(rows) == 100
        assert float(rows[0]["v_eff"]) == 1.0
        assert float(rows[-1]["r"]) == 10.0

    def test_check_ft(self, capsys):
        code, out, _ = run(capsys, "potential", "--b0", "1", "--L", "1", "--q-range", "0:10:50", "--check-ft")
        assert code == 0
        rows = parse_csv(out)[1]["main"]
        assert len(rows) == 50
        assert max(float(r["rel_err"]) for r in rows) <= 1e-6

    def test_both_tables(self, capsys):
        code, out, _ = run(capsys, "potential", "--r-range", "0:1:3", "--q-range", "0:1:4")
        _, tables = parse_csv(out)
        assert code == 0 and len(tables["potential"]) == 3 and len(tables["fourier"]) == 4

    def test_negative_b0(self, capsys):
        code, _, err = run(capsys, "potential", "--b0", "-1", "--r-range", "0:1:3")
        assert code == 2
        assert "--b0" in err

    def test_missing_range(self, capsys):
        assert run(capsys, "potential")[0] == 2

    def test_bad_range_syntax(self, capsys):
        for bad in ("0:1", "1:0:5", "0:1:0", "a:b:c", "0:inf:3"):
            assert run(capsys, "potential", "--r-range", bad)[0] == 2

    def test_log_needs_positive_start(self, capsys):
        assert run(capsys, "potential", "--r-range", "0:1:3", "--log")[0] == 2


class TestTransmit:
    def test_scan(self, capsys):
        code, out, _ = run(capsys, "transmit", "--b0", "1", "--k-range", "0.1:10:200")
        assert code == 0
        rows = parse_csv(out)[1]["main"]
        assert len(rows) == 200
        assert all(float(r["unitarity_defect"]) <= 1e-8 for r in rows)
        assert all(r["status"] == "ok" for r in rows)

    def test_resonance_block(self, capsys):
        code, out, _ = run(capsys, "transmit", "--resonances", "3", "--b0", "1")
        assert code == 0
        header, tables = parse_csv(out)
        assert len(tables["transmission"]) == 200
        res = tables["resonances"]
        assert [float(r["wavelength"]) for r in res] == [4.0, 8.0, 12.0]
        assert [float(r["k_predicted"]) for r in res] == pytest.approx([math.pi / 2, math.pi / 4, math.pi / 6])
        assert "peaks" in tables

    def test_L_gate(self, capsys):
        code, _, err = run(capsys, "transmit", "--L", "1")
        assert code == 2
        assert "experimental" in err

    def test_experimental_L(self, capsys):
        code, out, _ = run(capsys, "transmit", "--L", "1", "--experimental-L", "--k-range", "1:2:3")
        assert code == 0
        assert len(parse_csv(out)[1]["main"]) == 3

    def test_nonpositive_k(self, capsys):
        assert run(capsys, "transmit", "--k-range", "0:1:3")[0] == 2

    def test_unconverged_points_fail(self, capsys):
        # an unattainable threshold flags every point
        code, out, _ = run(capsys, "transmit", "--k-range", "0.5:1:3", "--unitarity-threshold", "1e-30")
        assert code == 1
        assert all(r["status"] == "nonconverged" for r in parse_csv(out)[1]["main"])

    def test_workers_do_not_change_output(self, capsys):
        a = run(capsys, "transmit", "--k-range", "0.2:4:20", "--workers", "1")[1]
        b = run(capsys, "transmit", "--k-range", "0.2:4:20", "--workers", "4")[1]
        strip = lambda s: [l for l in s.splitlines() if not l.startswith("# config")]
        assert strip(a) == strip(b)


class TestBorn:
    def test_figure2(self, capsys):
        code, out, _ = run(capsys, "born", "--b0", "1", "--x-range", "0.05:5:200", "--figure2")
        assert code == 0
        rows = parse_csv(out)[1]["main"]
        sig = [float(r["sigma_quad"]) for r in rows]
        assert len(rows) == 200 and min(sig) > 0 and sig[-1] < sig[0]
        assert set(rows[0]) == {"x", "sigma_quad", "sigma_quad_err", "sigma_closed", "rel_discrepancy"}

    def test_dcs_zero_energy(self, capsys):
        code, out, _ = run(capsys, "born", "--k", "0", "--L", "0", "--dcs")
        assert code == 0
        assert {float(r["dcs"]) for r in parse_csv(out)[1]["main"]} == {1 / 64}

    def test_eq15_roots(self, capsys):
        code, out, err = run(capsys, "born", "--eq15-roots")
        assert code == 0
        assert "no roots found on (0, 50]" in err
        assert "# no roots found on (0, 50]" in out

    def test_cross_section_report(self, capsys):
        code, out, _ = run(capsys, "born", "--cross-section", "--L", "2", "--x-range", "0.5:2:4")
        assert code == 0
        rows = parse_csv(out)[1]["main"]
        assert all(float(r["rel_discrepancy"]) <= 1e-6 for r in rows)
        assert all(float(r["rel_discrepancy_as_printed"]) > 1e-3 for r in rows)

    def test_needs_a_mode(self, capsys):
        assert run(capsys, "born")[0] == 2

    def test_figure2_needs_range(self, capsys):
        assert run(capsys, "born", "--figure2")[0] == 2


class TestHeun:
    def test_default_grid(self, capsys):
        code, out, _ = run(capsys, "heun")
        assert code == 0
        rows = parse_csv(out)[1]["main"]
        assert len(rows) == 24
        assert max(float(r["max_residual"]) for r in rows) <= 1e-8

    def test_negative_control(self, capsys):
        code, _, err = run(capsys, "heun", "--perturb-eta", "0.1")
        assert code == 1
        assert "residual above threshold" in err and "branch=" in err

    def test_zero_energy(self, capsys):
        code, out, _ = run(capsys, "heun", "--kb0", "0", "--L", "0")
        assert code == 0
        assert max(float(r["max_residual"]) for r in parse_csv(out)[1]["main"]) <= 1e-8


class TestOutput:
    ARGS = ("born", "--x-range", "0.1:3:15", "--figure2")

    def test_header(self, capsys):
        out = run(capsys, *self.ARGS)[1]
        header, _ = parse_csv(out)
        assert header[0] == f"wormhole-waveguide {__version__}"
        assert any(h.startswith("units: hbar = 2 m0 = 1") for h in header)
        config = json.loads(next(h for h in header if h.startswith("config: "))[len("config: "):])
        assert config["b0"] == 1.0 and config["x_range"] == [0.1, 3.0, 15]

    def test_seventeen_digits(self, capsys):
        out = run(capsys, "potential", "--r-range", "0.3:0.3:1")[1]
        value = parse_csv(out)[1]["main"][0]["v_eff"]
        assert float(value) == 1 / (1.09**2)
        assert len(value.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) <= 17

    def test_deterministic_files(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main([*self.ARGS, "-o", str(a)]) == 0
        assert main([*self.ARGS, "-o", str(b)]) == 0
        a_lines = a.read_bytes().splitlines()
        b_lines = b.read_bytes().splitlines()
        # only the echoed output path differs
        assert [l for l in a_lines if b"config" not in l] == [l for l in b_lines if b"config" not in l]
        out = tmp_path / "c.csv"
        main([*self.ARGS, "-o", str(out)])
        first = out.read_bytes()
        main([*self.ARGS, "-o", str(out)])
        assert out.read_bytes() == first

    def test_json(self, capsys):
        code, out, _ = run(capsys, *self.ARGS, "--format", "json")
        doc = json.loads(out)
        assert code == 0
        table = doc["tables"]["figure2"]
        assert table["columns"][0] == "x" and len(table["rows"]) == 15

    def test_unwritable_path(self, capsys, tmp_path):
        code, _, err = run(capsys, *self.ARGS, "-o", str(tmp_path / "missing" / "x.csv"))
        assert code == 2
        assert "cannot write" in err

    def test_env_tolerance(self, capsys, monkeypatch):
        monkeypatch.setenv("WORMHOLE_WAVEGUIDE_TOL", "1e-8")
        assert run(capsys, *self.ARGS)[0] == 0
        for bad in ("abc", "-1", "0", "2", "nan"):
            monkeypatch.setenv("WORMHOLE_WAVEGUIDE_TOL", bad)
            code, _, err = run(capsys, *self.ARGS)
            assert code == 2 and "WORMHOLE_WAVEGUIDE_TOL" in err

    def test_no_subcommand(self, capsys):
        assert run(capsys)[0] == 2

    def test_version(self, capsys):
        code, out, _ = run(capsys, "--version")
        assert code == 0 and __version__ in out


def test_parse_range_single_point():
    assert parse_range("2:2:1") == (2.0, 2.0, 1)
