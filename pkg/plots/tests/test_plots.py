"""Figure scripts run on the shipped golden CSVs, file-in file-out only.

Nothing here (or in the scripts) imports the primary package.
"""

import csv
import os
import subprocess
import sys

import pytest

PLOTS = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
GOLDEN = os.path.join(PLOTS, "golden")


def run_script(name, *args):
    return subprocess.run(
        [sys.executable, os.path.join(PLOTS, name), *args],
        capture_output=True, text=True,
    )


def golden(name):
    return os.path.join(GOLDEN, name)


def assert_images(base):
    for ext in (".png", ".svg"):
        path = base + ext
        assert os.path.exists(path), path
        assert os.path.getsize(path) > 400
    with open(base + ".png", "rb") as fh:
        assert fh.read(8) == b"\x89PNG\r\n\x1a\n"


def test_scatter_panels_three_inputs(tmp_path):
    out = str(tmp_path / "panels")
    res = run_script(
        "make_scatter_panels.py", "--in",
        golden("sample_gaussian_repulsion.csv"),
        golden("sample_half_repulsion.csv"),
        golden("sample_poisson_disk.csv"),
        "--out", out,
    )
    assert res.returncode == 0, res.stderr
    assert_images(out)


def test_scatter_panel_empty_realization(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("x,y,multiplicity\n")
    out = str(tmp_path / "empty_panel")
    res = run_script("make_scatter_panels.py", "--in", str(empty),
                     "--out", out)
    assert res.returncode == 0, res.stderr
    assert_images(out)


def test_scatter_panels_deterministic(tmp_path):
    outs = []
    for name in ("one", "two"):
        out = str(tmp_path / name)
        res = run_script("make_scatter_panels.py", "--in",
                         golden("sample_poisson_disk.csv"), "--out", out)
        assert res.returncode == 0, res.stderr
        outs.append(out)
    for ext in (".png", ".svg"):
        with open(outs[0] + ext, "rb") as a, open(outs[1] + ext, "rb") as b:
            assert a.read() == b.read(), f"{ext} output not reproducible"


def test_scatter_rejects_wrong_schema(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    res = run_script("make_scatter_panels.py", "--in", str(bad),
                     "--out", str(tmp_path / "x"))
    assert res.returncode != 0


def test_bound_bars_from_golden(tmp_path):
    out = str(tmp_path / "bars")
    res = run_script("make_bound_bars.py", "--in", golden("dominance.csv"),
                     "--out", out)
    assert res.returncode == 0, res.stderr
    assert_images(out)


def test_bound_bars_whisker_rule_on_golden():
    # the dominance property as drawn: the lower-bound bar never exceeds
    # the bound bar by more than the whiskers
    with open(golden("dominance.csv"), newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8
    for row in rows:
        bound = float(row["bound"])
        b_se = float(row["bound_stderr"])
        kr = float(row["kr_lower"])
        kr_se = float(row["kr_stderr"])
        assert kr <= bound + 3 * (b_se + kr_se), row["pair_id"]
        assert row["pass"] == "true"


def test_bound_bars_missing_stderr_column(tmp_path):
    bad = tmp_path / "noerr.csv"
    bad.write_text("pair_id,bound,kr_lower\np,1.0,0.5\n")
    res = run_script("make_bound_bars.py", "--in", str(bad),
                     "--out", str(tmp_path / "x"))
    assert res.returncode != 0
    assert "missing columns" in res.stderr


def test_convergence_from_golden(tmp_path):
    out = str(tmp_path / "rate")
    res = run_script("make_convergence.py", "--in",
                     golden("glauber_rate_pois.csv"), "--out", out)
    assert res.returncode == 0, res.stderr
    assert_images(out)


def test_convergence_reference_line_and_data():
    with open(golden("glauber_rate_pois.csv"), newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows, "golden rate curve must not be empty"
    import math

    ts = [float(r["t"]) for r in rows]
    refs = [float(r["ref_bound"]) for r in rows]
    # reference decays exactly like e^-t: slope -1 on the log scale
    for (t1, r1), (t2, r2) in zip(zip(ts, refs), zip(ts[1:], refs[1:])):
        slope = (math.log(r2) - math.log(r1)) / (t2 - t1)
        assert slope == pytest.approx(-1.0, abs=1e-9)
    # empirical curve sits below the reference (up to 3 whiskers)
    for r in rows:
        assert float(r["abs_dev"]) <= float(r["ref_bound"]) + 3 * float(r["stderr"])


def test_convergence_empty_grid_errors(tmp_path):
    empty = tmp_path / "rate.csv"
    empty.write_text("t,abs_dev,stderr,ref_bound\n")
    res = run_script("make_convergence.py", "--in", str(empty),
                     "--out", str(tmp_path / "x"))
    assert res.returncode != 0
    assert "empty t-grid" in res.stderr


def test_scripts_do_not_import_primary_package():
    import ast

    for name in ("make_scatter_panels.py", "make_bound_bars.py",
                 "make_convergence.py", "figstyle.py"):
        with open(os.path.join(PLOTS, name), encoding="utf-8") as fh:
            tree = ast.parse(fh.read())
        for node in ast.walk(tree):
            if isinstance(node, ast.Import):
                mods = [a.name for a in node.names]
            elif isinstance(node, ast.ImportFrom):
                mods = [node.module or ""]
            else:
                continue
            for mod in mods:
                assert not mod.startswith("steinpp"), (name, mod)
