"""
Tests for the experiment runner and result emission.
"""

import csv
import inspect
import json
import math
import os
import re
from fractions import Fraction

import pytest

from ifs_khintchine.config import ExperimentConfig
from ifs_khintchine.errors import BudgetExceededError
from ifs_khintchine.models.results import ResultTable
from ifs_khintchine.runner import (
    CLAIMS,
    RUNNERS,
    _decades,
    claim,
    default_output_path,
    emit,
    run,
    run_config,
)

CANTOR_THETA = f"power:1,{-math.log(3) / math.log(2)!r}"


def make_config(**data):
    return ExperimentConfig.from_dict(data).validate()


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def test_decades():
    """Test the sampling points used for long series."""
    assert _decades(1000) == [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]
    assert _decades(30) == [1, 2, 5, 10, 20, 30]


def test_emit_writes_every_table(tmp_path):
    """Test primary, secondary and summary artefacts."""
    primary = ResultTable("main", ["a", "b"], claim="a claim", summary=["an observation"])
    primary.add_row(1, 0.5)
    secondary = ResultTable("extra", ["c"])
    secondary.add_row("x")
    out = str(tmp_path / "sub" / "run.csv")

    paths = emit([primary, secondary], out, "csv")

    assert paths == [out, str(tmp_path / "sub" / "run_extra.csv"), out + ".summary.md"]
    assert read_csv(paths[0]) == [["a", "b"], ["1", "0.5"]]
    assert read_csv(paths[1]) == [["c"], ["x"]]
    with open(paths[2]) as f:
        summary = f.read()
    assert "# main" in summary
    assert "**Claim:** a claim" in summary
    assert "- an observation" in summary
    assert "# extra" not in summary


def test_default_output_path(tmp_path, monkeypatch):
    """Test results/<experiment>.<ext> relative to the working directory."""
    monkeypatch.chdir(tmp_path)
    config = make_config(experiment="dim", preset="cantor3", format="md")
    assert default_output_path(config) == os.path.join("results", "dim.md")

    written = run_config(config)
    assert list(written) == [os.path.join("results", "dim.md")]
    assert (tmp_path / "results" / "dim.md").exists()


def test_run_dim(tmp_path):
    """Test the dimension table for the middle-third system."""
    out = str(tmp_path / "dim.csv")
    run_config(make_config(experiment="dim", preset="cantor3", out=out))
    rows = read_csv(out)

    assert rows[0] == ["preset", "kind", "method", "lower", "upper", "level", "tolerance",
                       "separation"]
    assert rows[1][:3] == ["cantor3", "similarity", "exact-similarity"]
    assert abs(float(rows[1][3]) - math.log(2) / math.log(3)) < 1e-9
    assert rows[1][7] == "SSC (certified)"
    assert len(rows) == 2


def test_run_khintchine_deterministic(tmp_path):
    """Test byte-identical output for a fixed seed and matching JSON-lines records."""
    params = {"theta": CANTOR_THETA, "ranks": 10, "samples": 30, "k_min": 2}
    outputs = []
    for name in ("a", "b"):
        out = str(tmp_path / f"{name}.csv")
        run_config(make_config(experiment="khintchine", preset="cantor3", seed=5, out=out,
                               khintchine=params))
        with open(out, "rb") as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1]
    assert b"\r" not in outputs[0]

    out = str(tmp_path / "c.jsonl")
    run_config(make_config(experiment="khintchine", preset="cantor3", seed=5, out=out,
                           format="jsonl", khintchine=params))
    with open(out) as f:
        records = [json.loads(line) for line in f]
    assert len(records) == len(read_csv(tmp_path / "a.csv")) - 1 == 10
    assert records[0]["rank"] == 1
    assert records[0]["hitter_fraction_k1"] == "1"


def test_run_khintchine_tables():
    """Test the secondary tables and the summary."""
    config = make_config(experiment="khintchine", preset="cantor3",
                         khintchine={"theta": CANTOR_THETA, "ranks": 8, "samples": 20, "k_min": 3})
    main, hitters, ranks, ratios = run(config)

    assert main.columns == ["rank", "balls", "sum_term", "partial_sum", "covered_measure",
                            "hitter_fraction_k1", "hitter_fraction_k2", "hitter_fraction_k3"]
    assert main.claim.startswith("[khintchine-dichotomy] ")
    records = list(main.records())
    assert sum(r["sum_term"] for r in records) == pytest.approx(records[-1]["partial_sum"])
    for r in records:
        assert r["hitter_fraction_k1"] >= r["hitter_fraction_k2"] >= r["hitter_fraction_k3"]
    assert [r["hitter_fraction_k3"] for r in records][-1] == hitters.rows[-1][1]
    assert ranks.columns == ["rank", "rank_hit_fraction", "mean_hits"]
    assert ranks.rows[0][:2] == (1, 1.0)
    assert [row[0] for row in hitters.rows] == [1, 2, 3]
    assert hitters.rows[0][1] == 1.0
    assert ratios.rows[-1][0] == 10 ** 6
    assert any("bounded over Q" in note for note in main.summary)
    assert any("not certified" in note for note in main.summary)


def test_khintchine_csv_header(tmp_path):
    """Test the column order of the khintchine artefact."""
    out = str(tmp_path / "k.csv")
    run_config(make_config(experiment="khintchine", preset="cantor3", seed=1, out=out,
                           khintchine={"theta": CANTOR_THETA, "ranks": 6, "samples": 10,
                                       "k_min": 3}))
    rows = read_csv(out)
    assert rows[0] == ["rank", "balls", "sum_term", "partial_sum", "covered_measure",
                       "hitter_fraction_k1", "hitter_fraction_k2", "hitter_fraction_k3"]
    assert [row[0] for row in rows[1:]] == ["1", "2", "3", "4", "5", "6"]
    assert os.path.exists(str(tmp_path / "k_ranks.csv"))


def test_every_runner_names_a_known_claim():
    """Test that each experiment cites one of the stable claim identifiers."""
    for name, runner in RUNNERS.items():
        source = inspect.getsource(runner)
        keys = re.findall(r'claim\("([a-z-]+)"\)', source)
        assert keys, name
        assert set(keys) <= set(CLAIMS), name
    with pytest.raises(KeyError):
        claim("no-such-claim")


def test_run_khintchine_sample_budget():
    """Test that the sample budget is enforced before any work."""
    config = make_config(experiment="khintchine", preset="cantor3", budgets={"samples": 10},
                         khintchine={"samples": 11})
    with pytest.raises(BudgetExceededError):
        run(config)


def test_run_example21_small():
    """Test the ledger, tail and window tables on a short run."""
    config = make_config(experiment="example21", example21={
        "m_max": 16, "enumeration": 400, "ranks": 25, "window": 10, "samples": 100,
    })
    ledger, tail, windows = run(config)

    assert len(ledger.rows) == 16
    assert ledger.rows[7][:2] == (8, 93)
    assert tail.rows[0][0] == 300
    assert tail.rows[0][2] < 0.01
    assert [row[:2] for row in windows.rows] == [(1, 11), (6, 16), (11, 21)]


def test_run_example22_small(tmp_path):
    """Test the series, union and hit tables."""
    out = str(tmp_path / "ex22.csv")
    config = make_config(experiment="example22", out=out, example22={
        "j": "1,2", "ranks": 12, "window_start": 10, "samples": 20, "series_n": 1000,
    })
    paths = run_config(config)[out]

    assert paths[1].endswith("ex22_union.csv")
    assert paths[2].endswith("ex22_hits.csv")
    series = read_csv(out)
    assert [int(row[0]) for row in series[1:]] == [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]
    hits = read_csv(paths[2])
    assert hits[1][0] == "1,2"


def test_run_leadingblock():
    """Test scan and construction modes."""
    scan = run(make_config(experiment="leadingblock", leadingblock={"coding": "1,1,2,1,1", "l": 2}))
    assert [row[0] for row in scan[0].rows] == [1, 4]
    assert "not certified" in scan[0].summary

    built = run(make_config(experiment="leadingblock", preset="cantor3", seed=3,
                            leadingblock={"block_length": 3}))
    assert [row[0] for row in built[0].rows] == [1]
    assert built[0].summary[-1].startswith("leading-block certified up to")
    assert [row[0] for row in built[1].rows] == [1, 2, 3]


def test_run_masstransfer():
    """Test that the crossing contains dim_S / t."""
    table, = run(make_config(experiment="masstransfer", preset="cantor3", masstransfer={"t": 2}))
    assert len(table.rows) == 64
    assert any("inside the bracket" in note for note in table.summary)


def test_run_mahler_constructed_point():
    """Test the exponent near t at the height 3^7 image."""
    tables = run(make_config(experiment="mahler", preset="cantor3", mahler={
        "start": "0", "depth": 8, "x": "construct:2",
    }))
    main = tables[0]
    rows = {row[1]: row for row in main.rows}
    record = rows[(2, 1, 2, 1, 1, 1, 2)]
    assert record[3] == 3 ** 7
    assert 2 <= record[6] <= 2.06
    assert len(main.rows) == 2 ** 9 - 2


def test_run_mahler_rational_point():
    """Test indeterminate pairs when x is itself an orbit point."""
    main, top = run(make_config(experiment="mahler", preset="cantor3", mahler={
        "start": "0", "depth": 3, "x": "2/3",
    }))
    indeterminate = [row for row in main.rows if row[8]]
    assert any(row[2] == Fraction(2, 3) for row in indeterminate)
    assert len(top.rows) <= 10


def test_run_quadratic():
    """Test the orbit of sqrt(2) under x -> 1/(x + i)."""
    table, = run(make_config(experiment="quadratic", quadratic={"depth": 4}))
    assert len(table.rows) == 2 + 4 + 8 + 16
    first = table.rows[0]
    assert first[1] == (1,)
    assert first[2] == "1,2,-1"
    assert first[4] <= first[5]


def test_run_overlap(tmp_path):
    """Test overlap pairs and the dimension drop table."""
    out = str(tmp_path / "overlap.csv")
    paths = run_config(make_config(experiment="overlap", preset="overlap_demo", out=out))[out]
    assert read_csv(out) == [["word_i", "word_j"], ["1,3", "3,1"]]
    dimension = read_csv(paths[1])
    assert dimension[1][:2] == ["2", "3,1"]
    assert float(dimension[1][3]) < 0.99


def test_run_overlap_none():
    """Test systems without exact overlaps."""
    table, = run(make_config(experiment="overlap", preset="cantor3", overlap={"k": 3}))
    assert table.rows == []
    assert table.summary == ["no exact overlap at level 3"]
