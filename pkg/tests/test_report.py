import json
import math

import numpy as np
import pytest

from progderiv import report
from progderiv.distance import Compressor
from progderiv.explore import GridScanConfig, HeatGrid, SearchConfig, boundary_search, grid_scan, heatgrid_diff
from progderiv.sut import builtin
from progderiv.values import parse

GZ = Compressor("gzip", 9)


def handmade(m):
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    cfg = GridScanConfig(x_range=(0.0, float(n)), y_range=(0.0, float(n)), resolution=n, samples=1,
                         compressor=GZ)
    xs = [i + 0.5 for i in range(n)]
    return HeatGrid(xs, list(xs), m, [[None] * n for _ in range(n)], cfg, {"name": "handmade"})


def body(path):
    return [line for line in path.read_text().splitlines() if not line.startswith("#")]


def test_fmt_number():
    assert report.fmt_number(0.0) == "0"
    assert report.fmt_number(2.5) == "2.5"
    assert report.fmt_number(0.1 + 0.2) == "0.30000000000000004"
    assert report.fmt_number(math.nan) == "NA"


def test_zero_grid_csv(tmp_path):
    p = report.export_grid_csv(handmade([[0, 0], [0, 0]]), tmp_path / "g.csv", timestamp=False)
    assert body(p) == ["y\\x,0.5,1.5", "1.5,0,0", "0.5,0,0"]


def test_undefined_cell_is_na(tmp_path):
    p = report.export_grid_csv(handmade([[1.25, math.nan], [0, 2]]), tmp_path / "g.csv", timestamp=False)
    # bottom row (y = 0.5) is written last
    assert body(p)[-1] == "0.5,1.25,NA"


def test_csv_round_trip_is_exact(tmp_path):
    g = grid_scan(builtin("sum1"), GridScanConfig(resolution=9, samples=6, compressor=GZ))
    g.quotients[2, 3] = math.nan
    p = report.export_grid_csv(g, tmp_path / "g.csv")
    back = report.read_grid_csv(p)
    assert np.array_equal(back.quotients, g.quotients, equal_nan=True)
    assert back.x_centers == g.x_centers and back.y_centers == g.y_centers
    assert back.config.to_dict() == g.config.to_dict()


def test_provenance_reruns_to_identical_csv(tmp_path):
    g = grid_scan(builtin("sum1"), GridScanConfig(resolution=7, samples=5, seed=42, compressor=GZ))
    first = report.export_grid_csv(g, tmp_path / "a.csv", timestamp=False)
    prov, *_ = report.read_csv_matrix(first)
    again = grid_scan(builtin(prov["sut"]["name"]), GridScanConfig.from_dict(prov["scan"]))
    second = report.export_grid_csv(again, tmp_path / "b.csv", timestamp=False)
    assert first.read_bytes() == second.read_bytes()


def test_timestamp_only_when_asked(tmp_path):
    g = handmade([[0, 1], [2, 3]])
    assert "created" not in report.export_grid_csv(g, tmp_path / "a.csv", timestamp=False).read_text()
    assert "# created: " in report.export_grid_csv(g, tmp_path / "b.csv").read_text()


def test_uniform_grid_is_white(tmp_path):
    p = report.export_grid_image(handmade([[0.7, 0.7], [0.7, 0.7]]), tmp_path / "g.pgm")
    assert np.all(report.read_pgm(p) == 255)


def test_two_value_grid(tmp_path):
    p = report.export_grid_image(handmade([[0, 1], [1, 0]]), tmp_path / "g.pgm")
    px = report.read_pgm(p)
    # top image row is the largest y
    assert px.tolist() == [[0, 255], [255, 0]]
    assert "# normalization: min=0 max=1" in p.read_text()


def test_all_undefined_image(tmp_path):
    p = report.export_grid_image(handmade([[math.nan, math.nan], [math.nan, math.nan]]), tmp_path / "g.pgm")
    assert np.all(report.read_pgm(p) == 128)
    assert "warning" in p.read_text()


def test_undefined_is_mid_gray(tmp_path):
    p = report.export_grid_image(handmade([[0, math.nan], [1, 0.5]]), tmp_path / "g.pgm")
    # rows top-down: y = 1.5 holds (1, 0.5), y = 0.5 holds (0, NA)
    assert report.read_pgm(p).tolist() == [[0, 128], [255, 128]]


def test_argmax_cell_is_darkest_pixel(tmp_path):
    g = grid_scan(builtin("sum1"), GridScanConfig(resolution=15, samples=8, compressor=GZ))
    px = report.read_pgm(report.export_grid_image(g, tmp_path / "g.pgm"))
    _, xs, ys, m = report.read_csv_matrix(report.export_grid_csv(g, tmp_path / "g.csv"))
    j, i = divmod(int(np.nanargmax(m)), m.shape[1])
    # image rows run from the top (largest y) down
    dark = np.argwhere(px == px.min())[0]
    assert (len(ys) - 1 - dark[0], dark[1]) == (j, i)


def test_diff_exports(tmp_path):
    cfg = GridScanConfig(resolution=8, samples=6, compressor=GZ)
    d = heatgrid_diff(grid_scan(builtin("sum1"), cfg), grid_scan(builtin("sum2"), cfg))
    p = report.export_diff_csv(d, tmp_path / "d.csv", {"scan": cfg.to_dict()}, timestamp=False)
    prov, _, _, m = report.read_csv_matrix(p)
    assert prov["summary"] == d.summary()
    assert np.array_equal(m, d.abs_diff, equal_nan=True)
    assert report.read_pgm(report.export_diff_image(d, tmp_path / "d.pgm")).shape == (8, 8)


def test_pairs_json_empty(tmp_path):
    doc = json.loads(report.export_pairs_json([], tmp_path / "p.json", {"note": "x"}).read_text())
    assert doc["pairs"] == [] and doc["schema_version"] == 1
    assert doc["provenance"]["note"] == "x" and doc["provenance"]["tool"] == "progderiv"


def test_pairs_json_round_trip(tmp_path):
    pair = boundary_search(builtin("sum1"), SearchConfig(budget=300, seed=1), GZ)
    path = report.export_pairs_json([pair], tmp_path / "p.json", timestamp=False)
    text = path.read_text()
    doc = json.loads(text)
    (rec,) = doc["pairs"]
    assert parse(rec["input_a"]) == pair.result.input_a
    assert parse(rec["output_b"]) == pair.result.output_b
    assert rec["quotient"] == pair.quotient and rec["d_in"] == pair.result.d_in
    assert rec["midpoint"] == list(pair.midpoint)
    assert json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n" == text


def test_json_rejects_non_finite(tmp_path):
    with pytest.raises(ValueError):
        report.export_pairs_json([], tmp_path / "p.json", {"bad": math.inf})
