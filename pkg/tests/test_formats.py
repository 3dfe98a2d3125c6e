import csv
import io
import json
import math

import numpy as np

from lengthlab.chart_spaces import build
from lengthlab.fans_homotopy import build_fan
from lengthlab.formats import (GEODESIC_CSV_HEADER, clean, comparison_bridge_svg, fan_svg, geodesics_csv,
                               jsonl, planar, rows_csv, svg_document)
from lengthlab.geodesic_engine import enumerate_geodesics
from lengthlab.paths import make_point
from lengthlab.rauch_bridges import build_bridge, develop_comparison_bridge, meridian_bridge


def test_clean_handles_numpy_and_infinities():
    doc = clean({"a": np.float64(1.5), "b": math.inf, "c": [np.int64(3), np.bool_(True)], 4: -math.inf,
                 "d": math.nan, "e": np.arange(2)})
    assert doc == {"a": 1.5, "b": "inf", "c": [3, True], "4": "-inf", "d": "nan", "e": [0, 1]}
    json.dumps(doc)


def test_jsonl_sorted_and_one_line_per_record():
    text = jsonl([{"b": 1, "a": 2}, {"x": math.inf}])
    lines = text.splitlines()
    assert lines == ['{"a": 2, "b": 1}', '{"x": "inf"}']


def test_geodesics_csv_round_trip():
    T = build("flat_torus")
    paths = enumerate_geodesics(T, make_point("T", [0.2, 0.3]), make_point("T", [0.7, 0.8]), 0.75)
    rows = list(csv.reader(io.StringIO(geodesics_csv(paths))))
    assert rows[0] == GEODESIC_CSV_HEADER
    assert len(rows) == 5
    for r in rows[1:]:
        assert abs(float(r[1]) - math.sqrt(0.5)) < 1e-9


def test_rows_csv_float_format():
    assert rows_csv(["x", "y"], [[0.1 + 0.2, "a"]]) == "x,y\n0.3,a\n"


def test_svg_outputs_are_deterministic():
    S, g, s = meridian_bridge(0.1)
    cb = develop_comparison_bridge(build_bridge(S, g, s, N=4))
    a, b = comparison_bridge_svg(cb), comparison_bridge_svg(cb)
    assert a == b and a.startswith("<svg") and a.rstrip().endswith("</svg>")
    assert a.count("<polyline") == 2 + 2 * 4 + 1
    f = build_fan(S, g, math.pi, n_samples=8)
    assert "<polyline" in fan_svg(f)


def test_svg_document_empty_and_planar():
    assert "<svg" in svg_document([])
    assert np.allclose(planar(make_point("S", [0.0, 0.0, 1.0])), [0.0, math.pi / 2])
    assert np.allclose(planar(make_point("L", [0.3])), [0.3, 0.0])
