import math

import numpy as np
import pytest

from lengthlab.chart_spaces import (CATALOG, SpaceFileError, build, load_space, parse_point,
                                    space_hash)
from lengthlab.paths import make_point


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_builds_and_is_a_metric(name):
    S = build(name)
    rng = np.random.default_rng(3)
    pts = [S.random_point(rng) for _ in range(5)]
    for p in pts:
        assert S.distance(p, p) == pytest.approx(0.0, abs=1e-12)
    for p in pts[:3]:
        for q in pts[:3]:
            assert S.distance(p, q) == pytest.approx(S.distance(q, p), abs=1e-9)
            for r in pts[:3]:
                assert S.distance(p, r) <= S.distance(p, q) + S.distance(q, r) + 1e-9
    assert S.eta > 0
    assert S.tol_rad == pytest.approx(5 * S.eta + 1e-6)


def test_line_pile_distance_is_one():
    S = build("line_pile")
    assert S.distance(S.point("p"), S.point("q")) == pytest.approx(1.0, abs=1e-9)


def test_flat_disk_and_plane_distances():
    D = build("flat_disk")
    assert D.distance(make_point("D", [0, 0]), make_point("D", [0.3, 0.4])) == pytest.approx(0.5)
    P = build("flat_plane")
    assert P.distance(make_point("P", [1, 1]), make_point("P", [4, 5])) == pytest.approx(5.0)


def test_sphere_and_torus_values():
    S = build("unit_sphere")
    assert S.distance(S.point("n"), S.point("s")) == pytest.approx(math.pi)
    assert S.distance(S.point("n"), S.point("e")) == pytest.approx(math.pi / 2)
    T = build("flat_torus")
    # the diagonal corner of a unit square torus is at sqrt(2)/2
    assert T.distance(T.point("o"), T.point("c")) == pytest.approx(math.sqrt(0.5))
    assert T.distance(make_point("T", [0.1, 0]), make_point("T", [0.9, 0])) == pytest.approx(0.2)


def test_circle_chord_distances():
    S = build("circle_chord")
    # the chord of length r0 = 1 joins p1 and p2
    assert S.distance(S.point("p1"), S.point("p2")) == pytest.approx(1.0)
    assert S.distance(S.point("p1"), S.point("m")) == pytest.approx(0.5)


def test_cube_face_diagonal_and_across_edge():
    C = build("cube")
    assert C.distance(make_point("F0", [0.0, 0.0]), make_point("F0", [1.0, 1.0])) == pytest.approx(math.sqrt(2))


def test_canonical_is_idempotent():
    for name in ("cube", "flat_torus", "pinned_sector", "rational_line"):
        S = build(name)
        rng = np.random.default_rng(0)
        for _ in range(10):
            p = S.random_point(rng)
            assert S.canonical(S.canonical(p)) == S.canonical(p)


def test_parse_point_forms():
    S = build("flat_disk")
    assert parse_point(S, "o") == S.point("o")
    assert parse_point(S, "0.3,0.4") == make_point("D", [0.3, 0.4])
    assert parse_point(S, "D:0.3,0.4") == make_point("D", [0.3, 0.4])
    with pytest.raises(SpaceFileError):
        parse_point(S, "x,y")


@pytest.mark.parametrize("name,text", [("flat_disk", "7,7"), ("unit_sphere", "1"), ("cube", "F0:2,0"),
                                       ("cylinder_line", "C1:0,99"), ("pinned_sector", "L:0,-1,0"),
                                       ("flat_disk", "Q:0,0")])
def test_parse_point_rejects_outside_chart(name, text):
    with pytest.raises(SpaceFileError):
        parse_point(build(name), text)


def test_unknown_space_name():
    with pytest.raises(SpaceFileError, match="unknown space"):
        load_space("nosuch")


def test_build_errors():
    with pytest.raises(SpaceFileError):
        build("no_such_space")
    with pytest.raises(SpaceFileError):
        build("circle", wrong=1)
    with pytest.raises(ValueError):
        build("rational_line", depth=0)


YAML_SPACE = """
name: two_segments
charts:
  - {id: a, kind: segment, length: 1.0}
  - {id: b, kind: segment, length: 2.0}
gluings:
  - [[a, 1.0], [b, 0.0]]
points:
  x: [a, 0.0]
  y: [b, 2.0]
cba_kappa: 0.0
"""


def test_load_explicit_yaml(tmp_path):
    f = tmp_path / "s.yaml"
    f.write_text(YAML_SPACE)
    S = load_space(str(f))
    assert S.distance(S.point("x"), S.point("y")) == pytest.approx(3.0)
    S2 = load_space(YAML_SPACE)
    assert space_hash(S) == space_hash(S2)


def test_load_builder_and_overrides(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("builder: circle\nparams: {circumference: 4.0}\n")
    S = load_space(str(f))
    assert S.distance(make_point("c", [0.0]), make_point("c", [3.0])) == pytest.approx(1.0)
    S = load_space(str(f), {"circumference": 10.0})
    assert S.distance(make_point("c", [0.0]), make_point("c", [3.0])) == pytest.approx(3.0)
    assert load_space("circle").name == build("circle").name


@pytest.mark.parametrize("text", [
    "charts: []",
    "charts:\n  - {id: a, kind: blob}",
    "charts:\n  - {id: a, kind: segment, length: 1}\n  - {id: b, kind: segment, length: 1}",
    "charts:\n  - {id: a, kind: segment, length: 1}\ngluings:\n  - [[z, 0]]",
    "just words",
    "- a list",
    "foo: [unclosed",
])
def test_malformed_files(text):
    with pytest.raises(SpaceFileError):
        load_space(text)


def test_missing_file():
    with pytest.raises(SpaceFileError):
        load_space("/nonexistent/space.yaml")


def test_hash_is_stable_and_sensitive():
    assert space_hash(build("circle")) == space_hash(build("circle"))
    assert space_hash(build("circle")) != space_hash(build("circle", circumference=5.0))
