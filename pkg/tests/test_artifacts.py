import json
import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from guidepath.artifacts import ArtifactError, check_inputs, dumps, file_sha256, fmt_float, gains_from_dict, gains_to_dict, provenance
from guidepath.environment import EnvironmentModel, Landmark
from guidepath.geometry import Polytope2
from guidepath.pipeline import simulate, synthesize
from guidepath.render import render_figure, render_svg
from guidepath.simulator import SimOptions
from guidepath.synthesis import SynthesisParams
from guidepath.tree import RoadmapTree


@pytest.fixture(scope="module")
def small():
    lms = tuple(Landmark(k, np.array(p)) for k, p in (("p", (4.0, -4.0)), ("q", (-4.0, 4.0)), ("r", (4.0, 4.5))))
    env = EnvironmentModel(Polytope2.box(-5, 5, -5, 5), (), lms, 1)
    nodes = {0: np.zeros(2), 1: np.array([3.0, 0.0]), 2: np.array([3.0, 3.0])}
    tree = RoadmapTree(nodes, {0: None, 1: 0, 2: 1}, 0, [np.array([1.5, 1.5])])
    return env, tree, synthesize(tree, env, params=SynthesisParams(), threads=1)


def test_fmt_float():
    assert fmt_float(0.0) == "0" and fmt_float(-0.0) == "0"
    assert fmt_float(1 / 3) == "0.333333333333"
    assert fmt_float(123456789.123456789) == "123456789.123"
    assert fmt_float(1e-20) == "1e-20"
    with pytest.raises(ArtifactError):
        fmt_float(float("nan"))


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_float_precision(v):
    back = float(fmt_float(v))
    assert back == pytest.approx(v, rel=1e-11, abs=0.0) or v == 0.0


def test_dumps_canonical():
    a = dumps({"b": 1.0, "a": [np.float64(0.1), np.int64(3), True], "c": np.array([[1.0, 2.0]])})
    b = dumps({"c": [[1.0, 2.0]], "a": [0.1, 3, True], "b": 1.0})
    assert a == b
    assert list(json.loads(a)) == ["a", "b", "c"]
    assert dumps({"x": -0.0}) == dumps({"x": 0.0})
    assert dumps({"x": 1 / 3}) == dumps({"x": 0.333333333333})


def test_provenance_and_check(tmp_path):
    f = tmp_path / "env.json"
    f.write_text("{}")
    doc = {"provenance": provenance(env=f)}
    assert doc["provenance"]["inputs"]["env"] == file_sha256(f)
    check_inputs(doc, env=f)
    f.write_text("{ }")
    with pytest.raises(ArtifactError, match="does not match"):
        check_inputs(doc, env=f)
    with pytest.raises(ArtifactError):
        check_inputs({}, env=f)


def test_gains_round_trip(small):
    env, tree, bundle = small
    text = dumps(gains_to_dict(bundle))
    back = gains_from_dict(json.loads(text))
    assert dumps(gains_to_dict(back)) == text
    assert back.verified and set(back.gains) == set(bundle.gains)
    for e, g in bundle.gains.items():
        np.testing.assert_allclose(back.gains[e].K, g.K, rtol=1e-11, atol=1e-12)
        assert len(back.gains[e].cone) == len(g.cone)
    with pytest.raises(ArtifactError):
        gains_from_dict({"edges": []})


def test_relaxed_warning(small):
    env, tree, bundle = small
    assert "warning" not in gains_to_dict(bundle)
    relaxed = synthesize(tree, env, params=SynthesisParams(relax=True), threads=1)
    assert "warning" in gains_to_dict(relaxed)


def test_svg_structure(small):
    env, tree, bundle = small
    trajs = [simulate(env, tree, bundle, s, SimOptions()) for s in ((3.5, 3.5), (4.0, 1.0))]
    svg = render_svg(env, tree, trajs, title="demo <1>")
    assert svg.startswith("<?xml")
    assert len(re.findall(r'<path id="edge-', svg)) == len(tree.edges())
    for k, t in enumerate(trajs):
        m = re.search(rf'<polyline id="trajectory-{k}" points="([^"]*)"', svg)
        assert len(m.group(1).split(" ")) == len(t.rows)
    assert svg.count("<rect ") == len(env.landmarks)
    assert "demo &lt;1&gt;" in svg
    assert render_svg(env, tree, trajs, title="demo <1>") == svg


def test_svg_without_tree(small):
    env, _, _ = small
    svg = render_svg(env)
    assert "<path" not in svg and "<polyline" not in svg


def test_figure_written(small, tmp_path):
    env, tree, bundle = small
    out = tmp_path / "fig.png"
    render_figure(out, env, tree, [simulate(env, tree, bundle, (3.5, 3.5), SimOptions())])
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
