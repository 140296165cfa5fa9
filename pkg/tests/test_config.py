import copy

import numpy as np
import pytest
import yaml

from conftest import example_spec
from dggdelay.config import bundled_example, load_config, parse_config
from dggdelay.errors import ConfigError
from dggdelay.pipeline import DEFAULT_TOLERANCES


def _data(bundled):
    from importlib import resources
    return yaml.safe_load((resources.files("dggdelay") / "scenarios" / "consensus_example.yaml").read_text())


def test_bundled_matches_hand_built_spec(bundled):
    a, b = bundled.to_spec(), example_spec(0.5)
    assert a.graph.edges == b.graph.edges and a.tau == b.tau and a.horizon == b.horizon
    np.testing.assert_array_equal(a.weights.running, b.weights.running)
    np.testing.assert_array_equal(a.weights.terminal, b.weights.terminal)
    np.testing.assert_array_equal(a.weights.control, b.weights.control)
    np.testing.assert_array_equal(a.x0, b.x0)
    t = np.linspace(0, 8, 9)
    np.testing.assert_array_equal(a.leader.position(t), b.leader.position(t))
    assert bundled.samples == 801 and bundled.tolerances == DEFAULT_TOLERANCES


def test_tau_override(bundled):
    assert bundled.to_spec(0.0).tau == 0.0


def _broken(bundled, edit):
    d = copy.deepcopy(_data(bundled))
    edit(d)
    return d


@pytest.mark.parametrize("edit, msg", [
    (lambda d: d.pop("horizon"), "missing required field 'horizon'"),
    (lambda d: d.update(q=4), "q: must be 1, 2 or 3"),
    (lambda d: d.update(tau="half"), "tau: expected a number"),
    (lambda d: d.update(colour=1), "unknown field"),
    (lambda d: d["graph"]["edges"].__setitem__(1, [1]), r"graph.edges\[1\]"),
    (lambda d: d["agents"][1].update(id=7), r"agents\[1\].id"),
    (lambda d: d["agents"][1].update(id=1), "listed twice"),
    (lambda d: d["agents"].pop(), r"no entry for follower\(s\) \[3\]"),
    (lambda d: d["agents"][0].update(running=[1, 2]), r"agents\[0\].running: expected a list of 3"),
    (lambda d: d["agents"][0].update(position=[1, "x"]), r"agents\[0\].position: entries must be numbers"),
    (lambda d: d["agents"][0].pop("control"), r"agents\[0\]: missing required field 'control'"),
    (lambda d: d["leader"][0].update(coord=3), r"leader\[0\].coord"),
    (lambda d: d["leader"][0].update(kind="exp"), r"leader\[0\].kind"),
    (lambda d: d["leader"][1].pop("power"), r"leader\[1\]: missing required field 'power'"),
    (lambda d: d.update(output={"samples": 1}), "output.samples"),
    (lambda d: d.update(tolerances={"speed": 1.0}), "tolerances.speed"),
    (lambda d: d.update(horizon=0.4), "T > tau"),
    (lambda d: d["agents"][1]["running"].__setitem__(0, 1.0), "agent 2 has running weight on non-incident edge"),
    (lambda d: d["agents"][0].update(control=-1.0), "positive"),
])
def test_field_addressed_errors(bundled, edit, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(_broken(bundled, edit), "scenario.yaml")


def test_yaml_error_reports_line(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("graph:\n  nodes: 2\n  edges: [[0, 1]\nq: 1\n")
    with pytest.raises(ConfigError, match=r"line \d+"):
        load_config(p)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "none.yaml")


def test_top_level_must_be_mapping():
    with pytest.raises(ConfigError, match="mapping"):
        parse_config([1, 2])


def test_round_trip_through_file(tmp_path, bundled):
    p = tmp_path / "s.yaml"
    p.write_text(yaml.safe_dump(_data(bundled)))
    cfg = load_config(p)
    np.testing.assert_array_equal(cfg.to_spec().x0, bundled.to_spec().x0)
    assert bundled_example().source == "consensus_example.yaml"
