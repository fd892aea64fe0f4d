import copy
import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from hybrid_relax.contracts import InputTable
from hybrid_relax.model import (
    ConfigurationError,
    EdgeKind,
    HybridSystem,
    InconsistentEdgeError,
    InputSignal,
    classify_edge,
    eval_field,
    guard_samples,
    load_input_signal,
    load_system,
    validate_system,
)

from .systems import affine, build, glued_tree


def _codes(system: HybridSystem) -> set[str]:
    return {v.code for v in validate_system(system).violations}


def _one_way_tree(offset: float = -1.0) -> dict:
    tree = glued_tree()
    tree["edges"] = [tree["edges"][0]]
    tree["edges"][0]["partner"] = None
    tree["edges"][0]["target_facet"] = {"normal": [0.0, -1.0], "offset": offset}
    return tree


def test_build_system_indexes(glued: HybridSystem) -> None:
    assert glued.state_dim == 2
    assert glued.input_dim == 0
    assert [e.id for e in glued.outgoing(0)] == [0]
    assert glued.edge(1).source == 1
    assert glued.has_mode(1) and not glued.has_mode(5)
    with pytest.raises(KeyError, match="unknown mode"):
        glued.mode(5)
    with pytest.raises(KeyError, match="unknown edge"):
        glued.edge(9)


def test_box_vertices(glued: HybridSystem) -> None:
    verts = glued.mode(1).vertices
    assert len(verts) == 4
    assert {tuple(v) for v in np.round(verts, 12)} == {
        (-1.0, 1.0),
        (1.0, 1.0),
        (-1.0, 3.0),
        (1.0, 3.0),
    }


def test_guard_samples_lie_on_the_facet(glued: HybridSystem) -> None:
    samples = guard_samples(glued, glued.edge(0), count=5)
    assert samples.shape == (2 + 1 + 5, 2)
    assert np.allclose(samples[:, 1], 1.0)
    assert np.all(np.abs(samples[:, 0]) <= 1.0 + 1e-12)


def test_eval_field_outside_domain(glued: HybridSystem) -> None:
    out = eval_field(glued, 0, np.array([10.0, 10.0]), np.zeros(0))
    assert np.allclose(out, [0.0, 1.0])


def test_valid_systems(glued: HybridSystem, ball: HybridSystem) -> None:
    assert validate_system(glued).ok
    assert validate_system(ball).ok
    assert validate_system(build(_one_way_tree())).ok


def test_classify_edges(glued: HybridSystem, ball: HybridSystem) -> None:
    assert classify_edge(glued, 0) is EdgeKind.REVERSIBLE
    assert classify_edge(glued, 1) is EdgeKind.REVERSIBLE
    assert classify_edge(ball, 0) is EdgeKind.NON_REVERSIBLE


def test_classify_edge_inconsistent_partner() -> None:
    tree = glued_tree()
    tree["edges"][1]["reset"]["A"] = [[2.0, 0.0], [0.0, 2.0]]
    system = build(tree)
    with pytest.raises(InconsistentEdgeError, match="round trip"):
        classify_edge(system, 0)
    assert classify_edge(system, 0, strict=False) is EdgeKind.NON_REVERSIBLE
    assert "round_trip_failed" in _codes(system)


def test_unknown_partner() -> None:
    tree = glued_tree()
    tree["edges"][0]["partner"] = 7
    system = build(tree)
    with pytest.raises(InconsistentEdgeError, match="unknown partner"):
        classify_edge(system, 0)
    assert "unknown_partner" in _codes(system)


def test_non_unit_normal_flagged() -> None:
    tree = glued_tree()
    tree["modes"][0]["halfspaces"][0]["normal"] = [2.0, 0.0]
    tree["modes"][0]["halfspaces"][0]["offset"] = 2.0
    assert "normal_not_unit" in _codes(build(tree))


def test_non_unit_guard_normal_flagged_on_edge() -> None:
    tree = glued_tree()
    tree["edges"][0]["guard"]["normal"] = [0.0, 2.0]
    report = validate_system(build(tree))
    flagged = [v for v in report.violations if v.code == "normal_not_unit"]
    assert flagged
    assert flagged[0].edge == 0


def test_unbounded_domain_flagged() -> None:
    tree = glued_tree()
    del tree["modes"][1]["halfspaces"][2]
    assert "unbounded_domain" in _codes(build(tree))


def test_empty_domain_flagged() -> None:
    tree = glued_tree()
    tree["modes"][1]["halfspaces"][3]["offset"] = -5.0
    assert "empty_domain" in _codes(build(tree))


def test_guard_off_facet_flagged() -> None:
    tree = glued_tree()
    tree["edges"][0]["guard"]["offset"] = 0.5
    codes = _codes(build(tree))
    assert "guard_not_on_facet" in codes
    assert "guard_not_outward" in codes


def test_non_reversible_edge_needs_target_facet() -> None:
    tree = _one_way_tree()
    tree["edges"][0]["target_facet"] = None
    assert _codes(build(tree)) == {"missing_target_facet"}


def test_reset_missing_target_facet_flagged() -> None:
    assert "reset_leaves_target_facet" in _codes(build(_one_way_tree(-1.5)))


def test_singular_reversible_reset_flagged() -> None:
    tree = glued_tree()
    tree["edges"][0]["reset"]["A"] = [[1.0, 0.0], [0.0, 0.0]]
    assert "reset_singular" in _codes(build(tree))


def test_overlapping_guards_flagged() -> None:
    tree = _one_way_tree()
    twin = copy.deepcopy(tree["edges"][0])
    twin["id"] = 1
    tree["edges"].append(twin)
    assert "guards_overlap" in _codes(build(tree))


def test_duplicate_mode_ids_rejected() -> None:
    tree = glued_tree()
    tree["modes"][1]["id"] = 0
    with pytest.raises(ConfigurationError, match="mode ids"):
        build(tree)


def test_unknown_field_kind_rejected() -> None:
    tree = glued_tree()
    tree["modes"][0]["field"] = {"kind": "mystery", "params": {}}
    with pytest.raises(ConfigurationError, match="mode 0"):
        build(tree)


def test_field_dimension_mismatch_rejected() -> None:
    tree = glued_tree()
    tree["modes"][0]["field"] = affine(F=[[1.0]], w=(0.0,))
    with pytest.raises(ConfigurationError, match="mode 0"):
        build(tree)


def test_load_system_yaml_and_json(tmp_path: Path) -> None:
    tree = glued_tree()
    (tmp_path / "s.yaml").write_text(yaml.safe_dump(tree))
    (tmp_path / "s.json").write_text(json.dumps(tree))
    for name in ("s.yaml", "s.json"):
        system = load_system(tmp_path / name)
        assert len(system.modes) == 2
        assert validate_system(system).ok


def test_load_system_requires_mapping(tmp_path: Path) -> None:
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigurationError, match="mapping"):
        load_system(path)


def test_input_signal_is_right_continuous() -> None:
    signal = InputSignal(np.array([0.0, 1.0, 2.0]), np.array([[0.0], [1.0], [2.0]]))
    assert signal(0.5)[0] == 0.0
    assert signal(1.0)[0] == 1.0
    assert signal(5.0)[0] == 2.0
    assert signal.breakpoints_between(0.0, 2.0) == [1.0]
    assert InputSignal.zero(2)(3.0).shape == (2,)


def _controlled() -> HybridSystem:
    tree = glued_tree()
    tree["input_dim"] = 1
    tree["input_box"] = [(-1.0, 1.0)]
    for mode in tree["modes"]:
        mode["field"]["params"]["G"] = [[0.0], [1.0]]
    return build(tree)


def test_input_table_checked_against_box(tmp_path: Path) -> None:
    system = _controlled()
    ok = InputTable(breakpoints=[0.0, 1.0], values=[[0.5], [-1.0]])
    assert InputSignal.from_table(ok, system)(1.5)[0] == -1.0
    bad = InputTable(breakpoints=[0.0, 1.0], values=[[0.5], [3.0]])
    with pytest.raises(ConfigurationError, match="input box"):
        InputSignal.from_table(bad, system)
    wide = InputTable(breakpoints=[0.0], values=[[0.0, 0.0]])
    with pytest.raises(ConfigurationError, match="width"):
        InputSignal.from_table(wide, system)
    path = tmp_path / "u.yaml"
    path.write_text(yaml.safe_dump({"breakpoints": [0.0], "values": [[0.25]]}))
    assert load_input_signal(path, system)(0.0)[0] == 0.25
