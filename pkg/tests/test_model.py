import numpy as np
import pytest

from builders import TOY, square, toy_doc, toy_spec
from cellopt import io
from cellopt.errors import DimensionError
from cellopt.model import (
    Chromosome,
    check_chromosome,
    chromosome_dimensions,
    resource_coords,
    topological_order,
    validate_spec,
)


def codes(spec):
    return {d.code for d in validate_spec(spec)}


def test_fixture_is_clean(estop):
    assert validate_spec(estop) == []
    assert estop.n_ops == 13 and estop.n_agents == 2


def test_fixture_dimensions(estop):
    assert chromosome_dimensions(estop) == (14, 14, 28)
    assert len(estop.movable) == 7
    assert len([r for r in estop.resources if not r.movable]) == 3


def test_degenerate_dimensions():
    spec = toy_spec(
        resources=[{"name": "b", "movable": False, "coords": [0.8, 0], "footprint": square(0.1)}],
        tasks={"wait": {"human": [["Wait"]], "robot": [["Open"]]}},
        operations=[{"name": "o1", "task": "wait"}],
        precedence=[],
        capability={"human": [0], "robot": [1]},
    )
    assert validate_spec(spec) == []
    assert chromosome_dimensions(spec) == (0, 1, 1)


def test_two_cycle_is_reported():
    spec = toy_spec(precedence=[["o1", "o2"], ["o2", "o1"]])
    assert "CYCLIC_PRECEDENCE" in codes(spec)


def test_no_capable_agent():
    spec = toy_spec(capability={"human": [0, 1], "robot": [0, 1]})
    assert "NO_CAPABLE_AGENT" in codes(spec)


def test_self_precedence():
    assert "SELF_PRECEDENCE" in codes(toy_spec(precedence=[["o1", "o1"]]))


def test_nonconvex_footprint():
    doc = toy_doc()
    doc["resources"][0]["footprint"] = [[0, 0], [1, 0], [0.2, 0.2], [0, 1]]
    assert "NONCONVEX_FOOTPRINT" in codes(io.spec_from_dict(doc))


def test_clockwise_footprint_rejected():
    doc = toy_doc()
    doc["resources"][0]["footprint"] = square(0.1)[::-1]
    assert "NONCONVEX_FOOTPRINT" in codes(io.spec_from_dict(doc))


def test_human_after_robot():
    doc = toy_doc()
    doc["agents"] = doc["agents"][::-1]
    doc["capability"] = {"human": [0, 0], "robot": [0, 0]}
    assert "AGENT_ORDER" in codes(io.spec_from_dict(doc))


def test_robot_primitive_for_human():
    doc = toy_doc()
    doc["tasks"]["pick_place"]["human"] = [["MoveTo", 0]]
    assert "UNKNOWN_PRIMITIVE" in codes(io.spec_from_dict(doc))


def test_missing_collab_sequence():
    doc = toy_doc()
    doc["operations"].append({"name": "o3", "kind": "collaborative", "agents": 2})
    doc["capability"] = {"human": [0, 0, 0], "robot": [0, 0, 0]}
    assert "MISSING_COLLAB_SEQUENCE" in codes(io.spec_from_dict(doc))


def test_cap_out_of_range():
    assert "CAP_RANGE" in codes(toy_spec(caps=[3, 1]))


def test_eligibility_matches_capability(estop):
    b = estop.capability_matrix
    for op in estop.operations:
        for j in range(estop.n_agents):
            assert (j in op.eligible) == (b[j, op.index] == 0)


def test_topological_order():
    p = np.zeros((3, 3), dtype=int)
    p[2, 0] = p[0, 1] = 1
    assert topological_order(p) == [2, 0, 1]
    p[1, 2] = 1
    assert topological_order(p) is None


def test_check_chromosome_dimensions(estop):
    x = Chromosome(np.zeros(13), tuple((0,) for _ in range(13)))
    with pytest.raises(DimensionError):
        check_chromosome(estop, x)


def test_fixed_resource_uses_stored_coords():
    spec = toy_spec()
    layout = np.array([0.3, 0.2])
    assert tuple(resource_coords(spec, layout, 0)) == (0.3, 0.2)
    assert tuple(resource_coords(spec, layout, 1)) == (0.8, 0.0)


def test_chromosome_is_immutable_and_hashable():
    x = Chromosome(np.array([1.0, 2.0]), ((0,), (1,)))
    with pytest.raises(ValueError):
        x.layout[0] = 5.0
    y = Chromosome(np.array([1.0, 2.0]), ((0,), (1,)))
    assert x == y and hash(x) == hash(y)
    assert x != x.with_allocation(((1,), (1,)))


def test_toy_doc_untouched():
    toy_doc(name="other")
    assert TOY["name"] == "toy"
