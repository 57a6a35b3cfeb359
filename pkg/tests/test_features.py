import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_flow, random_scene
from trackflow.features import FeatureLayout, WeightVector, assign_costs, feature_sum, transition_feature
from trackflow.geometry import NEAR, spatial_relation
from trackflow.graph import Detection, FlowSolution, GraphConfig, build_graph, objective, tracks_to_flows


def d(i, frame, box=(0.0, 0.0, 10.0, 10.0), cls=0, score=0.0):
    return Detection(id=i, frame=frame, box=box, class_id=cls, score=score)


def test_transition_bins():
    assert transition_feature(d(0, 0), d(1, 1), 0.9) == 0
    assert transition_feature(d(0, 0), d(1, 1), 0.4) == 1
    assert transition_feature(d(0, 0), d(1, 3), 0.6) == 4
    with pytest.raises(ValueError):
        transition_feature(d(0, 0), d(1, 9), 0.9, max_gap=8)


def test_layout_sizes():
    L = FeatureLayout(K=2, max_gap=8)
    assert L.sizes()["trans"] == 16
    assert L.sizes()["pair"] == 2 * 2 * 8
    assert L.dim == 1 + 16 + 32 + 4 + 1
    sl = L.slices()
    assert [sl[k].start for k in ("birth", "trans", "pair", "app", "death")] == [0, 1, 17, 49, 53]


def test_zero_weights_zero_costs():
    g = build_graph(random_scene(np.random.default_rng(0)))
    gw = assign_costs(g, WeightVector.zeros(FeatureLayout(K=2)))
    for arr in (gw.c_det, gw.c_birth, gw.c_death, gw.c_trans, gw.q_pair):
        assert not np.any(arr)
    assert objective(gw, random_flow(gw, np.random.default_rng(1))) == 0.0


def test_detection_cost_from_score():
    g = build_graph([d(0, 0, score=3.0)])
    w = WeightVector.zeros(FeatureLayout(K=1))
    w.w_app[0] = (-1.0, 0.0)
    assert assign_costs(g, w).c_det[0] == -3.0


def test_empty_flow_zero_features():
    g = build_graph(random_scene(np.random.default_rng(2)))
    assert not np.any(feature_sum(g, FlowSolution.empty(g), FeatureLayout(K=2)))


def test_single_transition_feature():
    # gap 2 with IoU 0.6: shift 2.5 px on 10 px boxes -> 75/125
    g = build_graph([d(0, 0), d(1, 2, box=(2.5, 0.0, 10.0, 10.0))])
    assert g.transitions[0].gap == 2 and g.transitions[0].iou == pytest.approx(0.6)
    L = FeatureLayout(K=1)
    psi = feature_sum(g, tracks_to_flows(g, [[0, 1]]), L)
    trans = psi[L.slices()["trans"]]
    assert trans.tolist() == [0, 0, 1] + [0] * 13


def test_pair_feature_both_directions():
    a, b = (0.0, 0.0, 10.0, 10.0), (30.0, 0.0, 10.0, 10.0)
    assert spatial_relation(a, b) == NEAR and spatial_relation(b, a) == NEAR
    g = build_graph([d(0, 0, a, cls=0), d(1, 0, b, cls=1)])
    L = FeatureLayout(K=2)
    psi = feature_sum(g, tracks_to_flows(g, [[0], [1]]), L)
    pair = psi[L.slices()["pair"]].reshape(2, 2, L.D)
    expected = np.zeros((2, 2, L.D))
    expected[0, 1, NEAR] = 1
    expected[1, 0, NEAR] = 1
    assert np.array_equal(pair, expected)


def check_identity(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(1, 4))
    g = build_graph(random_scene(rng, K=K, n_frames=int(rng.integers(1, 7))), GraphConfig(max_gap=3))
    L = FeatureLayout(K=K, max_gap=3)
    w = WeightVector(L, rng.normal(size=L.dim) * rng.uniform(0.1, 10))
    f = random_flow(g, rng)
    psi = feature_sum(g, f, L)
    assert abs(float(w.vector @ psi) - objective(assign_costs(g, w), f)) <= 1e-9
    return g, L, psi, f


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_consistency_identity(seed):
    check_identity(seed)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_indicator_features_count_active_elements(seed):
    g, L, psi, f = check_identity(seed)
    sl = L.slices()
    assert psi[sl["birth"]][0] == f.birth.sum()
    assert psi[sl["death"]][0] == f.death.sum()
    trans, pair = psi[sl["trans"]], psi[sl["pair"]]
    assert trans.min() >= 0 and trans.sum() == f.trans.sum()
    co_active = sum(int(f.det[p.a] and f.det[p.b]) for p in g.pairs)
    assert pair.min() >= 0 and pair.sum() == 2 * co_active
    bias = psi[sl["app"]][1::2]
    assert bias.min() >= 0 and bias.sum() == f.det.sum()


def test_weights_json_roundtrip(tmp_path):
    L = FeatureLayout(K=2, max_gap=4)
    w = WeightVector(L, np.arange(L.dim) / 7.0)
    p = tmp_path / "w.json"
    w.save(p)
    back = WeightVector.load(p)
    assert back.layout == L and np.array_equal(back.vector, w.vector)
    assert back.dumps() == p.read_text()
    data = json.loads(p.read_text())
    assert sorted(data["blocks"]) == ["app", "birth", "death", "pair", "trans"]


@pytest.mark.parametrize("mutate", [
    lambda d: d["blocks"].pop("pair"),
    lambda d: d["blocks"]["app"].append(0.0),
    lambda d: d.pop("meta"),
    lambda d: d["blocks"].update(extra=[1.0]),
])
def test_weights_json_strict(mutate):
    data = WeightVector.zeros(FeatureLayout(K=1)).to_dict()
    mutate(data)
    with pytest.raises(ValueError):
        WeightVector.from_dict(data)


def test_layout_mismatch_rejected():
    g = build_graph([d(0, 0, cls=1)])
    with pytest.raises(ValueError):
        assign_costs(g, WeightVector.zeros(FeatureLayout(K=1)))
