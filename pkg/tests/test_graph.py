import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackflow.graph import (
    Detection,
    FlowError,
    FlowSolution,
    GraphConfig,
    build_graph,
    check_flow,
    flows_to_tracks,
    make_graph,
    objective,
    tracks_to_flows,
)


def det(i, frame, box=(0.0, 0.0, 10.0, 10.0), cls=0, score=0.0):
    return Detection(id=i, frame=frame, box=box, class_id=cls, score=score)


def test_identical_boxes_link_once():
    g = build_graph([det(0, 0), det(1, 1)])
    assert len(g.transitions) == 1
    t = g.transitions[0]
    assert (t.src, t.dst, t.gap, t.iou) == (0, 1, 1, 1.0)


def test_gap_beyond_max_not_linked():
    g = build_graph([det(0, 0), det(1, 9)], GraphConfig(max_gap=8))
    assert g.transitions == []
    g = build_graph([det(0, 0), det(1, 8)], GraphConfig(max_gap=8))
    assert len(g.transitions) == 1 and g.transitions[0].gap == 8


def test_disjoint_boxes_not_linked():
    g = build_graph([det(0, 0), det(1, 1, box=(50.0, 50.0, 10.0, 10.0))])
    assert g.transitions == []


def test_class_mismatch_not_linked():
    assert build_graph([det(0, 0), det(1, 1, cls=1)]).transitions == []
    cfg = GraphConfig(same_class_links=False)
    assert len(build_graph([det(0, 0), det(1, 1, cls=1)], cfg).transitions) == 1


def test_far_pairs_pruned():
    dets = [det(0, 0), det(1, 0, box=(15.0, 0.0, 10.0, 10.0)), det(2, 0, box=(500.0, 0.0, 10.0, 10.0))]
    g = build_graph(dets)
    assert [(p.a, p.b) for p in g.pairs] == [(0, 1)]
    g = build_graph(dets, GraphConfig(prune_far_pairs=False))
    assert len(g.pairs) == 3


def test_unsorted_and_duplicate_rejected():
    with pytest.raises(ValueError):
        build_graph([det(0, 1), det(1, 0)])
    with pytest.raises(ValueError):
        build_graph([det(0, 0), det(0, 1)])


def test_build_deterministic():
    rng = np.random.default_rng(3)
    dets = [det(i, i // 4, box=tuple(float(x) for x in rng.uniform(0, 30, 2)) + (20.0, 20.0)) for i in range(24)]
    a, b = build_graph(dets), build_graph(dets)
    assert a.transitions == b.transitions and a.pairs == b.pairs


def single():
    return make_graph([0], [], c_det=[-2.0], c_birth=[0.5], c_death=[0.25])


def test_objective_empty_flow():
    g = single()
    assert objective(g, FlowSolution.empty(g)) == 0.0


def test_objective_single_node():
    g = single()
    f = tracks_to_flows(g, [[0]])
    assert objective(g, f) == 0.5 - 2.0 + 0.25


def test_objective_pairwise_term():
    g = make_graph([0, 0], [], [(0, 1)], c_det=[-1, -1], c_birth=[-1, -1], c_death=[-1, -1], q_pair=[5.0])
    f = tracks_to_flows(g, [[0], [1]])
    assert objective(g, f) == -6 + 5 == -1


def test_tracks_roundtrip_examples():
    g = make_graph([0, 0, 1, 1, 2, 2, 3, 3], [(3, 7), (0, 2), (2, 4)])
    assert flows_to_tracks(g, FlowSolution.empty(g)) == []
    assert flows_to_tracks(g, tracks_to_flows(g, [[3, 7]])) == [[3, 7]]


def test_tracks_to_flows_rejects_bad_tracks():
    g = make_graph([0, 1, 2], [(0, 1)])
    with pytest.raises(FlowError):
        tracks_to_flows(g, [[0, 2]])  # no such edge
    with pytest.raises(FlowError):
        tracks_to_flows(g, [[0, 1], [1]])  # shared node


def test_check_flow_catches_violation():
    g = make_graph([0, 1], [(0, 1)])
    f = FlowSolution.empty(g)
    f.det[0] = 1
    f.birth[0] = 1
    with pytest.raises(FlowError, match="conservation"):
        check_flow(g, f)


@st.composite
def graph_and_tracks(draw):
    n_frames = draw(st.integers(1, 6))
    per = draw(st.lists(st.integers(0, 3), min_size=n_frames, max_size=n_frames))
    frames = [t for t, k in enumerate(per) for _ in range(k)]
    n = len(frames)
    edges = [(i, j) for i in range(n) for j in range(n) if frames[i] < frames[j]]
    g = make_graph(frames, edges)
    # random disjoint frame-increasing tracks
    order = draw(st.permutations(list(range(n))))
    tracks, used = [], set()
    for i in order:
        if i in used or draw(st.booleans()):
            continue
        track = [i]
        used.add(i)
        for j in range(n):
            if j not in used and frames[j] > frames[track[-1]] and draw(st.booleans()):
                track.append(j)
                used.add(j)
        tracks.append(track)
    return g, tracks


@settings(max_examples=80, deadline=None)
@given(graph_and_tracks())
def test_tracks_flows_bijection(data):
    g, tracks = data
    f = tracks_to_flows(g, tracks)
    check_flow(g, f)
    assert sorted(flows_to_tracks(g, f)) == sorted(tracks)
    assert tracks_to_flows(g, flows_to_tracks(g, f)) == f
