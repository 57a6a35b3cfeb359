import itertools

import numpy as np

from trackflow.bench import random_instance
from trackflow.graph import Detection, FlowSolution


def instances(seed, count, **kwargs):
    rng = np.random.Generator(np.random.PCG64(seed))
    return [random_instance(rng, **kwargs) for _ in range(count)]


def random_flow(g, rng, p_on=0.6, p_link=0.7):
    """A feasible flow drawn by switching nodes on in index order and linking
    each to a random free active predecessor."""
    f = FlowSolution.empty(g)
    has_succ = [False] * g.n_nodes
    for i in range(g.n_nodes):
        if rng.random() >= p_on:
            continue
        f.det[i] = 1
        free = [(j, e) for j, e in g.adj.incoming[i] if f.det[j] and not has_succ[j]]
        if free and rng.random() < p_link:
            j, e = free[int(rng.integers(len(free)))]
            has_succ[j] = True
            f.trans[e] = 1
        else:
            f.birth[i] = 1
    for i in range(g.n_nodes):
        if f.det[i] and not has_succ[i]:
            f.death[i] = 1
    return f


def random_scene(rng, n_frames=5, per_frame=4, K=2, spread=60.0):
    """Detections with random boxes, classes and scores, sorted by frame."""
    dets = []
    for t in range(n_frames):
        for _ in range(int(rng.integers(0, per_frame + 1))):
            x, y = rng.uniform(0, spread, 2)
            w, h = rng.uniform(10, 30, 2)
            dets.append(Detection(id=len(dets), frame=t, box=(float(x), float(y), float(w), float(h)),
                                  class_id=int(rng.integers(K)), score=float(rng.normal())))
    return dets


def all_flows(g):
    """Every feasible flow, by enumerating node and edge subsets directly."""
    n, m = g.n_nodes, len(g.transitions)
    for det_bits in itertools.product((0, 1), repeat=n):
        live = [e for e, t in enumerate(g.transitions) if det_bits[t.src] and det_bits[t.dst]]
        for pick in itertools.product((0, 1), repeat=len(live)):
            trans = np.zeros(m, dtype=np.int8)
            for e, on in zip(live, pick):
                trans[e] = on
            indeg, outdeg = np.zeros(n, int), np.zeros(n, int)
            for e in np.nonzero(trans)[0]:
                indeg[g.transitions[e].dst] += 1
                outdeg[g.transitions[e].src] += 1
            det = np.array(det_bits, dtype=np.int8)
            birth, death = det - indeg, det - outdeg
            if birth.min() < 0 or death.min() < 0:
                continue
            yield FlowSolution(det, trans, birth.astype(np.int8), death.astype(np.int8))
