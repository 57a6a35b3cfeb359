"""Flow solvers: exact successive shortest paths, greedy one- and two-pass DP with
contextual (pairwise) cost updates, and an exhaustive oracle for small graphs.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .graph import INF, FlowSolution, TrackingGraph, check_flow, objective

EPS = 1e-9
# strict-improvement margin for label correcting; keeps round-off from closing
# zero-cost residual cycles
RELAX_TOL = 1e-11
BRUTE_FORCE_MAX_NODES = 14


class SolverError(RuntimeError):
    pass


@dataclass
class PathStep:
    """One accepted augmentation: the DP path estimate and the exact objective change."""

    nodes: list[int]
    cost: float
    delta: float


@dataclass
class SolveInfo:
    steps: list[PathStep] = field(default_factory=list)
    objective: float = 0.0
    evaluated: int = 0  # node label evaluations, summed over iterations

    @property
    def iterations(self) -> int:
        return len(self.steps)


# --------------------------------------------------------------------------
# successive shortest paths


def solve_ssp(g: TrackingGraph, ignore_quadratic: bool = False, info: SolveInfo | None = None) -> FlowSolution:
    """Globally optimal flow for the linear objective.

    Residual graph over split nodes: source 0, sink 1, in-node ``2 + 2i`` and
    out-node ``3 + 2i`` per detection.  Shortest paths use a FIFO label-correcting
    search since used edges are reversed with negated cost.
    """
    if g.has_quadratic() and not ignore_quadratic:
        raise SolverError("solve_ssp handles linear costs only; pass ignore_quadratic=True to drop q")
    n = g.n_nodes
    f = FlowSolution.empty(g)
    info = info if info is not None else SolveInfo()
    n_vertices = 2 * n + 2
    c_det = g.c_det.tolist()
    c_birth = g.c_birth.tolist()
    c_death = g.c_death.tolist()
    c_trans = g.c_trans.tolist()

    while True:
        # arcs: (head, cost, kind, index, new_value)
        arcs: list[list[tuple]] = [[] for _ in range(n_vertices)]
        for i in range(n):
            u, v = 2 + 2 * i, 3 + 2 * i
            if f.birth[i]:
                arcs[u].append((0, -c_birth[i], "birth", i, 0))
            else:
                arcs[0].append((u, c_birth[i], "birth", i, 1))
            if f.det[i]:
                arcs[v].append((u, -c_det[i], "det", i, 0))
            else:
                arcs[u].append((v, c_det[i], "det", i, 1))
            if f.death[i]:
                arcs[1].append((v, -c_death[i], "death", i, 0))
            else:
                arcs[v].append((1, c_death[i], "death", i, 1))
        for e, t in enumerate(g.transitions):
            v, u = 3 + 2 * t.src, 2 + 2 * t.dst
            if f.trans[e]:
                arcs[u].append((v, -c_trans[e], "trans", e, 0))
            else:
                arcs[v].append((u, c_trans[e], "trans", e, 1))

        dist, pred = _label_correcting(arcs, 0)
        if not dist[1] < -EPS:
            break
        path_nodes = []
        x = 1
        for _ in range(n_vertices + 1):
            if x == 0:
                break
            tail, (_, _, kind, idx, val) = pred[x]
            getattr(f, kind)[idx] = val
            if kind == "det" and val:
                path_nodes.append(idx)
            x = tail
        else:
            raise SolverError("shortest-path tree contains a cycle")
        check_flow(g, f)
        info.steps.append(PathStep(sorted(path_nodes), dist[1], dist[1]))
        info.objective += dist[1]
    return f


def _label_correcting(arcs: list[list[tuple]], source: int) -> tuple[list[float], list]:
    """Bellman-Ford with a FIFO queue; raises on a negative cycle."""
    nv = len(arcs)
    dist = [math.inf] * nv
    pred: list = [None] * nv
    count = [0] * nv
    in_queue = [False] * nv
    dist[source] = 0.0
    queue = deque([source])
    in_queue[source] = True
    while queue:
        x = queue.popleft()
        in_queue[x] = False
        dx = dist[x]
        for arc in arcs[x]:
            y = arc[0]
            nd = dx + arc[1]
            if nd < dist[y] - RELAX_TOL:
                dist[y] = nd
                pred[y] = (x, arc)
                if not in_queue[y]:
                    count[y] += 1
                    if count[y] > nv:
                        raise SolverError("negative-cost cycle in residual graph")
                    queue.append(y)
                    in_queue[y] = True
    return dist, pred


# --------------------------------------------------------------------------
# greedy dynamic programming


class _DPBase:
    caching = False

    def __init__(self, caching: bool = False):
        self.caching = caching
        self.info = SolveInfo()

    def enable_caching(self, on: bool = True) -> None:
        self.caching = on

    def _setup(self, g: TrackingGraph) -> None:
        self.g = g
        self.n = g.n_nodes
        self.incoming = g.adj.incoming
        self.outgoing = g.adj.outgoing
        self.neighbors = g.adj.neighbors
        self.q = g.q_pair.tolist()
        self.c = g.c_det.tolist()
        self.cs = g.c_birth.tolist()
        self.ce = g.c_death.tolist()
        self.ct = g.c_trans.tolist()
        self.info = SolveInfo()


class DP1Solver(_DPBase):
    """One-pass DP: repeatedly instance the cheapest forward path, then freeze it."""

    def solve(self, g: TrackingGraph) -> FlowSolution:
        self._setup(g)
        n = self.n
        c, cs, ce, ct, q = self.c, self.cs, self.ce, self.ct, self.q
        incoming, outgoing, neighbors = self.incoming, self.outgoing, self.neighbors
        f = FlowSolution.empty(g)
        removed = [False] * n
        cost = [math.inf] * n
        link = [-1] * n
        link_edge = [-1] * n
        birth = list(range(n))
        dirty = set(range(n))

        while True:
            # forward sweep over dirty nodes, in index (= time) order
            heap = sorted(dirty)
            dirty.clear()
            changed: set[int] = set()
            queued = set(heap)
            while heap:
                i = heapq.heappop(heap)
                self.info.evaluated += 1
                if removed[i]:
                    new = (math.inf, -1, -1)
                else:
                    best, bj, be = cs[i], -1, -1
                    for j, e in incoming[i]:
                        if removed[j]:
                            continue
                        v = cost[j] + ct[e]
                        if v < best:
                            best, bj, be = v, j, e
                    new = (c[i] + best, bj, be)
                if new != (cost[i], link[i], link_edge[i]) or new[1] in changed:
                    cost[i], link[i], link_edge[i] = new
                    birth[i] = i if new[1] < 0 else birth[new[1]]
                    changed.add(i)
                    for j, _ in outgoing[i]:
                        if j not in queued:
                            queued.add(j)
                            heapq.heappush(heap, j)

            best_i, best_total = -1, math.inf
            for i in range(n):
                t = cost[i] + ce[i]
                if t < best_total:
                    best_i, best_total = i, t
            if not best_total < -EPS:
                break

            path = []
            i = best_i
            while i >= 0:
                path.append(i)
                i = link[i]
            path.reverse()
            f.birth[path[0]] = 1
            f.death[path[-1]] = 1
            for i in path:
                f.det[i] = 1
                if link_edge[i] >= 0:
                    f.trans[link_edge[i]] = 1
            self.info.steps.append(PathStep(path, best_total, best_total))
            self.info.objective += best_total

            for i in path:
                for j, p in neighbors[i]:
                    if not removed[j] and q[p] != 0.0:
                        c[j] += q[p]
                        dirty.add(j)
                removed[i] = True
                c[i] = INF
                dirty.add(i)
            if not self.caching:
                dirty = set(range(n))
        return f


class DP2Solver(_DPBase):
    """Two-pass DP over the residual graph with signed contextual updates.

    Each iteration runs (1) a forward sweep that ignores backward (active)
    predecessors, (2) a backward sweep along active tracks, and (3) a second
    forward sweep over inactive nodes that may leave a track midway.  The cheapest
    path found is flipped into the solution.
    """

    def solve(self, g: TrackingGraph) -> FlowSolution:
        self._setup(g)
        n = self.n
        c, cs, ce, ct, q = self.c, self.cs, self.ce, self.ct, self.q
        incoming, outgoing, neighbors = self.incoming, self.outgoing, self.neighbors
        frame = [d.frame for d in g.detections]
        transitions = g.transitions
        f = FlowSolution.empty(g)
        on = [False] * n
        has_birth = [False] * n
        has_death = [False] * n
        out_on = [-1] * n  # active outgoing transition edge
        in_on = [-1] * n

        # pass 1: forward labels for inactive nodes; arrival cost at the in-node for active ones
        f1 = [math.inf] * n
        p1 = [-1] * n
        e1 = [-1] * n
        b1 = list(range(n))
        # pass 2: active nodes only
        en = [math.inf] * n
        en_kind = [0] * n  # 0: arrival from pass 1, 1: via own out-node (detection switched off)
        out = [math.inf] * n
        # pass 3: inactive nodes
        f3 = [math.inf] * n
        p3 = [-1] * n
        e3 = [-1] * n
        # forward node where a path first entered an active track, or -1
        entry_en = [-1] * n
        entry3 = [-1] * n

        dirty1 = set(range(n))
        dirty3 = set(range(n))
        prev_en = [None] * n
        status_changed: set[int] = set()

        for _ in range(n + 1):
            # ---- pass 1
            changed1: set[int] = set()
            heap = sorted(dirty1)
            queued = set(heap)
            while heap:
                i = heapq.heappop(heap)
                self.info.evaluated += 1
                if on[i] and has_birth[i]:
                    best, bj, be = math.inf, -1, -1
                else:
                    best, bj, be = cs[i], -1, -1
                for j, e in incoming[i]:
                    if on[j]:
                        continue
                    v = f1[j] + ct[e]
                    if v < best:
                        best, bj, be = v, j, e
                val = best if on[i] else c[i] + best
                if (val, bj, be) != (f1[i], p1[i], e1[i]) or bj in changed1 or i in status_changed:
                    f1[i], p1[i], e1[i] = val, bj, be
                    b1[i] = i if bj < 0 else b1[bj]
                    changed1.add(i)
                    for j, _ in outgoing[i]:
                        if j not in queued:
                            queued.add(j)
                            heapq.heappush(heap, j)

            # ---- pass 2: active nodes in decreasing time
            changed2: set[int] = set()
            active = [i for i in range(n) if on[i]]
            for i in reversed(active):
                self.info.evaluated += 1
                e = out_on[i]
                if e >= 0:
                    j = transitions[e].dst
                    out[i] = en[j] - ct[e]
                    src_changed = j in changed2
                else:
                    j = -1
                    out[i] = math.inf
                    src_changed = False
                via_out = out[i] - c[i]
                if via_out < f1[i]:
                    en[i], en_kind[i] = via_out, 1
                    entry_en[i] = entry_en[j] if j >= 0 else -1
                    en_src_changed = src_changed
                else:
                    en[i], en_kind[i] = f1[i], 0
                    entry_en[i] = p1[i]
                    en_src_changed = i in changed1
                key_en = (en[i], en_kind[i], out[i], j)
                if key_en != prev_en[i] or src_changed or en_src_changed or i in status_changed:
                    changed2.add(i)
                prev_en[i] = key_en
            for i in range(n):
                if not on[i]:
                    prev_en[i] = None

            # ---- pass 3: inactive nodes, forward in time
            for i in changed2:
                for j, _ in outgoing[i]:
                    dirty3.add(j)
            for i in changed1:
                # a changed forward prefix can change the cycle test of later nodes
                if not on[i]:
                    dirty3.add(i)
            changed3: set[int] = set()
            heap = sorted(dirty3)
            queued = set(heap)
            while heap:
                i = heapq.heappop(heap)
                if on[i]:
                    if f3[i] != math.inf or i in status_changed:
                        f3[i], p3[i], e3[i], entry3[i] = math.inf, -1, -1, -1
                        changed3.add(i)
                        for j, _ in outgoing[i]:
                            if j not in queued:
                                queued.add(j)
                                heapq.heappush(heap, j)
                    continue
                self.info.evaluated += 1
                best, bj, be, bentry = cs[i], -1, -1, -1
                for j, e in incoming[i]:
                    if on[j]:
                        v = out[j] + ct[e]
                        ent = entry_en[transitions[out_on[j]].dst] if out_on[j] >= 0 else -1
                    else:
                        v = f3[j] + ct[e]
                        ent = entry3[j]
                    if not v < best:
                        continue
                    if ent >= 0 and b1[ent] == b1[i] and self._on_prefix(i, ent, p1, frame):
                        continue
                    best, bj, be, bentry = v, j, e, ent
                new = (c[i] + best, bj, be, bentry)
                if new != (f3[i], p3[i], e3[i], entry3[i]) or bj in changed3 or bj in changed2 or i in status_changed:
                    f3[i], p3[i], e3[i], entry3[i] = new
                    changed3.add(i)
                    for j, _ in outgoing[i]:
                        if j not in queued:
                            queued.add(j)
                            heapq.heappush(heap, j)

            # ---- pick the cheapest path end
            best_i, best_total = -1, math.inf
            for i in range(n):
                if on[i]:
                    if has_death[i]:
                        continue
                    t = out[i] + ce[i]
                else:
                    t = f3[i] + ce[i]
                if t < best_total:
                    best_i, best_total = i, t
            if not best_total < -EPS:
                break

            elements = self._backtrack(best_i, on, p1, e1, p3, e3, en_kind, out_on, transitions)
            delta = 0.0
            flipped: list[int] = []
            touched: set[int] = set()
            trans_flipped: list[int] = []
            for kind, idx, val in elements:
                if kind == "det":
                    delta += c[idx] if val else -c[idx]
                    sign = 1.0 if val else -1.0
                    for j, p in neighbors[idx]:
                        if q[p] != 0.0:
                            c[j] += sign * q[p]
                            touched.add(j)
                    f.det[idx] = val
                    on[idx] = bool(val)
                    flipped.append(idx)
                elif kind == "trans":
                    delta += ct[idx] if val else -ct[idx]
                    f.trans[idx] = val
                    t = transitions[idx]
                    out_on[t.src] = idx if val else -1
                    in_on[t.dst] = idx if val else -1
                    trans_flipped.append(idx)
                elif kind == "birth":
                    delta += cs[idx] if val else -cs[idx]
                    f.birth[idx] = val
                    has_birth[idx] = bool(val)
                    touched.add(idx)
                else:
                    delta += ce[idx] if val else -ce[idx]
                    f.death[idx] = val
                    has_death[idx] = bool(val)
            path_nodes = sorted({idx for kind, idx, _ in elements if kind == "det"})
            self.info.steps.append(PathStep(path_nodes, best_total, delta))
            self.info.objective += delta

            status_changed = set(flipped)
            if self.caching:
                dirty1 = set(touched) | status_changed
                for idx in trans_flipped:
                    t = transitions[idx]
                    dirty1.add(t.src)
                    dirty1.add(t.dst)
                dirty3 = set(dirty1)
            else:
                dirty1 = set(range(n))
                dirty3 = set(range(n))
        else:
            raise SolverError("two-pass DP exceeded |V| iterations")
        return f

    @staticmethod
    def _on_prefix(i: int, m: int, p1: list[int], frame: list[int]) -> bool:
        """Whether inactive node ``i`` lies on the pass-1 path ending at ``m``."""
        fi = frame[i]
        while m >= 0 and frame[m] >= fi:
            if m == i:
                return True
            m = p1[m]
        return False

    @staticmethod
    def _backtrack(end, on, p1, e1, p3, e3, en_kind, out_on, transitions):
        """Residual path ending at ``end`` as (kind, index, new_value) triples, source first."""
        elems = [("death", end, 1)]
        state = "out" if on[end] else "f3"
        i = end
        while True:
            if state == "f3":
                elems.append(("det", i, 1))
                j = p3[i]
                if j < 0:
                    elems.append(("birth", i, 1))
                    break
                elems.append(("trans", e3[i], 1))
                state = "out" if on[j] else "f3"
                i = j
            elif state == "out":
                e = out_on[i]
                elems.append(("trans", e, 0))
                i = transitions[e].dst
                state = "en"
            elif state == "en":
                if en_kind[i] == 1:
                    elems.append(("det", i, 0))
                    state = "out"
                    continue
                j = p1[i]
                if j < 0:
                    elems.append(("birth", i, 1))
                    break
                elems.append(("trans", e1[i], 1))
                i = j
                state = "f1"
            else:  # f1: pass-1 path over inactive nodes
                elems.append(("det", i, 1))
                j = p1[i]
                if j < 0:
                    elems.append(("birth", i, 1))
                    break
                elems.append(("trans", e1[i], 1))
                i = j
        elems.reverse()
        return elems


def solve_dp1(g: TrackingGraph, caching: bool = False, info: SolveInfo | None = None) -> FlowSolution:
    solver = DP1Solver(caching)
    f = solver.solve(g)
    if info is not None:
        info.__dict__.update(solver.info.__dict__)
    return f


def solve_dp2(g: TrackingGraph, caching: bool = False, info: SolveInfo | None = None) -> FlowSolution:
    solver = DP2Solver(caching)
    f = solver.solve(g)
    if info is not None:
        info.__dict__.update(solver.info.__dict__)
    return f


def enable_caching(solver: _DPBase, on: bool = True) -> None:
    solver.enable_caching(on)


# --------------------------------------------------------------------------
# exhaustive oracle


def brute_force(g: TrackingGraph, info: SolveInfo | None = None) -> FlowSolution:
    """Exact minimizer of the quadratic objective by enumerating every feasible flow.

    Nodes are visited in index order; each is either off, starts a track, or
    continues a track ending at an earlier active node that has no successor yet.
    Ties go to the lexicographically smallest ``(det, trans, birth, death)`` vector.
    """
    n = g.n_nodes
    if n > BRUTE_FORCE_MAX_NODES:
        raise SolverError(f"brute_force is limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}")
    c, cs, ce, ct = g.c_det.tolist(), g.c_birth.tolist(), g.c_death.tolist(), g.c_trans.tolist()
    incoming = g.adj.incoming
    # pairwise terms charged when the later-indexed endpoint is switched on
    earlier_nbrs = [[(j, qv) for j, p in g.adj.neighbors[i] if j < i for qv in (float(g.q_pair[p]),)] for i in range(n)]

    # a node's death is settled once every possible successor has been visited
    settle = [max([j] + [k for k, _ in g.adj.outgoing[j]]) + 1 for j in range(n)]
    closes: list[list[int]] = [[] for _ in range(n + 1)]
    for j in range(n):
        closes[settle[j]].append(j)
    # optimistic bound on everything still undecided at index i: each later node at
    # its cheapest, plus every unsettled death that would lower the total
    node_lb = [
        min(0.0, c[k] + min([cs[k]] + [ct[e] for _, e in incoming[k]]) + sum(min(0.0, q) for _, q in earlier_nbrs[k]))
        for k in range(n)
    ]
    bound = [sum(node_lb[i:]) + sum(min(0.0, ce[j]) for j in range(n) if settle[j] > i) for i in range(n + 1)]

    det = [0] * n
    has_succ = [False] * n
    pred_edge = [-1] * n
    best: list = [math.inf, None]

    def key_of():
        f = _assemble(g, det, pred_edge, has_succ)
        return f, f.vector()

    def rec(i: int, acc: float) -> None:
        for j in closes[i]:
            if det[j] and not has_succ[j]:
                acc += ce[j]
        if i == n:
            total = acc
            if total < best[0]:
                f, vec = key_of()
                best[0], best[1] = total, (f, vec)
            elif total == best[0]:
                f, vec = key_of()
                if _lex_less(vec, best[1][1]):
                    best[1] = (f, vec)
            return
        if acc + bound[i] > best[0] + 1e-9 * (1.0 + abs(best[0])):
            return
        # option: off
        det[i] = 0
        rec(i + 1, acc)
        det[i] = 1
        base = acc + c[i] + sum(qv for j, qv in earlier_nbrs[i] if det[j])
        pred_edge[i] = -1
        rec(i + 1, base + cs[i])
        for j, e in incoming[i]:
            if det[j] and not has_succ[j]:
                has_succ[j] = True
                pred_edge[i] = e
                rec(i + 1, base + ct[e])
                has_succ[j] = False
        pred_edge[i] = -1
        det[i] = 0

    rec(0, 0.0)
    f = best[1][0]
    check_flow(g, f)
    if info is not None:
        info.objective = objective(g, f)
    return f


def _assemble(g, det, pred_edge, has_succ) -> FlowSolution:
    f = FlowSolution.empty(g)
    for i in range(g.n_nodes):
        if det[i]:
            f.det[i] = 1
            if pred_edge[i] >= 0:
                f.trans[pred_edge[i]] = 1
            else:
                f.birth[i] = 1
            if not has_succ[i]:
                f.death[i] = 1
    return f


def _lex_less(a: np.ndarray, b: np.ndarray) -> bool:
    diff = np.nonzero(a != b)[0]
    return bool(diff.size) and a[diff[0]] < b[diff[0]]


SOLVERS = {
    "ssp": solve_ssp,
    "dp1": solve_dp1,
    "dp2": solve_dp2,
    "oracle": brute_force,
    "brute_force": brute_force,
}


def solve(g: TrackingGraph, method: str = "dp2", caching: bool = False) -> FlowSolution:
    if method not in SOLVERS:
        raise ValueError(f"unknown solver {method!r}; choose from {sorted(SOLVERS)}")
    if method in ("dp1", "dp2"):
        return SOLVERS[method](g, caching=caching)
    return SOLVERS[method](g)
