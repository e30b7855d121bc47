"""Back-and-forth pairing schedules between two finite spectra.

A plan works on *fragments*: every atom (an eigenvalue on side 1 or side 2)
starts as one fragment; a ``split`` consumes a fragment and produces two fresh
ones on the same side with the same eigenvalue; a ``match`` consumes one
fragment from each side. The residual pair is the final match, whose
equivalence follows from the K-theory balance rather than an explicit split.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .distances import label_mismatch_boxes
from .geometry import GridBox, GridSet, connected_components, point_hausdorff
from .kdata import SpectralDatum, clopen_class, k_eq

SQRT2 = math.sqrt(2.0)


class ScheduleError(ValueError):
    """A hypothesis of the matching construction does not hold."""


@dataclass(frozen=True)
class Step:
    kind: str  # "split" or "match"
    source: int
    target: int | None = None
    children: tuple = ()

    def to_dict(self) -> dict:
        if self.kind == "split":
            return {"kind": "split", "source": self.source, "children": list(self.children)}
        return {"kind": "match", "source": self.source, "target": self.target}


@dataclass
class PairingPlan:
    atoms1: list  # [(eigenvalue, atom id)]
    atoms2: list
    steps: list = field(default_factory=list)
    residual_pair: tuple | None = None
    cost: float = 0.0
    bound: float | None = None  # certified cost bound of the construction

    def to_dict(self) -> dict:
        def atoms(a):
            return [{"id": i, "value": [v.real, v.imag]} for v, i in a]

        return {
            "atoms1": atoms(self.atoms1),
            "atoms2": atoms(self.atoms2),
            "steps": [s.to_dict() for s in self.steps],
            "residual_pair": list(self.residual_pair) if self.residual_pair else None,
            "cost": self.cost,
            "bound": self.bound,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PairingPlan":
        def atoms(a):
            return [(complex(x["value"][0], x["value"][1]), int(x["id"])) for x in a]

        steps = []
        for s in doc["steps"]:
            if s["kind"] == "split":
                steps.append(Step("split", int(s["source"]), None, tuple(int(c) for c in s["children"])))
            elif s["kind"] == "match":
                steps.append(Step("match", int(s["source"]), int(s["target"])))
            else:
                raise ValueError(f"unknown step kind {s['kind']!r}")
        rp = doc.get("residual_pair")
        return cls(
            atoms(doc["atoms1"]),
            atoms(doc["atoms2"]),
            steps,
            tuple(int(x) for x in rp) if rp else None,
            float(doc["cost"]),
            doc.get("bound"),
        )

    def fragments(self) -> dict[int, tuple[int, complex]]:
        """Fragment id -> (side, eigenvalue), following splits."""
        frag = {i: (1, v) for v, i in self.atoms1}
        frag.update({i: (2, v) for v, i in self.atoms2})
        for s in self.steps:
            if s.kind == "split" and s.source in frag:
                for c in s.children:
                    frag.setdefault(c, frag[s.source])
        return frag

    def pairs(self) -> list[tuple[int, int]]:
        """Matched (side-1 fragment, side-2 fragment) pairs, residual included."""
        frag = self.fragments()
        out = []
        for s in self.steps:
            if s.kind == "match":
                a, b = s.source, s.target
                out.append((a, b) if frag[a][0] == 1 else (b, a))
        if self.residual_pair:
            a, b = self.residual_pair
            out.append((a, b) if frag[a][0] == 1 else (b, a))
        return out


def plan_validate(p: PairingPlan) -> list[str]:
    """Every violated plan invariant, as messages; empty means valid."""
    out: list[str] = []
    frag: dict[int, tuple[int, complex]] = {}
    for side, atoms in ((1, p.atoms1), (2, p.atoms2)):
        for v, i in atoms:
            if i in frag:
                out.append(f"duplicate atom id {i}")
            frag[i] = (side, v)
    uses: dict[int, int] = {i: 0 for i in frag}
    costs = []
    for k, s in enumerate(p.steps):
        if s.source not in frag:
            out.append(f"step {k}: unknown fragment {s.source}")
            continue
        uses[s.source] += 1
        if s.kind == "split":
            if len(s.children) != 2 or s.children[0] == s.children[1]:
                out.append(f"step {k}: split must create two distinct children")
            for c in s.children:
                if c in frag:
                    out.append(f"step {k}: split child {c} is not fresh")
                else:
                    frag[c] = frag[s.source]
                    uses[c] = 0
        elif s.kind == "match":
            if s.target not in frag:
                out.append(f"step {k}: unknown fragment {s.target}")
                continue
            uses[s.target] += 1
            if frag[s.source][0] == frag[s.target][0]:
                out.append(f"step {k}: match joins two side-{frag[s.source][0]} fragments")
            costs.append(abs(frag[s.source][1] - frag[s.target][1]))
        else:
            out.append(f"step {k}: unknown kind {s.kind!r}")
    if p.residual_pair is None:
        out.append("missing residual pair")
    else:
        a, b = p.residual_pair
        if a not in frag or b not in frag:
            out.append("residual pair names an unknown fragment")
        else:
            uses[a] += 1
            uses[b] += 1
            if frag[a][0] == frag[b][0]:
                out.append("residual pair lies on one side")
            costs.append(abs(frag[a][1] - frag[b][1]))
    atom_ids = {a for _, a in p.atoms1 + p.atoms2}
    for i in sorted(uses):
        if uses[i] == 0:
            kind = "atom" if i in atom_ids else "fragment"
            out.append(f"{kind} {i} unconsumed")
        elif uses[i] > 1:
            out.append(f"fragment {i} consumed {uses[i]} times")
    computed = max(costs) if costs else 0.0
    if computed != p.cost:
        out.append(f"cost mismatch: stored {p.cost}, computed {computed}")
    return out


def _eliminate(values: list[complex], sides: list[int], parent: list[int | None], order: list[int]) -> PairingPlan:
    """Leaf elimination along a spanning tree of a bipartite graph.

    ``order`` lists vertices so that each one's ``parent`` comes earlier (a
    BFS order from the root); eliminating in reverse always removes a leaf of
    the remaining tree, hence a non-cut vertex of the remaining graph.
    """
    n = len(values)
    atoms1 = [(values[v], v) for v in range(n) if sides[v] == 1]
    atoms2 = [(values[v], v) for v in range(n) if sides[v] == 2]
    live = list(range(n))  # current fragment of each vertex
    fresh = n
    steps: list[Step] = []
    costs = []
    for v in reversed(order[2:]):
        u = parent[v]
        q, r = fresh, fresh + 1
        fresh += 2
        steps.append(Step("split", live[u], None, (q, r)))
        steps.append(Step("match", live[v], q))
        costs.append(abs(values[v] - values[u]))
        live[u] = r
    if n == 1:
        raise ScheduleError("a plan needs at least one atom per side")
    a, b = order[0], order[1]
    residual = (live[a], live[b]) if sides[a] == 1 else (live[b], live[a])
    costs.append(abs(values[a] - values[b]))
    return PairingPlan(atoms1, atoms2, steps, residual, max(costs))


def _bfs(adj: list[list[int]], root: int) -> tuple[list[int], list[int | None]]:
    parent: list[int | None] = [None] * len(adj)
    seen = [False] * len(adj)
    seen[root] = True
    order = [root]
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                parent[w] = u
                order.append(w)
                queue.append(w)
    return order, parent


def tree_schedule(spectrum: GridSet) -> PairingPlan:
    """Plan for two operators sharing one connected spectrum, cost at most sqrt(2)*eps."""
    comps = connected_components(spectrum)
    if len(comps) != 1 or comps[0].kind != "region":
        raise ScheduleError("tree schedule needs a single connected region")
    eps = spectrum.resolution
    boxes = spectrum.sorted_boxes()
    index = {b: i for i, b in enumerate(boxes)}
    k = len(boxes)
    nbrs = []
    for b in boxes:
        near = [GridBox(b.n + i, b.m + j) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)]
        nbrs.append(sorted(index[q] for q in near if q in index))
    torder, tparent = _bfs(nbrs, 0)
    # doubled tree: side-1 copy v hangs under its side-2 twin, which hangs under
    # the side-1 copy of the tree parent
    values = [b.center(eps) for b in boxes] * 2
    sides = [1] * k + [2] * k
    parent: list[int | None] = [None] * (2 * k)
    order = [0, k]
    parent[k] = 0
    for v in torder[1:]:
        parent[k + v] = tparent[v]
        parent[v] = k + v
        order += [k + v, v]
    plan = _eliminate(values, sides, parent, order)
    plan.bound = SQRT2 * eps
    return plan


def _bipartite_from_atoms(a1: Sequence[complex], a2: Sequence[complex], eps: float) -> PairingPlan:
    """Bipartite elimination with edge threshold ``2*sqrt(2)*eps + d_H``."""
    dh = point_hausdorff(a1, a2)
    threshold = 2 * SQRT2 * eps + dh
    values = list(a1) + list(a2)
    n1 = len(a1)
    sides = [1] * n1 + [2] * len(a2)
    arr = np.array(values, dtype=complex)
    dist = np.abs(arr[:n1, None] - arr[None, n1:])
    adj: list[list[int]] = [[] for _ in values]
    for i in range(n1):
        near = np.flatnonzero(dist[i] <= threshold)
        adj[i] = [n1 + int(j) for j in near[np.argsort(dist[i, near], kind="stable")]]
    for j in range(len(values) - n1):
        near = np.flatnonzero(dist[:, j] <= threshold)
        adj[n1 + j] = [int(i) for i in near[np.argsort(dist[near, j], kind="stable")]]
    order, parent = _bfs(adj, 0)
    if len(order) != len(values):
        raise ScheduleError("union of spectra is not connected: matching graph is disconnected")
    plan = _eliminate(values, sides, parent, order)
    plan.bound = threshold
    return plan


def _union_connected(g1: GridSet, g2: GridSet) -> bool:
    return len(connected_components(g1.union(g2))) == 1


def bipartite_schedule(d1: SpectralDatum, d2: SpectralDatum) -> PairingPlan:
    """Plan whose cost is at most ``2*sqrt(2)*eps + d_H`` of the atom sets."""
    if d1.resolution != d2.resolution:
        raise ValueError(f"resolution mismatch: {d1.resolution} vs {d2.resolution}")
    if not _union_connected(d1.spectrum, d2.spectrum):
        raise ScheduleError("union of spectra is not connected")
    if not (d1.gamma_trivial and d2.gamma_trivial) and label_mismatch_boxes(d1, d2):
        raise ScheduleError("index labels differ between the two spectra")
    return _bipartite_from_atoms(d1.spectrum.atoms(), d2.spectrum.atoms(), d1.resolution)


def _sub_gridset(d: SpectralDatum, ids: Iterable[int]) -> GridSet:
    comps = {c.id: c for c in d.components}
    boxes = set()
    pts = []
    for i in ids:
        if i not in comps:
            raise KeyError(f"unknown component id {i}")
        c = comps[i]
        if c.kind == "region":
            boxes |= c.boxes
        else:
            pts.append(c.point)
    return GridSet(d.resolution, frozenset(boxes), tuple(pts))


def partitioned_schedule(d1: SpectralDatum, d2: SpectralDatum, blocks) -> PairingPlan:
    """Run the bipartite construction block by block and concatenate."""
    if d1.resolution != d2.resolution:
        raise ValueError(f"resolution mismatch: {d1.resolution} vs {d2.resolution}")
    if not (d1.gamma_trivial and d2.gamma_trivial) and label_mismatch_boxes(d1, d2):
        raise ScheduleError("index labels differ between the two spectra")
    blocks = [(sorted(set(b1)), sorted(set(b2))) for b1, b2 in blocks]
    for side, d in ((0, d1), (1, d2)):
        used = [i for blk in blocks for i in blk[side]]
        if sorted(used) != sorted(c.id for c in d.components):
            raise ScheduleError(f"blocks do not partition the components of side {side + 1}")
    eps = d1.resolution
    parts = []
    for k, (b1, b2) in enumerate(blocks):
        if not b1 or not b2:
            raise ScheduleError(f"block {k} is empty on one side")
        if not d1.profile.k0.is_trivial and not k_eq(clopen_class(d1, b1), clopen_class(d2, b2)):
            raise ScheduleError(f"block {k}: K0 classes differ ({clopen_class(d1, b1)} vs {clopen_class(d2, b2)})")
        g1, g2 = _sub_gridset(d1, b1), _sub_gridset(d2, b2)
        if not _union_connected(g1, g2):
            raise ScheduleError(f"block {k}: union of spectra is not connected")
        parts.append((g1, g2))
    # blocks must sit at positive distance from one another
    union = d1.spectrum.union(d2.spectrum)
    for comp in connected_components(union):
        pg = comp.as_gridset(eps)
        ks = {k for k, (g1, g2) in enumerate(parts) if _touches(pg, g1) or _touches(pg, g2)}
        if len(ks) > 1:
            raise ScheduleError(f"blocks {sorted(ks)} are not at positive distance")
    merged = PairingPlan([], [], [], None, 0.0, 0.0)
    offset = 0
    for g1, g2 in parts:
        sub = _bipartite_from_atoms(g1.atoms(), g2.atoms(), eps)
        shift = lambda i: i + offset  # noqa: E731
        merged.atoms1 += [(v, shift(i)) for v, i in sub.atoms1]
        merged.atoms2 += [(v, shift(i)) for v, i in sub.atoms2]
        for s in sub.steps:
            merged.steps.append(Step(s.kind, shift(s.source), None if s.target is None else shift(s.target), tuple(shift(c) for c in s.children)))
        if merged.residual_pair is not None:
            merged.steps.append(Step("match", *merged.residual_pair))
        merged.residual_pair = (shift(sub.residual_pair[0]), shift(sub.residual_pair[1]))
        merged.cost = max(merged.cost, sub.cost)
        merged.bound = max(merged.bound, sub.bound)
        offset += len(sub.fragments())
    return merged


def _touches(piece: GridSet, g: GridSet) -> bool:
    if piece.boxes & g.boxes:
        return True
    return any(piece.contains_point(p.value) for p in g.isolated_points) or any(
        g.contains_point(p.value) for p in piece.isolated_points
    )
