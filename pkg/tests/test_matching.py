import itertools
import math

import pytest

from spectral_orbits.geometry import GridBox, GridSet, point_hausdorff
from spectral_orbits.kdata import SpectralDatum, cuntz
from spectral_orbits.matching import (
    PairingPlan,
    ScheduleError,
    Step,
    bipartite_schedule,
    partitioned_schedule,
    plan_validate,
    tree_schedule,
)

from conftest import connected_boxes

O2 = cuntz(2)
SQRT2 = math.sqrt(2)


def grid(cells, eps=1.0):
    return GridSet(eps, frozenset(GridBox(*c) for c in cells))


def datum(cells, eps=1.0, profile=O2, labels=None):
    return SpectralDatum(grid(cells, eps), profile, labels or {})


def test_tree_single_box():
    p = tree_schedule(grid([(0, 0)]))
    assert p.steps == [] and p.cost == 0.0
    assert plan_validate(p) == []


def test_tree_two_boxes():
    p = tree_schedule(grid([(0, 0), (1, 0)]))
    assert plan_validate(p) == []
    assert p.cost == 1.0
    kinds = [s.kind for s in p.steps]
    assert kinds == ["split", "match", "split", "match"]


def test_tree_l_shape():
    p = tree_schedule(grid([(0, 0), (1, 0), (1, 1)], eps=0.5))
    assert plan_validate(p) == []
    assert p.cost <= SQRT2 * 0.5


def test_tree_rejects_disconnected():
    with pytest.raises(ScheduleError):
        tree_schedule(grid([(0, 0), (3, 0)]))


def test_tree_random_regions(rng):
    for _ in range(30):
        eps = (1.0, 0.5, 0.25)[int(rng.integers(3))]
        cells = connected_boxes(rng, int(rng.integers(1, 60)))
        p = tree_schedule(grid(cells, eps))
        assert plan_validate(p) == []
        assert p.cost <= SQRT2 * eps
        # doubled tree has 2V vertices; elimination leaves the final pair
        assert len(p.steps) == 2 * (2 * len(cells) - 2)


def _brute_force_minmax(a1, a2):
    """Smallest achievable max |x - y| over perfect pairings of a 1:1 balanced split."""
    # with one fragment per atom and any number of splits, the best plan is a
    # connected bipartite spanning structure; for tiny inputs the bottleneck
    # over spanning trees equals the bottleneck spanning tree of the cross graph
    pts = [(1, v) for v in a1] + [(2, v) for v in a2]
    edges = sorted((abs(x - y), i, j) for (i, (s, x)), (j, (t, y)) in itertools.combinations(enumerate(pts), 2) if s != t)
    parent = list(range(len(pts)))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    worst, joined = 0.0, 1
    for w, i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            worst, joined = w, joined + 1
            if joined == len(pts):
                break
    return worst


def test_bipartite_examples():
    d = datum([(0, 0)])
    p = bipartite_schedule(d, d)
    assert p.steps == [] and p.cost == 0.0
    d1, d2 = datum([(0, 0), (1, 0)]), datum([(1, 0)])
    p = bipartite_schedule(d1, d2)
    assert plan_validate(p) == []
    assert p.cost == 1.0 == _brute_force_minmax([0, 1], [1])
    assert p.bound == pytest.approx(2 * SQRT2 + 1)


def test_bipartite_diagonal_touch():
    p = bipartite_schedule(datum([(0, 0)]), datum([(1, 1)]))
    assert plan_validate(p) == []
    assert p.cost == pytest.approx(SQRT2)


def test_bipartite_disconnected_union():
    with pytest.raises(ScheduleError, match="union of spectra is not connected"):
        bipartite_schedule(datum([(0, 0)]), datum([(2, 0)]))


def test_bipartite_random(rng):
    for _ in range(40):
        eps = (1.0, 0.5, 0.25)[int(rng.integers(3))]
        union = sorted(connected_boxes(rng, int(rng.integers(2, 50))))
        k = int(rng.integers(1, len(union)))
        pick = set(map(tuple, rng.permutation(union)[:k]))
        rest = set(union) - pick
        both = set(map(tuple, rng.permutation(union)[: int(rng.integers(0, len(union)))]))
        d1, d2 = datum(pick | both, eps), datum(rest | both, eps)
        p = bipartite_schedule(d1, d2)
        assert plan_validate(p) == []
        dh = point_hausdorff(d1.spectrum.atoms(), d2.spectrum.atoms())
        assert dh <= p.cost <= 2 * SQRT2 * eps + dh
        n = len(p.atoms1) + len(p.atoms2)
        assert len(p.steps) == 2 * (n - 2)


def test_determinism():
    d1, d2 = datum([(0, 0), (1, 0), (2, 1)]), datum([(1, 0), (2, 2)])
    assert bipartite_schedule(d1, d2).to_dict() == bipartite_schedule(d1, d2).to_dict()


def test_partitioned():
    d1 = datum([(0, 0), (1, 0), (10, 10)])
    d2 = datum([(1, 0), (10, 10), (11, 10)])
    whole = partitioned_schedule(datum([(0, 0), (1, 0)]), datum([(1, 0)]), [([0], [0])])
    assert whole.to_dict() == bipartite_schedule(datum([(0, 0), (1, 0)]), datum([(1, 0)])).to_dict()
    p = partitioned_schedule(d1, d2, [([0], [0]), ([1], [1])])
    assert plan_validate(p) == []
    a = bipartite_schedule(datum([(0, 0), (1, 0)]), datum([(1, 0)])).cost
    b = bipartite_schedule(datum([(10, 10)]), datum([(10, 10), (11, 10)])).cost
    assert p.cost == max(a, b)
    with pytest.raises(ScheduleError, match="partition"):
        partitioned_schedule(d1, d2, [([0], [0])])


def test_partitioned_class_mismatch():
    o3 = cuntz(3)
    e = o3.k0.element
    d1 = datum([(0, 0), (10, 0)], profile=o3, labels={0: e([1]), 1: e([0])})
    d2 = datum([(0, 0), (10, 0)], profile=o3, labels={0: e([0]), 1: e([1])})
    with pytest.raises(ScheduleError, match="block 0"):
        partitioned_schedule(d1, d2, [([0], [0]), ([1], [1])])


def test_validate_detects_defects():
    p = PairingPlan([(0j, 0), (1 + 0j, 1)], [(0j, 2), (1.5 + 0j, 3)], [Step("match", 1, 2)], (0, 2), 1.0)
    msgs = plan_validate(p)
    assert "atom 3 unconsumed" in msgs
    assert "fragment 2 consumed 2 times" in msgs
    good = PairingPlan([(0j, 0), (1 + 0j, 1)], [(0j, 2), (2.5 + 0j, 3)], [Step("match", 1, 3)], (0, 2), 1.0)
    assert plan_validate(good) == ["cost mismatch: stored 1.0, computed 1.5"]


def test_plan_round_trip():
    p = bipartite_schedule(datum([(0, 0), (1, 0)]), datum([(1, 0), (1, 1)]))
    q = PairingPlan.from_dict(p.to_dict())
    assert q.to_dict() == p.to_dict()
    assert plan_validate(q) == []
