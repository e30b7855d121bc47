import numpy as np
import pytest

from spectral_orbits.decisions import (
    decide_aue,
    decide_nilpotent_limit,
    decide_similarity,
    ii1_moment_obstruction,
)
from spectral_orbits.geometry import GridBox, GridSet, IsolatedPoint
from spectral_orbits.kdata import CALKIN, TYPE_III, KGroup, SpectralDatum, cuntz

from conftest import random_gridset, random_labels
from oracles import as_payload, calkin_similarity

Z = KGroup(1)
RING = frozenset(GridBox(i, j) for i in range(3) for j in range(3) if (i, j) != (1, 1))


def boxes(*cells):
    return frozenset(GridBox(*c) for c in cells)


def test_aue_identical_data():
    d = SpectralDatum(GridSet(1.0, boxes((0, 0), (1, 0))), cuntz(2))
    v = decide_aue(d, d)
    assert v.answer
    assert v.conditions == {"(a)": "PASS", "(b)": "SKIPPED (K1 trivial)", "(c)": "SKIPPED (all non-zero projections equivalent)"}


def test_aue_o3_projection_classes_differ():
    o3 = cuntz(3)
    g = GridSet(1.0, frozenset(), (IsolatedPoint(0j), IsolatedPoint(1 + 0j)))
    d1 = SpectralDatum(g, o3, {0: o3.k0.element([1]), 1: o3.k0.element([0])})
    d2 = SpectralDatum(g, o3, {0: o3.k0.element([0]), 1: o3.k0.element([1])})
    v = decide_aue(d1, d2)
    assert not v.answer
    assert v.conditions["(c)"] == "FAIL"
    assert {f.witness for f in v.failed_conditions} == {0, 1}


def test_aue_calkin_index_mismatch():
    d1 = SpectralDatum(GridSet(1.0, RING), CALKIN, {}, {0: Z.element([1])})
    d2 = SpectralDatum(GridSet(1.0, RING), CALKIN, {}, {0: Z.element([0])})
    v = decide_aue(d1, d2)
    assert v.conditions["(b)"] == "FAIL"
    assert decide_aue(d1, d1).answer


def test_aue_different_spectra():
    d1 = SpectralDatum(GridSet(1.0, boxes((0, 0))), cuntz(2))
    d2 = SpectralDatum(GridSet(1.0, boxes((1, 0))), cuntz(2))
    assert decide_aue(d1, d2).conditions["(a)"] == "FAIL"


def test_profile_and_resolution_mismatch():
    d1 = SpectralDatum(GridSet(1.0, boxes((0, 0))), cuntz(2))
    with pytest.raises(ValueError, match="profile mismatch"):
        decide_aue(d1, SpectralDatum(GridSet(1.0, boxes((0, 0))), TYPE_III))
    with pytest.raises(ValueError, match="resolution mismatch"):
        decide_similarity(d1, SpectralDatum(GridSet(0.5, boxes((0, 0))), cuntz(2)))


def test_similarity_disjoint_target_component():
    src = SpectralDatum(GridSet(1.0, boxes((0, 0), (1, 0))), cuntz(2))
    tgt = SpectralDatum(GridSet(1.0, boxes((0, 0), (1, 0), (5, 5))), cuntz(2))
    v = decide_similarity(src, tgt)
    assert not v.answer
    assert v.conditions["(2)"] == "FAIL"
    assert v.conditions["(1)"] == "PASS"
    # the other direction fails inclusion
    assert decide_similarity(tgt, src).conditions["(1)"] == "FAIL"


def test_similarity_point_into_disk():
    # a normal with spectrum one point inside the disk cannot approximate the
    # disk (condition (4)); a disk can be shrunk onto a region containing it
    disk = boxes(*[(i, j) for i in range(-1, 2) for j in range(-1, 2)])
    src = SpectralDatum(GridSet(1.0, frozenset(), (IsolatedPoint(0j),)), cuntz(2))
    tgt = SpectralDatum(GridSet(1.0, disk), cuntz(2))
    v = decide_similarity(src, tgt)
    assert v.conditions["(4)"] == "FAIL" and v.conditions["(1)"] == "PASS"
    src_cluster = SpectralDatum(GridSet(1.0, frozenset(), (IsolatedPoint(0j, True),)), cuntz(2))
    assert decide_similarity(src_cluster, tgt).answer


def test_similarity_index_condition():
    full = boxes(*[(i, j) for i in range(3) for j in range(3)])
    src = SpectralDatum(GridSet(1.0, RING), CALKIN, {}, {0: Z.element([1])})
    tgt = SpectralDatum(GridSet(1.0, full), CALKIN)
    # filling the hole erases the index
    assert decide_similarity(src, tgt).answer
    assert decide_similarity(tgt, src).conditions["(3)"] == "FAIL"


def test_similarity_projection_condition_o3():
    o3 = cuntz(3)
    src = SpectralDatum(GridSet(1.0, boxes((0, 0), (5, 0))), o3, {0: o3.k0.element([1]), 1: o3.k0.element([0])})
    tgt = SpectralDatum(GridSet(1.0, boxes((0, 0), (5, 0))), o3, {0: o3.k0.element([0]), 1: o3.k0.element([1])})
    assert decide_similarity(src, tgt).conditions["(5)"] == "FAIL"
    merged = SpectralDatum(GridSet(1.0, boxes(*[(i, 0) for i in range(6)])), o3, {0: o3.k0.element([1])})
    assert decide_similarity(src, merged).answer


def test_nilpotent():
    disk = boxes(*[(i, j) for i in range(-1, 2) for j in range(-1, 2)])
    assert decide_nilpotent_limit(SpectralDatum(GridSet(0.5, disk), cuntz(2))).answer
    off = SpectralDatum(GridSet(1.0, boxes((3, 0))), cuntz(2))
    assert decide_nilpotent_limit(off).conditions["(1)"] == "FAIL"
    ring = SpectralDatum(GridSet(1.0, RING | boxes((1, 3))), CALKIN, {}, {0: Z.element([2])})
    v = decide_nilpotent_limit(ring)
    assert v.conditions["(3)"] == "FAIL"
    with pytest.raises(ValueError, match="not covered"):
        decide_nilpotent_limit(SpectralDatum(GridSet(1.0, boxes((0, 0))), cuntz(2).__class__("plain", KGroup(), KGroup().zero(), KGroup(), False, False, False)))


def test_ii1_moment_obstruction():
    mu1 = [(i / 63, 1 / 64) for i in range(64)]
    mu2 = [(i / 126, 1 / 64) for i in range(64)]
    v = ii1_moment_obstruction(mu1, mu2, 2)
    assert not v.answer
    first = v.failed_conditions[0]
    assert first.condition == "moment 1"
    # mean of a uniform lattice on [0, b] is b/2
    assert first.witness["delta"] == pytest.approx(0.5 - 0.25, abs=1e-12)
    assert ii1_moment_obstruction(mu1, list(reversed(mu1)), 4).answer
    with pytest.raises(ValueError):
        ii1_moment_obstruction([(0, 0.5)], mu1, 1)


def test_calkin_against_independent_checker(rng):
    for _ in range(150):
        g1 = random_gridset(rng, 1.0, max_boxes=8, span=2)
        g2 = g1 if rng.random() < 0.3 else random_gridset(rng, 1.0, max_boxes=8, span=2)
        if rng.random() < 0.3:
            g2 = g1.union(g2)
        d1, d2 = random_labels(rng, g1, CALKIN), random_labels(rng, g2, CALKIN)
        assert decide_similarity(d1, d2).answer == calkin_similarity(as_payload(d1), as_payload(d2), 1.0)
