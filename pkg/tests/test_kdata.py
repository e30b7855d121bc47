import pytest

from spectral_orbits.geometry import GridBox, GridSet, IsolatedPoint
from spectral_orbits.kdata import (
    CALKIN,
    TYPE_III,
    KGroup,
    SpectralDatum,
    builtin_profile,
    clopen_class,
    cuntz,
    k_add,
    k_eq,
    k_sum,
    validate_datum,
)


def test_torsion_reduction():
    g = KGroup(1, (3,))
    a = g.element([2, 2])
    b = g.element([-1, 2])
    assert (a + b).coords == (1, 1)
    assert (-b).coords == (1, 1)
    assert g.element([0, 3]).is_zero
    assert k_eq(g.element([5, 7]), g.element([5, 1]))
    assert str(g) == "Z + Z_3"


def test_group_mismatch_raises():
    with pytest.raises(ValueError, match="group mismatch"):
        k_add(KGroup(1).element([1]), KGroup(0, (2,)).element([1]))
    with pytest.raises(ValueError):
        KGroup(0, (1,))
    with pytest.raises(ValueError):
        KGroup(1).element([1, 2])


def test_k_sum_in_z2():
    g = cuntz(3).k0
    assert k_sum(g, [g.element([1])] * 3).coords == (1,)


def test_builtin_profiles():
    assert builtin_profile("O2").k0.is_trivial
    o5 = builtin_profile("O5")
    assert o5.k0.torsion_orders == (4,) and o5.unit_class.coords == (1,)
    assert builtin_profile("Oinf").k0.free_rank == 1
    assert CALKIN.k1.free_rank == 1 and CALKIN.all_nonzero_projections_equivalent
    assert not TYPE_III.purely_infinite_simple
    with pytest.raises(ValueError):
        builtin_profile("O1")
    with pytest.raises(ValueError):
        builtin_profile("B(H)")


def two_points(profile, a, b):
    g = GridSet(1.0, frozenset(), (IsolatedPoint(0j), IsolatedPoint(1 + 0j)))
    return SpectralDatum(g, profile, {0: profile.k0.element([a]), 1: profile.k0.element([b])})


def test_unit_class_sum_enforced():
    o3 = cuntz(3)
    assert validate_datum(two_points(o3, 1, 0)) == []
    assert validate_datum(two_points(o3, 2, 1)) == []  # 2 + 1 = 1 in Z_2
    msgs = validate_datum(two_points(o3, 1, 1))
    assert msgs == ["component labels must sum to the unit class (1)"]


def test_missing_labels_default_only_for_trivial_groups():
    ring = frozenset(GridBox(i, j) for i in range(3) for j in range(3) if (i, j) != (1, 1))
    d = SpectralDatum(GridSet(1.0, ring), cuntz(2))
    assert validate_datum(d) == []
    assert d.hole_k1[0].is_zero
    d = SpectralDatum(GridSet(1.0, ring), CALKIN)
    assert validate_datum(d) == ["hole 0 has no K1 label"]


def test_nonzero_hole_label_under_trivial_k1():
    ring = frozenset(GridBox(i, j) for i in range(3) for j in range(3) if (i, j) != (1, 1))
    d = SpectralDatum(GridSet(1.0, ring), cuntz(2), {}, {0: KGroup(1).element([3])})
    assert validate_datum(d) == ["hole label must be 0 (hole 0)"]


def test_clopen_class():
    d = two_points(cuntz(4), 2, 2)  # 2 + 2 = 1 in Z_3
    assert clopen_class(d, [0, 1]).coords == (1,)
    assert clopen_class(d, [1]).coords == (2,)
    with pytest.raises(KeyError):
        clopen_class(d, [7])
