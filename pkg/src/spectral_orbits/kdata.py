"""Finitely generated abelian groups, algebra profiles and labelled spectra."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .geometry import ComplementComponents, Component, GridSet, complement_components, connected_components


@dataclass(frozen=True)
class KGroup:
    """``Z^free_rank + Z_{t1} + ... + Z_{tk}``."""

    free_rank: int = 0
    torsion_orders: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "torsion_orders", tuple(int(t) for t in self.torsion_orders))
        if self.free_rank < 0:
            raise ValueError("free_rank must be non-negative")
        if any(t < 2 for t in self.torsion_orders):
            raise ValueError("torsion orders must be >= 2")

    @property
    def length(self) -> int:
        return self.free_rank + len(self.torsion_orders)

    @property
    def is_trivial(self) -> bool:
        return self.length == 0

    def element(self, coords: Iterable[int] = ()) -> "KElement":
        coords = tuple(int(c) for c in coords)
        if not coords:
            coords = (0,) * self.length
        if len(coords) != self.length:
            raise ValueError(f"expected {self.length} coordinates for {self}, got {len(coords)}")
        return KElement(self, coords)

    def zero(self) -> "KElement":
        return KElement(self, (0,) * self.length)

    def __str__(self) -> str:
        parts = ["Z"] * self.free_rank + [f"Z_{t}" for t in self.torsion_orders]
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class KElement:
    group: KGroup
    coords: tuple

    def __post_init__(self) -> None:
        if len(self.coords) != self.group.length:
            raise ValueError("coordinate count does not match the group")
        r = self.group.free_rank
        reduced = tuple(int(c) for c in self.coords[:r]) + tuple(
            int(c) % t for c, t in zip(self.coords[r:], self.group.torsion_orders)
        )
        object.__setattr__(self, "coords", reduced)

    @property
    def is_zero(self) -> bool:
        return not any(self.coords)

    def __add__(self, other: "KElement") -> "KElement":
        return k_add(self, other)

    def __neg__(self) -> "KElement":
        return KElement(self.group, tuple(-c for c in self.coords))

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.coords) + ")"


def k_add(a: KElement, b: KElement) -> KElement:
    if a.group != b.group:
        raise ValueError(f"group mismatch: {a.group} vs {b.group}")
    return KElement(a.group, tuple(x + y for x, y in zip(a.coords, b.coords)))


def k_eq(a: KElement, b: KElement) -> bool:
    if a.group != b.group:
        raise ValueError(f"group mismatch: {a.group} vs {b.group}")
    return a.coords == b.coords


def k_sum(group: KGroup, elements: Iterable[KElement]) -> KElement:
    total = group.zero()
    for e in elements:
        total = k_add(total, e)
    return total


TRIVIAL = KGroup()


@dataclass(frozen=True)
class AlgebraProfile:
    name: str
    k0: KGroup
    unit_class: KElement
    k1: KGroup
    purely_infinite_simple: bool = True
    all_nonzero_projections_equivalent: bool = False
    weak_FN: bool = False

    def __post_init__(self) -> None:
        if self.unit_class.group != self.k0:
            raise ValueError("unit_class must live in k0")


def cuntz(n: int) -> AlgebraProfile:
    """Cuntz algebra O_n; ``n = 0`` stands for O_infinity."""
    if n == 2:
        return AlgebraProfile("O2", TRIVIAL, TRIVIAL.zero(), TRIVIAL, True, True, True)
    if n == 0:
        k0 = KGroup(1)
        return AlgebraProfile("Oinf", k0, k0.element([1]), TRIVIAL, True, False, True)
    if n < 2:
        raise ValueError("O_n needs n >= 2")
    k0 = KGroup(0, (n - 1,))
    return AlgebraProfile(f"O{n}", k0, k0.element([1]), TRIVIAL, True, False, True)


CALKIN = AlgebraProfile("Calkin", TRIVIAL, TRIVIAL.zero(), KGroup(1), True, True, True)
TYPE_III = AlgebraProfile("TypeIII", TRIVIAL, TRIVIAL.zero(), TRIVIAL, False, True, True)


def builtin_profile(name: str) -> AlgebraProfile:
    """Look up ``O2``, ``O3`` ... ``On``, ``Oinf``, ``Calkin`` or ``TypeIII``."""
    if name == "Calkin":
        return CALKIN
    if name == "TypeIII":
        return TYPE_III
    if name == "Oinf":
        return cuntz(0)
    if name.startswith("O") and name[1:].isdigit() and int(name[1:]) >= 2:
        return cuntz(int(name[1:]))
    raise ValueError(f"unknown profile {name!r}")


BUILTIN_NAMES = ("O2", "O3", "O4", "O5", "Oinf", "Calkin", "TypeIII")


@dataclass(frozen=True)
class SpectralDatum:
    """A grid spectrum with K0 labels on its components and K1 labels on its holes.

    Missing labels default to zero when the corresponding group is trivial.
    """

    spectrum: GridSet
    profile: AlgebraProfile
    component_k0: Mapping = field(default_factory=dict)
    hole_k1: Mapping = field(default_factory=dict)

    def __post_init__(self) -> None:
        ck = dict(self.component_k0)
        hk = dict(self.hole_k1)
        if self.profile.k0.is_trivial:
            for c in self.components:
                ck.setdefault(c.id, self.profile.k0.zero())
        if self.profile.k1.is_trivial:
            for h in self.complement.holes:
                hk.setdefault(h.id, self.profile.k1.zero())
        object.__setattr__(self, "component_k0", ck)
        object.__setattr__(self, "hole_k1", hk)

    @property
    def resolution(self) -> float:
        return self.spectrum.resolution

    @cached_property
    def components(self) -> list[Component]:
        return connected_components(self.spectrum)

    @cached_property
    def complement(self) -> ComplementComponents:
        return complement_components(self.spectrum)

    def complement_in(self, frame: tuple) -> ComplementComponents:
        return complement_components(self.spectrum, frame=frame)

    def hole_label(self, hole_id: int | None):
        """K1 label of a hole; the unbounded component carries zero."""
        if hole_id is None:
            return self.profile.k1.zero()
        return self.hole_k1[hole_id]

    @property
    def gamma_trivial(self) -> bool:
        return all(v.is_zero for v in self.hole_k1.values())


def clopen_class(d: SpectralDatum, component_ids: Iterable[int]) -> KElement:
    """K0 class of the spectral projection onto the selected components."""
    ids = set(component_ids)
    known = {c.id for c in d.components}
    unknown = ids - known
    if unknown:
        raise KeyError(f"unknown component id(s) {sorted(unknown)}")
    return k_sum(d.profile.k0, (d.component_k0[i] for i in sorted(ids)))


def validate_datum(d: SpectralDatum) -> list[str]:
    """All invariant violations of ``d``; empty when the datum is consistent."""
    out: list[str] = []
    prof = d.profile
    comp_ids = [c.id for c in d.components]
    hole_ids = [h.id for h in d.complement.holes]
    for cid in comp_ids:
        lab = d.component_k0.get(cid)
        if lab is None:
            out.append(f"component {cid} has no K0 label")
        elif lab.group != prof.k0:
            out.append(f"component {cid} label is not in K0 = {prof.k0}")
    for cid in sorted(set(d.component_k0) - set(comp_ids)):
        out.append(f"label for unknown component {cid}")
    labels = [d.component_k0[c] for c in comp_ids if c in d.component_k0 and d.component_k0[c].group == prof.k0]
    if len(labels) == len(comp_ids) and comp_ids and not k_eq(k_sum(prof.k0, labels), prof.unit_class):
        out.append(f"component labels must sum to the unit class {prof.unit_class}")
    for hid in hole_ids:
        lab = d.hole_k1.get(hid)
        if lab is None:
            out.append(f"hole {hid} has no K1 label")
        elif lab.group != prof.k1:
            if prof.k1.is_trivial and not lab.is_zero:
                out.append(f"hole label must be 0 (hole {hid})")
            else:
                out.append(f"hole {hid} label is not in K1 = {prof.k1}")
    for hid in sorted(set(d.hole_k1) - set(hole_ids)):
        out.append(f"label for unknown hole {hid}")
    return out
