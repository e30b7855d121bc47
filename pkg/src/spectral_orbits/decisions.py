"""Approximate unitary equivalence, closed similarity orbits and related tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .geometry import Component, GridSet, box_index, complement_components
from .kdata import SpectralDatum, k_eq, k_sum


@dataclass(frozen=True)
class Failure:
    condition: str
    reason: str
    witness: Any = None


@dataclass
class Verdict:
    """Outcome of a decision; ``answer`` is true iff nothing failed."""

    kind: str
    conditions: dict = field(default_factory=dict)  # condition id -> passed / skipped
    failed_conditions: list = field(default_factory=list)

    @property
    def answer(self) -> bool:
        return not self.failed_conditions

    def _record(self, cond: str, failures: list[Failure]) -> None:
        self.conditions[cond] = "FAIL" if failures else "PASS"
        self.failed_conditions.extend(failures)

    def _skip(self, cond: str, why: str) -> None:
        self.conditions[cond] = f"SKIPPED ({why})"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "answer": self.answer,
            "conditions": dict(self.conditions),
            "failed_conditions": [
                {"condition": f.condition, "reason": f.reason, "witness": _jsonable(f.witness)} for f in self.failed_conditions
            ],
        }


def _jsonable(w):
    if isinstance(w, complex):
        return [w.real, w.imag]
    if isinstance(w, (np.integer,)):
        return int(w)
    if isinstance(w, (np.floating,)):
        return float(w)
    return w


def _check_compatible(d1: SpectralDatum, d2: SpectralDatum) -> None:
    if d1.profile != d2.profile:
        raise ValueError(f"profile mismatch: {d1.profile.name} vs {d2.profile.name}")
    if d1.resolution != d2.resolution:
        raise ValueError(f"resolution mismatch: {d1.resolution} vs {d2.resolution}")


def spectra_equal(a: GridSet, b: GridSet) -> bool:
    """Equality of represented sets, cluster flags included."""
    return a.resolution == b.resolution and a.boxes == b.boxes and a.isolated_points == b.isolated_points


def _adjacent_closed(box, boxes) -> bool:
    return any((box.n + i, box.m + j) in boxes for i in (-1, 0, 1) for j in (-1, 0, 1))


def component_meets(comp: Component, g: GridSet) -> bool:
    """Whether the closed component intersects the represented set ``g``."""
    eps = g.resolution
    if comp.kind == "singleton":
        return g.contains_point(comp.point.value)
    if any(_adjacent_closed(b, g.boxes) for b in comp.boxes):
        return True
    region = GridSet(eps, comp.boxes)
    return any(region.contains_point(p.value) for p in g.isolated_points)


def _meets_non_isolated(comp: Component, source: SpectralDatum) -> bool:
    """Whether ``comp`` contains a non-isolated point of ``source``'s spectrum."""
    region_boxes = frozenset(b for c in source.components if c.kind == "region" for b in c.boxes)
    cluster = tuple(p for p in source.spectrum.isolated_points if p.is_cluster_point)
    return component_meets(comp, GridSet(source.resolution, region_boxes, cluster))


def _component_of(comp: Component, target: SpectralDatum) -> int | None:
    """Target component containing the source component ``comp`` (if any)."""
    eps = target.resolution
    for k in target.components:
        kset = k.as_gridset(eps)
        if comp.kind == "region":
            if next(iter(comp.boxes)) in kset.boxes:
                return k.id
        elif kset.contains_point(comp.point.value):
            return k.id
    return None


def common_frame(*grids: GridSet, margin_cells: int = 2) -> tuple:
    idx = []
    for g in grids:
        idx += [(b.n, b.m) for b in g.boxes]
        idx += [tuple(box_index(p.value, g.resolution)) for p in g.isolated_points]
    if not idx:
        idx = [(0, 0)]
    ns, ms = zip(*idx)
    k = margin_cells
    return (min(ns) - k, max(ns) + k, min(ms) - k, max(ms) + k)


# individual similarity conditions; each returns a list of failures


def _cond_inclusion(source: SpectralDatum, target: SpectralDatum) -> list[Failure]:
    out = []
    tg = target.spectrum
    for b in sorted(source.spectrum.boxes - tg.boxes):
        out.append(Failure("(1)", f"source box {tuple(b)} lies outside the target spectrum", tuple(b)))
    for p in source.spectrum.isolated_points:
        if not tg.contains_point(p.value):
            out.append(Failure("(1)", f"source point {p.value} lies outside the target spectrum", p.value))
    return out


def _cond_components_met(source: SpectralDatum, target: SpectralDatum) -> list[Failure]:
    return [
        Failure("(2)", f"target component {k.id} does not meet the source spectrum", k.id)
        for k in target.components
        if not component_meets(k, source.spectrum)
    ]


def _cond_index(source: SpectralDatum, target: SpectralDatum) -> list[Failure]:
    out = []
    frame = common_frame(source.spectrum, target.spectrum)
    src_comp = source.complement_in(frame)
    for hole in target.complement.holes:
        free = [b for b in sorted(hole.boxes) if b not in source.spectrum.boxes]
        if not free:
            out.append(Failure("(3)", f"target hole {hole.id} is covered by the source spectrum", hole.id))
            continue
        src_label = source.hole_label(src_comp.locate(free[0]))
        tgt_label = target.hole_label(hole.id)
        if src_label.group != tgt_label.group or not k_eq(src_label, tgt_label):
            out.append(Failure("(3)", f"index labels differ on target hole {hole.id}: source {src_label}, target {tgt_label}", hole.id))
    return out


def _cond_non_isolated(source: SpectralDatum, target: SpectralDatum) -> list[Failure]:
    out = []
    for k in target.components:
        needs = k.kind == "region" or k.point.is_cluster_point
        if needs and not _meets_non_isolated(k, source):
            out.append(Failure("(4)", f"target component {k.id} contains no non-isolated point of the source spectrum", k.id))
    return out


def _cond_projections(source: SpectralDatum, target: SpectralDatum) -> list[Failure]:
    out = []
    k0 = target.profile.k0
    groups: dict[int, list] = {k.id: [] for k in target.components}
    for c in source.components:
        kid = _component_of(c, target)
        if kid is not None:
            groups[kid].append(source.component_k0[c.id])
    for k in target.components:
        src = k_sum(k0, groups[k.id])
        tgt = target.component_k0[k.id]
        if not k_eq(src, tgt):
            out.append(Failure("(5)", f"K0 classes differ on target component {k.id}: source {src}, target {tgt}", k.id))
    return out


def decide_aue(d1: SpectralDatum, d2: SpectralDatum) -> Verdict:
    """Approximate unitary equivalence of two labelled normal spectra."""
    _check_compatible(d1, d2)
    prof = d1.profile
    if not (prof.purely_infinite_simple or prof.all_nonzero_projections_equivalent):
        raise ValueError(f"profile {prof.name} is not covered by the classification")
    v = Verdict("aue")
    same = spectra_equal(d1.spectrum, d2.spectrum)
    v._record("(a)", [] if same else [Failure("(a)", "spectra differ")])
    if prof.k1.is_trivial:
        v._skip("(b)", "K1 trivial")
    elif not same:
        v._record("(b)", _cond_index(d1, d2) + _cond_index(d2, d1))
    else:
        fails = []
        for h in d1.complement.holes:
            a, b = d1.hole_k1[h.id], d2.hole_k1[h.id]
            if not k_eq(a, b):
                fails.append(Failure("(b)", f"index labels differ on hole {h.id}: {a} vs {b}", h.id))
        v._record("(b)", fails)
    if prof.all_nonzero_projections_equivalent and same:
        v._skip("(c)", "all non-zero projections equivalent")
    elif prof.k0.is_trivial:
        v._skip("(c)", "K0 trivial")
    elif same:
        fails = []
        for c in d1.components:
            a, b = d1.component_k0[c.id], d2.component_k0[c.id]
            if not k_eq(a, b):
                fails.append(Failure("(c)", f"K0 classes differ on component {c.id}: {a} vs {b}", c.id))
        v._record("(c)", fails)
    else:
        v._record("(c)", _cond_projections(d1, d2) + _cond_projections(d2, d1))
    return v


def similarity_failures(source: SpectralDatum, target: SpectralDatum) -> dict[str, list[Failure] | None]:
    """Per-condition failures; ``None`` marks a skipped condition."""
    prof = target.profile
    out = {
        "(1)": _cond_inclusion(source, target),
        "(2)": _cond_components_met(source, target),
        "(3)": _cond_index(source, target),
        "(4)": _cond_non_isolated(source, target),
    }
    if prof.all_nonzero_projections_equivalent or prof.k0.is_trivial:
        out["(5)"] = None
    else:
        out["(5)"] = _cond_projections(source, target)
    return out


def decide_similarity(source: SpectralDatum, target: SpectralDatum) -> Verdict:
    """Whether ``target`` lies in the norm closure of the similarity orbit of ``source``."""
    _check_compatible(source, target)
    v = Verdict("simorbit")
    for cond, fails in similarity_failures(source, target).items():
        if fails is None:
            why = "all non-zero projections equivalent" if target.profile.all_nonzero_projections_equivalent else "K0 trivial"
            v._skip(cond, why)
        else:
            v._record(cond, fails)
    return v


def decide_nilpotent_limit(d: SpectralDatum) -> Verdict:
    """Whether the normal operator is a norm limit of nilpotents."""
    prof = d.profile
    if not (prof.purely_infinite_simple or (prof.weak_FN and prof.all_nonzero_projections_equivalent)):
        raise ValueError(f"profile {prof.name} is not covered by the nilpotent criterion")
    v = Verdict("nilpotent")
    v._record("(1)", [] if d.spectrum.contains_point(0j) else [Failure("(1)", "0 is not in the spectrum", 0j)])
    n = len(d.components)
    v._record("(2)", [] if n == 1 else [Failure("(2)", f"spectrum has {n} components", n)])
    bad = [h for h, lab in sorted(d.hole_k1.items()) if not lab.is_zero]
    v._record("(3)", [Failure("(3)", f"index label of hole {h} is {d.hole_k1[h]}", h) for h in bad])
    return v


def ii1_moment_obstruction(
    mu1: Sequence[tuple[float, float]],
    mu2: Sequence[tuple[float, float]],
    max_degree: int,
    tol: float = 1e-10,
) -> Verdict:
    """Compare moments of two discrete spectral distributions.

    Any degree whose moments differ by more than ``tol`` certifies that neither
    self-adjoint operator is in the closed similarity orbit of the other in a
    II_1 factor.
    """
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    arrays = []
    for mu in (mu1, mu2):
        atoms = np.array([complex(a) for a, _ in mu])
        weights = np.array([float(w) for _, w in mu])
        if len(atoms) == 0 or np.any(weights <= 0):
            raise ValueError("measures need positive weights")
        if abs(weights.sum() - 1) > max(tol, 1e-12):
            raise ValueError(f"weights sum to {weights.sum()}, not 1")
        if np.any(np.abs(atoms.imag) > 0):
            raise ValueError("atoms must be real")
        arrays.append((atoms.real, weights))
    v = Verdict("ii1")
    for k in range(1, max_degree + 1):
        m1 = float(np.sum(arrays[0][1] * arrays[0][0] ** k))
        m2 = float(np.sum(arrays[1][1] * arrays[1][0] ** k))
        delta = abs(m1 - m2)
        fails = []
        if delta > tol:
            fails.append(Failure(f"moment {k}", f"moment {k} differs: {m1:.12g} vs {m2:.12g} (|delta| = {delta:.6g})", {"k": k, "delta": delta}))
        v._record(f"moment {k}", fails)
    return v
