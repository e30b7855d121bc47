"""Lower and upper bounds on the distance between unitary orbits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Point, box as shapely_box
from shapely.ops import unary_union

from .decisions import common_frame, similarity_failures
from .geometry import GridBox, GridSet, connected_components, hausdorff_distance
from .kdata import SpectralDatum, clopen_class, k_eq

SQRT2 = math.sqrt(2.0)


def _check(d1: SpectralDatum, d2: SpectralDatum) -> None:
    if d1.resolution != d2.resolution:
        raise ValueError(f"resolution mismatch: {d1.resolution} vs {d2.resolution}")
    if d1.profile.k1 != d2.profile.k1:
        raise ValueError("profiles do not share K1")


def label_mismatch_boxes(d1: SpectralDatum, d2: SpectralDatum) -> list[GridBox]:
    """Complement boxes (outside both spectra) where the index labels differ."""
    frame = common_frame(d1.spectrum, d2.spectrum)
    c1, c2 = d1.complement_in(frame), d2.complement_in(frame)
    occupied = d1.spectrum.boxes | d2.spectrum.boxes
    candidates = set()
    for h in c1.holes + c2.holes:
        candidates.update(h.boxes)
    out = []
    for b in sorted(candidates - occupied):
        l1 = d1.hole_label(c1.locate(b))
        l2 = d2.hole_label(c2.locate(b))
        if not k_eq(l1, l2):
            out.append(b)
    return out


@dataclass(frozen=True)
class RhoEstimate:
    value: float  # max(d_H, sampled maximum); never exceeds the true rho
    hausdorff: float
    mismatch_corner_max: float  # over corners and centres of mismatch boxes
    slack: float  # true rho <= value + slack
    mismatch_boxes: int


def rho_estimate(d1: SpectralDatum, d2: SpectralDatum) -> RhoEstimate:
    _check(d1, d2)
    dh = hausdorff_distance(d1.spectrum, d2.spectrum)
    boxes = label_mismatch_boxes(d1, d2)
    if not boxes:
        return RhoEstimate(dh, dh, 0.0, 0.0, 0)
    eps = d1.resolution
    # both distances are 1-Lipschitz, so the sum varies by at most sqrt(2)*eps
    # between a box centre and any point of the box
    corners = []
    for b in boxes:
        x0, x1, y0, y1 = b.bounds(eps)
        corners += [complex(x0, y0), complex(x1, y0), complex(x0, y1), complex(x1, y1), b.center(eps)]
    corners = np.unique(np.array(corners))
    s = d1.spectrum.distance_to(corners) + d2.spectrum.distance_to(corners)
    cmax = float(s.max())
    return RhoEstimate(max(dh, cmax), dh, cmax, SQRT2 * eps, len(boxes))


def rho(d1: SpectralDatum, d2: SpectralDatum) -> float:
    """The rho pseudometric, evaluated on box corners and centres."""
    return rho_estimate(d1, d2).value


@dataclass
class DistanceReport:
    lower: float
    upper: float | None  # None means unknown
    lower_rule: str
    upper_rule: str
    discretization_slack: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": "unknown" if self.upper is None else self.upper,
            "lower_rule": self.lower_rule,
            "upper_rule": self.upper_rule,
            "discretization_slack": self.discretization_slack,
            **self.details,
        }


def _containment_rule(d1: SpectralDatum, d2: SpectralDatum) -> bool:
    for container, contained in ((d1, d2), (d2, d1)):
        if not container.spectrum.contains(contained.spectrum):
            continue
        fails = similarity_failures(contained, container)
        if all(not fails[c] for c in ("(1)", "(2)", "(3)", "(5)")):
            return True
    return False


def _union_classes_match(d1: SpectralDatum, d2: SpectralDatum) -> bool:
    """Equivalent common spectral projections over clopen pieces of the union."""
    union = d1.spectrum.union(d2.spectrum)
    k0 = d1.profile.k0
    for piece in connected_components(union):
        pg = piece.as_gridset(union.resolution)
        classes = []
        for d in (d1, d2):
            inside = [c.id for c in d.components if _inside(c, pg)]
            classes.append(inside)
        if bool(classes[0]) != bool(classes[1]):
            return False
        if not k_eq(clopen_class(d1, classes[0]), clopen_class(d2, classes[1])):
            return False
    return True


def _inside(comp, piece: GridSet) -> bool:
    if comp.kind == "region":
        return next(iter(comp.boxes)) in piece.boxes
    return piece.contains_point(comp.point.value)


def _projection_classes_differ(d1: SpectralDatum, d2: SpectralDatum) -> bool:
    """Both operators are projections (spectrum {0, 1}) with inequivalent ranges."""
    for d in (d1, d2):
        if d.spectrum.boxes or {p.value for p in d.spectrum.isolated_points} != {0j, 1 + 0j}:
            return False
    at_one = [next(c.id for c in d.components if c.point.value == 1) for d in (d1, d2)]
    return not k_eq(d1.component_k0[at_one[0]], d2.component_k0[at_one[1]])


def distance_bounds(d1: SpectralDatum, d2: SpectralDatum) -> DistanceReport:
    """Certified bracket for the distance between the unitary orbits."""
    if d1.profile != d2.profile:
        raise ValueError(f"profile mismatch: {d1.profile.name} vs {d2.profile.name}")
    est = rho_estimate(d1, d2)
    prof = d1.profile
    details = {"hausdorff": est.hausdorff, "rho_corner_max": est.mismatch_corner_max, "rho_slack": est.slack}
    lower, lower_rule = est.value, "rho"
    if _projection_classes_differ(d1, d2):
        # projections closer than 1 are Murray-von Neumann equivalent
        lower, lower_rule = max(lower, 1.0), "projection-equivalence"
        details["note"] = "spectral projections at 1 are not equivalent, so the orbits are at distance >= 1"
    if est.mismatch_boxes == 0 and _containment_rule(d1, d2):
        return DistanceReport(lower, est.hausdorff, lower_rule, "containment", 0.0, details)
    if prof.all_nonzero_projections_equivalent and prof.weak_FN and d1.gamma_trivial and d2.gamma_trivial:
        return DistanceReport(lower, est.hausdorff, lower_rule, "equivalent-projections", 0.0, details)
    if prof.purely_infinite_simple and (prof.k0.is_trivial or _union_classes_match(d1, d2)):
        return DistanceReport(lower, 2 * est.value, lower_rule, "double-rho", 2 * est.slack, details)
    return DistanceReport(lower, None, lower_rule, "unknown", est.slack, details)


# ---------------------------------------------------------------------------
# Contour lower bound for mismatched spectral projections
# ---------------------------------------------------------------------------


def _component_geometry(comp, eps: float):
    if comp.kind == "region":
        return unary_union([shapely_box(*_xyxy(b, eps)) for b in comp.boxes])
    return Point(comp.point.value.real, comp.point.value.imag)


def _xyxy(b: GridBox, eps: float, pad: float = 0.0):
    x0, x1, y0, y1 = b.bounds(eps)
    return (x0 - pad, y0 - pad, x1 + pad, y1 + pad)


def _dilate(comp, eps: float, offset: float):
    """Sup-norm dilation of a component by ``offset`` (a rectilinear region)."""
    if comp.kind == "region":
        return unary_union([shapely_box(*_xyxy(b, eps, offset)) for b in comp.boxes])
    z = comp.point.value
    return shapely_box(z.real - offset, z.imag - offset, z.real + offset, z.imag + offset)


def contour_rings(region) -> list[np.ndarray]:
    """Boundary rings of a shapely polygon or multipolygon as complex vertex arrays."""
    polys = getattr(region, "geoms", [region])
    rings = []
    for p in polys:
        for ring in [p.exterior, *p.interiors]:
            xy = np.asarray(ring.coords)
            rings.append(xy[:, 0] + 1j * xy[:, 1])
    return rings


def contour_sup_bound(rings, d1: SpectralDatum, d2: SpectralDatum, spacing: float) -> tuple[float, float]:
    """Upper bound on ``sup 1/(dist(z,s1) dist(z,s2))`` over the contour.

    Each edge is cut into ``2**k`` pieces no longer than ``spacing``; on a piece
    of length ``l`` a 1-Lipschitz distance is at least ``(d(a) + d(b) - l) / 2``.
    Returns ``(certified upper bound, largest sampled value)``.
    """
    worst = 0.0
    sampled = 0.0
    for ring in rings:
        for a, b in zip(ring[:-1], ring[1:]):
            length = abs(b - a)
            if length == 0:
                continue
            k = max(0, math.ceil(math.log2(length / spacing))) if length > spacing else 0
            t = np.linspace(0.0, 1.0, 2**k + 1)
            z = a + t * (b - a)
            piece = length / 2**k
            g1 = d1.spectrum.distance_to(z)
            g2 = d2.spectrum.distance_to(z)
            if np.any(g1 <= 0) or np.any(g2 <= 0):
                raise ValueError("offset too large/small: contour meets a spectrum")
            lo1 = (g1[:-1] + g1[1:] - piece) / 2
            lo2 = (g2[:-1] + g2[1:] - piece) / 2
            sampled = max(sampled, float(np.max(1.0 / (g1 * g2))))
            if np.any(lo1 <= 0) or np.any(lo2 <= 0):
                return math.inf, sampled
            worst = max(worst, float(np.max(1.0 / (lo1 * lo2))))
    return worst, sampled


@dataclass(frozen=True)
class GapBound:
    bound: float
    contour_length: float
    sup_factor: float
    sampled_sup: float
    class1: object
    class2: object
    selected2: tuple


def projection_gap_lower_bound(
    d1: SpectralDatum,
    d2: SpectralDatum,
    region,
    offset: float,
    spacing: float | None = None,
) -> GapBound | None:
    """Lower bound on the unitary-orbit distance from a projection-class mismatch.

    ``region`` selects components of ``d1``; the matching components of ``d2``
    are those enclosed by the offset contour. Returns ``None`` when the two
    spectral projections are Murray-von Neumann equivalent (not applicable).
    """
    _check(d1, d2)
    if offset <= 0:
        raise ValueError("offset must be positive")
    eps = d1.resolution
    ids = sorted(set(region))
    if not ids:
        raise ValueError("empty region")
    comps1 = {c.id: c for c in d1.components}
    missing = [i for i in ids if i not in comps1]
    if missing:
        raise KeyError(f"unknown component id(s) {missing}")
    inside = unary_union([_dilate(comps1[i], eps, offset) for i in ids])
    outline = inside.boundary
    selected2 = []
    for d, picks in ((d1, set(ids)), (d2, None)):
        for c in d.components:
            geom = _component_geometry(c, eps)
            if geom.distance(outline) <= 0:
                raise ValueError("offset too large/small: contour meets a spectrum")
            enclosed = inside.contains(geom)
            if picks is not None and enclosed != (c.id in picks):
                raise ValueError("offset too large/small: contour encloses an unselected component")
            if picks is None and enclosed:
                selected2.append(c.id)
    c1 = clopen_class(d1, ids)
    c2 = clopen_class(d2, selected2)
    if selected2 and k_eq(c1, c2):
        return None
    if spacing is None:
        spacing = min(eps / 4, offset / 32)
    rings = contour_rings(inside)
    sup, sampled = contour_sup_bound(rings, d1, d2, spacing)
    length = float(outline.length)
    bound = 0.0 if math.isinf(sup) else 2 * math.pi / (length * sup)
    return GapBound(bound, length, sup, sampled, c1, c2, tuple(selected2))
