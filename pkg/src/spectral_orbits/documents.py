"""JSON documents describing labelled spectra, plans and sandbox checks.

A spectral document looks like::

    {
      "version": 1,
      "profile": "O3",
      "resolution": 0.5,
      "spectra": [
        {"boxes": [[0, 0], [1, 0]],
         "points": [[2.0, 0.0, false]],
         "component_labels": {"0": [1]},
         "hole_labels": {}}
      ],
      "options": {}
    }

Component and hole ids are not stored with the geometry: they are re-derived
from the boxes, so labels stay attached to the same pieces however the boxes
are listed. ``profile`` may also be an inline object with the fields of
:class:`~spectral_orbits.kdata.AlgebraProfile`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .geometry import GridBox, GridSet, IsolatedPoint
from .kdata import AlgebraProfile, KGroup, SpectralDatum, builtin_profile, validate_datum

VERSION = 1


class DocumentError(ValueError):
    """Malformed input; the message names the offending field."""


@dataclass
class Document:
    profile: Any = None  # builtin name or inline dict, as written
    resolution: float | None = None
    spectra: list = field(default_factory=list)  # canonical dicts
    options: dict = field(default_factory=dict)
    plan: dict | None = None
    checks: list | None = None

    def algebra(self, override: str | None = None) -> AlgebraProfile:
        spec = override if override is not None else self.profile
        if spec is None:
            raise DocumentError("profile: missing")
        return parse_profile(spec)

    def data(self, profile_override: str | None = None) -> list[SpectralDatum]:
        prof = self.algebra(profile_override)
        return [build_datum(s, prof, self.resolution, f"spectra[{i}]") for i, s in enumerate(self.spectra)]


def _field(obj: dict, key: str, where: str, kind=None, required: bool = True):
    if not isinstance(obj, dict):
        raise DocumentError(f"{where}: expected an object")
    if key not in obj:
        if required:
            raise DocumentError(f"{where}.{key}: missing")
        return None
    val = obj[key]
    wrong_type = kind is not None and not isinstance(val, kind)
    if wrong_type or (kind is int and isinstance(val, bool)):
        raise DocumentError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}")
    return val


def _group(doc, where: str) -> KGroup:
    rank = _field(doc, "free_rank", where, int, required=False) or 0
    tors = _field(doc, "torsion", where, list, required=False) or []
    try:
        return KGroup(rank, tuple(tors))
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"{where}: {exc}") from exc


def parse_profile(spec) -> AlgebraProfile:
    if isinstance(spec, str):
        try:
            return builtin_profile(spec)
        except ValueError as exc:
            raise DocumentError(f"profile: {exc}") from exc
    if not isinstance(spec, dict):
        raise DocumentError("profile: expected a name or an object")
    k0 = _group(_field(spec, "k0", "profile", dict), "profile.k0")
    k1 = _group(_field(spec, "k1", "profile", dict), "profile.k1")
    unit = _field(spec, "unit_class", "profile", list, required=False) or []
    try:
        return AlgebraProfile(
            str(_field(spec, "name", "profile", str)),
            k0,
            k0.element(unit),
            k1,
            bool(spec.get("purely_infinite_simple", True)),
            bool(spec.get("all_nonzero_projections_equivalent", False)),
            bool(spec.get("weak_FN", False)),
        )
    except ValueError as exc:
        raise DocumentError(f"profile.unit_class: {exc}") from exc


def _canonical_spectrum(raw, where: str) -> dict:
    if not isinstance(raw, dict):
        raise DocumentError(f"{where}: expected an object")
    unknown = set(raw) - {"boxes", "points", "component_labels", "hole_labels", "resolution"}
    if unknown:
        raise DocumentError(f"{where}: unknown field(s) {sorted(unknown)}")
    boxes = []
    for k, b in enumerate(raw.get("boxes", [])):
        if not (isinstance(b, list) and len(b) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in b)):
            raise DocumentError(f"{where}.boxes[{k}]: expected [n, m] integers")
        boxes.append(list(b))
    if len({tuple(b) for b in boxes}) != len(boxes):
        raise DocumentError(f"{where}.boxes: duplicate box")
    points = []
    for k, p in enumerate(raw.get("points", [])):
        ok = isinstance(p, list) and len(p) in (2, 3) and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in p[:2])
        if not ok or (len(p) == 3 and not isinstance(p[2], bool)):
            raise DocumentError(f"{where}.points[{k}]: expected [re, im] or [re, im, is_cluster]")
        points.append([float(p[0]), float(p[1]), bool(p[2]) if len(p) == 3 else False])
    labels = {}
    for key in ("component_labels", "hole_labels"):
        lab = raw.get(key, {})
        if not isinstance(lab, dict):
            raise DocumentError(f"{where}.{key}: expected an object keyed by id")
        out = {}
        for i, v in lab.items():
            if not str(i).isdigit():
                raise DocumentError(f"{where}.{key}: id {i!r} is not a non-negative integer")
            if not (isinstance(v, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in v)):
                raise DocumentError(f"{where}.{key}.{i}: expected a list of integers")
            out[str(int(i))] = list(v)
        labels[key] = dict(sorted(out.items(), key=lambda kv: int(kv[0])))
    spec = {
        "boxes": sorted(boxes),
        "points": sorted(points, key=lambda p: (p[0], p[1])),
        "component_labels": labels["component_labels"],
        "hole_labels": labels["hole_labels"],
    }
    if "resolution" in raw:
        spec["resolution"] = _positive(raw["resolution"], f"{where}.resolution")
    return spec


def _positive(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not x > 0:
        raise DocumentError(f"{where}: expected a positive number")
    return float(x)


def build_datum(spec: dict, prof: AlgebraProfile, resolution: float | None, where: str) -> SpectralDatum:
    eps = spec.get("resolution", resolution)
    if eps is None:
        raise DocumentError(f"{where}: no resolution given")
    try:
        grid = GridSet(
            eps,
            frozenset(GridBox(*b) for b in spec["boxes"]),
            tuple(IsolatedPoint(complex(p[0], p[1]), p[2]) for p in spec["points"]),
        )
    except ValueError as exc:
        raise DocumentError(f"{where}: {exc}") from exc
    if grid.is_empty:
        raise DocumentError(f"{where}: empty spectrum")
    if prof.k1.is_trivial:
        for i, v in spec["hole_labels"].items():
            if any(v):
                raise DocumentError(f"{where}: hole label must be 0 (hole {i})")
    try:
        ck = {int(i): prof.k0.element(v) for i, v in spec["component_labels"].items()}
        hk = {int(i): prof.k1.element(v if any(v) else ()) for i, v in spec["hole_labels"].items()}
    except ValueError as exc:
        raise DocumentError(f"{where}: label does not fit the profile ({exc})") from exc
    d = SpectralDatum(grid, prof, ck, hk)
    problems = validate_datum(d)
    if problems:
        raise DocumentError(f"{where}: " + "; ".join(problems))
    return d


def parse_document(text: str) -> Document:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise DocumentError("document: expected a JSON object")
    if "version" not in raw:
        raise DocumentError("version: missing")
    if raw["version"] != VERSION:
        raise DocumentError(f"version: unsupported value {raw['version']!r} (expected {VERSION})")
    unknown = set(raw) - {"version", "profile", "resolution", "spectra", "options", "plan", "checks"}
    if unknown:
        raise DocumentError(f"document: unknown field(s) {sorted(unknown)}")
    doc = Document()
    doc.profile = raw.get("profile")
    if "resolution" in raw:
        doc.resolution = _positive(raw["resolution"], "resolution")
    spectra = raw.get("spectra", [])
    if not isinstance(spectra, list):
        raise DocumentError("spectra: expected a list")
    doc.spectra = [_canonical_spectrum(s, f"spectra[{i}]") for i, s in enumerate(spectra)]
    opts = raw.get("options", {})
    if not isinstance(opts, dict):
        raise DocumentError("options: expected an object")
    doc.options = opts
    if "plan" in raw:
        if not isinstance(raw["plan"], dict):
            raise DocumentError("plan: expected an object")
        doc.plan = raw["plan"]
    if "checks" in raw:
        if not isinstance(raw["checks"], list):
            raise DocumentError("checks: expected a list")
        doc.checks = raw["checks"]
    return doc


def dump_document(doc: Document) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline."""
    out: dict[str, Any] = {"version": VERSION}
    if doc.profile is not None:
        out["profile"] = doc.profile
    if doc.resolution is not None:
        out["resolution"] = doc.resolution
    if doc.spectra:
        out["spectra"] = doc.spectra
    if doc.options:
        out["options"] = doc.options
    if doc.plan is not None:
        out["plan"] = doc.plan
    if doc.checks is not None:
        out["checks"] = doc.checks
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def datum_to_spec(d: SpectralDatum) -> dict:
    """Canonical spectrum payload for a datum (labels on every id)."""
    return {
        "boxes": [list(b) for b in d.spectrum.sorted_boxes()],
        "points": [[p.value.real, p.value.imag, p.is_cluster_point] for p in d.spectrum.isolated_points],
        "component_labels": {str(i): list(v.coords) for i, v in sorted(d.component_k0.items())},
        "hole_labels": {str(i): list(v.coords) for i, v in sorted(d.hole_k1.items())},
    }


def refine(d: SpectralDatum, factor: int = 3) -> SpectralDatum:
    """The same represented set on a grid ``factor`` times finer, labels carried over.

    ``factor`` must be odd so that the finer boxes tile each coarse box.
    """
    if factor < 1 or factor % 2 == 0:
        raise ValueError("refinement factor must be a positive odd integer")
    eps = d.resolution / factor
    half = factor // 2
    boxes = frozenset(
        GridBox(factor * b.n + i, factor * b.m + j) for b in d.spectrum.boxes for i in range(-half, half + 1) for j in range(-half, half + 1)
    )
    fine = GridSet(eps, boxes, d.spectrum.isolated_points)
    shape = _unlabelled(fine, d.profile)
    comps = shape.components
    ck = {}
    for c in d.components:
        key = GridBox(factor * min(c.boxes).n, factor * min(c.boxes).m) if c.kind == "region" else None
        for f in comps:
            if (key is not None and key in f.boxes) or (key is None and f.kind == "singleton" and f.point == c.point):
                ck[f.id] = d.component_k0[c.id]
    hk = {}
    fine_comp = shape.complement
    for h in d.complement.holes:
        b = min(h.boxes)
        hid = fine_comp.locate(GridBox(factor * b.n, factor * b.m))
        if hid is not None:
            hk[hid] = d.hole_k1[h.id]
    return SpectralDatum(fine, d.profile, ck, hk)


def _unlabelled(g: GridSet, prof: AlgebraProfile) -> SpectralDatum:
    trivial = AlgebraProfile(prof.name, KGroup(), KGroup().zero(), KGroup())
    return SpectralDatum(g, trivial)
