import json
from pathlib import Path

import pytest

from spectral_orbits.documents import (
    Document,
    DocumentError,
    datum_to_spec,
    dump_document,
    parse_document,
    refine,
)
from spectral_orbits.geometry import box_index
from spectral_orbits.kdata import CALKIN

from conftest import random_gridset, random_labels

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.json")))
def test_round_trip_is_byte_identical(name):
    doc = parse_document((FIXTURES / name).read_text())
    text = dump_document(doc)
    assert dump_document(parse_document(text)) == text
    assert text.endswith("\n")


def test_random_data_round_trip(rng):
    for _ in range(25):
        d = random_labels(rng, random_gridset(rng, 0.5), CALKIN)
        doc = Document("Calkin", 0.5, [datum_to_spec(d)])
        back = parse_document(dump_document(doc)).data()[0]
        assert back.spectrum == d.spectrum
        assert back.component_k0 == d.component_k0 and back.hole_k1 == d.hole_k1


def test_box_order_does_not_matter():
    a = parse_document(json.dumps({"version": 1, "spectra": [{"boxes": [[1, 0], [0, 0]]}]}))
    b = parse_document(json.dumps({"version": 1, "spectra": [{"boxes": [[0, 0], [1, 0]]}]}))
    assert dump_document(a) == dump_document(b)


@pytest.mark.parametrize(
    "text, message",
    [
        ("{", "line 1 column 2"),
        ("{}", "version: missing"),
        ('{"version": 2}', "unsupported"),
        ('{"version": 1, "extra": 0}', "unknown field"),
        ('{"version": 1, "spectra": [{"boxes": [[0]]}]}', r"spectra\[0\].boxes\[0\]"),
        ('{"version": 1, "spectra": [{"boxes": [[0, 0], [0, 0]]}]}', "duplicate"),
        ('{"version": 1, "resolution": -1}', "positive"),
        ('{"version": 1, "spectra": [{"component_labels": {"a": [1]}}]}', "non-negative integer"),
    ],
)
def test_malformed_documents(text, message):
    with pytest.raises(DocumentError, match=message):
        parse_document(text)


def test_label_errors():
    doc = parse_document(json.dumps({"version": 1, "profile": "O3", "resolution": 1,
                                     "spectra": [{"boxes": [[0, 0]], "hole_labels": {"0": [1]}}]}))
    with pytest.raises(DocumentError, match="hole label must be 0"):
        doc.data()
    doc = parse_document(json.dumps({"version": 1, "profile": "Nope", "resolution": 1, "spectra": [{"boxes": [[0, 0]]}]}))
    with pytest.raises(DocumentError, match="profile"):
        doc.data()
    doc = parse_document(json.dumps({"version": 1, "profile": "O2", "spectra": [{"boxes": [[0, 0]]}]}))
    with pytest.raises(DocumentError, match="no resolution"):
        doc.data()


def test_inline_profile():
    prof = {"name": "Z3", "k0": {"torsion": [3]}, "k1": {}, "unit_class": [1]}
    doc = parse_document(json.dumps({"version": 1, "profile": prof, "resolution": 1,
                                     "spectra": [{"boxes": [[0, 0]], "component_labels": {"0": [4]}}]}))
    d = doc.data()[0]
    assert d.profile.k0.torsion_orders == (3,)
    assert d.component_k0[0] == d.profile.unit_class
    doc.spectra[0]["component_labels"] = {"0": [2]}
    with pytest.raises(DocumentError, match="unit class"):
        doc.data()


def test_refine_preserves_set_and_labels(rng):
    for _ in range(10):
        d = random_labels(rng, random_gridset(rng, 0.75, max_boxes=12), CALKIN)
        f = refine(d, 3)
        assert f.resolution == pytest.approx(0.25)
        assert len(f.spectrum.boxes) == 9 * len(d.spectrum.boxes)
        assert {box_index(b.center(0.25), 0.75) for b in f.spectrum.boxes} == set(d.spectrum.boxes)
        assert f.spectrum.isolated_points == d.spectrum.isolated_points
        assert sorted(v.coords for v in f.component_k0.values()) == sorted(v.coords for v in d.component_k0.values())
        assert sorted(v.coords for v in f.hole_k1.values()) == sorted(v.coords for v in d.hole_k1.values())
    with pytest.raises(ValueError):
        refine(d, 2)
