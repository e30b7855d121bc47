"""Random generators shared by the test modules."""

from __future__ import annotations

import numpy as np
import pytest

from spectral_orbits.geometry import GridBox, GridSet, IsolatedPoint, connected_components, complement_components
from spectral_orbits.kdata import SpectralDatum, k_add

STEPS = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)]


def connected_boxes(rng: np.random.Generator, n: int, start=(0, 0)) -> set:
    """A random 8-way connected set of ``n`` boxes grown from ``start``."""
    cells = {tuple(start)}
    frontier = [tuple(start)]
    while len(cells) < n:
        b = frontier[rng.integers(len(frontier))]
        d = STEPS[rng.integers(8)]
        c = (b[0] + d[0], b[1] + d[1])
        if c not in cells:
            cells.add(c)
            frontier.append(c)
    return cells


def random_gridset(rng: np.random.Generator, eps: float, max_boxes: int = 6, max_points: int = 2, span: int = 4) -> GridSet:
    k = int(rng.integers(0, max_boxes + 1))
    boxes = frozenset(GridBox(int(a), int(b)) for a, b in rng.integers(-span, span + 1, size=(k, 2)))
    probe = GridSet(eps, boxes)
    pts = {}
    for _ in range(int(rng.integers(0 if boxes else 1, max_points + 1))):
        z = complex(*np.round(rng.uniform(-span - 1, span + 1, 2) * 8) / 8 * eps)
        if not probe.contains_point(z):
            pts[z] = bool(rng.integers(2))
    if not boxes and not pts:
        pts[complex(eps * (span + 3), 0)] = False
    return GridSet(eps, boxes, tuple(IsolatedPoint(z, c) for z, c in pts.items()))


def random_labels(rng: np.random.Generator, g: GridSet, profile) -> SpectralDatum:
    """Valid K-theory labels: component classes summing to the unit, random hole indices."""
    comps = connected_components(g)
    k0 = profile.k0
    ck = {}
    total = k0.zero()
    for c in comps[:-1]:
        e = k0.element([int(rng.integers(-2, 3)) for _ in range(k0.length)]) if k0.length else k0.zero()
        ck[c.id] = e
        total = k_add(total, e)
    ck[comps[-1].id] = k_add(profile.unit_class, -total)
    hk = {}
    for h in complement_components(g).holes:
        hk[h.id] = profile.k1.element([int(rng.integers(-1, 2)) for _ in range(profile.k1.length)]) if profile.k1.length else profile.k1.zero()
    return SpectralDatum(g, profile, ck, hk)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one summary line per acceptance criterion, collected from the test outcomes
_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _CRITERIA[number] = (title, "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title}")
