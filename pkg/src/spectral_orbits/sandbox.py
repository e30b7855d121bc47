"""Finite-dimensional realizations of the orbit constructions.

Matrices are plain ``numpy`` complex arrays; the operator norm is the largest
singular value.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import point_hausdorff
from .matching import PairingPlan, plan_validate

DEFAULT_TOL = 1e-10


class PreconditionError(ValueError):
    """The input violates the hypothesis a construction depends on."""


def opnorm(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


@dataclass(frozen=True)
class NormalMatrixModel:
    """A diagonal normal matrix: distinct eigenvalues with multiplicities."""

    eigenvalues: tuple
    multiplicities: tuple

    def __post_init__(self) -> None:
        ev = tuple(complex(z) for z in self.eigenvalues)
        mult = tuple(int(m) for m in self.multiplicities)
        if not ev:
            raise ValueError("a model needs at least one eigenvalue")
        if len(ev) != len(mult):
            raise ValueError("eigenvalues and multiplicities differ in length")
        if len(set(ev)) != len(ev):
            raise ValueError("eigenvalues must be pairwise distinct")
        if any(m < 1 for m in mult):
            raise ValueError("multiplicities must be positive")
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "multiplicities", mult)

    @property
    def dimension(self) -> int:
        return sum(self.multiplicities)

    def diagonal(self) -> np.ndarray:
        return np.repeat(np.array(self.eigenvalues, dtype=complex), self.multiplicities)

    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal())


def realize_spectrum(points: Sequence[complex]) -> NormalMatrixModel:
    """Diagonal model whose spectrum is ``points`` (repeats become multiplicity)."""
    counts = Counter(complex(z) for z in points)
    if not counts:
        raise ValueError("cannot realize an empty spectrum")
    ev = list(counts)  # insertion order
    return NormalMatrixModel(tuple(ev), tuple(counts[z] for z in ev))


def _as_matrix(m) -> np.ndarray:
    if isinstance(m, NormalMatrixModel):
        return m.matrix()
    return np.asarray(m, dtype=complex)


@dataclass
class PlanExecution:
    m1: np.ndarray
    m2: np.ndarray
    u: np.ndarray
    achieved: float

    def __iter__(self):
        return iter((self.m1, self.m2, self.u, self.achieved))


def execute_plan(p: PairingPlan) -> PlanExecution:
    """Realize a plan as diagonal matrices and the permutation unitary pairing them.

    Each matched fragment gets one coordinate. Side 1 is laid out in match
    order, side 2 in fragment-id order, and ``U`` sends coordinate ``k`` of
    side 1 to the side-2 coordinate of its partner, so ``U* M2 U`` is diagonal.
    """
    problems = plan_validate(p)
    if problems:
        raise ValueError("invalid plan: " + "; ".join(problems))
    frag = p.fragments()
    pairs = p.pairs()
    side2 = sorted(b for _, b in pairs)
    pos2 = {f: i for i, f in enumerate(side2)}
    n = len(pairs)
    d1 = np.array([frag[a][1] for a, _ in pairs], dtype=complex)
    d2 = np.array([frag[f][1] for f in side2], dtype=complex)
    u = np.zeros((n, n), dtype=complex)
    for k, (_, b) in enumerate(pairs):
        u[pos2[b], k] = 1.0
    # the conjugated matrix is diagonal, so its norm distance is the largest entry gap
    achieved = max(abs(frag[a][1] - frag[b][1]) for a, b in pairs)
    if achieved != p.cost:
        raise AssertionError(f"achieved {achieved} differs from plan cost {p.cost}")
    return PlanExecution(np.diag(d1), np.diag(d2), u, achieved)


def is_unitary(u: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    eye = np.eye(u.shape[0])
    return opnorm(u.conj().T @ u - eye) <= tol and opnorm(u @ u.conj().T - eye) <= tol


def lower_bound_check(m1, m2, u, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``||M1 - U* M2 U|| >= d_H(spec M1, spec M2) - tol`` for normal ``M1, M2``."""
    a, b, u = _as_matrix(m1), _as_matrix(m2), np.asarray(u, dtype=complex)
    if a.shape != b.shape or u.shape != a.shape:
        raise ValueError("dimension mismatch")
    if not is_unitary(u, max(tol, 1e-9)):
        raise ValueError("U is not unitary")
    dist = opnorm(a - u.conj().T @ b @ u)
    dh = point_hausdorff(np.linalg.eigvals(a), np.linalg.eigvals(b))
    return dist >= dh - tol


def polar_unitary(z: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Unitary factor ``U`` of ``Z = U |Z|`` for invertible ``Z``."""
    left, s, right = np.linalg.svd(z)
    if s[-1] <= tol * max(1.0, s[0]):
        raise np.linalg.LinAlgError("singular matrix has no unitary polar factor")
    return left @ right


def _check_projection(p: np.ndarray, name: str, tol: float) -> None:
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError(f"{name} must be square")
    if opnorm(p - p.conj().T) > tol or opnorm(p @ p - p) > tol:
        raise ValueError(f"{name} is not an orthogonal projection")


def projection_conjugator(P, Q, V, tol: float = 1e-8) -> tuple[np.ndarray, float]:
    """Unitary ``W`` with ``W P W* = Q`` when ``V P V^-1`` is within 1/2 of ``Q``.

    With ``P0 = V P V^-1`` the matrix ``Z = P0 Q + (I - P0)(I - Q)`` satisfies
    ``Z Q = P0 Z`` and is invertible. Hence ``S = Z^-1 V`` conjugates ``P``
    onto ``Q`` and its unitary polar factor does too. (The polar factor of
    ``U* V``, with ``U`` the polar factor of ``Z``, agrees with this only when
    ``P0`` is self-adjoint, i.e. essentially when ``V`` is unitary.)
    Returns ``(W, ||W P W* - Q||)``.
    """
    P, Q, V = (np.asarray(x, dtype=complex) for x in (P, Q, V))
    _check_projection(P, "P", tol)
    _check_projection(Q, "Q", tol)
    if P.shape != Q.shape or V.shape != P.shape:
        raise ValueError("dimension mismatch")
    n = P.shape[0]
    eye = np.eye(n)
    try:
        vinv = np.linalg.inv(V)
    except np.linalg.LinAlgError as exc:
        raise ValueError("V is not invertible") from exc
    p0 = V @ P @ vinv
    gap = opnorm(Q - p0)
    if not gap < 0.5:
        raise PreconditionError(f"hypothesis violated: ||Q - V P V^-1|| = {gap:.6g} is not below 1/2")
    z = p0 @ Q + (eye - p0) @ (eye - Q)
    w = polar_unitary(np.linalg.solve(z, V), tol=1e-14)
    err = opnorm(w @ P @ w.conj().T - Q)
    return w, err


def block_diagonal_part(a: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    out = np.zeros_like(a)
    start = 0
    for d in dims:
        out[start : start + d, start : start + d] = a[start : start + d, start : start + d]
        start += d
    return out


def triangular_similarity(diagonal: Sequence[tuple[complex, int]], strict_upper) -> tuple[np.ndarray, float]:
    """Invertible ``T`` removing the strictly upper blocks of ``D + X``.

    ``diagonal`` lists ``(scalar, block size)``; ``strict_upper`` is the full
    matrix ``X``, zero outside the strictly upper block triangle. Block rows
    are cleared one at a time with ``T = I + Y``, ``Y = X (lambda I - Z)^-1``,
    whose inverse is ``I - Y``. Returns ``(T, ||T A T^-1 - D||)``.
    """
    lams = [complex(l) for l, _ in diagonal]
    dims = [int(d) for _, d in diagonal]
    if len(set(lams)) != len(lams):
        raise ValueError("distinct scalars required")
    if any(d < 1 for d in dims):
        raise ValueError("block sizes must be positive")
    n = sum(dims)
    x = np.asarray(strict_upper, dtype=complex)
    if x.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix")
    offsets = np.cumsum([0] + dims)
    for i in range(len(dims)):
        for j in range(i + 1):
            if np.any(x[offsets[i] : offsets[i + 1], offsets[j] : offsets[j + 1]]):
                raise ValueError("strict_upper has entries on or below the block diagonal")
    d = np.diag(np.repeat(np.array(lams), dims))
    a = d + x
    cur = a.copy()
    t_total = np.eye(n, dtype=complex)
    for k, lam in enumerate(lams[:-1]):
        lo, hi = offsets[k], offsets[k + 1]
        xk = cur[lo:hi, hi:]
        if not np.any(xk):
            continue
        zk = cur[hi:, hi:]
        y = np.linalg.solve((lam * np.eye(n - hi) - zk).T, xk.T).T
        t = np.eye(n, dtype=complex)
        t[lo:hi, hi:] = y
        t_inv = np.eye(n, dtype=complex)
        t_inv[lo:hi, hi:] = -y
        cur = t @ cur @ t_inv
        t_total = t @ t_total
    err = opnorm(t_total @ a @ np.linalg.inv(t_total) - d)
    return t_total, err


@dataclass(frozen=True)
class AnalyticBound:
    lhs: float
    rhs: float
    quadrature_error: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.quadrature_error


def _polygon_nodes(contour: Sequence[complex], per_edge: int) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid nodes and complex weights ``dz`` on a closed polygon."""
    verts = [complex(z) for z in contour]
    if len(verts) > 1 and verts[0] == verts[-1]:
        verts = verts[:-1]
    if len(verts) < 3:
        raise ValueError("contour needs at least three vertices")
    steps = [(b - a) / per_edge for a, b in zip(verts, verts[1:] + verts[:1])]
    nodes, weights = [], []
    for e, (a, h) in enumerate(zip(verts, steps)):
        nodes += [a + k * h for k in range(per_edge)]
        # a vertex node carries half of each adjacent step
        weights += [(h + steps[e - 1]) / 2] + [h] * (per_edge - 1)
    return np.array(nodes), np.array(weights)


def _winding(contour: Sequence[complex], pts: np.ndarray) -> np.ndarray:
    verts = np.array([complex(z) for z in contour])
    if verts[0] == verts[-1]:
        verts = verts[:-1]
    nxt = np.roll(verts, -1)
    ang = np.zeros(len(pts))
    for a, b in zip(verts, nxt):
        ang += np.angle((b - pts) / (a - pts))
    return np.rint(ang / (2 * np.pi)).astype(int)


def _segment_distance(contour: Sequence[complex], pts: np.ndarray) -> float:
    verts = np.array([complex(z) for z in contour])
    if verts[0] == verts[-1]:
        verts = verts[:-1]
    best = np.inf
    for a, b in zip(verts, np.roll(verts, -1)):
        t = np.clip(((pts - a) * np.conj(b - a)).real / abs(b - a) ** 2, 0, 1)
        best = min(best, float(np.min(np.abs(pts - (a + t * (b - a))))))
    return best


def contour_calculus(a: np.ndarray, f: Callable, contour: Sequence[complex], per_edge: int) -> np.ndarray:
    """``f(A)`` by the trapezoid rule applied to the Cauchy integral on ``contour``."""
    z, w = _polygon_nodes(contour, per_edge)
    fz = np.asarray(f(z), dtype=complex) * np.ones(len(z))
    n = a.shape[0]
    eye = np.eye(n)
    out = np.zeros((n, n), dtype=complex)
    for zk, wk, fk in zip(z, w, fz):
        out += fk * wk * np.linalg.inv(zk * eye - a)
    return out / (2j * np.pi)


def analytic_calculus_bound(A, B, V, f: Callable, contour: Sequence[complex], per_edge: int = 64) -> AnalyticBound:
    """Check ``||f(A) - V f(B) V^-1|| <= (L / 2 pi) ||A - V B V^-1|| sup |f| ||R_A|| ||R_C||``.

    ``C = V B V^-1``; the supremum runs over the quadrature nodes. Both sides
    use the same nodes, so the discretized inequality holds term by term; the
    reported quadrature error compares against a rule with twice the nodes.
    """
    A, B, V = (np.asarray(x, dtype=complex) for x in (A, B, V))
    vinv = np.linalg.inv(V)
    C = V @ B @ vinv
    spec = np.concatenate([np.linalg.eigvals(A), np.linalg.eigvals(B), np.linalg.eigvals(C)])
    if _segment_distance(contour, spec) <= 1e-12:
        raise ValueError("contour meets the spectrum")
    if np.any(_winding(contour, spec) != 1):
        raise ValueError("contour must wind once around every spectrum")
    n = A.shape[0]
    eye = np.eye(n)
    z, w = _polygon_nodes(contour, per_edge)
    fz = np.asarray(f(z), dtype=complex) * np.ones(len(z))
    verts = np.array([complex(c) for c in contour])
    length = float(np.sum(np.abs(np.diff(np.append(verts, verts[0])))))
    sup = 0.0
    for zk, fk in zip(z, fz):
        ra = opnorm(np.linalg.inv(zk * eye - A))
        rc = opnorm(np.linalg.inv(zk * eye - C))
        sup = max(sup, abs(fk) * ra * rc)
    rhs = float(length / (2 * np.pi) * opnorm(A - C) * sup)
    fa = contour_calculus(A, f, contour, per_edge)
    fb = contour_calculus(B, f, contour, per_edge)
    lhs = opnorm(fa - V @ fb @ vinv)
    fa2 = contour_calculus(A, f, contour, 2 * per_edge)
    fb2 = contour_calculus(B, f, contour, 2 * per_edge)
    quad = opnorm(fa - fa2) + opnorm(V @ (fb - fb2) @ vinv)
    # floating-point floor for the accumulated resolvent sums
    quad += 1e-12 * (1 + opnorm(fa) + opnorm(V) * opnorm(fb) * opnorm(vinv))
    return AnalyticBound(lhs, rhs, quad)


def semicontinuity_probe(sequence: Sequence[NormalMatrixModel], disk: tuple[complex, float], start: int = 0) -> int | None:
    """Least index from which every model's spectrum meets the open disk.

    Indices count from ``start``. ``None`` means the last (limit) model
    already misses the disk, so nothing can be certified.
    """
    center, radius = complex(disk[0]), float(disk[1])
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not sequence:
        raise ValueError("empty sequence")
    hits = [bool(np.any(np.abs(np.array(m.eigenvalues) - center) < radius)) for m in sequence]
    if not hits[-1]:
        return None
    k = len(hits) - 1
    while k > 0 and hits[k - 1]:
        k -= 1
    return start + k
