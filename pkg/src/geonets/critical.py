"""Grove-Shiohama critical points of distance functions.

``q`` is critical for ``d_p`` when every tangent direction at ``q`` is within
a right angle of the initial direction of some minimal geodesic from ``q`` to
``p``. Equivalently the origin lies in the convex hull of those directions,
which is how it is tested here (a small linear program, cross-checked in the
tangent plane by the largest angular gap between directions).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from geonets import shooting
from geonets.manifold import DirectionSet, Finite, FullSphere, Manifold, ShootingError
from geonets.net import Net, distinct_points, flower_is_minimizing

__all__ = [
    "CriticalScanReport",
    "DirectionSet",
    "Finite",
    "FlowerBound",
    "FullSphere",
    "PolarGrid",
    "flower_length_bound",
    "gap_critical",
    "hull_distance",
    "is_gs_critical",
    "is_mutually_critical",
    "polar_grid",
    "scan_critical",
    "uniqueness_check",
]

HULL_TOL = 1e-8


def hull_distance(vectors) -> float:
    """L-infinity distance from the origin to the convex hull of ``vectors``.

    Solved as the LP: minimise t subject to |sum_k l_k v_k|_i <= t,
    sum l = 1, l >= 0.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    k, d = V.shape
    c = np.zeros(k + 1)
    c[-1] = 1.0
    # rows: V^T l - t <= 0 and -V^T l - t <= 0
    A_ub = np.block([[V.T, -np.ones((d, 1))], [-V.T, -np.ones((d, 1))]])
    b_ub = np.zeros(2 * d)
    A_eq = np.concatenate([np.ones(k), [0.0]])[None]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=[(0, None)] * (k + 1), method="highs")
    if not res.success:
        raise RuntimeError(f"hull LP failed: {res.message}")
    return float(res.x[-1])


def gap_critical(angles, tol: float = 2 * HULL_TOL) -> bool:
    """Directions given by angles in a tangent plane surround the origin iff
    no circular gap between consecutive directions exceeds pi."""
    a = np.sort(np.mod(np.asarray(angles, dtype=float), 2.0 * np.pi))
    if a.size == 0:
        return False
    gaps = np.diff(np.concatenate([a, [a[0] + 2.0 * np.pi]]))
    return bool(gaps.max() <= math.pi + tol)


def critical_from_directions(W: DirectionSet, tol: float = HULL_TOL) -> bool:
    if W.is_full:
        return True
    if len(W) == 1:
        return False
    coords = W.directions @ W.basis.T
    inside = hull_distance(coords) <= tol
    if inside != gap_critical(W.angles(), 2.0 * tol):
        warnings.warn(
            f"hull and angular-gap criticality tests disagree at {W.base.tolist()}",
            RuntimeWarning,
            stacklevel=2,
        )
    return inside


def is_gs_critical(m: Manifold, q, p, tol: float = HULL_TOL) -> bool:
    """Whether ``q`` is a Grove-Shiohama critical point of ``d_p``."""
    return critical_from_directions(m.minimal_directions(q, p), tol)


def is_mutually_critical(m: Manifold, p, q, tol: float = HULL_TOL) -> bool:
    return is_gs_critical(m, q, p, tol) and is_gs_critical(m, p, q, tol)


@dataclass
class PolarGrid:
    """Geodesic polar grid ``exp_p(r u(theta))`` around ``center``."""

    center: np.ndarray
    radii: np.ndarray
    angles: np.ndarray
    points: np.ndarray  # (n_angles, n_radii, dim)

    def describe(self) -> dict:
        return {
            "type": "geodesic-polar",
            "center": self.center.tolist(),
            "n_radii": int(len(self.radii)),
            "n_angles": int(len(self.angles)),
            "radius_min": float(self.radii[0]),
            "radius_max": float(self.radii[-1]),
        }

    @property
    def cell(self) -> float:
        dr = float(self.radii[1] - self.radii[0]) if len(self.radii) > 1 else float(self.radii[0])
        return dr


def polar_grid(
    m: Manifold,
    p,
    step_deg: float = 2.0,
    max_radius: float | None = None,
    n_radii: int | None = None,
    n_angles: int | None = None,
) -> PolarGrid:
    """Polar grid with angular step ``step_deg`` and radii ``r_max * j / n``,
    ``j = 1..n``; ``p`` itself is excluded.

    ``max_radius`` defaults to the diameter. Without ``n_radii`` the radial
    step is ``step_deg`` converted to radians.
    """
    p = m.point(p)
    if max_radius is None:
        if not math.isfinite(m.diameter):
            raise ValueError(f"{m.name} is unbounded: give max_radius")
        max_radius = m.diameter
    if n_radii is None:
        n_radii = max(1, round(max_radius / math.radians(step_deg)))
    if n_angles is None:
        n_angles = max(1, round(360.0 / step_deg))
    radii = max_radius * np.arange(1, n_radii + 1) / n_radii
    angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
    B = m.tangent_basis(p)
    steps = None
    if not m.analytic:
        steps = n_radii * math.ceil(shooting.steps_for(max_radius) / n_radii)
    pts = np.empty((n_angles, n_radii, len(p)))
    for i, t in enumerate(angles):
        X, _ = m.geodesic(p, math.cos(t) * B[0] + math.sin(t) * B[1], radii, steps=steps)
        pts[i] = [m.project(x) for x in X]
    return PolarGrid(p, radii, angles, pts)


@dataclass
class CriticalHit:
    point: np.ndarray
    distance: float
    grid_index: tuple[int, int]


@dataclass
class CriticalScanReport:
    base: np.ndarray
    grid: dict
    hits: list[CriticalHit]
    distinct: list[np.ndarray]
    critical_radius: float
    failures: list[tuple[tuple[int, int], str]] = field(default_factory=list)
    n_points: int = 0

    def to_dict(self) -> dict:
        return {
            "base": self.base.tolist(),
            "grid": self.grid,
            "n_points": self.n_points,
            "critical_points": [
                {"coords": h.point.tolist(), "distance": h.distance, "grid_index": list(h.grid_index)} for h in self.hits
            ],
            "distinct_critical_points": [x.tolist() for x in self.distinct],
            "critical_radius": self.critical_radius,
            "failures": [{"grid_index": list(i), "error": msg} for i, msg in self.failures],
        }

    def rows(self):
        """CSV rows ``(coords..., distance, critical)`` for the hits."""
        for h in self.hits:
            yield [*h.point.tolist(), h.distance, True]


def scan_critical(m: Manifold, p, grid: PolarGrid | None = None, tol: float = HULL_TOL, **grid_kw) -> CriticalScanReport:
    """Test every grid point ``q`` for criticality of ``d_p``.

    Coincident grid points are tested once. Failing points are recorded and
    the scan continues.
    """
    p = m.point(p)
    grid = polar_grid(m, p, **grid_kw) if grid is None else grid
    flat = grid.points.reshape(-1, grid.points.shape[-1])
    index = [(i, j) for i in range(grid.points.shape[0]) for j in range(grid.points.shape[1])]
    # grid rings can collapse (the antipodal ring on the sphere): test each point once
    keys = np.round(np.array([m.project(x) for x in flat]), 9) + 0.0
    _, first = np.unique(keys, axis=0, return_index=True)
    first = np.sort(first)
    flat = flat[first]
    index = [index[k] for k in first]
    sets = m.minimal_directions_toward(p, flat)
    hits: list[CriticalHit] = []
    failures = []
    for (i, j), q, W in zip(index, flat, sets):
        if isinstance(W, Exception):
            failures.append(((i, j), str(W)))
            continue
        try:
            crit = critical_from_directions(W, tol)
        except (RuntimeError, ShootingError) as exc:
            failures.append(((i, j), str(exc)))
            continue
        if crit:
            hits.append(CriticalHit(q, m.distance(p, q), (i, j)))
    distinct = distinct_points(m, [h.point for h in hits], tol=1e-6)
    radius = max((h.distance for h in hits), default=0.0)
    return CriticalScanReport(p, grid.describe(), hits, distinct, radius, failures, len(flat))


def uniqueness_check(m: Manifold, p, q, tol: float = HULL_TOL, **grid_kw) -> bool:
    """Scan ``d_p`` and ``d_q``: the only critical points found must be
    ``q`` and ``p`` respectively (to within one grid cell)."""
    p = m.point(p)
    q = m.point(q)
    if not is_mutually_critical(m, p, q, tol):
        raise ValueError("precondition failed: p and q are not mutually critical")
    for a, b in ((p, q), (q, p)):
        grid = polar_grid(m, a, **grid_kw)
        rep = scan_critical(m, a, grid, tol)
        if rep.failures:
            return False
        if any(not m.same_point(h.point, b, grid.cell) for h in rep.hits):
            return False
    return True


@dataclass
class FlowerBound:
    petals: int
    radius: float
    bound: float
    total_length: float
    halfway_critical: list[bool]
    halfway_distance: list[float]
    satisfied: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def flower_length_bound(net: Net, R_p: float, tol: float = 1e-8) -> FlowerBound:
    """Check a minimizing flower against the bound ``2 m R_p`` on its length.

    Each halfway point must be critical for the distance from the flower
    vertex and lie within ``R_p`` of it.
    """
    if net.flower is None:
        raise ValueError("flower_length_bound needs a flower net")
    if not flower_is_minimizing(net):
        raise ValueError("precondition failed: flower is not minimizing")
    m = net.manifold
    p = net.point(net.flower.center)
    crit = []
    dist = []
    for petal in net.flower.petals:
        h = net.point(petal.halfway)
        crit.append(is_gs_critical(m, h, p))
        dist.append(m.distance(p, h))
    n = len(net.flower.petals)
    bound = 2.0 * n * R_p
    total = net.total_length()
    ok = all(crit) and all(d <= R_p + tol for d in dist) and total <= bound + tol
    return FlowerBound(n, R_p, bound, total, crit, dist, ok)
