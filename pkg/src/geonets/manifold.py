"""Model surfaces: round sphere, real projective plane, Euclidean plane and
surfaces of revolution (paraboloid, spheroids, polynomial profiles).

Points are plain numpy arrays. Sphere-like surfaces and surfaces of
revolution use embedded 3-vectors, the plane uses 2-vectors. Tangent vectors
live in the same ambient space, so the metric is the ambient dot product in
every case.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from geonets import shooting
from geonets.shooting import ChartExitError, ShootingError

__all__ = [
    "ChartExitError",
    "DirectionSet",
    "DistanceError",
    "Finite",
    "FullSphere",
    "Manifold",
    "Paraboloid",
    "Plane",
    "RealProjective2",
    "RevolutionSurface",
    "RoundSphere2",
    "Shot",
    "ShootingError",
    "distance",
    "gaussian_curvature",
    "get_manifold",
    "minimal_directions",
    "spheroid",
]

ANTIPODAL_TOL = 1e-10
DEDUP_ANGLE = 1e-6


class DistanceError(ShootingError):
    """Numerical distance could not be established."""


@dataclass(frozen=True)
class Shot:
    """A geodesic from a known start: unit initial direction and length.

    ``steps`` records the RK4 discretisation of numerically shot geodesics so
    the same curve can be reproduced exactly; analytic geodesics leave it None.
    """

    direction: np.ndarray
    length: float
    steps: int | None = None


@dataclass(frozen=True)
class Connections:
    shots: list
    focal: bool = False
    complete: bool = True


class DirectionSet:
    """Unit initial directions at ``base`` of the minimal geodesics to a target."""

    is_full = False

    def __init__(self, base, basis):
        self.base = np.asarray(base, dtype=float)
        self.basis = np.asarray(basis, dtype=float)

    def sample(self, k: int | None = None) -> np.ndarray:
        raise NotImplementedError

    def angles(self, k: int | None = None) -> np.ndarray:
        """Angles of the (sampled) directions in the tangent frame ``basis``."""
        d = self.sample(k)
        return np.mod(np.arctan2(d @ self.basis[1], d @ self.basis[0]), 2.0 * np.pi)


class Finite(DirectionSet):
    def __init__(self, base, basis, directions):
        super().__init__(base, basis)
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        if dirs.shape[0] == 0:
            raise ValueError("a finite direction set must be nonempty")
        kept: list[np.ndarray] = []
        for d in dirs:
            d = d / np.linalg.norm(d)
            if all(_angle(d, k) >= DEDUP_ANGLE for k in kept):
                kept.append(d)
        self.directions = np.array(kept)

    def sample(self, k=None):
        return self.directions

    def __len__(self):
        return len(self.directions)

    def __repr__(self):
        return f"Finite({len(self)} directions at {np.round(self.base, 6).tolist()})"


class FullSphere(DirectionSet):
    """Every unit tangent direction at ``base`` is minimal (a focal target).

    Consumers needing a finite set call :meth:`sample`, which returns
    ``resolution`` equally spaced directions.
    """

    is_full = True

    def __init__(self, base, basis, resolution: int = 64):
        super().__init__(base, basis)
        self.resolution = resolution

    def sample(self, k=None):
        k = self.resolution if k is None else k
        t = 2.0 * np.pi * np.arange(k) / k
        return np.cos(t)[:, None] * self.basis[0] + np.sin(t)[:, None] * self.basis[1]

    def __len__(self):
        return self.resolution

    def __repr__(self):
        return f"FullSphere(at {np.round(self.base, 6).tolist()})"


def _angle(u, v):
    return math.atan2(np.linalg.norm(np.cross(u, v)) if len(u) == 3 else abs(u[0] * v[1] - u[1] * v[0]), float(u @ v))


def _unit(v):
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero vector has no direction")
    return v / n


def _sphere_basis(x):
    ref = np.array([1.0, 0.0, 0.0]) if abs(x[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = _unit(ref - (ref @ x) * x)
    return np.stack([e1, np.cross(x, e1)])


@dataclass(frozen=True, eq=False)
class Manifold:
    """Common surface interface; concrete surfaces override the geometry."""

    name: str = "manifold"
    kind: str = "abstract"
    curvature_lower_bound: float = 0.0
    injectivity_radius: float | None = None
    diameter: float = math.inf
    ambient_dim: int = 3
    analytic: bool = True

    @property
    def minimality_tol(self) -> float:
        return 1e-7 if self.analytic else 1e-5

    @property
    def angle_tol(self) -> float:
        return 1e-8 if self.analytic else 1e-5

    @property
    def length_cap_scale(self) -> float:
        return 2.0

    # points and tangent spaces

    def point(self, coords) -> np.ndarray:
        x = self.project(np.asarray(coords, dtype=float))
        return x

    def project(self, x):
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-10) -> bool:
        return bool(np.linalg.norm(self.project(x) - x) <= tol)

    def same_point(self, x, y, tol: float = 1e-8) -> bool:
        return bool(np.linalg.norm(np.asarray(x) - np.asarray(y)) <= tol)

    def tangent_basis(self, x) -> np.ndarray:
        raise NotImplementedError

    def to_tangent(self, x, v):
        B = self.tangent_basis(x)
        return (B @ v) @ B

    def norm(self, x, v) -> float:
        return float(np.linalg.norm(v))

    def inner(self, x, u, v) -> float:
        return float(np.dot(u, v))

    def angle(self, x, u, v) -> float:
        return _angle(np.asarray(u, float), np.asarray(v, float))

    def transfer(self, base, lifted, v):
        """Express ``v``, tangent at ``lifted``, as a vector at ``base``.

        Identity except on quotients, where ``lifted`` may be another
        representative of ``base``.
        """
        return np.asarray(v, dtype=float)

    def random_point(self, rng) -> np.ndarray:
        raise NotImplementedError

    def random_unit_tangent(self, x, rng) -> np.ndarray:
        t = rng.uniform(0.0, 2.0 * np.pi)
        B = self.tangent_basis(x)
        return math.cos(t) * B[0] + math.sin(t) * B[1]

    # geodesics

    def geodesic(self, x, u, lengths, steps: int | None = None):
        """Positions and unit velocities at arc lengths ``lengths`` along ``u``."""
        raise NotImplementedError

    def exp(self, x, v, steps: int | None = None):
        n = float(np.linalg.norm(v))
        if n == 0.0:
            return np.array(x, dtype=float)
        X, _ = self.geodesic(x, np.asarray(v) / n, np.array([n]), steps=steps)
        return X[-1]

    def distance(self, x, y) -> float:
        raise NotImplementedError

    def connecting(self, x, y, cap: float | None = None) -> Connections:
        raise NotImplementedError

    def minimal(self, x, y) -> Connections:
        raise NotImplementedError

    def branch(self, x, y, u_hint, length_hint) -> Shot:
        raise NotImplementedError

    def minimal_directions(self, q, p) -> DirectionSet:
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        if self.same_point(q, p, 1e-12):
            raise ValueError("minimal directions undefined for p = q")
        con = self.minimal(q, p)
        B = self.tangent_basis(q)
        if con.focal:
            return FullSphere(q, B)
        return Finite(q, B, [s.direction for s in con.shots])

    def minimal_directions_toward(self, p, targets) -> list[DirectionSet]:
        """``minimal_directions(q, p)`` for every ``q`` in ``targets``.

        Failures are returned in place of the direction set.
        """
        out: list[DirectionSet | Exception] = []
        for q in targets:
            try:
                out.append(self.minimal_directions(q, p))
            except (ShootingError, ValueError) as exc:
                out.append(exc)
        return out

    def gaussian_curvature(self, x) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"id": self.name, "kind": self.kind}


@dataclass(frozen=True, eq=False)
class RoundSphere2(Manifold):
    name: str = "s2"
    kind: str = "RoundSphere2"
    curvature_lower_bound: float = 1.0
    injectivity_radius: float | None = math.pi
    diameter: float = math.pi

    def project(self, x):
        return _unit(np.asarray(x, dtype=float))

    def contains(self, x, tol=1e-12):
        return abs(float(np.linalg.norm(x)) - 1.0) <= tol

    def tangent_basis(self, x):
        return _sphere_basis(np.asarray(x, dtype=float))

    def to_tangent(self, x, v):
        return v - (v @ x) * x

    def random_point(self, rng):
        return _unit(rng.normal(size=3))

    def geodesic(self, x, u, lengths, steps=None):
        t = np.asarray(lengths, dtype=float)[:, None]
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        return np.cos(t) * x + np.sin(t) * u, -np.sin(t) * x + np.cos(t) * u

    def distance(self, x, y):
        return float(math.atan2(np.linalg.norm(np.cross(x, y)), float(np.dot(x, y))))

    def antipodal(self, x, y) -> bool:
        return bool(np.linalg.norm(np.asarray(x) + np.asarray(y)) <= ANTIPODAL_TOL)

    def _toward(self, x, y):
        w = y - (y @ x) * x
        return _unit(w)

    def connecting(self, x, y, cap=None):
        cap = 2.0 * math.pi if cap is None else cap
        if self.antipodal(x, y):
            e = self.tangent_basis(x)[0]
            return Connections([Shot(e, math.pi)], focal=True)
        d = self.distance(x, y)
        if d == 0.0:
            raise ValueError("no connecting geodesic for p = q")
        t = self._toward(x, y)
        shots = []
        k = 0
        while d + 2 * math.pi * k <= cap + 1e-12 or 2 * math.pi - d + 2 * math.pi * k <= cap + 1e-12:
            if d + 2 * math.pi * k <= cap + 1e-12:
                shots.append(Shot(t, d + 2 * math.pi * k))
            if 2 * math.pi - d + 2 * math.pi * k <= cap + 1e-12:
                shots.append(Shot(-t, 2 * math.pi - d + 2 * math.pi * k))
            k += 1
        shots.sort(key=lambda s: s.length)
        return Connections(shots)

    def minimal(self, x, y):
        con = self.connecting(x, y, cap=math.pi)
        return Connections([con.shots[0]], focal=con.focal)

    def branch(self, x, y, u_hint, length_hint):
        u_hint = self.to_tangent(x, np.asarray(u_hint, dtype=float))
        if self.antipodal(x, y):
            u = _unit(u_hint) if np.linalg.norm(u_hint) > 1e-12 else self.tangent_basis(x)[0]
            k = max(0, round((length_hint - math.pi) / (2 * math.pi)))
            return Shot(u, math.pi + 2 * math.pi * k)
        d = self.distance(x, y)
        t = self._toward(x, y)
        u, base = (t, d) if t @ u_hint >= 0 else (-t, 2 * math.pi - d)
        k = max(0, round((length_hint - base) / (2 * math.pi)))
        return Shot(u, base + 2 * math.pi * k)

    def gaussian_curvature(self, x):
        return 1.0


@dataclass(frozen=True, eq=False)
class RealProjective2(Manifold):
    """Round RP^2 as the quotient of the unit sphere by ``x ~ -x``.

    Points are stored by the canonical representative whose first nonzero
    coordinate is positive. Geodesics are computed on lifts; their sampled
    polylines stay on the sphere and are not canonicalised.
    """

    name: str = "rp2"
    kind: str = "RealProjective2"
    curvature_lower_bound: float = 1.0
    injectivity_radius: float | None = math.pi / 2
    diameter: float = math.pi / 2

    @staticmethod
    def canonical(x):
        x = _unit(np.asarray(x, dtype=float))
        for c in x:
            if abs(c) > 1e-12:
                return x if c > 0 else -x
        return x

    def project(self, x):
        return self.canonical(x)

    def contains(self, x, tol=1e-12):
        return abs(float(np.linalg.norm(x)) - 1.0) <= tol

    def same_point(self, x, y, tol=1e-8):
        x = np.asarray(x)
        y = np.asarray(y)
        return bool(min(np.linalg.norm(x - y), np.linalg.norm(x + y)) <= tol)

    def tangent_basis(self, x):
        return _sphere_basis(np.asarray(x, dtype=float))

    def to_tangent(self, x, v):
        return v - (v @ x) * x

    def transfer(self, base, lifted, v):
        base = np.asarray(base)
        lifted = np.asarray(lifted)
        if np.linalg.norm(lifted + base) < np.linalg.norm(lifted - base):
            return -np.asarray(v, dtype=float)
        return np.asarray(v, dtype=float)

    def random_point(self, rng):
        return self.canonical(rng.normal(size=3))

    def geodesic(self, x, u, lengths, steps=None):
        return RoundSphere2.geodesic(self, x, u, lengths)

    def distance(self, x, y):
        d = RoundSphere2.distance(self, x, y)
        return min(d, math.pi - d)

    def _line(self, x, y):
        """Direction ``t`` at ``x`` toward the lift of ``y`` along the great
        circle, and the sphere distance ``d`` to that lift."""
        d = RoundSphere2.distance(self, x, y)
        if d == 0.0 or d == math.pi:
            raise ValueError("no connecting geodesic for p = q")
        w = y - (y @ x) * x
        return _unit(w), d

    def connecting(self, x, y, cap=None):
        cap = 2.0 * self.diameter if cap is None else cap
        t, d = self._line(np.asarray(x, float), np.asarray(y, float))
        shots = []
        k = 0
        # along t the lifts of y sit at d + k*pi, along -t at (pi - d) + k*pi
        while min(d, math.pi - d) + k * math.pi <= cap + 1e-12:
            if d + k * math.pi <= cap + 1e-12:
                shots.append(Shot(t, d + k * math.pi))
            if math.pi - d + k * math.pi <= cap + 1e-12:
                shots.append(Shot(-t, math.pi - d + k * math.pi))
            k += 1
        shots.sort(key=lambda s: s.length)
        return Connections(shots)

    def minimal(self, x, y, tie_tol: float = 1e-9):
        con = self.connecting(x, y, cap=math.pi / 2 + tie_tol)
        best = con.shots[0].length
        return Connections([s for s in con.shots if s.length <= best + tie_tol])

    def branch(self, x, y, u_hint, length_hint):
        x = np.asarray(x, float)
        u_hint = self.to_tangent(x, np.asarray(u_hint, dtype=float))
        t, d = self._line(x, np.asarray(y, float))
        u, base = (t, d) if t @ u_hint >= 0 else (-t, math.pi - d)
        k = max(0, round((length_hint - base) / math.pi))
        return Shot(u, base + k * math.pi)

    def gaussian_curvature(self, x):
        return 1.0


@dataclass(frozen=True, eq=False)
class Plane(Manifold):
    name: str = "plane"
    kind: str = "EuclideanPlane"
    curvature_lower_bound: float = 0.0
    injectivity_radius: float | None = math.inf
    diameter: float = math.inf
    ambient_dim: int = 2

    def project(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (2,):
            raise ValueError(f"plane points are 2-vectors, got shape {x.shape}")
        return x

    def contains(self, x, tol=0.0):
        return np.asarray(x).shape == (2,)

    def tangent_basis(self, x):
        return np.eye(2)

    def to_tangent(self, x, v):
        return np.asarray(v, dtype=float)

    def random_point(self, rng):
        return rng.uniform(-2.0, 2.0, size=2)

    def geodesic(self, x, u, lengths, steps=None):
        t = np.asarray(lengths, dtype=float)[:, None]
        u = np.asarray(u, dtype=float)
        return np.asarray(x, float) + t * u, np.repeat(u[None], len(t), axis=0)

    def distance(self, x, y):
        return float(np.linalg.norm(np.asarray(y, float) - np.asarray(x, float)))

    def connecting(self, x, y, cap=None):
        d = self.distance(x, y)
        if d == 0.0:
            raise ValueError("no connecting geodesic for p = q")
        return Connections([Shot((np.asarray(y, float) - x) / d, d)])

    def minimal(self, x, y):
        return self.connecting(x, y)

    def branch(self, x, y, u_hint, length_hint):
        return self.connecting(x, y).shots[0]

    def gaussian_curvature(self, x):
        return 0.0


def _horner3(*coefs):
    """Evaluate several ascending-coefficient polynomials at once (plain
    Horner; the Polynomial class call overhead dominates in the RK4 loop)."""
    coefs = [tuple(float(c) for c in cs[::-1]) for cs in coefs]

    def f(z):
        out = []
        for cs in coefs:
            acc = cs[0] + 0.0 * z
            for c in cs[1:]:
                acc = acc * z + c
            out.append(acc)
        return tuple(out)

    return f


@dataclass(frozen=True, eq=False)
class RevolutionSurface(Manifold):
    """Surface ``x^2 + y^2 = S(z)`` for a polynomial squared radius ``S``.

    A closed surface has ``S(z_min) = S(z_max) = 0`` (two poles on the axis);
    otherwise ``z_max`` may be infinite. Chart coordinates are ``(z, angle)``.
    Distances and minimal geodesics come from fan shooting (``n_fan`` rays)
    refined by Newton's method; ``injectivity_radius`` is None ("unknown"),
    see :meth:`injectivity_radius_estimate`.
    """

    name: str = "revolution"
    kind: str = "SurfaceOfRevolution"
    radius_sq_coef: tuple = (1.0, 0.0, -1.0)
    z_min: float = -1.0
    z_max: float = 1.0
    analytic: bool = False
    n_fan: int = 720
    injectivity_radius: float | None = None
    curvature_lower_bound: float = float("nan")
    diameter: float = float("nan")
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        S = Polynomial(self.radius_sq_coef)
        dS, d2S = S.deriv(1), S.deriv(2)
        geom = shooting.RevolutionGeometry(_horner3(S.coef, dS.coef, d2S.coef), self.z_min, self.z_max)
        object.__setattr__(self, "geom", geom)
        object.__setattr__(self, "_S", (S, dS, d2S))
        if math.isnan(self.curvature_lower_bound):
            object.__setattr__(self, "curvature_lower_bound", self._curvature_estimate())
        if math.isnan(self.diameter):
            object.__setattr__(self, "diameter", self._diameter_estimate())

    @property
    def closed(self) -> bool:
        return math.isfinite(self.z_max) and math.isfinite(self.z_min)

    def profile_radius(self, z) -> float:
        return math.sqrt(max(float(self._S[0](z)), 0.0))

    def _curvature_estimate(self):
        hi = self.z_max if math.isfinite(self.z_max) else self.z_min + 50.0
        zs = np.linspace(self.z_min, hi, 401)
        ks = [self.gaussian_curvature(self.at_height(z)) for z in zs]
        return float(min(ks)) if math.isfinite(self.z_max) else min(0.0, float(min(ks)))

    def _diameter_estimate(self):
        # every point lies within half a meridian of one of the poles,
        # so the full meridian length bounds the diameter
        if not self.closed:
            return math.inf
        return self.meridian_length(self.z_max)

    # chart

    def at_height(self, z, v=0.0):
        r = self.profile_radius(z)
        return np.array([r * math.cos(v), r * math.sin(v), float(z)])

    def from_chart(self, u, v):
        return self.at_height(u, v)

    def to_chart(self, x):
        return float(x[2]), float(math.atan2(x[1], x[0]))

    def meridian_length(self, z) -> float:
        """Arc length along a meridian from the bottom of the profile to height ``z``."""
        S, dS, _ = self._S

        def speed(t):
            s = float(S(t))
            return math.sqrt(1.0 + float(dS(t)) ** 2 / (4.0 * s)) if s > 0 else 0.0

        val, _ = quad(speed, self.z_min, float(z), limit=200)
        return float(val)

    def distance_upper_bound(self, x, y) -> float:
        """Length of an explicit meridian-and-parallel path from ``x`` to ``y``."""
        zx, vx = float(x[2]), math.atan2(x[1], x[0])
        zy, vy = float(y[2]), math.atan2(y[1], y[0])
        dv = abs((vx - vy + math.pi) % (2.0 * math.pi) - math.pi)
        sx, sy = self.meridian_length(zx), self.meridian_length(zy)
        ub = abs(sx - sy) + min(self.profile_radius(zx), self.profile_radius(zy)) * dv
        ub = min(ub, sx + sy)
        if self.closed:
            total = self.meridian_length(self.z_max)
            ub = min(ub, 2.0 * total - sx - sy)
        return ub

    # points and tangent spaces

    def project(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (3,):
            raise ValueError(f"surface points are 3-vectors, got shape {x.shape}")
        return self.geom.project(x[None], iters=4)[0]

    def contains(self, x, tol=1e-9):
        return abs(float(self.geom.residual(np.asarray(x)[None])[0])) <= tol

    def tangent_basis(self, x):
        return self.geom.basis(np.asarray(x, dtype=float))

    def to_tangent(self, x, v):
        return self.geom.tangent(np.asarray(x, float)[None], np.asarray(v, float)[None])[0]

    def random_point(self, rng):
        hi = self.z_max if math.isfinite(self.z_max) else self.z_min + 2.0
        z = rng.uniform(self.z_min, hi)
        return self.from_chart(z, rng.uniform(-math.pi, math.pi))

    def gaussian_curvature(self, x):
        x = np.asarray(x, dtype=float)
        _, dS, d2S = (f(x[2]) for f in self._S)
        g = np.array([2.0 * x[0], 2.0 * x[1], -dS])
        H = np.diag([2.0, 2.0, -d2S])
        bordered = np.zeros((4, 4))
        bordered[:3, :3] = H
        bordered[:3, 3] = g
        bordered[3, :3] = g
        return float(-np.linalg.det(bordered) / (g @ g) ** 2)

    # geodesics

    def geodesic(self, x, u, lengths, steps=None):
        lengths = np.asarray(lengths, dtype=float)
        total = float(lengths[-1])
        x = np.asarray(x, dtype=float)
        u = self.to_tangent(x, np.asarray(u, dtype=float))
        if total == 0.0:
            return np.repeat(x[None], len(lengths), axis=0), np.repeat(_unit(u)[None], len(lengths), axis=0)
        n = shooting.steps_for(total) if steps is None else steps
        XS, VS = self.geom.integrate(x[None], u[None], [total], n, record=True)
        idx = np.rint(lengths / total * n).astype(int)
        off = np.abs(idx * total / n - lengths)
        if np.any(off > 1e-9 * max(1.0, total)):
            raise ValueError("sample lengths must be aligned with the integration grid")
        return XS[0, idx], VS[0, idx]

    def _fan(self, x, cap):
        key = (np.round(np.asarray(x, float), 15).tobytes(), round(cap, 9))
        fan = self._cache.get(key)
        if fan is None:
            if len(self._cache) > 6:
                self._cache.clear()
            fan = shooting.Fan(self.geom, x, cap, n_fan=self.n_fan)
            self._cache[key] = fan
        return fan

    def _direction(self, basis, theta):
        return math.cos(theta) * basis[0] + math.sin(theta) * basis[1]

    def _cap(self, x, y):
        return 1.05 * self.distance_upper_bound(x, y) + 0.05

    def connecting(self, x, y, cap=None):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.same_point(x, y, 1e-12):
            raise ValueError("no connecting geodesic for p = q")
        if cap is None:
            cap = self.length_cap_scale * (self.diameter if self.closed else self.distance_upper_bound(x, y))
        fan = self._fan(x, cap)
        th, L, n, focal, B = shooting.geodesics_between(self.geom, x, y, cap, fan=fan)
        if focal:
            return Connections([Shot(self._direction(B, t), float(s), n) for t, s in zip(th, L)], focal=True)
        if th.size == 0:
            raise DistanceError(
                f"fan shooting from {x.tolist()} found no geodesic to {y.tolist()} "
                f"(n_fan={self.n_fan}, cap={cap:.6g})"
            )
        return Connections([Shot(self._direction(B, t), float(s), n) for t, s in zip(th, L)])

    def minimal(self, x, y, tie_tol: float = 1e-6):
        cap = self._cap(x, y)
        con = self.connecting(x, y, cap=cap)
        if not con.shots:
            raise DistanceError(f"no minimal geodesic found from {list(x)} to {list(y)}")
        best = con.shots[0].length
        return Connections([s for s in con.shots if s.length <= best + tie_tol], focal=con.focal)

    def distance(self, x, y):
        if self.same_point(x, y, 0.0):
            return 0.0
        return float(self.minimal(x, y).shots[0].length)

    def branch(self, x, y, u_hint, length_hint):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        B = self.tangent_basis(x)
        u = self.to_tangent(x, np.asarray(u_hint, float))
        theta = math.atan2(float(u @ B[1]), float(u @ B[0]))
        n = shooting.steps_for(length_hint)
        th, L, res, n = shooting.refine(self.geom, x, B, [theta], [length_hint], y, n_steps=n)
        if res[0] < 1e-9:
            return Shot(self._direction(B, th[0]), float(L[0]), n)
        # warm start lost the branch: enumerate and take the nearest one
        con = self.connecting(x, y, cap=max(2.0 * length_hint, self._cap(x, y)))
        if not con.shots:
            raise DistanceError(f"no geodesic near the requested branch from {x.tolist()} to {y.tolist()}")
        return min(con.shots, key=lambda s: (self.angle(x, s.direction, u), abs(s.length - length_hint)))

    def minimal_directions_toward(self, p, targets, tie_tol: float = 1e-6):
        """Batch version: shoot once from ``p`` and reverse the geodesics."""
        p = np.asarray(p, dtype=float)
        targets = [np.asarray(q, dtype=float) for q in targets]
        if not targets:
            return []
        cap = max(self._cap(p, q) for q in targets)
        fan = self._fan(p, cap)
        out: list[DirectionSet | Exception] = [None] * len(targets)
        todo = []
        for k, q in enumerate(targets):
            if self.same_point(p, q, 1e-12):
                out[k] = ValueError("minimal directions undefined for p = q")
            else:
                todo.append(k)
        sols, n, B = shooting.geodesics_between_many(self.geom, p, [targets[k] for k in todo], cap, fan=fan)
        # one batched shot for the terminal velocities of all kept geodesics
        owners, th_all, L_all = [], [], []
        for k, (th, L, focal) in zip(todo, sols):
            if focal:
                out[k] = FullSphere(targets[k], self.tangent_basis(targets[k]))
            elif th.size == 0:
                out[k] = DistanceError(f"fan shooting from {p.tolist()} found no geodesic to {targets[k].tolist()}")
            else:
                keep = L <= L[0] + tie_tol
                owners.extend([k] * int(keep.sum()))
                th_all.extend(th[keep])
                L_all.extend(L[keep])
        if owners:
            _, V = shooting.shoot(self.geom, p, B, np.array(th_all), np.array(L_all), n)
            owners = np.array(owners)
            for k in np.unique(owners):
                out[k] = Finite(targets[k], self.tangent_basis(targets[k]), -V[owners == k])
        return out


@dataclass(frozen=True, eq=False)
class Paraboloid(RevolutionSurface):
    """``z = (x^2 + y^2) / 2``, chart ``(u, v)`` = (radius, angle).

    Distances from the apex use the closed-form meridian length.
    """

    name: str = "paraboloid"
    kind: str = "Paraboloid"
    radius_sq_coef: tuple = (0.0, 2.0)
    z_min: float = 0.0
    z_max: float = math.inf
    curvature_lower_bound: float = 0.0

    @staticmethod
    def meridian_arc(r: float) -> float:
        """Closed form of the integral of sqrt(1 + t^2) from 0 to ``r``."""
        return 0.5 * (r * math.sqrt(1.0 + r * r) + math.asinh(r))

    def meridian_length(self, z):
        return self.meridian_arc(math.sqrt(max(2.0 * float(z), 0.0)))

    def from_chart(self, u, v):
        return np.array([u * math.cos(v), u * math.sin(v), 0.5 * u * u])

    def to_chart(self, x):
        return float(math.hypot(x[0], x[1])), float(math.atan2(x[1], x[0]))

    def random_point(self, rng):
        return self.from_chart(rng.uniform(0.0, 2.0), rng.uniform(-math.pi, math.pi))

    def is_apex(self, x, tol=1e-12) -> bool:
        return bool(np.linalg.norm(np.asarray(x, float)) <= tol)

    def distance(self, x, y):
        if self.is_apex(x):
            return self.meridian_arc(self.to_chart(y)[0])
        if self.is_apex(y):
            return self.meridian_arc(self.to_chart(x)[0])
        return super().distance(x, y)

    def gaussian_curvature(self, x):
        r = self.to_chart(x)[0]
        return 1.0 / (1.0 + r * r) ** 2


def spheroid(c: float) -> RevolutionSurface:
    """Ellipsoid of revolution with semi-axes ``(1, 1, c)``."""
    return RevolutionSurface(
        name=f"spheroid:{c:g}",
        radius_sq_coef=(1.0, 0.0, -1.0 / (c * c)),
        z_min=-c,
        z_max=c,
    )


def load_profile(path) -> RevolutionSurface:
    """Read ``{"radius_sq_poly": [...], "z_min": .., "z_max": ..}``.

    Coefficients are in increasing degree; ``z_max`` may be null for an
    unbounded surface.
    """
    data = json.loads(Path(path).read_text())
    z_max = data.get("z_max")
    return RevolutionSurface(
        name=f"revolution:{path}",
        radius_sq_coef=tuple(float(c) for c in data["radius_sq_poly"]),
        z_min=float(data["z_min"]),
        z_max=math.inf if z_max is None else float(z_max),
    )


_NAMED = {"s2": RoundSphere2, "rp2": RealProjective2, "plane": Plane, "paraboloid": Paraboloid}


def get_manifold(ident: str) -> Manifold:
    """Resolve a manifold id: ``s2``, ``rp2``, ``plane``, ``paraboloid``,
    ``spheroid:<c>`` or ``revolution:<profile-file>``."""
    if ident in _NAMED:
        return _NAMED[ident]()
    if ident.startswith("spheroid:"):
        return spheroid(float(ident.split(":", 1)[1]))
    if ident.startswith("revolution:"):
        return load_profile(ident.split(":", 1)[1])
    raise ValueError(f"unknown manifold id {ident!r}")


def distance(m: Manifold, p, q) -> float:
    return m.distance(np.asarray(p, float), np.asarray(q, float))


def minimal_directions(m: Manifold, q, p) -> DirectionSet:
    return m.minimal_directions(q, p)


def gaussian_curvature(m: Manifold, p) -> float:
    return m.gaussian_curvature(np.asarray(p, float))


def injectivity_radius_estimate(m: RevolutionSurface, samples: int = 2001) -> float:
    """Klingenberg-style estimate: min of the conjugate radius bound
    ``pi / sqrt(max K)`` and half the shortest closed geodesic among the
    parallels at critical radii and (on closed surfaces) the meridian loop.

    Only an estimate: other closed geodesics are not searched for.
    """
    hi = m.z_max if math.isfinite(m.z_max) else m.z_min + 50.0
    zs = np.linspace(m.z_min, hi, samples)
    ks = np.array([m.gaussian_curvature(m.at_height(z)) for z in zs])
    kmax = float(ks.max())
    best = math.pi / math.sqrt(kmax) if kmax > 0 else math.inf
    S, dS, _ = m._S
    d = dS(zs)
    for i in np.flatnonzero(np.sign(d[:-1]) != np.sign(d[1:])):
        if S(zs[i]) > 0:
            best = min(best, math.pi * m.profile_radius(zs[i]))
    if m.closed:
        best = min(best, m.meridian_length(m.z_max))
    return best
