"""Spherical comparison triangles and uniqueness certificates for mutually
critical pairs on surfaces with curvature at least 1."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from geonets.critical import is_gs_critical, is_mutually_critical
from geonets.geodesic import from_shot
from geonets.manifold import DirectionSet, Manifold, Shot

HALF_PI = 0.5 * math.pi


class NoSphericalTriangle(ValueError):
    """Side lengths that do not bound a triangle in the unit sphere."""


@dataclass(frozen=True)
class ComparisonTriangle:
    """Triangle in the unit sphere; angle ``A`` is opposite side ``a``."""

    sides: tuple[float, float, float]
    angles: tuple[float, float, float]

    def law_of_cosines_residual(self) -> float:
        a, b, c = self.sides
        A, B, C = self.angles
        r = [
            math.cos(a) - (math.cos(b) * math.cos(c) + math.sin(b) * math.sin(c) * math.cos(A)),
            math.cos(b) - (math.cos(c) * math.cos(a) + math.sin(c) * math.sin(a) * math.cos(B)),
            math.cos(c) - (math.cos(a) * math.cos(b) + math.sin(a) * math.sin(b) * math.cos(C)),
        ]
        return max(abs(x) for x in r)


def _angle_opposite(x, y, z):
    cos = (math.cos(x) - math.cos(y) * math.cos(z)) / (math.sin(y) * math.sin(z))
    return math.acos(min(1.0, max(-1.0, cos)))


def triangle_from_sides(a: float, b: float, c: float, tol: float = 1e-12) -> ComparisonTriangle:
    """Solve the spherical triangle with sides ``a, b, c``.

    A degenerate triple (one side the sum of the other two, within ``tol``)
    is accepted and yields the straight angle.
    """
    a, b, c = float(a), float(b), float(c)
    for name, s in zip("abc", (a, b, c)):
        if not s > 0:
            raise NoSphericalTriangle(f"no spherical triangle: side {name} = {s} is not positive")
        if not s < math.pi:
            raise NoSphericalTriangle(f"no spherical triangle: side {name} = {s} is not < pi")
    for (n1, s1), (n2, s2), (n3, s3) in (
        (("a", a), ("b", b), ("c", c)),
        (("b", b), ("c", c), ("a", a)),
        (("c", c), ("a", a), ("b", b)),
    ):
        if s1 > s2 + s3 + tol:
            raise NoSphericalTriangle(f"no spherical triangle: triangle inequality {n1} <= {n2} + {n3} fails")
    if a + b + c >= 2.0 * math.pi:
        raise NoSphericalTriangle("no spherical triangle: perimeter a + b + c < 2 pi fails")
    return ComparisonTriangle((a, b, c), (_angle_opposite(a, b, c), _angle_opposite(b, c, a), _angle_opposite(c, a, b)))


def octant_check(t: ComparisonTriangle, tol: float = 1e-9) -> bool:
    """If every angle is at most a right angle, the triangle fits in an
    octant and every side is at most pi/2; returns that conclusion.
    Returns False when some angle is obtuse (nothing to check)."""
    if any(A > HALF_PI + tol for A in t.angles):
        return False
    ok = all(s <= HALF_PI + tol for s in t.sides)
    assert ok, f"octant property violated by {t}"
    return ok


@dataclass
class UniquenessCertificate:
    """Evidence that ``x`` is not a critical point of ``d_p``.

    The argument: were ``x`` critical, all three comparison angles would be
    at most pi/2, putting the comparison triangle in an octant and forcing
    ``d(p, q) <= pi/2``. ``valid`` records that every link of that chain
    holds numerically for this ``x``.
    """

    manifold: str
    p: list
    q: list
    x: list
    sides: dict
    hinge_angles: dict
    comparison_angles: dict | None
    hypotheses: dict
    degenerate: bool
    violated_inequality: str
    inequality_chain: list = field(default_factory=list)
    failed_hypotheses: list = field(default_factory=list)
    x_critical: bool = False
    valid: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _closest(W: DirectionSet, v, m: Manifold):
    """Direction in ``W`` making the smallest angle with ``v`` (``v`` itself
    when every direction is minimal)."""
    if W.is_full:
        return v / np.linalg.norm(v), 0.0
    angles = [m.angle(W.base, w, v) for w in W.directions]
    k = int(np.argmin(angles))
    return W.directions[k], float(angles[k])


def hinge_angles(m: Manifold, p, q, x) -> dict:
    """Interior angles at ``x``, ``p`` and ``q`` for the geodesics used in the
    comparison argument, choosing among minimal geodesics the ones that
    minimise each angle."""
    # gamma_2: q -> x
    s2 = m.minimal(q, x).shots[0]
    g2 = from_shot(m, q, s2)
    toward_q = -m.transfer(x, g2.end, g2.end_velocity)
    # gamma_0: x -> p, closest to the x-hinge
    w0, ang_x = _closest(m.minimal_directions(x, p), toward_q, m)
    g0 = from_shot(m, x, Shot(w0, m.distance(x, p)))
    toward_x_at_p = -m.transfer(p, g0.end, g0.end_velocity)
    _, ang_p = _closest(m.minimal_directions(p, q), toward_x_at_p, m)
    toward_x_at_q = s2.direction
    _, ang_q = _closest(m.minimal_directions(q, p), toward_x_at_q, m)
    return {"p": ang_p, "q": ang_q, "x": ang_x}


def certify_uniqueness(m: Manifold, p, q, x, tol: float | None = None) -> UniquenessCertificate:
    """Certify that ``x`` is not critical for ``d_p`` when ``(p, q)`` is a
    mutually critical pair on a surface with curvature at least 1 and
    injectivity radius above pi/2.

    When ``p`` and ``q`` are antipodal (``d(p, q) = pi``) every comparison
    triangle through ``x`` is degenerate; the inequality ``d(p, q) > pi/2``
    is then reported directly and the criticality test at ``x`` serves as
    witness.
    """
    tol = m.angle_tol if tol is None else tol
    p, q, x = m.point(p), m.point(q), m.point(x)
    if m.same_point(x, p) or m.same_point(x, q):
        raise ValueError("x must differ from p and q")
    if not is_mutually_critical(m, p, q):
        raise ValueError("precondition failed: p and q are not mutually critical")

    injrad = m.injectivity_radius
    hyp = {
        "curvature >= 1": bool(m.curvature_lower_bound >= 1.0 - 1e-12),
        "injectivity radius > pi/2": bool(injrad is not None and injrad > HALF_PI + tol),
    }
    failed = [k for k, ok in hyp.items() if not ok]

    d_px, d_pq, d_qx = m.distance(p, x), m.distance(p, q), m.distance(q, x)
    sides = {"d(p,x)": d_px, "d(p,q)": d_pq, "d(q,x)": d_qx}
    hinges = hinge_angles(m, p, q, x)
    x_crit = is_gs_critical(m, x, p)
    chain = []
    comp = None

    degenerate = d_pq >= math.pi - tol
    if degenerate:
        chain.append(f"d(p,q) = {d_pq:.12g} = pi: comparison triangle degenerate, bypassed")
        closes = d_pq > HALF_PI + tol
        chain.append(f"d(p,q) = {d_pq:.12g} > pi/2 holds directly")
        chain.append(f"witness: x critical for d_p = {x_crit}")
        closes = closes and not x_crit
    else:
        # side opposite p is d(q,x), opposite q is d(p,x), opposite x is d(p,q)
        t = triangle_from_sides(d_qx, d_px, d_pq, tol=1e-9)
        comp = {"p": t.angles[0], "q": t.angles[1], "x": t.angles[2]}
        p_ok = comp["p"] <= HALF_PI + tol
        q_ok = comp["q"] <= HALF_PI + tol
        chain.append(f"comparison angle at p = {comp['p']:.12g} <= pi/2: {p_ok}")
        chain.append(f"comparison angle at q = {comp['q']:.12g} <= pi/2: {q_ok}")
        chain.append(f"d(p,q) = {d_pq:.12g} > pi/2: {d_pq > HALF_PI + tol}")
        chain.append(
            f"octant: an x-angle <= pi/2 would force d(p,q) <= pi/2; comparison angle at x = {comp['x']:.12g}"
        )
        closes = p_ok and q_ok and d_pq > HALF_PI + tol and comp["x"] > HALF_PI - tol
    if failed:
        chain.append("hypotheses failed: " + ", ".join(failed))

    return UniquenessCertificate(
        manifold=m.name,
        p=p.tolist(),
        q=q.tolist(),
        x=x.tolist(),
        sides=sides,
        hinge_angles=hinges,
        comparison_angles=comp,
        hypotheses=hyp,
        degenerate=degenerate,
        violated_inequality=f"d(p,q) <= pi/2 (octant conclusion) contradicts d(p,q) = {d_pq:.12g}",
        inequality_chain=chain,
        failed_hypotheses=failed,
        x_critical=x_crit,
        valid=bool(closes and not failed),
    )
