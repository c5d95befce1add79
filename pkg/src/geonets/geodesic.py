"""Geodesic segments: initial value problems, boundary value problems and
minimality checks."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from geonets import shooting
from geonets.manifold import Manifold, Shot

N_SAMPLES = 65


@dataclass
class GeodesicSegment:
    """A solved geodesic with arc-length spaced samples.

    ``minimal`` is tri-state: None (unchecked), True or False.
    """

    manifold: Manifold
    start: np.ndarray
    initial_dir: np.ndarray
    length: float
    samples: np.ndarray = field(repr=False)
    velocities: np.ndarray = field(repr=False)
    minimal: bool | None = None
    steps: int | None = None

    @property
    def end(self) -> np.ndarray:
        return self.samples[-1]

    @property
    def end_velocity(self) -> np.ndarray:
        return self.velocities[-1]

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def reversed(self) -> "GeodesicSegment":
        return GeodesicSegment(
            self.manifold,
            self.end.copy(),
            -self.end_velocity,
            self.length,
            self.samples[::-1].copy(),
            -self.velocities[::-1],
            self.minimal,
            self.steps,
        )

    def to_dict(self) -> dict:
        return {
            "start": self.start.tolist(),
            "initial_dir": self.initial_dir.tolist(),
            "length": self.length,
            "n_samples": self.n_samples,
            "minimal": self.minimal,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        dim = self.samples.shape[1]
        w.writerow(["s"] + ["x", "y", "z"][:dim])
        spacing = self.length / max(self.n_samples - 1, 1)
        for i, x in enumerate(self.samples):
            w.writerow([repr(i * spacing)] + [repr(float(c)) for c in x])
        return buf.getvalue()


def _sample_lengths(length, n):
    return np.linspace(0.0, length, n)


def segment(m: Manifold, p, u, length: float, steps: int | None = None, n_samples: int = N_SAMPLES):
    """Build the segment ``s -> exp_p(s u)`` for ``s`` in ``[0, length]``."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    if length < 0:
        raise ValueError("geodesic length must be non-negative")
    if not m.analytic:
        n_samples = N_SAMPLES
        if steps is None:
            steps = shooting.steps_for(length)
    X, V = m.geodesic(p, u, _sample_lengths(length, n_samples), steps=steps)
    return GeodesicSegment(m, p, u, float(length), X, V, steps=steps)


def from_shot(m: Manifold, p, shot: Shot) -> GeodesicSegment:
    return segment(m, p, shot.direction, shot.length, steps=shot.steps)


def integrate_ivp(m: Manifold, p, v, length: float, step: float | None = None) -> GeodesicSegment:
    """Follow the geodesic from ``p`` with unit initial velocity ``v``.

    Sphere-like surfaces use the closed-form great circle; surfaces of
    revolution integrate with RK4 at ``step`` (default ``length / 1024``
    capped at 0.01).
    """
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValueError("initial velocity must be a unit vector")
    if step is not None and step <= 0:
        raise ValueError("step must be positive")
    steps = None
    if not m.analytic and step is not None:
        n = max(1, math.ceil(length / step))
        steps = shooting.STEP_QUANTUM * math.ceil(n / shooting.STEP_QUANTUM)
    return segment(m, p, v, length, steps=steps)


class Segments(list):
    """List of segments sorted by length.

    ``complete`` is False when fan shooting may have missed solutions;
    ``focal`` marks a target reached by a whole circle of minimal
    geodesics (only a sample of them is listed).
    """

    complete: bool = True
    focal: bool = False


def solve_bvp(m: Manifold, p, q, cap: float | None = None, focal_samples: int = 64) -> Segments:
    """All geodesics from ``p`` to ``q`` no longer than ``cap``.

    The default cap is twice the manifold's diameter (twice an explicit
    path length on unbounded surfaces).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if m.same_point(p, q, 1e-12):
        raise ValueError("boundary value problem needs p != q")
    con = m.connecting(p, q, cap=cap)
    out = Segments()
    if con.focal and m.analytic:
        B = m.tangent_basis(p)
        L = con.shots[0].length
        for t in 2.0 * np.pi * np.arange(focal_samples) / focal_samples:
            out.append(segment(m, p, math.cos(t) * B[0] + math.sin(t) * B[1], L))
        out.extend(from_shot(m, p, s) for s in con.shots[1:])
    else:
        out.extend(from_shot(m, p, s) for s in con.shots)
    out.sort(key=lambda s: s.length)
    out.focal = con.focal
    out.complete = con.complete
    return out


def is_minimal(seg: GeodesicSegment, tol: float | None = None) -> bool:
    """True iff the segment's length equals the distance between its ends."""
    m = seg.manifold
    tol = m.minimality_tol if tol is None else tol
    d = m.distance(seg.start, seg.end)
    seg.minimal = bool(abs(seg.length - d) <= tol)
    return seg.minimal
