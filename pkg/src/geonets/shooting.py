"""Numerical geodesics on implicit surfaces of revolution.

A surface of revolution about the z axis is written implicitly as

    F(x, y, z) = x**2 + y**2 - S(z) = 0,

where ``S`` is the squared profile radius. Working with ``S`` rather than the
radius keeps poles and apexes regular points of the equation (``grad F`` never
vanishes there), so geodesics are integrated in ambient coordinates with no
chart singularity.

Everything here is vectorised over a leading "ray" axis so that a whole fan of
initial directions, or a batch of Newton problems, advances in one pass.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

MAX_STEP = 1e-2
MIN_STEPS = 1024
STEP_QUANTUM = 64


class ShootingError(RuntimeError):
    """Geodesic shooting failed to converge or enumerate."""


class ChartExitError(ShootingError):
    """An integrated geodesic left the domain of the profile."""


def steps_for(length: float) -> int:
    """Number of RK4 steps for a geodesic of ``length``.

    Step is ``length / 1024`` capped at ``MAX_STEP``; the count is rounded up
    to a multiple of ``STEP_QUANTUM`` so 65 samples are always step-aligned.
    """
    n = max(MIN_STEPS, math.ceil(abs(length) / MAX_STEP))
    return STEP_QUANTUM * math.ceil(n / STEP_QUANTUM)


class RevolutionGeometry:
    """Implicit surface ``x^2 + y^2 = S(z)`` with ``z`` in ``[z_min, z_max]``.

    ``radius_sq(z)`` must return the triple ``(S, S', S'')`` evaluated
    elementwise on an array.
    """

    def __init__(
        self,
        radius_sq: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]],
        z_min: float,
        z_max: float,
    ):
        self.radius_sq = radius_sq
        self.z_min = float(z_min)
        self.z_max = float(z_max)

    def gradient(self, X):
        _, dS, _ = self.radius_sq(X[..., 2])
        return np.stack([2.0 * X[..., 0], 2.0 * X[..., 1], -dS], axis=-1)

    def normal(self, X):
        g = self.gradient(X)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def accel(self, X, V):
        _, dS, d2S = self.radius_sq(X[..., 2])
        g = np.stack([2.0 * X[..., 0], 2.0 * X[..., 1], -dS], axis=-1)
        hess_vv = 2.0 * (V[..., 0] ** 2 + V[..., 1] ** 2) - d2S * V[..., 2] ** 2
        return -(hess_vv / np.einsum("...i,...i->...", g, g))[..., None] * g

    def residual(self, X):
        S, _, _ = self.radius_sq(X[..., 2])
        return X[..., 0] ** 2 + X[..., 1] ** 2 - S

    def project(self, X, iters: int = 2):
        for _ in range(iters):
            g = self.gradient(X)
            X = X - (self.residual(X) / np.einsum("...i,...i->...", g, g))[..., None] * g
        return X

    def tangent(self, X, V):
        n = self.normal(X)
        return V - np.einsum("...i,...i->...", V, n)[..., None] * n

    def basis(self, X):
        """Orthonormal tangent frame ``(e1, e2)`` at a single point."""
        n = self.normal(np.asarray(X, dtype=float))
        ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = ref - (ref @ n) * n
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        return np.stack([e1, e2])

    def _check_domain(self, X):
        z = X[..., 2]
        lo = self.z_min - 1e-6
        hi = self.z_max + 1e-6
        bad = (z < lo) | (z > hi)
        if np.any(bad):
            zb = float(z[bad].flat[0])
            raise ChartExitError(
                f"geodesic left the profile domain: z = {zb:.6g} outside "
                f"[{self.z_min:.6g}, {self.z_max:.6g}]"
            )

    def integrate(self, X0, V0, lengths, n_steps: int, record: bool = False):
        """RK4 on every ray at once, ray ``k`` using step ``lengths[k] / n_steps``.

        Returns final ``(X, V)`` or, with ``record``, the full trajectories of
        shape ``(rays, n_steps + 1, 3)``.
        """
        X = np.array(X0, dtype=float, copy=True)
        V = np.array(V0, dtype=float, copy=True)
        V /= np.linalg.norm(V, axis=-1, keepdims=True)
        h = (np.asarray(lengths, dtype=float) / n_steps)[:, None]
        if record:
            XS = np.empty((X.shape[0], n_steps + 1, 3))
            VS = np.empty_like(XS)
            XS[:, 0], VS[:, 0] = X, V
        acc = self.accel
        for k in range(n_steps):
            a1 = acc(X, V)
            V2 = V + 0.5 * h * a1
            a2 = acc(X + 0.5 * h * V, V2)
            V3 = V + 0.5 * h * a2
            a3 = acc(X + 0.5 * h * V2, V3)
            V4 = V + h * a3
            a4 = acc(X + h * V3, V4)
            X = X + (h / 6.0) * (V + 2.0 * V2 + 2.0 * V3 + V4)
            V = V + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            X = self.project(X, iters=1)
            V = self.tangent(X, V)
            V /= np.linalg.norm(V, axis=-1, keepdims=True)
            if record:
                XS[:, k + 1], VS[:, k + 1] = X, V
        self._check_domain(X if not record else XS)
        if record:
            return XS, VS
        return X, V


def _directions(basis, thetas):
    return np.cos(thetas)[:, None] * basis[0] + np.sin(thetas)[:, None] * basis[1]


class Fan:
    """Recorded fan of ``n_fan`` geodesics leaving ``p`` out to arc length ``cap``."""

    def __init__(self, geom: RevolutionGeometry, p, cap: float, n_fan: int = 720):
        self.geom = geom
        self.p = np.asarray(p, dtype=float)
        self.cap = float(cap)
        self.n_fan = n_fan
        self.basis = geom.basis(self.p)
        self.thetas = 2.0 * np.pi * np.arange(n_fan) / n_fan
        self.n_steps = steps_for(cap)
        self.h = cap / self.n_steps
        X0 = np.repeat(self.p[None], n_fan, axis=0)
        V0 = _directions(self.basis, self.thetas)
        self.X, self.V = geom.integrate(X0, V0, np.full(n_fan, cap), self.n_steps, record=True)
        self.N = np.cross(geom.normal(self.X), self.V)
        self.s = self.h * np.arange(self.n_steps + 1)
        gap = np.roll(self.X, -1, axis=0) - self.X
        self.spacing = np.sqrt(np.einsum("ijk,ijk->ij", gap, gap))

    def seeds(self, q, hit_tol: float = 1e-3):
        """Initial guesses ``(thetas, lengths)`` for geodesics from ``p`` to ``q``.

        A seed is a fan cell where the ray passes within a cell width of ``q``
        and the signed lateral miss changes sign between neighbouring rays.
        Also reports whether every ray hits ``q`` at a common length, which
        flags a focal point (the whole circle of directions is minimal).
        """
        q = np.asarray(q, dtype=float)
        diff = q - self.X
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        close = dist < self.spacing + 2.0 * self.h
        close[:, 0] = False
        lateral = np.einsum("ijk,ijk->ij", diff, self.N)
        flip = (lateral > 0) != (np.roll(lateral, -1, axis=0) > 0)
        ii, jj = np.nonzero(close & flip)

        jmin = np.argmin(dist[:, 1:], axis=1) + 1
        dmin = dist[np.arange(self.n_fan), jmin]
        focal = bool(np.all(dmin < hit_tol))
        if focal:
            smin = self.s[jmin]
            focal = float(smin.max() - smin.min()) < 10.0 * self.h

        order = np.argsort(dist[ii, jj])
        dth = 2.0 * np.pi / self.n_fan
        chosen_t: list[float] = []
        chosen_s: list[float] = []
        for k in order:
            i, j = ii[k], jj[k]
            g0 = lateral[i, j]
            g1 = lateral[(i + 1) % self.n_fan, j]
            frac = g0 / (g0 - g1) if g0 != g1 else 0.5
            theta = self.thetas[i] + dth * float(np.clip(frac, 0.0, 1.0))
            length = self.s[j] + float(diff[i, j] @ self.V[i, j])
            if length <= 0:
                continue
            dup = False
            for t, s in zip(chosen_t, chosen_s):
                dt = abs((theta - t + np.pi) % (2.0 * np.pi) - np.pi)
                if dt < 3.0 * dth and abs(length - s) < 4.0 * self.h + 1e-3:
                    dup = True
                    break
            if not dup:
                chosen_t.append(theta)
                chosen_s.append(length)
        return np.array(chosen_t), np.array(chosen_s), focal


def shoot(geom, p, basis, thetas, lengths, n_steps):
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    lengths = np.atleast_1d(np.asarray(lengths, dtype=float))
    X0 = np.repeat(np.asarray(p, dtype=float)[None], len(thetas), axis=0)
    return geom.integrate(X0, _directions(basis, thetas), lengths, n_steps)


def refine(
    geom,
    p,
    basis,
    thetas,
    lengths,
    targets,
    n_steps: int | None = None,
    tol: float = 1e-9,
    max_iter: int = 40,
):
    """Damped Newton shooting on ``(theta, length)`` for a batch of targets.

    Each problem ``k`` drives ``exp_p(lengths[k] * u(thetas[k]))`` onto
    ``targets[k]``. The Jacobian column in theta is a forward difference;
    steps use the least-squares solution so a degenerate theta direction
    (a focal target) is left untouched. Returns ``(thetas, lengths, residuals,
    n_steps)``; residual entries above ``tol`` mark failures.
    """
    th = np.array(thetas, dtype=float, ndmin=1)
    L = np.array(lengths, dtype=float, ndmin=1)
    Q = np.array(targets, dtype=float, ndmin=2)
    if Q.shape[0] == 1 and th.shape[0] > 1:
        Q = np.repeat(Q, th.shape[0], axis=0)
    if n_steps is None:
        n_steps = steps_for(1.2 * float(L.max()))
    k = th.shape[0]
    eps = 1e-7
    res = np.full(k, np.inf)
    active = np.ones(k, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        X, V = shoot(
            geom, p, basis,
            np.concatenate([th[idx], th[idx] + eps]),
            np.concatenate([L[idx], L[idx]]),
            n_steps,
        )
        m = idx.size
        r = X[:m] - Q[idx]
        rn = np.linalg.norm(r, axis=1)
        res[idx] = rn
        converged = rn < tol
        active[idx[converged]] = False
        if np.all(converged):
            break
        go = ~converged
        sel = idx[go]
        J = np.stack([(X[m:] - X[:m]) / eps, V[:m]], axis=-1)[go]
        delta = np.einsum("kij,kj->ki", np.linalg.pinv(J, rcond=1e-10), r[go])
        th[sel] -= np.clip(delta[:, 0], -0.2, 0.2)
        L[sel] = np.maximum(L[sel] - np.clip(delta[:, 1], -0.5, 0.5), 1e-3)
    th = np.mod(th, 2.0 * np.pi)
    return th, L, res, n_steps


def _dedup(th, L):
    order = np.argsort(L)
    keep_t: list[float] = []
    keep_l: list[float] = []
    for t, s in zip(th[order], L[order]):
        if any(
            abs((t - kt + np.pi) % (2.0 * np.pi) - np.pi) < 1e-6 and abs(s - ks) < 1e-6
            for kt, ks in zip(keep_t, keep_l)
        ):
            continue
        keep_t.append(t)
        keep_l.append(s)
    return np.array(keep_t), np.array(keep_l)


def geodesics_between_many(geom, p, targets, cap, fan: Fan | None = None, n_fan: int = 720, tol: float = 1e-9):
    """Fan-shoot from ``p`` to every target, refining all seeds in one batch.

    Returns ``(solutions, n_steps, basis)`` where ``solutions[k]`` is
    ``(thetas, lengths, focal)`` for ``targets[k]``, sorted by length.
    """
    if fan is None:
        fan = Fan(geom, p, cap, n_fan=n_fan)
    targets = np.array(targets, dtype=float, ndmin=2)
    n_steps = steps_for(1.1 * cap)
    owners, seed_t, seed_l, focal = [], [], [], []
    for k, q in enumerate(targets):
        t0, s0, f = fan.seeds(q)
        focal.append(f)
        owners.extend([k] * t0.size)
        seed_t.extend(t0)
        seed_l.extend(s0)
    owners = np.array(owners, dtype=int)
    out = [(np.empty(0), np.empty(0), f) for f in focal]
    if owners.size == 0:
        return out, n_steps, fan.basis
    th, L, res, _ = refine(geom, p, fan.basis, seed_t, seed_l, targets[owners], n_steps=n_steps, tol=tol)
    ok = (res < tol) & (L <= cap * (1 + 1e-9))
    for k in np.unique(owners):
        sel = ok & (owners == k)
        out[k] = (*_dedup(th[sel], L[sel]), focal[k])
    return out, n_steps, fan.basis


def geodesics_between(geom, p, q, cap, fan: Fan | None = None, n_fan: int = 720, tol: float = 1e-9):
    """All geodesics ``p -> q`` of length at most ``cap`` found by fan shooting.

    Returns ``(thetas, lengths, n_steps, focal, basis)`` sorted by length.
    """
    sols, n_steps, basis = geodesics_between_many(geom, p, [q], cap, fan=fan, n_fan=n_fan, tol=tol)
    th, L, focal = sols[0]
    return th, L, n_steps, focal, basis
