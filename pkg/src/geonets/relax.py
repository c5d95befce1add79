"""Length-decreasing flow on the balanced vertices of a geodesic net.

By the first variation formula, moving a vertex ``v`` along a tangent vector
``w`` changes total length at rate ``-<sum of outgoing unit tangents, w>``;
the flow therefore steps each balanced vertex along that sum. Boundary
vertices and the graph itself stay fixed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from geonets.geodesic import from_shot
from geonets.manifold import ShootingError
from geonets.net import Net, balance_residual


class RelaxError(RuntimeError):
    pass


@dataclass
class RelaxParams:
    step_size: float = 0.25
    max_iters: int = 2000
    residual_tol: float = 1e-7
    bvp_resolve_every: int = 10

    def __post_init__(self):
        if not 0 < self.step_size <= 0.5:
            raise ValueError("step_size must lie in (0, 0.5]")
        if self.residual_tol <= 0:
            raise ValueError("residual_tol must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if self.bvp_resolve_every < 1:
            raise ValueError("bvp_resolve_every must be at least 1")


@dataclass
class RelaxReport:
    iterations: int
    residuals: list[float]
    lengths: list[float]
    converged: bool
    net: Net
    stalled: bool = False
    message: str = ""
    steps: list[float] = field(default_factory=list)

    def history_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["iteration", "residual", "total_length"])
        for i, (r, L) in enumerate(zip(self.residuals, self.lengths)):
            w.writerow([i, repr(r), repr(L)])
        return buf.getvalue()


def move_vertices(net: Net, displacements: dict, cold: bool = False) -> Net:
    """Move vertices by ``exp`` of the given tangent vectors and re-solve
    every incident edge on its current branch.

    Warm starts use the previous initial direction and length. With ``cold``
    the full boundary value problem is solved instead and the connecting
    geodesic closest to the previous branch is kept.
    """
    m = net.manifold
    points = {}
    for vid, w in displacements.items():
        x = net.point(vid)
        points[vid] = m.project(m.exp(x, m.to_tangent(x, np.asarray(w, float))))
    segments = {}
    for e in net.edges.values():
        if e.tail not in points and e.head not in points:
            continue
        if e.is_loop:
            raise RelaxError(f"edge {e.id!r} is a self-loop; loops cannot follow a moving vertex")
        x = points.get(e.tail, net.point(e.tail))
        y = points.get(e.head, net.point(e.head))
        old = e.segment
        hint = m.to_tangent(x, m.transfer(x, old.start, old.initial_dir))
        try:
            if cold:
                con = m.connecting(x, y)
                shot = None
                if not con.focal and con.shots:
                    shot = min(con.shots, key=lambda s: (m.angle(x, s.direction, hint), abs(s.length - old.length)))
                if shot is None:
                    shot = m.branch(x, y, hint, old.length)
            else:
                shot = m.branch(x, y, hint, old.length)
        except (ShootingError, ValueError) as exc:
            raise RelaxError(f"could not re-solve edge {e.id!r}: {exc}") from exc
        segments[e.id] = from_shot(m, x, shot)
    return net.replace(points=points, segments=segments)


def _gradients(net: Net) -> dict:
    return {v: net.imbalance(v) for v in net.balanced_ids()}


def relax(net: Net, params: RelaxParams | None = None) -> RelaxReport:
    """Descend total length over balanced vertex positions.

    All balanced vertices move together from the same snapshot. A trial step
    that increases length is halved (at most 30 times); the accepted lengths
    are therefore non-increasing.
    """
    params = params or RelaxParams()
    grads = _gradients(net)
    res = max((float(np.linalg.norm(g)) for g in grads.values()), default=0.0)
    length = net.total_length()
    report = RelaxReport(0, [res], [length], False, net)
    for it in range(1, params.max_iters + 1):
        if res <= params.residual_tol:
            break
        step = params.step_size
        cold = it % params.bvp_resolve_every == 0
        for _ in range(31):
            trial = move_vertices(net, {v: step * g for v, g in grads.items()}, cold=cold)
            trial_length = trial.total_length()
            if trial_length <= length:
                break
            step *= 0.5
            if step < 1e-12:
                break
        else:
            trial_length = np.inf
        if trial_length > length or step < 1e-12:
            report.stalled = True
            report.message = f"step underflow at iteration {it}"
            break
        net, length = trial, trial_length
        grads = _gradients(net)
        res = max((float(np.linalg.norm(g)) for g in grads.values()), default=0.0)
        report.iterations = it
        report.residuals.append(res)
        report.lengths.append(length)
        report.steps.append(step)
    report.net = net
    report.converged = res <= params.residual_tol
    if not report.converged and not report.message:
        report.message = f"max_iters reached with residual {res:.3g}"
    return report


def directional_derivative(net: Net, vid: str, w, h: float = 1e-4) -> float:
    """Central difference of total length as ``vid`` moves along ``w``."""
    w = np.asarray(w, dtype=float)
    plus = move_vertices(net, {vid: h * w}).total_length()
    minus = move_vertices(net, {vid: -h * w}).total_length()
    return (plus - minus) / (2.0 * h)


def predicted_derivative(net: Net, vid: str, w) -> float:
    """First variation: ``-<sum of outgoing unit tangents, w>``."""
    return -float(net.imbalance(vid) @ np.asarray(w, dtype=float))


def max_residual(net: Net) -> float:
    return max((balance_residual(net, v) for v in net.balanced_ids()), default=0.0)


def perturb(net: Net, eps: float, rng: np.random.Generator) -> Net:
    """Move every balanced vertex a distance ``eps`` in a random direction."""
    m = net.manifold
    disp = {v: eps * m.random_unit_tangent(net.point(v), rng) for v in net.balanced_ids()}
    return move_vertices(net, disp)
