"""Geodesic nets: multigraphs with geodesic edges on a model surface.

Vertices are balanced or boundary. An edge stores one specific geodesic
between its end vertices; self-loops and parallel edges are allowed. Flowers
are nets whose petals are split at their halfway points into two edges, the
halfway points being balanced vertices of degree 2.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from geonets.geodesic import GeodesicSegment, from_shot, is_minimal, segment
from geonets.manifold import Manifold, RoundSphere2, RealProjective2, get_manifold

BALANCED = "balanced"
BOUNDARY = "boundary"
ENDPOINT_TOL = 1e-8


class NetError(ValueError):
    """Malformed net."""


@dataclass
class Vertex:
    id: str
    point: np.ndarray
    kind: str = BALANCED


@dataclass
class Edge:
    id: str
    tail: str
    head: str
    segment: GeodesicSegment

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head


@dataclass
class Petal:
    halfway: str
    first: str
    second: str


@dataclass
class FlowerInfo:
    center: str
    petals: list[Petal]


@dataclass
class BalanceReport:
    residuals: dict[str, float]
    max_balanced_residual: float
    is_stationary: bool
    is_minimizing: bool


class Net:
    """A finite multigraph embedded with geodesic edges."""

    def __init__(self, manifold: Manifold, vertices, edges, flower: FlowerInfo | None = None):
        self.manifold = manifold
        self.vertices: dict[str, Vertex] = {}
        for v in vertices:
            if v.id in self.vertices:
                raise NetError(f"duplicate vertex id {v.id!r}")
            if v.kind not in (BALANCED, BOUNDARY):
                raise NetError(f"vertex {v.id!r} has unknown kind {v.kind!r}")
            self.vertices[v.id] = v
        self.edges: dict[str, Edge] = {}
        for e in edges:
            if e.id in self.edges:
                raise NetError(f"duplicate edge id {e.id!r}")
            for end in (e.tail, e.head):
                if end not in self.vertices:
                    raise NetError(f"edge {e.id!r} references missing vertex {end!r}")
            if e.segment.length <= 0:
                raise NetError(f"edge {e.id!r} has zero length")
            m = manifold
            if not m.same_point(e.segment.start, self.vertices[e.tail].point, ENDPOINT_TOL):
                raise NetError(f"edge {e.id!r} does not start at vertex {e.tail!r}")
            if not m.same_point(e.segment.end, self.vertices[e.head].point, ENDPOINT_TOL):
                raise NetError(f"edge {e.id!r} does not end at vertex {e.head!r}")
            self.edges[e.id] = e
        self.flower = flower

    def __repr__(self):
        return f"Net({self.manifold.name}, {len(self.vertices)} vertices, {len(self.edges)} edges)"

    def point(self, vid: str) -> np.ndarray:
        return self.vertices[vid].point

    def total_length(self) -> float:
        return float(sum(e.segment.length for e in self.edges.values()))

    def balanced_ids(self) -> list[str]:
        return [v.id for v in self.vertices.values() if v.kind == BALANCED]

    def incident(self, vid: str) -> list[Edge]:
        return [e for e in self.edges.values() if vid in (e.tail, e.head)]

    def tangents(self, vid: str) -> list[np.ndarray]:
        """Unit tangents at ``vid`` of all incident edges, pointing away.

        A self-loop contributes its initial and its reversed final tangent.
        """
        if vid not in self.vertices:
            raise NetError(f"no vertex {vid!r}")
        m = self.manifold
        x = self.vertices[vid].point
        out = []
        for e in self.edges.values():
            seg = e.segment
            if e.tail == vid:
                out.append(m.transfer(x, seg.start, seg.initial_dir))
            if e.head == vid:
                out.append(m.transfer(x, seg.end, -seg.end_velocity))
        return out

    def imbalance(self, vid: str) -> np.ndarray:
        t = self.tangents(vid)
        if not t:
            return np.zeros(self.manifold.ambient_dim)
        return np.sum(t, axis=0)

    def graph(self):
        return list(self.vertices), [(e.tail, e.head) for e in self.edges.values()]

    def replace(self, points: dict | None = None, segments: dict | None = None, kinds: dict | None = None) -> "Net":
        points = points or {}
        segments = segments or {}
        kinds = kinds or {}
        verts = [
            Vertex(v.id, points.get(v.id, v.point), kinds.get(v.id, v.kind)) for v in self.vertices.values()
        ]
        edges = [Edge(e.id, e.tail, e.head, segments.get(e.id, e.segment)) for e in self.edges.values()]
        return Net(self.manifold, verts, edges, self.flower)

    def to_dict(self) -> dict:
        d = {
            "manifold": self.manifold.name,
            "vertices": [
                {"id": v.id, "kind": v.kind, "coords": np.asarray(v.point).tolist()} for v in self.vertices.values()
            ],
            "edges": [
                {
                    "id": e.id,
                    "from": e.tail,
                    "to": e.head,
                    "initial_dir": e.segment.initial_dir.tolist(),
                    "length": e.segment.length,
                }
                for e in self.edges.values()
            ],
        }
        if self.flower is not None:
            d["flower"] = {
                "center": self.flower.center,
                "petals": [[p.halfway, p.first, p.second] for p in self.flower.petals],
            }
        return d

    @classmethod
    def from_dict(cls, data: dict, manifold: Manifold | None = None) -> "Net":
        """Load the JSON net format, re-solving every edge geodesic.

        Edges with ``initial_dir`` and ``length`` are solved on that branch
        (self-loops are integrated from them directly); edges without hints
        take a minimal geodesic.
        """
        m = manifold or get_manifold(data["manifold"])
        verts = []
        for v in data["vertices"]:
            if "chart" in v:
                pt = m.from_chart(*v["chart"])
            else:
                pt = m.point(v["coords"])
            verts.append(Vertex(str(v["id"]), pt, v.get("kind", BALANCED)))
        where = {v.id: v.point for v in verts}
        edges = []
        for e in data["edges"]:
            a, b = str(e["from"]), str(e["to"])
            x, y = where[a], where[b]
            u = e.get("initial_dir")
            L = e.get("length")
            if a == b:
                if u is None or L is None:
                    raise NetError(f"self-loop {e['id']!r} needs initial_dir and length")
                seg = segment(m, x, m.to_tangent(x, np.asarray(u, float)), float(L))
            elif u is not None and L is not None:
                seg = from_shot(m, x, m.branch(x, y, np.asarray(u, float), float(L)))
            else:
                seg = from_shot(m, x, m.minimal(x, y).shots[0])
            edges.append(Edge(str(e["id"]), a, b, seg))
        flower = None
        if "flower" in data:
            f = data["flower"]
            flower = FlowerInfo(f["center"], [Petal(*p) for p in f["petals"]])
        return cls(m, verts, edges, flower)


def load_net(path, manifold: Manifold | None = None) -> Net:
    return Net.from_dict(json.loads(Path(path).read_text()), manifold)


def save_net(net: Net, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=2))


# stationarity and minimality


def balance_residual(net: Net, vid: str) -> float:
    """Norm of the sum of outgoing unit tangents at ``vid``."""
    return float(np.linalg.norm(net.imbalance(vid)))


def is_stationary(net: Net, tol: float = 1e-9) -> bool:
    return all(balance_residual(net, v) <= tol for v in net.balanced_ids())


def is_minimizing(net: Net, tol: float | None = None) -> bool:
    """Every edge realizes the distance between its end vertices.

    Flowers use :func:`flower_is_minimizing` instead, since a petal is a loop.
    """
    if net.flower is not None:
        return flower_is_minimizing(net, tol)
    return all(is_minimal(e.segment, tol) for e in net.edges.values())


def count_balanced(net: Net, tol: float = 1e-9) -> int:
    return sum(1 for v in net.balanced_ids() if balance_residual(net, v) <= tol)


def balance_report(net: Net, tol: float = 1e-9) -> BalanceReport:
    res = {v: balance_residual(net, v) for v in net.vertices}
    bal = [res[v] for v in net.balanced_ids()]
    mx = max(bal) if bal else 0.0
    return BalanceReport(res, mx, mx <= tol, is_minimizing(net))


# constructors


def build_theta(m: Manifold | None = None, axis=None, angle: float = 0.0) -> Net:
    """Theta net: two poles joined by three meridians meeting at 2*pi/3.

    On the round sphere ``axis`` picks the poles and ``angle`` rotates the
    meridians about it. Closed surfaces of revolution use their own poles.
    """
    m = RoundSphere2() if m is None else m
    if isinstance(m, RoundSphere2):
        n = np.array([0.0, 0.0, 1.0]) if axis is None else np.asarray(axis, float) / np.linalg.norm(axis)
        north, south = n, -n
        half = math.pi
    elif getattr(m, "closed", False):
        north = np.array([0.0, 0.0, m.z_max])
        south = np.array([0.0, 0.0, m.z_min])
        half = m.meridian_length(m.z_max)
    else:
        raise NetError(f"theta construction needs a sphere or closed surface of revolution, not {m.name}")
    B = m.tangent_basis(north)
    verts = [Vertex("N", north), Vertex("S", south)]
    edges = []
    for i in range(3):
        t = angle + 2.0 * math.pi * i / 3.0
        u = math.cos(t) * B[0] + math.sin(t) * B[1]
        if isinstance(m, RoundSphere2):
            seg = segment(m, north, u, half)
        else:
            seg = from_shot(m, north, m.branch(north, south, u, half))
        edges.append(Edge(f"e{i}", "N", "S", seg))
    return Net(m, verts, edges)


def great_circle_petals(m: Manifold, p, count: int, offset: float = 0.0) -> list[GeodesicSegment]:
    """``count`` distinct closed geodesics through ``p`` at equal angles.

    Great circles on the sphere (length 2*pi), projected great circles on
    RP^2 (length pi).
    """
    if isinstance(m, RealProjective2):
        L = math.pi
    elif isinstance(m, RoundSphere2):
        L = 2.0 * math.pi
    else:
        raise NetError(f"no great-circle petals on {m.name}")
    p = m.point(p)
    B = m.tangent_basis(p)
    out = []
    for k in range(count):
        t = offset + math.pi * k / count
        out.append(segment(m, p, math.cos(t) * B[0] + math.sin(t) * B[1], L))
    return out


def _as_petal(m: Manifold, p, petal, tol: float) -> GeodesicSegment:
    if isinstance(petal, GeodesicSegment):
        return petal
    if isinstance(petal, tuple) and len(petal) == 2:
        u, L = petal
        return segment(m, p, m.to_tangent(p, np.asarray(u, float)), float(L))
    # a sampled closed curve: accept it only if it is the geodesic it starts along
    pts = np.asarray(petal, dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise NetError("petal must be a segment, a (direction, length) pair or a sampled curve")
    steps = np.array([m.distance(a, b) for a, b in zip(pts[:-1], pts[1:])])
    L = float(steps.sum())
    u = m.to_tangent(p, pts[1] - pts[0])
    seg = segment(m, p, u, L, n_samples=len(pts))
    X, _ = m.geodesic(p, seg.initial_dir, np.concatenate([[0.0], np.cumsum(steps)]))
    dev = max(m.distance(a, b) for a, b in zip(X, pts))
    if dev > max(tol, 1e-6 * L):
        raise NetError(f"petal is not a geodesic (deviates by {dev:.3g})")
    return seg


def build_flower(m: Manifold, p, petals, tol: float = ENDPOINT_TOL) -> Net:
    """Flower net at ``p``; each petal becomes two edges meeting at its
    halfway point, a balanced vertex of degree 2."""
    if len(petals) == 0:
        raise NetError("a flower needs at least one petal")
    p = m.point(p)
    verts = [Vertex("p", p)]
    edges = []
    info = FlowerInfo("p", [])
    for i, petal in enumerate(petals):
        seg = _as_petal(m, p, petal, tol)
        if not m.same_point(seg.start, p, tol):
            raise NetError(f"petal {i} does not start at the flower vertex")
        if not m.same_point(seg.end, p, tol):
            raise NetError(f"petal {i} is not closed at the flower vertex")
        half = 0.5 * seg.length
        first = segment(m, p, seg.initial_dir, half)
        mid, vel = first.end, first.end_velocity
        second = segment(m, mid, vel, half, steps=first.steps)
        hid = f"h{i}"
        verts.append(Vertex(hid, m.project(mid)))
        edges.append(Edge(f"f{i}a", "p", hid, first))
        edges.append(Edge(f"f{i}b", hid, "p", second))
        info.petals.append(Petal(hid, f"f{i}a", f"f{i}b"))
    return Net(m, verts, edges, info)


def flower_is_minimizing(net: Net, tol: float | None = None) -> bool:
    """Each half-petal's length equals the distance from the flower vertex
    to that petal's halfway point."""
    if net.flower is None:
        raise NetError("net is not a flower")
    m = net.manifold
    tol = m.minimality_tol if tol is None else tol
    p = net.point(net.flower.center)
    for petal in net.flower.petals:
        d = m.distance(p, net.point(petal.halfway))
        for eid in (petal.first, petal.second):
            if abs(net.edges[eid].segment.length - d) > tol:
                return False
    return True


def distinct_points(m: Manifold, points, tol: float = 1e-8) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for x in points:
        if not any(m.same_point(x, y, tol) for y in out):
            out.append(np.asarray(x))
    return out


# graph classification


def _adjacency(vertices, edges):
    adj = {v: set() for v in vertices}
    for a, b in edges:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    return adj


def graph_radius(vertices, edges) -> float:
    """Hop radius ignoring multiplicities; infinite if disconnected."""
    vertices = list(vertices)
    if not vertices:
        return math.inf
    adj = _adjacency(vertices, edges)
    best = math.inf
    for s in vertices:
        dist = {s: 0}
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        if len(dist) == len(vertices):
            best = min(best, max(dist.values()))
    return best


def _has_long_cycle(vertices, edges) -> bool:
    # a cycle through >= 3 distinct vertices exists iff the simple graph
    # underlying the multigraph is not a forest
    parent = {v: v for v in vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    seen = set()
    for a, b in edges:
        if a == b:
            continue
        key = frozenset((a, b))
        if key in seen:
            continue
        seen.add(key)
        ra, rb = find(a), find(b)
        if ra == rb:
            return True
        parent[ra] = rb
    return False


def is_star_multigraph(g) -> bool:
    """Radius at most 1 and no cycle longer than 2.

    ``g`` is a :class:`Net` or a ``(vertices, edges)`` pair with edges given
    as vertex pairs. The single-vertex graph is accepted.
    """
    vertices, edges = g.graph() if isinstance(g, Net) else g
    vertices = list(vertices)
    if graph_radius(vertices, edges) > 1:
        return False
    return not _has_long_cycle(vertices, edges)


def central_vertex(g) -> str | None:
    """A vertex adjacent to every other vertex, if any."""
    vertices, edges = g.graph() if isinstance(g, Net) else g
    adj = _adjacency(vertices, edges)
    for v in vertices:
        if len(adj[v] | {v}) == len(vertices):
            return v
    return None
