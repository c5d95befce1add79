"""Geodesics, geodesic nets and critical points on model surfaces."""

from geonets.manifold import (
    DirectionSet,
    Finite,
    FullSphere,
    Manifold,
    Paraboloid,
    Plane,
    RealProjective2,
    RevolutionSurface,
    RoundSphere2,
    distance,
    gaussian_curvature,
    get_manifold,
    minimal_directions,
    spheroid,
)

__version__ = "0.1.0"

__all__ = [
    "DirectionSet",
    "Finite",
    "FullSphere",
    "Manifold",
    "Paraboloid",
    "Plane",
    "RealProjective2",
    "RevolutionSurface",
    "RoundSphere2",
    "distance",
    "gaussian_curvature",
    "get_manifold",
    "minimal_directions",
    "spheroid",
]
