"""Bubble geometry and its Nystrom discretization.

A bubble boundary is a smooth closed curve ``t -> x(t)``, ``t in [0, 2 pi)``,
run counter-clockwise so that ``(z'(t), -x'(t)) / |x'(t)|`` is the outward
normal.  Nodes are equispaced in ``t`` and carry trapezoidal weights
``2 pi |x'(t_j)| / N``, which integrate smooth periodic functions with
spectral accuracy.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import ConfigurationError

__all__ = ["BubbleGeometry", "DiscreteBoundary", "discretize"]


@dataclass(frozen=True)
class BubbleGeometry:
    """Shape and placement of the bubble in one unit cell.

    Parameters
    ----------
    shape : {"circle", "ellipse", "parametric"}
    radius : float
        Circle radius.
    standoff : float
        Height of the center above the reflecting plane (beta).
    semi_axes : (float, float), optional
        Horizontal and vertical semi-axes for ``shape="ellipse"``.
    curve : callable, optional
        For ``shape="parametric"``: ``curve(t) -> (x, x', x'')`` with each an
        array of shape ``(len(t), 2)``, centered at the origin.
    """

    shape: str = "circle"
    radius: float = 1.0
    standoff: float = 2.0
    semi_axes: Optional[Tuple[float, float]] = None
    curve: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.shape not in ("circle", "ellipse", "parametric"):
            raise ConfigurationError(f"unknown shape {self.shape!r}")
        if self.shape == "circle" and not self.radius > 0:
            raise ConfigurationError("radius must be positive")
        if self.shape == "ellipse":
            if self.semi_axes is None or min(self.semi_axes) <= 0:
                raise ConfigurationError("ellipse needs two positive semi-axes")
        if self.shape == "parametric" and self.curve is None:
            raise ConfigurationError("parametric shape needs a curve callable")
        if not self.standoff > self.half_height:
            raise ConfigurationError(
                f"bubble must lie strictly above the plane (standoff {self.standoff} "
                f"<= half-height {self.half_height})"
            )

    def _samples(self, t):
        if self.shape == "circle":
            r = self.radius
            c, s = np.cos(t), np.sin(t)
            return (np.c_[r * c, r * s], np.c_[-r * s, r * c], np.c_[-r * c, -r * s])
        if self.shape == "ellipse":
            ax, az = self.semi_axes
            c, s = np.cos(t), np.sin(t)
            return (np.c_[ax * c, az * s], np.c_[-ax * s, az * c], np.c_[-ax * c, -az * s])
        x, dx, ddx = self.curve(t)
        return np.asarray(x, float), np.asarray(dx, float), np.asarray(ddx, float)

    @property
    def half_height(self):
        if self.shape == "circle":
            return self.radius
        if self.shape == "ellipse":
            return self.semi_axes[1]
        return float(np.abs(self._samples(np.linspace(0, 2 * np.pi, 2049))[0][:, 1]).max())

    @property
    def half_width(self):
        if self.shape == "circle":
            return self.radius
        if self.shape == "ellipse":
            return self.semi_axes[0]
        return float(np.abs(self._samples(np.linspace(0, 2 * np.pi, 2049))[0][:, 0]).max())

    def check_fits(self, period):
        """Raise if the bubble does not fit strictly inside one period."""
        if not 2 * self.half_width < period:
            raise ConfigurationError(
                f"bubble width {2 * self.half_width} does not fit in period {period}"
            )

    def with_standoff(self, standoff):
        return BubbleGeometry(self.shape, self.radius, standoff, self.semi_axes, self.curve)


@dataclass(frozen=True, eq=False)
class DiscreteBoundary:
    """Quadrature nodes on the bubble boundary.

    Attributes
    ----------
    t : ndarray, shape (N,)
        Parameter values ``2 pi j / N``.
    nodes, normals : ndarray, shape (N, 2)
        Points ``(xbar, x_d)`` and unit outward normals.
    speed : ndarray, shape (N,)
        ``|x'(t_j)|``.
    curvature : ndarray, shape (N,)
        Signed curvature, positive where the bubble is convex.
    weights : ndarray, shape (N,)
        Arclength quadrature weights ``2 pi |x'(t_j)| / N``.
    area : float
        ``|D|``.
    """

    t: np.ndarray
    nodes: np.ndarray
    normals: np.ndarray
    speed: np.ndarray
    curvature: np.ndarray
    weights: np.ndarray
    area: float
    geometry: BubbleGeometry

    def __post_init__(self):
        for name in ("t", "nodes", "normals", "speed", "curvature", "weights"):
            getattr(self, name).setflags(write=False)

    @property
    def size(self):
        return len(self.t)

    @property
    def perimeter(self):
        return float(self.weights.sum())

    def pair(self, a, b):
        """Discrete duality pairing ``<a, b> = sum_j w_j a_j b_j``."""
        return np.sum(self.weights * np.asarray(a) * np.asarray(b))

    def integrate(self, f):
        return np.sum(self.weights * np.asarray(f))


def discretize(geom, N):
    """Place ``N`` equispaced-in-parameter nodes on the boundary of ``geom``."""
    if N < 16 or N % 2:
        raise ConfigurationError(f"N must be even and >= 16, got {N}")
    t = 2 * np.pi * np.arange(N) / N
    x, dx, ddx = geom._samples(t)
    speed = np.hypot(dx[:, 0], dx[:, 1])
    normals = np.c_[dx[:, 1], -dx[:, 0]] / speed[:, None]
    curvature = (dx[:, 0] * ddx[:, 1] - dx[:, 1] * ddx[:, 0]) / speed**3
    nodes = x + np.array([0.0, geom.standoff])
    weights = 2 * np.pi * speed / N
    # Green's theorem: |D| = 1/2 \oint (x - x0) . nu
    area = 0.5 * float(np.sum(weights * np.einsum("ij,ij->i", x, normals)))
    if area <= 0:
        raise ConfigurationError("curve must be oriented counter-clockwise")
    if np.any(nodes[:, 1] <= 0):
        raise ConfigurationError("boundary nodes must lie strictly above the plane")
    return DiscreteBoundary(t, nodes, normals, speed, curvature, weights, area, geom)
