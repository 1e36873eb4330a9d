"""Nystrom discretization of the periodic-Dirichlet layer potentials.

Densities are stored as nodal values ``psi_j``; an operator matrix ``M`` maps
them to nodal values of the image function, and pairings use the
arclength weights of :class:`~bubblescreen.boundary.DiscreteBoundary`.

Singular kernels are handled with the Kress (Martensen-Kussmaul) product
rule: the self image of the lattice Green's function behaves like
``J0(k r) log(r) / (2 pi)``, whose logarithm is integrated exactly against
trigonometric interpolants, while the smooth remainder (other lattice images,
spectral part, Dirichlet mirror image) uses the plain trapezoidal rule.
"""

import warnings
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .errors import DomainError
from .lattice_green import (
    EwaldKernel,
    EwaldParams,
    Wavenumbers,
    _check_below_diffraction,
    ewald_regular_part_at_origin,
)

__all__ = [
    "ComplexOperator",
    "BlockOperator",
    "LayerPotentialAssembler",
    "assemble_single_layer",
    "assemble_nk_adjoint",
    "assemble_block",
    "block_rhs",
    "eval_field",
]


@dataclass(frozen=True, eq=False)
class ComplexOperator:
    """Dense matrix of a boundary operator together with what it represents."""

    entries: np.ndarray
    kind: str
    k: float = 0.0
    kbar: float = 0.0

    def __matmul__(self, density):
        return self.entries @ np.asarray(density)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class BlockOperator:
    """The 2 x 2 block system acting on ``(psi_b, psi)``.

    ``[[S^{k_b}, -S^{k}], [-1/2 + K^{k_b,*}, -c (1/2 + K^{k,*})]]`` with
    ``c = mu eps**2`` (scaled problem) or the physical contrast ``delta``.
    """

    s_inner: np.ndarray
    s_outer: np.ndarray
    k_inner: np.ndarray
    k_outer: np.ndarray
    contrast: float

    @property
    def blocks(self):
        n = len(self.s_inner)
        eye = np.eye(n)
        return [
            [self.s_inner, -self.s_outer],
            [-0.5 * eye + self.k_inner, -self.contrast * (0.5 * eye + self.k_outer)],
        ]

    def matrix(self):
        return np.block(self.blocks)

    def singular_values(self):
        return linalg.svd(self.matrix(), compute_uv=False)

    def smallest_singular_value(self):
        return float(self.singular_values()[-1])

    def smallest_eigenvalue(self):
        """Eigenvalue of smallest modulus (the quantity plotted against frequency)."""
        ev = linalg.eigvals(self.matrix())
        return complex(ev[np.argmin(np.abs(ev))])

    def solve(self, rhs):
        lu = linalg.lu_factor(self.matrix())
        return linalg.lu_solve(lu, np.asarray(rhs))


def _kress_weights(N):
    """``R_j(t_i)`` such that ``int log(4 sin^2((t_i - s)/2)) f(s) ds ~ sum_j R_ij f(t_j)``."""
    n = N // 2
    lag = 2 * np.pi * np.arange(N) / N
    m = np.arange(1, n)
    r = -(2 * np.pi / n) * (np.cos(np.outer(lag, m)) @ (1.0 / m)) - (np.pi / n**2) * np.cos(n * lag)
    idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
    return r[idx]


class LayerPotentialAssembler:
    """Assemble ``S_+^k`` and ``K_+^{k,*}`` on one boundary for many wavenumbers.

    The k-independent parts of the Ewald sums are computed once on
    construction; each new ``(k, kbar)`` then costs one spectral sum.
    Assembled pairs are memoized (small LRU cache).
    """

    def __init__(self, bdy, lattice, params=EwaldParams(), cache_size=8):
        bdy.geometry.check_fits(lattice.period)
        self.bdy = bdy
        self.lattice = lattice
        self.params = params
        N = bdy.size
        X = bdy.nodes
        self._off = ~np.eye(N, dtype=bool)
        dx = X[:, 0][:, None] - X[:, 0][None, :]
        dz = X[:, 1][:, None] - X[:, 1][None, :]
        self._dx, self._dz = dx, dz
        self._r = np.hypot(dx, dz)
        self._nd = bdy.normals[:, 0][:, None] * dx + bdy.normals[:, 1][:, None] * dz
        self._direct = EwaldKernel(lattice, dx[self._off], dz[self._off], params)
        self._image = EwaldKernel(lattice, dx, X[:, 1][:, None] + X[:, 1][None, :], params)
        self._R = _kress_weights(N)
        with np.errstate(divide="ignore"):
            self._L = np.log(4 * np.sin((bdy.t[:, None] - bdy.t[None, :]) / 2) ** 2)
        np.fill_diagonal(self._L, 0.0)
        self._cache = OrderedDict()
        self._cache_size = cache_size

    def operators(self, k=0.0, kbar=0.0):
        """Return the matrices ``(S_+^k, K_+^{k,*})``."""
        key = (float(k), float(kbar))
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        out = self._assemble(*key)
        self._cache[key] = out
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return out

    def _assemble(self, k, kbar):
        bdy, off = self.bdy, self._off
        N = bdy.size
        nu = bdy.normals
        w = bdy.weights
        four_pi = 4 * np.pi

        gd = np.zeros((N, N), dtype=complex)
        gdx = np.zeros((N, N), dtype=complex)
        gdz = np.zeros((N, N), dtype=complex)
        gd[off], gdx[off], gdz[off] = self._direct.evaluate(k, kbar, grad=True)
        gi, gix, giz = self._image.evaluate(k, kbar, grad=True)

        r = self._r
        j0 = special.j0(k * r)
        with np.errstate(invalid="ignore", divide="ignore"):
            # coefficient of log(r^2) in nu_x . grad G of the self image
            l1 = np.where(off, -(k / four_pi) * special.j1(k * r) * self._nd / r, 0.0)

        reg0, (g0x, g0z) = ewald_regular_part_at_origin(self.lattice, k, kbar, self.params)

        # single layer
        smooth = gd - j0 * self._L / four_pi - gi
        np.fill_diagonal(smooth, reg0 + np.log(bdy.speed**2) / four_pi - np.diag(gi))
        S = (j0 / four_pi) * self._R * bdy.speed[None, :] + smooth * w[None, :]

        # adjoint double layer: kernel nu_x . grad_x G_+(x, y)
        kd = nu[:, 0][:, None] * gdx + nu[:, 1][:, None] * gdz
        ki = nu[:, 0][:, None] * gix + nu[:, 1][:, None] * giz
        smooth = kd - l1 * self._L - ki
        diag = bdy.curvature / four_pi + nu[:, 0] * g0x + nu[:, 1] * g0z - np.diag(ki)
        np.fill_diagonal(smooth, diag)
        K = l1 * self._R * bdy.speed[None, :] + smooth * w[None, :]
        return S, K

    def single_layer(self, wn=None):
        wn = wn or Wavenumbers(0.0)
        return ComplexOperator(self.operators(wn.k, wn.kbar)[0], "single_layer", wn.k, wn.kbar)

    def nk_adjoint(self, wn=None):
        wn = wn or Wavenumbers(0.0)
        return ComplexOperator(self.operators(wn.k, wn.kbar)[1], "nk_adjoint", wn.k, wn.kbar)


def assemble_single_layer(bdy, lattice, wn=None, params=EwaldParams(), assembler=None):
    """Matrix of ``S_+^k``; ``wn=None`` gives the static operator ``S_+``."""
    assembler = assembler or LayerPotentialAssembler(bdy, lattice, params)
    return assembler.single_layer(wn)


def assemble_nk_adjoint(bdy, lattice, wn=None, params=EwaldParams(), assembler=None):
    """Matrix of ``K_+^{k,*}``; ``wn=None`` gives ``K_+^*``."""
    assembler = assembler or LayerPotentialAssembler(bdy, lattice, params)
    return assembler.nk_adjoint(wn)


def assemble_block(bdy, lattice, media, omega, epsilon=None, theta=np.pi / 2,
                   params=EwaldParams(), assembler=None):
    """Block operator at angular frequency ``omega``.

    ``epsilon=None`` assembles the physical operator: wavenumbers ``omega/v``
    and ``omega/v_b`` and the physical contrast ``delta``.  A number
    assembles the scaled operator at ``eps k``, ``eps k_b`` with contrast
    ``mu eps**2`` (``mu`` from ``media.contrast_scale``).
    """
    if not omega > 0:
        raise DomainError("omega must be positive")
    assembler = assembler or LayerPotentialAssembler(bdy, lattice, params)
    wn = Wavenumbers.from_angle(omega / media.v, theta, k_b=omega / media.v_b)
    if epsilon is None:
        eps, contrast = 1.0, media.delta
    else:
        eps, contrast = float(epsilon), media.contrast_scale * float(epsilon) ** 2
    outer = wn.scaled(eps)
    inner = outer.inner()
    for w in (outer, inner):
        _check_below_diffraction(lattice, w)
    s_b, k_b = assembler.operators(inner.k, inner.kbar)
    s, k = assembler.operators(outer.k, outer.kbar)
    return BlockOperator(s_b, s, k_b, k, contrast)


def block_rhs(bdy, wn, epsilon, mu, u0=1.0):
    """Right-hand side ``F(eps)`` for the plane wave ``u0 exp(-i k . X)``.

    First component: trace of the incident-plus-mirrored wave; second: its
    normal derivative times ``delta = mu eps**2``.
    """
    x, z = bdy.nodes[:, 0], bdy.nodes[:, 1]
    nx, nz = bdy.normals[:, 0], bdy.normals[:, 1]
    kd, kbar = wn.kd, wn.kbar
    phase = np.exp(-1j * epsilon * kbar * x)
    top = np.sin(epsilon * kd * z)
    bottom = epsilon**3 * mu * (kd * nz * np.cos(epsilon * kd * z) - 1j * kbar * nx * np.sin(epsilon * kd * z))
    return -2j * u0 * np.concatenate([top, bottom]) * np.tile(phase, 2)


def eval_field(bdy, density, lattice, wn, points, params=EwaldParams()):
    """Single-layer field ``sum_j w_j G_+(x, y_j) psi_j`` at off-boundary points.

    ``points`` is one point ``(x, z)`` or an array of shape ``(M, 2)``.
    Accuracy degrades within about one node spacing of the boundary, where a
    warning is issued.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(pts[:, 1] < 0):
        raise DomainError("field points must satisfy x_d >= 0")
    wn = wn or Wavenumbers(0.0)
    y = bdy.nodes
    dist = np.hypot(pts[:, None, 0] - y[None, :, 0], pts[:, None, 1] - y[None, :, 1]).min(axis=1)
    spacing = bdy.weights.max()
    if np.any(dist < spacing):
        warnings.warn(
            f"field point within {dist.min():.3g} of the boundary (node spacing "
            f"{spacing:.3g}); quadrature is inaccurate there",
            stacklevel=2,
        )
    dx = pts[:, None, 0] - y[None, :, 0]
    direct = EwaldKernel(lattice, dx, pts[:, None, 1] - y[None, :, 1], params).evaluate(wn.k, wn.kbar)
    image = EwaldKernel(lattice, dx, pts[:, None, 1] + y[None, :, 1], params).evaluate(wn.k, wn.kbar)
    vals = (direct - image) @ (bdy.weights * np.asarray(density))
    return vals if np.ndim(points) > 1 else complex(vals[0])
