"""Quasi-periodic Helmholtz Green's functions for a 1D lattice ``aZ`` in 2D.

Convention: ``G`` solves ``(Delta + k**2) G = sum_n exp(-i kbar n a) delta_{(na, 0)}``
with the outgoing condition, so that ``G(x + a, z) = exp(-i kbar a) G(x, z)``
and the free-space kernel is ``-(i/4) H0(k r)``; near the source
``G ~ log(r) / (2 pi)``.

Three interchangeable evaluators are provided:

* :func:`green_direct`   -- image sum of Hankel functions (slow oracle),
* :func:`green_spectral` -- Floquet mode series (needs ``z != 0``),
* :func:`green_ewald`    -- Ewald split into spatial + spectral parts.

For ``k = 0`` the propagating mode diverges like ``1/(2 i k a)``; the
static function returned here drops that constant, which is the
normalization ``G = |z|/(2a) - sum_l exp(-|l||z|) exp(i l x) / (2a|l|)``.
The constant cancels in the Dirichlet combination :func:`green_dirichlet`.
"""

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy import special

from .errors import DiffractionError, DomainError, WoodAnomalyError
from .specfun import erfc_complex, erfcx_complex, expint_table, hankel1_0

__all__ = [
    "LatticeConfig",
    "Wavenumbers",
    "EwaldParams",
    "Point2",
    "EwaldKernel",
    "f_alpha",
    "green_direct",
    "green_spectral",
    "green_ewald",
    "green_dirichlet",
    "g1_sharp",
    "green_expansion_terms",
    "ewald_regular_part_at_origin",
]

WOOD_TOLERANCE = 1e-10
# images whose smallest Ewald argument exceeds this contribute < exp(-60)
_SPATIAL_CUTOFF = 60.0


@dataclass(frozen=True)
class LatticeConfig:
    """One-dimensional lattice ``aZ`` of the screen."""

    period: float

    def __post_init__(self):
        if not self.period > 0:
            raise DomainError(f"lattice period must be positive, got {self.period}")

    @property
    def cell_measure(self):
        """|Gamma|, the length of the unit cell."""
        return self.period

    @property
    def reciprocal_spacing(self):
        return 2.0 * np.pi / self.period


@dataclass(frozen=True)
class Wavenumbers:
    """Outer wavenumber ``k``, tangential component ``kbar`` and inner ``k_b``."""

    k: float
    kbar: float = 0.0
    k_b: Optional[float] = None

    def __post_init__(self):
        if self.k < 0:
            raise DomainError("k must be non-negative")
        if self.kbar**2 > self.k**2 * (1 + 1e-14):
            raise DomainError("unsupported branch: kbar**2 > k**2")
        if self.k_b is not None and self.kbar**2 > self.k_b**2 * (1 + 1e-14):
            raise DomainError("unsupported branch: kbar**2 > k_b**2")

    @classmethod
    def from_angle(cls, k, theta, k_b=None):
        """Incidence at angle ``theta`` from the plane; ``theta = pi/2`` is normal."""
        kbar = k * np.cos(theta)
        if abs(kbar) < 1e-15 * max(k, 1.0):
            kbar = 0.0
        return cls(k=k, kbar=kbar, k_b=k_b)

    @property
    def kd(self):
        return float(np.sqrt(max(self.k**2 - self.kbar**2, 0.0)))

    @property
    def kbd(self):
        kb = self.k if self.k_b is None else self.k_b
        return float(np.sqrt(max(kb**2 - self.kbar**2, 0.0)))

    def inner(self):
        """Wavenumbers seen inside the bubble (``k -> k_b``, same ``kbar``)."""
        kb = self.k if self.k_b is None else self.k_b
        return Wavenumbers(k=kb, kbar=self.kbar)

    def scaled(self, eps):
        kb = None if self.k_b is None else eps * self.k_b
        return Wavenumbers(k=eps * self.k, kbar=eps * self.kbar, k_b=kb)


@dataclass(frozen=True)
class EwaldParams:
    """Splitting parameter and truncation orders of the Ewald representation.

    ``splitting=None`` means ``sqrt(pi)/a``.  Sums run over images
    ``n in [-n_images, n_images]``, ``q in [0, q_terms]`` and Floquet modes
    ``p in [-p_modes, p_modes]``.
    """

    splitting: Optional[float] = None
    n_images: int = 5
    q_terms: int = 15
    p_modes: int = 5

    def __post_init__(self):
        if self.splitting is not None and not self.splitting > 0:
            raise DomainError("Ewald splitting parameter must be positive")
        if min(self.n_images, self.q_terms, self.p_modes) < 0:
            raise DomainError("truncation orders must be non-negative")

    def splitting_for(self, lattice):
        if self.splitting is not None:
            return float(self.splitting)
        return float(np.sqrt(np.pi) / lattice.period)

    def refined(self):
        """One truncation notch up: ``(N, Q, P) -> (N + 2, Q + 5, P + 2)``."""
        return replace(
            self,
            n_images=self.n_images + 2,
            q_terms=self.q_terms + 5,
            p_modes=self.p_modes + 2,
        )


class Point2(NamedTuple):
    """A point ``(xbar, x_d)`` of the plane; ``x_d`` is the height above the screen."""

    x: float
    z: float


def f_alpha(alpha, x, growing=False):
    """Solution of ``(d^2/dx^2 + alpha) f = delta_0`` on the real line.

    For ``alpha > 0`` the outgoing wave is returned.  For ``alpha < 0`` the
    default is the decaying solution ``-exp(-s|x|) / (2 s)``, ``s = sqrt(-alpha)``,
    which continues the ``alpha > 0`` branch and matches the evanescent Floquet
    terms; ``growing=True`` gives the other one, ``exp(s|x|) / (2 s)``.
    """
    x = abs(x)
    if alpha == 0:
        return complex(0.5 * x)
    if alpha > 0:
        s = np.sqrt(alpha)
        return complex(np.exp(1j * s * x) / (2j * s))
    s = np.sqrt(-alpha)
    if growing:
        return complex(np.exp(s * x) / (2 * s))
    return complex(-np.exp(-s * x) / (2 * s))


def _check_wood(k, k1):
    if k == 0:
        return
    gap = np.abs(k**2 - k1**2)
    if np.any(gap < WOOD_TOLERANCE * k**2):
        raise WoodAnomalyError(
            f"Wood anomaly: k**2 = k_1p**2 for some p (min gap {gap.min():.3e})"
        )


def _check_below_diffraction(lattice, wn):
    g = lattice.reciprocal_spacing
    if wn.k + abs(wn.kbar) >= g:
        raise DiffractionError(
            f"k + |kbar| = {wn.k + abs(wn.kbar):.6g} >= 2 pi / a = {g:.6g}: "
            "more than one propagating order"
        )


def _floquet(lattice, k, kbar, p):
    """Return ``k_1p`` and ``k_2p`` with ``Im k_2p >= 0`` (outgoing/decaying)."""
    k1 = kbar + lattice.reciprocal_spacing * p
    k2 = np.sqrt((k**2 - k1**2).astype(complex))
    k2 = np.where(k2.imag < 0, -k2, k2)
    return k1, k2


# ---------------------------------------------------------------------------
# Direct image sum (oracle)
# ---------------------------------------------------------------------------


def _smooth_window(t, flat=0.5):
    """C-infinity window equal to 1 on ``|t| <= flat`` and 0 for ``|t| >= 1``."""
    t = np.abs(t)
    s = np.clip((1.0 - t) / (1.0 - flat), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def green_direct(lattice, wn, d, N=100_000, accelerate=True):
    """Image sum ``-(i/4) sum_{|n|<=N} exp(-i kbar n a) H0(k P_n)``.

    The raw partial sums converge like ``N**-0.5``.  With ``accelerate`` the
    terms are weighted by a smooth window (identically 1 for ``|n| <= N/2``),
    which removes the oscillating tail faster than any power of ``N`` as long
    as ``(k -+ kbar) a`` stays away from multiples of ``2 pi``.

    This is an oracle: slow and only meant for validation.
    """
    a = lattice.period
    dx, dz = float(d[0]), float(d[1])
    if wn.k <= 0:
        raise DomainError("green_direct needs k > 0")
    if N < 1:
        raise DomainError("N must be >= 1")
    n = np.arange(-N, N + 1)
    P = np.hypot(dx - n * a, dz)
    if np.any(P <= 1e-300):
        raise DomainError("displacement coincides with a lattice point")
    terms = np.exp(-1j * wn.kbar * n * a) * hankel1_0(wn.k * P)
    if accelerate:
        terms = terms * _smooth_window(n / (N + 1.0))
    return complex(-0.25j * np.sum(terms))


# ---------------------------------------------------------------------------
# Spectral (Floquet) series
# ---------------------------------------------------------------------------


def green_spectral(lattice, wn, d, P=None):
    """Floquet series of ``G``; exponentially convergent for ``z != 0``.

    ``P=None`` picks the number of evanescent orders so that the first
    neglected term is below ``1e-17`` relative to the leading one.
    """
    a = lattice.period
    dx, dz = float(d[0]), abs(float(d[1]))
    if dz == 0:
        raise DomainError("spectral series diverges for x_d == 0")
    _check_below_diffraction(lattice, wn)
    if P is None:
        P = int(np.ceil(40.0 * a / (2 * np.pi * dz))) + 2
    if P < 1:
        raise DomainError("P must be >= 1")
    p = np.arange(-P, P + 1)
    k1, k2 = _floquet(lattice, wn.k, wn.kbar, p)
    if wn.k == 0:
        gamma = np.abs(k1)
        ev = p != 0
        out = dz / (2 * a) - np.sum(
            np.exp(-1j * k1[ev] * dx) * np.exp(-gamma[ev] * dz) / (2 * a * gamma[ev])
        )
        return complex(out)
    _check_wood(wn.k, k1)
    out = np.sum(np.exp(-1j * k1 * dx) * np.exp(1j * k2 * dz) / (2j * k2 * a))
    return complex(out)


# ---------------------------------------------------------------------------
# Ewald representation
# ---------------------------------------------------------------------------


def _spatial_coefficients(k, E, Q):
    """``(k / 2E)**(2q) / q!`` for ``q = 0 .. Q``."""
    ratio = np.full(Q + 1, (k / (2 * E)) ** 2)
    ratio[0] = 1.0
    return np.cumprod(ratio / np.maximum(np.arange(Q + 1), 1))


class EwaldKernel:
    """Ewald evaluation of ``G`` (and its gradient) on a fixed set of displacements.

    The spatial sum only depends on the wavenumber through the coefficients
    ``(k / 2E)**(2q) / q!``, so the exponential-integral tables
    ``E_q(P_n**2 E**2)`` are computed once here and reused for every
    frequency; only the spectral part is recomputed per call.

    Parameters
    ----------
    lattice : LatticeConfig
    dx, dz : array_like
        Displacement components (same shape).  No displacement may sit on a
        lattice point.
    params : EwaldParams
    """

    def __init__(self, lattice, dx, dz, params=EwaldParams()):
        self.lattice = lattice
        self.params = params
        self.dx = np.asarray(dx, dtype=float)
        self.dz = np.asarray(dz, dtype=float)
        if self.dx.shape != self.dz.shape:
            raise ValueError("dx and dz must have the same shape")
        self.E = params.splitting_for(lattice)
        a, E = lattice.period, self.E
        n = np.arange(-params.n_images, params.n_images + 1, dtype=float)
        n = n.reshape((-1,) + (1,) * self.dx.ndim)
        xn = self.dx - n * a
        arg = (xn**2 + self.dz**2) * E**2
        keep = arg.reshape(len(n), -1).min(axis=1, initial=np.inf) <= _SPATIAL_CUTOFF
        if np.any(arg[keep] <= 0):
            raise DomainError("displacement coincides with a lattice point")
        self._n = n[keep]
        self._xn = xn[keep]
        # shape (images, *dx.shape, q_terms + 2) holding E_0 .. E_{Q+1}
        self._table = expint_table(params.q_terms + 1, arg[keep])

    def _coefficients(self, k):
        return _spatial_coefficients(k, self.E, self.params.q_terms)

    def evaluate(self, k, kbar=0.0, grad=False):
        """Return ``G`` (and ``(dG/dx, dG/dz)`` if ``grad``) for wavenumber ``k``."""
        a, E = self.lattice.period, self.E
        c = self._coefficients(k)
        ph = np.exp(-1j * kbar * self._n * a)
        val = -np.sum(ph * (self._table[..., 1:] @ c), axis=0) / (4 * np.pi)
        if grad:
            # d/dx E_{q+1}(P^2 E^2) = -2 E^2 x E_q(P^2 E^2)
            s = ph * (self._table[..., :-1] @ c) * (2 * E**2 / (4 * np.pi))
            gx = np.sum(s * self._xn, axis=0)
            gz = np.sum(s, axis=0) * self.dz
        sv, sgx, sgz = _ewald_spectral(self.lattice, k, kbar, self.dx, self.dz, E,
                                       self.params.p_modes, grad)
        val += sv
        if grad:
            return val, gx + sgx, gz + sgz
        return val


def _ewald_spectral(lattice, k, kbar, dx, dz, E, P, grad):
    a = lattice.period
    dx = np.asarray(dx, dtype=float)
    p = np.arange(-P, P + 1)
    k1, k2 = _floquet(lattice, k, kbar, p)
    _check_wood(k, k1)
    static = k2 == 0
    k1, k2 = k1.reshape((-1,) + (1,) * dx.ndim), k2.reshape((-1,) + (1,) * dx.ndim)
    z = np.abs(dz)
    sgn = np.sign(dz)
    phase = np.exp(-1j * k1 * dx) / (4 * a)
    # the static p = 0 mode is handled below; give it a harmless k2 here
    k2s = np.where(k2 == 0, 1.0, k2)
    w = -1j * k2s / (2 * E)
    # exp(-i k2 z) erfc(w + zE) written with erfcx: no overflow for large z
    up = erfcx_complex(w + z * E) * np.exp(k2s**2 / (4 * E**2) - (z * E) ** 2)
    down = np.exp(1j * k2s * z) * erfc_complex(w - z * E)
    terms = phase * (up + down) / (1j * k2s)
    if grad:
        tz = phase * (down - up)
    if np.any(static):
        # k = kbar = 0: p = 0 mode minus its divergent 1/(2 i k a) constant
        i0 = int(np.flatnonzero(static)[0])
        erf = special.erf(z * E)
        terms[i0] = (z * erf + np.exp(-(z * E) ** 2) / (E * np.sqrt(np.pi))) / (2 * a)
        if grad:
            tz[i0] = erf / (2 * a)
    val = np.sum(terms, axis=0)
    if not grad:
        return val, None, None
    return val, np.sum(-1j * k1 * terms, axis=0), sgn * np.sum(tz, axis=0)


def ewald_regular_part_at_origin(lattice, k, kbar=0.0, params=EwaldParams()):
    """Limit of ``G(d) - J0(k|d|) log|d| / (2 pi)`` and of its gradient as ``d -> 0``.

    Used for the diagonal of Nystrom matrices.  Returns ``(value, (gx, gz))``.
    """
    a = lattice.period
    E = params.splitting_for(lattice)
    Q = params.q_terms
    c = _spatial_coefficients(k, E, Q)
    q = np.arange(1, Q + 1)
    # self image: log part of sum_q c_q E_{q+1}(r^2 E^2) is exactly -J0(kr) log(r^2 E^2)
    val = (np.euler_gamma + 2 * np.log(E) - np.sum(c[1:] / q)) / (4 * np.pi)
    gx = 0.0
    others = [n for n in range(-params.n_images, params.n_images + 1) if n != 0]
    if others:
        xs = -np.array(others, dtype=float) * a
        arg = xs**2 * E**2
        keep = arg <= _SPATIAL_CUTOFF
        for n, xn, x2 in zip(np.array(others)[keep], xs[keep], arg[keep]):
            tab = expint_table(Q + 1, x2)
            ph = np.exp(-1j * kbar * n * a)
            val += -ph * (tab[1:] @ c) / (4 * np.pi)
            gx += ph * (tab[:-1] @ c) * 2 * E**2 * xn / (4 * np.pi)
    sv, sgx, _ = _ewald_spectral(lattice, k, kbar, np.zeros(1), np.zeros(1), E,
                                 params.p_modes, True)
    return complex(val + sv[0]), (complex(gx + sgx[0]), 0j)


def green_ewald(lattice, wn, x, y, params=EwaldParams()):
    """Ewald evaluation of ``G(x - y)``."""
    dx, dz = float(x[0]) - float(y[0]), float(x[1]) - float(y[1])
    a = lattice.period
    if dz == 0 and abs(dx / a - round(dx / a)) < 1e-14:
        raise DomainError("x coincides with a lattice image of y")
    kern = EwaldKernel(lattice, np.array([dx]), np.array([dz]), params)
    return complex(kern.evaluate(wn.k, wn.kbar)[0])


# ---------------------------------------------------------------------------
# Dirichlet half-space combination
# ---------------------------------------------------------------------------


def _sharp(lattice, wn, dx, dz, evaluator, params):
    if callable(evaluator):
        return evaluator(lattice, wn, (dx, dz))
    if evaluator == "ewald":
        return green_ewald(lattice, wn, (dx, dz), (0.0, 0.0), params)
    if evaluator == "spectral":
        return green_spectral(lattice, wn, (dx, dz))
    if evaluator == "direct":
        return green_direct(lattice, wn, (dx, dz))
    raise ValueError(f"unknown evaluator {evaluator!r}")


def green_dirichlet(lattice, wn, x, y, evaluator="ewald", params=EwaldParams()):
    """``G_+(x, y) = G(xbar - ybar, x_d - y_d) - G(xbar - ybar, x_d + y_d)``.

    ``evaluator`` is ``"ewald"``, ``"spectral"``, ``"direct"`` or a callable
    ``f(lattice, wn, d)``.
    """
    if x[1] < 0 or y[1] < 0:
        raise DomainError("points must lie in the upper half-plane")
    dx = float(x[0]) - float(y[0])
    if x[1] == 0 or y[1] == 0:
        return 0j
    return _sharp(lattice, wn, dx, x[1] - y[1], evaluator, params) - _sharp(
        lattice, wn, dx, x[1] + y[1], evaluator, params
    )


# ---------------------------------------------------------------------------
# Low-order expansion terms
# ---------------------------------------------------------------------------


def g1_sharp(lattice, d, P=None, return_bound=False):
    """The wavenumber-independent function ``g_{1,#}``.

    With ``P=None`` the lattice sum is evaluated in closed form through
    ``log(1 - q)`` and ``Li2(q)``, ``q = exp(-2 pi |z| / a + 2 pi i x / a)``,
    which is valid down to ``z = 0``.  With an integer ``P`` the defining
    series is truncated at ``|l| <= 2 pi P / a``; ``return_bound`` then also
    returns the a-posteriori tail bound ``exp(-2 pi P |z| / a)``.
    """
    a = lattice.period
    x, z = float(d[0]), abs(float(d[1]))
    if P is None:
        if z == 0 and abs(x / a - round(x / a)) < 1e-14:
            raise DomainError("g1_sharp is singular on lattice points")
        q = np.exp((-z + 1j * x) * 2 * np.pi / a)
        log_term = -np.log(1 - q)  # sum_m q^m / m
        li2 = special.spence(1 - q)  # sum_m q^m / m^2
        val = 1j * (
            a / (4 * np.pi**2) * li2.imag
            + z / (2 * np.pi) * log_term.imag
            - x / (2 * np.pi) * log_term.real
        )
        return (complex(val), 0.0) if return_bound else complex(val)
    m = np.arange(1, P + 1)
    ell = 2 * np.pi * m / a
    terms = np.exp(-ell * z) / (a * ell) * ((1 / ell + z) * np.sin(ell * x) - x * np.cos(ell * x))
    val = complex(1j * np.sum(terms))
    if return_bound:
        return val, float(np.exp(-2 * np.pi * P * z / a))
    return val


def green_expansion_terms(lattice, wn, x, y, P=None, params=EwaldParams()):
    """Return ``(G_{0,+}(x, y), G_{1,+}(x, y))`` of ``G_+^{eps k} = G_{0,+} + eps G_{1,+} + ...``."""
    if (x[0], x[1]) == (y[0], y[1]):
        raise DomainError("coincident points")
    a = lattice.cell_measure
    static = Wavenumbers(k=0.0)
    g0 = green_dirichlet(lattice, static, x, y, params=params)
    dx = float(x[0]) - float(y[0])
    xd, yd = float(x[1]), float(y[1])
    g1p = g1_sharp(lattice, (dx, xd - yd), P) - g1_sharp(lattice, (dx, xd + yd), P)
    g1 = (-0.5j / a) * (
        2 * wn.kd * xd * yd + wn.kbar * dx * (abs(xd - yd) - abs(xd + yd))
    ) - wn.kbar * g1p
    return g0, complex(g1)
