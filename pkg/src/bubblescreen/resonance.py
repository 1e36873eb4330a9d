"""Capacity, Minnaert frequency, characteristic values and reflection spectra.

Typical use::

    lat = LatticeConfig(10.0)
    media = MediaConfig.from_contrast(1e-3)
    rep = compute_report(BubbleGeometry(radius=0.5, standoff=1.0), lat, media)
    R = reflection(np.linspace(0.5, 1.5, 101) * rep.omega_M, rep, media)
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from .boundary import BubbleGeometry, discretize
from .errors import ConfigurationError, ConvergenceError, DomainError, PoleError
from .layer_ops import LayerPotentialAssembler, assemble_block, block_rhs, eval_field
from .lattice_green import EwaldParams, Wavenumbers

__all__ = [
    "MediaConfig",
    "DampingModel",
    "ResonanceReport",
    "compute_psi0",
    "compute_capacity",
    "capacity_from_psi0",
    "compute_m1_psi1",
    "minnaert_frequency",
    "find_characteristic_value",
    "scattering_gs",
    "eta_rad",
    "reflection",
    "reflection_epsilon",
    "alpha_infinity",
    "scattered_field",
    "solve_reflection",
    "compute_report",
    "calibrate_standoff_ratio",
]


@dataclass(frozen=True)
class MediaConfig:
    """Densities and bulk moduli outside (``rho``, ``kappa``) and inside the bubble.

    ``mu`` is the contrast scale in ``delta = mu eps**2``.  When left unset
    it equals ``delta``, which makes the physical problem the ``eps = 1``
    member of the scaled family.
    """

    rho: float = 1000.0
    rho_b: float = 1.0
    kappa: float = 1000.0
    kappa_b: float = 1.0
    mu: Optional[float] = None

    def __post_init__(self):
        if min(self.rho, self.rho_b, self.kappa, self.kappa_b) <= 0:
            raise ConfigurationError("densities and bulk moduli must be positive")
        if self.mu is not None and not self.mu > 0:
            raise ConfigurationError("mu must be positive")

    @classmethod
    def from_contrast(cls, delta=1e-3, v=1.0, v_b=1.0, rho=1000.0, mu=None):
        """Media with prescribed contrast and sound speeds (``kappa = rho v**2``)."""
        if not (delta > 0 and v > 0 and v_b > 0 and rho > 0):
            raise ConfigurationError("delta, v, v_b and rho must be positive")
        rho_b = delta * rho
        return cls(rho=rho, rho_b=rho_b, kappa=rho * v**2, kappa_b=rho_b * v_b**2, mu=mu)

    @property
    def delta(self):
        return self.rho_b / self.rho

    @property
    def v(self):
        return float(np.sqrt(self.kappa / self.rho))

    @property
    def v_b(self):
        return float(np.sqrt(self.kappa_b / self.rho_b))

    @property
    def contrast_scale(self):
        return self.delta if self.mu is None else self.mu

    @property
    def weak_contrast(self):
        """True when ``delta > 0.1``, outside the high-contrast regime."""
        return self.delta > 0.1


@dataclass(frozen=True)
class DampingModel:
    """Lumped non-radiative damping, added to the radiative one."""

    eta_other: float = 0.0

    def __post_init__(self):
        if not self.eta_other >= 0:
            raise ConfigurationError("eta_other must be non-negative")


@dataclass
class ResonanceReport:
    """Constants of one geometry and what was derived from them.

    ``sv_curve`` and ``eig_curve`` hold ``(omega, value)`` pairs of the
    smallest singular value and the smallest eigenvalue modulus of the
    physical block operator (empty unless a search was run).
    """

    C_cap: float
    M1: float
    area: float
    period: float
    omega_M: float
    alpha0_inf: float
    alpha1_inf: float
    psi0: np.ndarray = field(repr=False)
    psi1: np.ndarray = field(repr=False)
    boundary: object = field(default=None, repr=False)
    media: Optional[MediaConfig] = None
    omega_c: Optional[float] = None
    sv_curve: list = field(default_factory=list, repr=False)
    eig_curve: list = field(default_factory=list, repr=False)

    @property
    def capacity(self):
        return self.C_cap

    @property
    def mu_M(self):
        """``k_b**2 |D| / C`` at ``omega_M``; equals ``delta`` by construction."""
        return self.mu_M_at(self.omega_M)

    def mu_M_at(self, omega):
        v_b = 1.0 if self.media is None else self.media.v_b
        return (omega / v_b) ** 2 * self.area / self.C_cap

    def constants(self, kd):
        """Mapping accepted by :func:`scattering_gs` at normal wavenumber ``kd``."""
        return {"mu_M": self.mu_M, "M1": self.M1, "C": self.C_cap, "k_d": kd, "cell": self.period}

    def as_dict(self):
        return {
            "C_cap": self.C_cap,
            "M1": self.M1,
            "area": self.area,
            "period": self.period,
            "mu_M": self.mu_M,
            "omega_M": self.omega_M,
            "omega_c": self.omega_c,
            "alpha0_inf": self.alpha0_inf,
            "alpha1_inf": self.alpha1_inf,
        }


def compute_psi0(Kstar, bdy, tol=0.05):
    """Eigenvector of ``K_+^*`` for the eigenvalue 1/2, scaled so ``<1, psi0> = 1``."""
    K = np.asarray(Kstar)
    vals, vecs = linalg.eig(K)
    dist = np.abs(vals - 0.5)
    order = np.argsort(dist)
    if dist[order[0]] > tol:
        raise ConvergenceError(
            f"no eigenvalue of K* within {tol} of 1/2 (closest {vals[order[0]]:.6g})",
            eigenvalues=vals,
        )
    if len(vals) > 1 and dist[order[1]] < 1e-6:
        raise ConvergenceError("eigenvalue 1/2 of K* is degenerate", eigenvalues=vals)
    psi = vecs[:, order[0]]
    psi = psi / bdy.integrate(psi)
    return np.real_if_close(psi, tol=1e6)


def compute_capacity(bdy, S0):
    """Periodic capacity ``C = -<S_+^{-1} 1, 1>``."""
    sol = linalg.solve(np.asarray(S0), np.ones(bdy.size))
    c = -bdy.integrate(sol)
    if abs(c.imag) > 1e-8 * abs(c.real):
        raise ConvergenceError(f"capacity has an imaginary part: {c}")
    c = float(c.real)
    if not c > 0:
        raise ConvergenceError(f"non-positive capacity {c}: check the assembly")
    return c


def capacity_from_psi0(S0, psi0):
    """``-1 / (S_+ psi0)``, using that ``S_+ psi0`` is constant on the boundary."""
    return float(-1.0 / np.mean(np.asarray(S0) @ psi0).real)


def compute_m1_psi1(bdy, S0, Kstar, psi0=None):
    """``M1 = <psi0, x_d>`` and the mean-zero solution of ``(-1/2 + K^*) psi1 = nu_d``.

    ``S0`` is unused by the solve and kept so the three constant routines
    share a signature.
    """
    K = np.asarray(Kstar)
    if psi0 is None:
        psi0 = compute_psi0(K, bdy)
    M1 = float(np.real(bdy.pair(psi0, bdy.nodes[:, 1])))
    N = bdy.size
    # the rank-one term <1, psi> psi0 lifts the kernel of K* - 1/2
    A = K - 0.5 * np.eye(N) + np.outer(psi0, bdy.weights)
    cond = np.linalg.cond(A)
    if cond > 1e12:
        raise ConvergenceError(f"restricted solve is ill-conditioned (cond {cond:.3e})", cond=cond)
    psi1 = linalg.solve(A, bdy.normals[:, 1])
    psi1 = psi1 - bdy.integrate(psi1) * psi0
    return M1, np.real_if_close(psi1, tol=1e6)


def minnaert_frequency(C, area, media):
    """``omega_M = v_b sqrt(delta C / |D|)``."""
    if not (C > 0 and area > 0):
        raise DomainError("capacity and area must be positive")
    return float(media.v_b * np.sqrt(media.delta * C / area))


def find_characteristic_value(bdy, lattice, media, omega_range, samples=40, theta=np.pi / 2,
                              params=EwaldParams(), assembler=None, rtol=1e-5,
                              detector="sv", return_eig=False):
    """Frequency at which the physical block operator is closest to singular.

    A grid scan of the smallest singular value (``detector="sv"``) or of the
    smallest eigenvalue modulus (``detector="eig"``) is refined by a
    golden-section search on the two grid cells around the grid minimum.

    Returns
    -------
    omega_c : float
    curve : list of (omega, value)
        Grid values of the chosen indicator.
    other_curve : list of (omega, value)
        Only with ``return_eig=True``: the other indicator on the same grid.
    """
    if samples < 2:
        raise DomainError("need at least two samples")
    if detector not in ("sv", "eig"):
        raise ConfigurationError(f"unknown detector {detector!r}")
    lo, hi = map(float, omega_range)
    if not 0 < lo < hi:
        raise DomainError("omega_range must be an increasing pair of positive numbers")
    assembler = assembler or LayerPotentialAssembler(bdy, lattice, params)

    def block(omega):
        return assemble_block(bdy, lattice, media, omega, theta=theta, assembler=assembler)

    def indicator(omega):
        A = block(omega)
        return abs(A.smallest_eigenvalue()) if detector == "eig" else A.smallest_singular_value()

    grid = np.linspace(lo, hi, samples)
    values, others = [], []
    for w in grid:
        A = block(w)
        sv = A.smallest_singular_value() if (detector == "sv" or return_eig) else None
        ev = abs(A.smallest_eigenvalue()) if (detector == "eig" or return_eig) else None
        values.append(ev if detector == "eig" else sv)
        others.append(sv if detector == "eig" else ev)
    curve = list(zip(grid.tolist(), values))
    i = int(np.argmin(values))
    if i == 0 or i == samples - 1:
        raise ConvergenceError("no interior minimum in the frequency range", curve=curve)
    res = optimize.minimize_scalar(indicator, bracket=(grid[i - 1], grid[i], grid[i + 1]),
                                   method="golden", options={"xtol": rtol})
    omega_c = float(res.x)
    if return_eig:
        return omega_c, curve, list(zip(grid.tolist(), others))
    return omega_c, curve


def scattering_gs(mu, epsilon, constants):
    """Scattering function ``eps M1 / (1 - mu_M/mu - i eps M1**2 k_d C / |Gamma|)``.

    Parameters
    ----------
    mu, epsilon : float
        Contrast scale (> 0) and small parameter (>= 0).
    constants : mapping
        Keys ``mu_M``, ``M1``, ``C``, ``k_d`` and ``cell`` (``|Gamma|``).
    """
    if not mu > 0:
        raise DomainError("mu must be positive")
    if not epsilon >= 0:
        raise DomainError("epsilon must be non-negative")
    M1, C = constants["M1"], constants["C"]
    num = epsilon * M1
    if num == 0:
        return 0j
    den = 1 - constants["mu_M"] / mu - 1j * epsilon * M1**2 * constants["k_d"] * C / constants["cell"]
    if den == 0:
        raise PoleError("scattering function evaluated exactly at its pole")
    return complex(num / den)


def eta_rad(omega, report, media, theta=np.pi / 2):
    """Radiative damping ``omega M1**2 C / (v_d |Gamma|)`` with ``v_d = omega / k_d``."""
    kd = np.asarray(omega) / media.v * np.sin(theta)
    return kd * report.M1**2 * report.C_cap / report.period


def reflection(omega, report, media, damping=DampingModel(), theta=np.pi / 2):
    """Reflection coefficient ``R(omega)`` in the monopole approximation.

    ``omega`` may be an array.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError("omega must be positive")
    eta = eta_rad(omega, report, media, theta)
    den = 1 - (omega / report.omega_M) ** 2 - 1j * (eta + damping.eta_other)
    out = -1 - 2j * eta / den
    return out[()] if out.ndim == 0 else out


def alpha_infinity(report):
    """Far-field plateaus ``(alpha0_inf, alpha1_inf)`` of the boundary-layer correctors."""
    return report.alpha0_inf, report.alpha1_inf


def _alphas(bdy, C, M1, period, psi1):
    a0 = M1 * C / period
    a1 = float(np.real(-bdy.pair(bdy.nodes[:, 1], psi1))) / period + M1**2 * C / period
    return a0, a1


def _mu_M(report, wn):
    kb = wn.k if wn.k_b is None else wn.k_b
    return kb**2 * report.area / report.C_cap


def reflection_epsilon(report, wn, epsilon, mu):
    """``R_eps = -1 + 2 i k_d (eps alpha1_inf - g_s alpha0_inf)``, dipole term included.

    ``wn`` carries the macroscopic wavenumbers ``k`` and ``k_b``.
    """
    consts = dict(report.constants(wn.kd), mu_M=_mu_M(report, wn))
    g = scattering_gs(mu, epsilon, consts)
    return complex(-1 + 2j * wn.kd * (epsilon * report.alpha1_inf - g * report.alpha0_inf))


def scattered_field(report, lattice, wn, epsilon, x, mu=None, u0=1.0, L=None, parts=False,
                    params=EwaldParams()):
    """Leading-order scattered field ``U_1 + U_BL`` above the bubble layer.

    Parameters
    ----------
    x : (float, float)
        Microscopic point; the macroscopic one is ``X = eps x``.
    wn : Wavenumbers
        Macroscopic wavenumbers.
    mu : float, optional
        Contrast scale; defaults to ``report.media.contrast_scale``.
    L : float, optional
        Top of the strip holding the bubbles; defaults to the highest node.
    parts : bool
        Return ``(U_1, U_BL)`` instead of their sum.
    """
    bdy = report.boundary
    L = float(bdy.nodes[:, 1].max()) if L is None else L
    if x[1] < L:
        raise DomainError(f"x_d = {x[1]} lies below the strip top L = {L}")
    if mu is None:
        if report.media is None:
            raise ConfigurationError("mu is required when the report carries no media")
        mu = report.media.contrast_scale
    C, M1 = report.C_cap, report.M1
    a0inf, a1inf = report.alpha0_inf, report.alpha1_inf
    g = scattering_gs(mu, epsilon, dict(report.constants(wn.kd), mu_M=_mu_M(report, wn)))
    static = Wavenumbers(0.0)
    alpha0 = -C * eval_field(bdy, report.psi0, lattice, static, x, params)
    alpha1 = eval_field(bdy, report.psi1 - M1 * C * report.psi0, lattice, static, x, params)
    X = (epsilon * x[0], epsilon * x[1])
    pref = 2j * u0 * wn.kd
    u_bl = pref * np.exp(-1j * wn.kbar * X[0]) * (epsilon * (alpha1 - a1inf) - g * (alpha0 - a0inf))
    u_1 = pref * np.exp(1j * (wn.kd * X[1] - wn.kbar * X[0])) * (epsilon * a1inf - g * a0inf)
    if parts:
        return complex(u_1), complex(u_bl)
    return complex(u_1 + u_bl)


def solve_reflection(bdy, lattice, media, omega, theta=np.pi / 2, u0=1.0, params=EwaldParams(),
                     assembler=None):
    """Reflection coefficient from a full solve of the physical block system.

    Independent of the asymptotic formula: the amplitude of the single
    propagating order is read off the exterior density.
    """
    assembler = assembler or LayerPotentialAssembler(bdy, lattice, params)
    A = assemble_block(bdy, lattice, media, omega, theta=theta, assembler=assembler)
    wn = Wavenumbers.from_angle(omega / media.v, theta, k_b=omega / media.v_b)
    psi = A.solve(block_rhs(bdy, wn, 1.0, media.delta, u0))[bdy.size:]
    y = bdy.nodes
    amp = -bdy.integrate(np.sin(wn.kd * y[:, 1]) * np.exp(1j * wn.kbar * y[:, 0]) * psi)
    amp /= wn.kd * lattice.period
    return complex(-1 + amp / u0)


def compute_report(geometry, lattice, media, N=128, params=EwaldParams(), search=None,
                   theta=np.pi / 2, assembler=None):
    """Capacity, moments and ``omega_M`` for one geometry, plus an optional search.

    ``search`` is ``None`` or a dict with keys ``range`` (default
    ``(0.7, 1.3)``), ``relative`` (default true: ``range`` is in units of
    ``omega_M``) and ``samples`` (default 40).
    """
    bdy = discretize(geometry, N)
    assembler = assembler or LayerPotentialAssembler(bdy, lattice, params)
    S0, K0 = assembler.operators(0.0)
    C = compute_capacity(bdy, S0)
    psi0 = compute_psi0(K0, bdy)
    C_alt = capacity_from_psi0(S0, psi0)
    if abs(C_alt - C) > 1e-6 * C:
        raise ConvergenceError(f"capacity routes disagree: {C} vs {C_alt}", routes=(C, C_alt))
    M1, psi1 = compute_m1_psi1(bdy, S0, K0, psi0)
    a0, a1 = _alphas(bdy, C, M1, lattice.period, psi1)
    report = ResonanceReport(
        C_cap=C, M1=M1, area=bdy.area, period=lattice.period,
        omega_M=minnaert_frequency(C, bdy.area, media), alpha0_inf=a0, alpha1_inf=a1,
        psi0=psi0, psi1=psi1, boundary=bdy, media=media,
    )
    if search is not None:
        lo, hi = search.get("range", (0.7, 1.3))
        if search.get("relative", True):
            lo, hi = lo * report.omega_M, hi * report.omega_M
        report.omega_c, report.sv_curve, report.eig_curve = find_characteristic_value(
            bdy, lattice, media, (lo, hi), search.get("samples", 40), theta, params, assembler,
            return_eig=True,
        )
    return report


def calibrate_standoff_ratio(target_omega, radius, lattice, media, N=128, params=EwaldParams(),
                             bracket=(1.2, 20.0), rtol=1e-8):
    """Ratio ``c = beta / r`` at which a circle of ``radius`` has ``omega_M = target_omega``.

    ``omega_M`` decreases monotonically in the standoff, so Brent's method
    on a sign-changing bracket in ``c`` finds the unique root.
    """
    def mismatch(c):
        geom = BubbleGeometry(radius=radius, standoff=c * radius)
        return compute_report(geom, lattice, media, N, params).omega_M - target_omega

    lo, hi = bracket
    flo, fhi = mismatch(lo), mismatch(hi)
    if flo * fhi > 0:
        raise ConvergenceError(
            f"target {target_omega} not bracketed by standoff ratios {bracket}",
            omega_range=(flo + target_omega, fhi + target_omega),
        )
    return float(optimize.brentq(mismatch, lo, hi, rtol=rtol))
