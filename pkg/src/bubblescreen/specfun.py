"""Special-function kernels used by the lattice Green's functions.

All functions are thin, validated wrappers around :mod:`scipy.special`
(AMOS for the Hankel function, Cephes for ``E_n``, the Faddeeva package for
the complex error function) plus one batched helper, :func:`expint_table`,
that produces ``E_0 .. E_nmax`` in a single pass for the Ewald spatial sum.

Every function is pure and accepts scalars or arrays.
"""

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = ["hankel1_0", "expint_en", "erfc_complex", "erfcx_complex", "expint_table"]


def hankel1_0(z):
    """Hankel function of the first kind and order zero, ``J0(z) + i Y0(z)``.

    Parameters
    ----------
    z : float or array_like
        Strictly positive real argument.

    Raises
    ------
    DomainError
        If any argument is not strictly positive (logarithmic singularity at 0).
    """
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)) or np.any(z <= 0.0):
        raise DomainError("hankel1_0 requires finite z > 0")
    out = special.hankel1(0, z)
    return out[()] if out.ndim == 0 else out


def expint_en(n, x):
    """Generalized exponential integral ``E_n(x) = int_1^inf exp(-x t) / t**n dt``.

    Parameters
    ----------
    n : int or array_like of int
        Order, ``n >= 1``.
    x : float or array_like
        Strictly positive argument.
    """
    n = np.asarray(n)
    x = np.asarray(x, dtype=float)
    if np.any(n < 1) or not np.all(np.equal(np.mod(n, 1), 0)):
        raise DomainError("expint_en requires integer n >= 1")
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError("expint_en requires finite x > 0")
    out = special.expn(n.astype(int), x)
    return out[()] if out.ndim == 0 else out


def erfc_complex(z):
    """Complementary error function of a complex argument.

    Evaluated through the scaled Faddeeva function, so it stays accurate in
    the whole plane (no cancellation for large positive real parts).
    """
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise DomainError("erfc_complex requires a finite argument")
    out = special.erfc(z)
    return out[()] if out.ndim == 0 else out


def erfcx_complex(z):
    """Scaled complementary error function ``exp(z**2) erfc(z)``."""
    z = np.asarray(z, dtype=complex)
    out = special.erfcx(z)
    return out[()] if out.ndim == 0 else out


def expint_table(nmax, x):
    """Return ``E_0(x), E_1(x), ..., E_nmax(x)`` stacked along a new last axis.

    Uses upward recurrence ``E_{n+1} = (exp(-x) - x E_n) / n`` from ``E_1``.
    The recurrence is unstable in the relative sense for ``x > n`` but the
    absolute error stays at ``~ eps * max(E_1(x), 1/x)``, which is what the
    Ewald sums need: their large-``x`` terms are negligible anyway.

    ``x`` must be strictly positive; ``E_0(x) = exp(-x) / x``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("expint_table requires x > 0")
    ex = np.exp(-x)
    out = np.empty(x.shape + (nmax + 1,))
    out[..., 0] = ex / x
    if nmax >= 1:
        out[..., 1] = special.exp1(x)
    for n in range(1, nmax):
        out[..., n + 1] = (ex - x * out[..., n]) / n
    return out
