# %% [markdown]
# # Geometric trends and the reflection coefficient
#
# How the resonance moves with the standoff, the period and the radius, and
# what the screen does to a normally incident plane wave.

# %%
import numpy as np

from bubblescreen import BubbleGeometry, LatticeConfig, MediaConfig, compute_report
from bubblescreen.resonance import DampingModel, eta_rad, reflection, solve_reflection
from bubblescreen.boundary import discretize

media = MediaConfig.from_contrast(1e-3)


def omega_M(r, beta, a, N=64):
    return compute_report(BubbleGeometry(radius=r, standoff=beta), LatticeConfig(a), media, N).omega_M


# %% [markdown]
# ## Standoff
# Moving the row away from the plane lowers the frequency.

# %%
for beta in (1.2, 2.0, 4.0, 8.0):
    print(f"beta = {beta:4.1f}  omega_M = {omega_M(1.0, beta, 10.0):.5f}")

# %% [markdown]
# ## Period
# For periods below the standoff the frequency grows like `log a`.  Once
# `a` exceeds `beta` the mirror image takes over and the curve flattens.

# %%
periods = np.geomspace(4, 40, 8)
for beta in (2.0, 20.0):
    w = np.array([omega_M(1.0, beta, a) for a in periods])
    fit = np.polyfit(np.log(periods), w, 1)
    resid = w - np.polyval(fit, np.log(periods))
    print(f"beta = {beta:4.1f}: R^2 of omega vs log a = {1 - resid.var() / w.var():.4f}")

# %% [markdown]
# ## Radius
# At `a = 5`, `beta = 2` the frequency first falls with the radius and rises
# again once the bubble nearly touches the plane.

# %%
radii = np.linspace(0.1, 1.9, 10)
w = [omega_M(r, 2.0, 5.0, N=128) for r in radii]  # near contact needs more nodes
for r, x in zip(radii, w):
    print(f"r = {r:4.2f}  omega_M = {x:.5f}")

# %% [markdown]
# ## Reflection
# Without losses the screen reflects everything and only the phase changes,
# flipping from -1 to +1 across the resonance.  Adding an extra damping
# equal to the radiative one absorbs the wave completely at `omega_M`.

# %%
geom = BubbleGeometry(radius=1.0, standoff=2.0)
lattice = LatticeConfig(10.0)
rep = compute_report(geom, lattice, media)
omegas = rep.omega_M * np.array([0.5, 0.9, 1.0, 1.1, 2.0])
print("R (monopole):", np.round(reflection(omegas, rep, media), 4))
eta = float(eta_rad(rep.omega_M, rep, media))
print("|R| with matched damping:", abs(reflection(rep.omega_M, rep, media, DampingModel(eta))))

# %% [markdown]
# The full block solve gives an independent value at the resonance.

# %%
bdy = discretize(geom, 128)
print("R (direct solve) at omega_M:", solve_reflection(bdy, lattice, media, rep.omega_M))
