"""Scalar quantizers for a unit Gaussian input.

A tour of the building block every branch uses: Lloyd-Max levels, the
optimized uniform grid, and how fast their distortion factors fall.
"""
# %%
import numpy as np

from tbq import highrate_rho, lloyd_max_gaussian, uniform_quantizer
from tbq.scalar_quantizer import format_quantizer

# %% [markdown]
# The one-bit quantizer is the sign function scaled to the centroid
# sqrt(2/pi); its distortion factor is 1 - 2/pi.

# %%
print(format_quantizer(lloyd_max_gaussian(2)))
print("1 - 2/pi =", 1 - 2 / np.pi)

# %% [markdown]
# Distortion factor rho = E(Q(x) - x)^2 / E x^2 as the level count grows.
# Lloyd-Max always wins; both approach their high-rate laws.

# %%
print(f"{'M':>4} {'lloyd':>12} {'uniform':>12} {'lloyd hr':>12} {'uniform hr':>12}")
for m in (2, 3, 4, 8, 16, 32, 64):
    lm, un = lloyd_max_gaussian(m).rho, uniform_quantizer(m).rho
    print(f"{m:>4} {lm:12.6g} {un:12.6g} {highrate_rho(m):12.6g} {highrate_rho(m, 'uniform'):12.6g}")

# %% [markdown]
# Fitting the log-log slope over 8..64 levels: close to -2 for Lloyd-Max,
# shallower for the uniform grid whose clipping range keeps growing.

# %%
m = np.array([8, 16, 32, 64])
for name, fn in (("lloyd", lloyd_max_gaussian), ("uniform", uniform_quantizer)):
    rho = [fn(int(k)).rho for k in m]
    print(name, "slope", round(np.polyfit(np.log(m), np.log(rho), 1)[0], 3))
