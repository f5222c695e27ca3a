"""
Radial fall from rest at infinity, seen in two coordinate systems.

In Schwarzschild coordinates the coordinate speed rises to a peak of
2/(3 sqrt 3) at six mass lengths and then falls to zero at the horizon.
In the weak solution, where the metric has an off-diagonal time-radius
term and stays regular at 2 r_M, the same fall has speed sqrt(2 r_M / r)
all the way in and reaches 1 at the horizon.
"""

import math

import numpy as np
from _common import pyplot, save, write_csv

from matfield.dynamics import radial_extremum, radial_velocity_schwarzschild, radial_velocity_weak

r_M = 1.0
c4 = 1.0  # energy constant of a fall from rest at infinity
y = np.geomspace(2 * r_M * (1 + 1e-6), 200 * r_M, 400)
beta_s = np.array([radial_velocity_schwarzschild(v, c4, r_M) for v in y])
beta_w = np.array([radial_velocity_weak(v, math.inf, 0.0, r_M) for v in y])

ext = radial_extremum(c4, r_M)
print(f"Schwarzschild peak: |beta| = {abs(ext.beta3m):.12f} at y3 = {ext.y3m:g} r_M")
print(f"  2/(3 sqrt 3)     = {2 / (3 * math.sqrt(3)):.12f}")
print(f"weak solution at the horizon: beta = {beta_w[0]:.9f}")
print(f"largest gap to -sqrt(2 r_M / y3): {np.max(np.abs(beta_w + np.sqrt(2 * r_M / y))):.1e}")

path = write_csv("radial_infall.csv", ["y3", "beta_schwarzschild", "beta_weak"], zip(y, beta_s, beta_w))
print(f"wrote {path}")

plt = pyplot()
if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(y, -beta_s, label="Schwarzschild coordinates")
    ax.semilogx(y, -beta_w, label="weak solution")
    ax.axvline(ext.y3m, ls=":", c="grey")
    ax.set_xlabel("y3 / r_M")
    ax.set_ylabel("infall speed |dr/dt|")
    ax.legend()
    print(f"wrote {save(fig, 'radial_infall.png')}")
