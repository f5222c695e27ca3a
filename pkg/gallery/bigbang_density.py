"""
Density history of the Big Bang scale function.

With q = (s / s_m)^(d/3) the density is 64 rho_m q^3 / (1 + q)^6: it rises
from zero, peaks at s_m and decays again, symmetric in log s. The fourth
eigenvalue of inv(g) R reproduces it, and the continuity residual stays at
rounding level along the whole curve. The last cell fits the curve shape
to a Planck spectrum to show how a thermal-looking profile compares.
"""

import numpy as np
from _common import pyplot, save, write_csv

from matfield import cosmology as cz

model = cz.CosmoModel.bigbang(s_m=1.0, rho_m=1.0, d=5.4)
sc = cz.scale_function(model)
s = cz.log_grid(model.s_m, n=201)

rho = np.array([model.density(v) for v in s])
mu = np.array([cz.fl_eigenvalues(sc, v) for v in s])
res = np.array([cz.continuity_residual(sc, model.density, v) for v in s])

k = int(np.argmax(rho))
print(f"peak density {float(rho[k])!r} at s = {float(s[k])!r}")
print(f"max |mu4 / rho - 1|       = {np.max(np.abs(mu[:, 1] / rho - 1)):.1e}")
print(f"max |continuity residual| = {np.max(np.abs(res)):.1e}")
print(f"continuity constant d^3 / sqrt(216 rho_m) = {model.cont_const:.6g}")

path = write_csv("bigbang_density.csv", ["s", "f", "rho", "mu1", "mu4"],
                 [(v, sc(v), r, m1, m4) for v, r, (m1, m4) in zip(s, rho, mu)])
print(f"wrote {path}")

# %% shape against a thermal spectrum (wavenumber in 1/cm, 2.725 K)
fit = cz.spectrum_compare(cz.blackbody_samples(), d=model.d)
print(f"Planck-curve fit: s_m = {fit.s_m:.3f} /cm, scale = {fit.rho_scale:.3f}, rms = {fit.rms_residual:.3f}")

plt = pyplot()
if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(s, rho, label="rho(s)")
    ax.semilogx(s, mu[:, 0], ls="--", label="mu1(s)")
    ax.set_xlabel("s / s_m")
    ax.legend()
    print(f"wrote {save(fig, 'bigbang_density.png')}")
