"""
Perihelion advance and extreme orbital speeds of the nine planets.

The closed forms need only perihelion, aphelion and period; the bundled
planet file and constants file are all the input there is. For Mercury the
closed form is then compared with two independent integrations: the orbit
equation for 1/r as a function of azimuth, and the full equation of motion
in the weak solution run for one revolution.
"""

import math

from _common import write_csv

from matfield.dynamics import (
    ARCSEC_PER_RAD,
    OrbitSpec,
    bundled_planets,
    planet_table,
    precession,
    precession_geodesic,
    precession_numeric,
)
from matfield.metrics import bundled_constants, mass_to_length

consts = bundled_constants()
planets = bundled_planets()

# %% closed-form tables
rows = planet_table(planets, consts)
print(f"{'planet':<8} {'arcsec/rev':>12} {'arcsec/century':>15} {'v_min km/s':>11} {'v_max km/s':>11}")
for r in rows:
    print(f"{r.name:<8} {r.dphi_per_rev:12.6g} {r.dphi_per_century:15.6g} {r.v_min:11.6g} {r.v_max:11.6g}")
path = write_csv(
    "planet_table.csv",
    ["name", "dphi_per_rev_arcsec", "dphi_per_century_arcsec", "v_min_kms", "v_max_kms"],
    [(r.name, r.dphi_per_rev, r.dphi_per_century, r.v_min, r.v_max) for r in rows],
)
print(f"wrote {path}")

# %% Mercury three ways
r_M = mass_to_length(consts.M_sun, consts) / 1000.0
mercury = next(p for p in planets if p.name == "Mercury")
spec = OrbitSpec(p=mercury.perihelion_km, a=mercury.aphelion_km, r_M=r_M)
period = 2 * math.pi * math.sqrt((0.5 * (spec.a + spec.p)) ** 3 / r_M)

closed = precession(spec)
orbit_eq = precession_numeric(spec)
geo, traj = precession_geodesic(spec, h_max=period / 1e4)

print()
print(f"Mercury, r_M = {r_M:.6f} km")
print(f"  closed form     {closed * ARCSEC_PER_RAD:.7f} arcsec/rev")
print(f"  orbit equation  {orbit_eq * ARCSEC_PER_RAD:.7f} arcsec/rev  (rel {orbit_eq / closed - 1:+.1e})")
print(f"  geodesic        {geo * ARCSEC_PER_RAD:.7f} arcsec/rev  (rel {geo / closed - 1:+.1e})")
print(f"  geodesic run: {traj.steps} steps, max |u g u - 1| = {traj.norm_drift:.1e}")
