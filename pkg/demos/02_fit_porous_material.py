"""Fit a rational admittance model to a porous absorber layer.

A 10 cm layer of flow resistivity 8000 Ns/m^4 on a rigid backing has a
frequency-dependent surface impedance (empirical power-law model of the
wavenumber and characteristic impedance inside the layer).  The time
domain machinery needs that response as a pole-residue admittance, so a
vector fit with two real poles and one complex-conjugate pair is run on
the 20-1000 Hz band, normalized to wave-travel units.

Writes material.json next to this script; run time is a few seconds.
"""

from pathlib import Path

import numpy as np

from wavepinn import (
    FrequencyBand,
    PorousLayer,
    evaluate_admittance,
    miki_surface_impedance,
    normalize_material,
    save_material,
    vector_fit,
)

layer = PorousLayer(d_mat=0.10, sigma_mat=8000.0)
band = FrequencyBand(f_min=20.0, f_max=1000.0, n_samples=200)
layer_n, band_n = normalize_material(layer, band, c_phys=343.0)
print(f"normalized band: [{band_n.f_min:.4f}, {band_n.f_max:.4f}]"
      f" (f_phys / (c / 1 m))")

f = band_n.frequencies()
y = 1.0 / miki_surface_impedance(f, layer_n)

# relative weighting keeps the small high-frequency magnitudes from
# being drowned out by the admittance peak
fit = vector_fit(f, y, q=2, s=1, iterations=40, weights=1.0 / np.abs(y))
adm = fit.admittance
print(f"\nfit converged: {fit.converged}, iterations {fit.iterations},"
      f" max rel error {fit.max_rel_error:.3%}")
print(f"  Y_inf = {adm.y_inf:.4f}")
for lam, a in zip(adm.lam, adm.a):
    print(f"  real pole  lam = {lam:8.3f}   residue A = {a:8.3f}")
for al, be, b, c in zip(adm.alpha, adm.beta, adm.b, adm.c):
    print(f"  pair pole  alpha = {al:.3f}, beta = {be:.3f},"
          f" residue B + iC = {b:.3f} {c:+.3f}i")

# spot-check the reconstruction across the band
back = evaluate_admittance(adm, 2 * np.pi * f)
rel = np.abs(back - y) / np.abs(y)
print(f"\nreconstruction error: median {np.median(rel):.2e},"
      f" max {np.max(rel):.2e}")

out = Path(__file__).parent / "material.json"
save_material(out, adm, band=band_n, fit=fit)
print(f"wrote {out}")
