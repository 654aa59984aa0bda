"""Time-domain reference solutions with three kinds of wall.

A spectral-element solver (nodal Galerkin, RK4 in time) produces the
ground-truth traces the surrogate is judged against.  Three runs on the
standard domain show the boundary treatments:

  1. rigid walls        - energy is conserved, pulses mirror forever
  2. impedance walls    - each bounce removes a fixed energy fraction
  3. porous-layer walls - the wall itself has memory: accumulator
                          states absorb and re-emit, so only the total
                          (field + wall) budget is monotone

Run time is around half a minute, dominated by the porous-wall run
(its stiff accumulator dynamics force a small RK4 step).
"""

import numpy as np

from wavepinn import (
    DomainSpec,
    FrequencyBand,
    FrequencyDependent,
    FrequencyIndependent,
    GaussianSource,
    Neumann,
    PorousLayer,
    SolverConfig,
    image_source_solution,
    miki_surface_impedance,
    normalize_material,
    solve_time_domain,
    vector_fit,
)

domain = DomainSpec(t_max=4.0)
src = GaussianSource(x0=0.0, sigma0=0.2)
receiver = 0.5

print("1) rigid walls (energy should be flat):")
res = solve_time_domain(domain, src, Neumann(), SolverConfig(),
                        receivers=[receiver], t_max=4.0)
drift = np.max(np.abs(res.energy - res.energy[0])) / res.energy[0]
print(f"   {len(res.t) - 1} steps, energy drift {drift:.2e}")

print("2) impedance walls, xi = 5.83 (checked against image sources):")
res = solve_time_domain(domain, src, FrequencyIndependent(xi=5.83),
                        SolverConfig(), receivers=[receiver], t_max=4.0)
ref = image_source_solution(receiver, res.t, src, 5.83, domain)
err = np.mean(np.abs(res.pressure[:, 0] - ref)) / np.mean(np.abs(ref))
decay = res.energy[-1] / res.energy[0]
print(f"   rel mean error vs analytic {err:.2e},"
      f" energy left after {domain.t_max:g} time units: {decay:.1%}")

print("3) porous-layer walls (fitted rational admittance):")
layer_n, band_n = normalize_material(PorousLayer(0.10, 8000.0),
                                     FrequencyBand(20.0, 1000.0, 200), 343.0)
f = band_n.frequencies()
y = 1.0 / miki_surface_impedance(f, layer_n)
fit = vector_fit(f, y, q=2, s=1, iterations=40, weights=1.0 / np.abs(y))
res = solve_time_domain(domain, src, FrequencyDependent(admittance=fit.admittance),
                        SolverConfig(), receivers=[receiver], t_max=4.0)
print(f"   {len(res.t) - 1} steps, field energy bounded by initial:"
      f" max ratio {np.max(res.energy) / res.energy[0]:.6f}")
print(f"   trace extrema: {res.pressure[:, 0].min():+.4f}"
      f" .. {res.pressure[:, 0].max():+.4f}")
print("   (the wall stores and releases energy, so the field-only curve"
      "\n    is bounded but not monotone)")
