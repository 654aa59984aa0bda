"""Porous-absorber boundary data.

Pipeline: Miki power-law surface impedance of a rigid-backed layer ->
normalization to c=1 units -> vector fit of the admittance onto the
pole-residue form consumed by the boundary losses and the reference
solver -> RK4 oracle for the accumulator ODEs.

Time-harmonic convention is e^(-i*omega*t) throughout, so stable poles
sit at Re < 0 in the s = -i*omega variable and decaying accumulators
carry exp(-lam*t) kernels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import RationalAdmittance

__all__ = [
    "PorousLayer",
    "FrequencyBand",
    "AccumulatorSeries",
    "VectorFitError",
    "VectorFitResult",
    "miki_surface_impedance",
    "normalize_material",
    "vector_fit",
    "evaluate_admittance",
    "ade_integrate",
    "estimate_accumulator_scales",
    "save_material",
    "load_material",
    "MATERIAL_FORMAT_VERSION",
]

MATERIAL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PorousLayer:
    """Rigid-backed homogeneous porous layer.

    d_mat is the thickness, sigma_mat the air flow resistivity.  Both are
    interpreted in whatever unit system the caller works in (physical
    N.s/m^4 or c=1-normalized); only the ratio f/sigma and the product
    k*d enter the model, and both are invariant under the normalization
    applied by normalize_material.
    """

    d_mat: float
    sigma_mat: float

    def __post_init__(self):
        if self.d_mat <= 0:
            raise ValueError(f"layer thickness must be positive, got {self.d_mat}")
        if self.sigma_mat <= 0:
            raise ValueError(f"flow resistivity must be positive, got {self.sigma_mat}")


@dataclass(frozen=True)
class FrequencyBand:
    """Fit band [f_min, f_max] in ordinary (cyclic) frequency."""

    f_min: float
    f_max: float
    n_samples: int = 200

    def __post_init__(self):
        if not (0 < self.f_min < self.f_max):
            raise ValueError(f"need 0 < f_min < f_max, got [{self.f_min}, {self.f_max}]")
        if self.n_samples < 2:
            raise ValueError("need at least 2 samples")

    def frequencies(self) -> np.ndarray:
        return np.linspace(self.f_min, self.f_max, self.n_samples)


def miki_surface_impedance(f, layer: PorousLayer, c: float = 1.0, rho0: float = 1.2):
    """Surface impedance of a rigid-backed porous layer (Miki model).

    Power-law coefficients follow Miki (1990) with X = f/sigma; under the
    e^(-i*omega*t) convention the imaginary parts flip sign relative to
    the engineering-convention form, and the rigid-backing transform is
    Z_s = +i * Z_c * cot(k_c * d), which keeps Re(Z_s) >= 0 and recovers
    the anechoic limit Z_s -> Z_c for thick layers.

    Vectorized over f; returns complex with the shape of f.
    """
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr <= 0):
        raise ValueError("frequencies must be positive")
    x = f_arr / layer.sigma_mat
    zc = rho0 * c * (1.0 + 0.070 * x**-0.632 + 1j * 0.107 * x**-0.632)
    kc = (2.0 * np.pi * f_arr / c) * (1.0 + 0.109 * x**-0.618 + 1j * 0.160 * x**-0.618)
    zs = 1j * zc / np.tan(kc * layer.d_mat)
    return zs if f_arr.ndim else complex(zs)


def normalize_material(layer: PorousLayer, band: FrequencyBand, c_phys: float):
    """Rescale physical material parameters into c=1 units.

    Normalized time runs c_phys times faster, so frequencies and the flow
    resistivity both divide by c_phys; lengths are untouched.
    """
    if c_phys <= 0:
        raise ValueError(f"c_phys must be positive, got {c_phys}")
    layer_n = PorousLayer(d_mat=layer.d_mat, sigma_mat=layer.sigma_mat / c_phys)
    band_n = FrequencyBand(band.f_min / c_phys, band.f_max / c_phys, band.n_samples)
    return layer_n, band_n


def evaluate_admittance(adm: RationalAdmittance, omega):
    """Pole-residue admittance at angular frequency omega (vectorized)."""
    w = np.asarray(omega, dtype=float)
    y = np.full(w.shape, adm.y_inf, dtype=complex)
    for a_k, lam_k in zip(adm.a, adm.lam):
        y += a_k / (lam_k - 1j * w)
    for b_k, c_k, al_k, be_k in zip(adm.b, adm.c, adm.alpha, adm.beta):
        r = b_k + 1j * c_k
        y += r / (al_k + 1j * be_k - 1j * w) + np.conj(r) / (al_k - 1j * be_k - 1j * w)
    return y if w.ndim else complex(y)


class VectorFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class VectorFitResult:
    admittance: RationalAdmittance
    max_rel_error: float
    converged: bool
    structure_repaired: bool
    iterations: int


def _vf_basis(s: np.ndarray, real_poles: np.ndarray, pair_poles: np.ndarray):
    """Real-coefficient partial-fraction basis columns at sample points s.

    Real pole p: one column 1/(s-p).  Conjugate pair with representative
    p (Im > 0): two columns 1/(s-p)+1/(s-p~) and i/(s-p)-i/(s-p~), whose
    real coefficients (c1, c2) encode the residue c1+i*c2 at p.
    """
    cols = []
    for p in real_poles:
        cols.append(1.0 / (s - p))
    for p in pair_poles:
        d1 = 1.0 / (s - p)
        d2 = 1.0 / (s - np.conj(p))
        cols.append(d1 + d2)
        cols.append(1j * d1 - 1j * d2)
    if cols:
        return np.stack(cols, axis=1)
    return np.zeros((s.size, 0), dtype=complex)


def _lstsq_real(m: np.ndarray, rhs: np.ndarray, strict: bool = True) -> np.ndarray:
    """Least squares on the real-stacked system.

    Columns are scaled to unit norm first: the raw partial-fraction
    columns span many orders of magnitude, and without scaling lstsq's
    rank cutoff misreads that spread as degeneracy.  With strict=True a
    rank-deficient system raises; the sigma-ansatz iterations instead
    accept the minimum-norm solution, which is exactly degenerate for
    e.g. constant samples (trial columns parallel to -Y*basis) where the
    right answer is "don't move the poles".
    """
    a = np.vstack([m.real, m.imag])
    b = np.concatenate([rhs.real, rhs.imag])
    col = np.linalg.norm(a, axis=0)
    if np.any(col == 0):
        raise VectorFitError("zero basis column; identical poles in the fit set")
    sol, _, rank, svals = np.linalg.lstsq(a / col, b, rcond=None)
    if strict and rank < a.shape[1]:
        cond = svals[0] / svals[-1] if svals[-1] > 0 else np.inf
        raise VectorFitError(
            f"rank-deficient least squares (rank {rank} < {a.shape[1]}, cond {cond:.3e}); "
            "reduce pole count or widen the band"
        )
    return sol / col

def _classify_poles(eigs: np.ndarray, q: int, s: int):
    """Split relocated eigenvalues back into q real poles and s pairs.

    Relocation can merge two real poles into a pair or split a pair; when
    the counts drift we coerce the smallest-|Im| eigenvalues to real and
    rebuild pairs from the rest, flagging the repair.
    """
    tol = 1e-9 * max(1.0, float(np.max(np.abs(eigs))))
    real = sorted(e.real for e in eigs if abs(e.imag) <= tol)
    pairs = sorted((e for e in eigs if e.imag > tol), key=lambda e: e.imag)
    repaired = False
    if len(real) != q or len(pairs) != s:
        repaired = True
        ordered = sorted(eigs, key=lambda e: abs(e.imag))
        real = sorted(e.real for e in ordered[:q])
        rest = sorted((e for e in ordered[q:] if e.imag > 0), key=lambda e: abs(e.imag))
        # conjugates come in exact pairs from a real matrix, but guard anyway
        while len(rest) < s:
            rest.append(complex(np.mean([e.real for e in eigs]), 1.0))
        pairs = [complex(e.real, abs(e.imag)) for e in rest[:s]]
    real_poles = np.array([min(r, -abs(r)) for r in real])  # flip unstable
    pair_poles = np.array(
        [complex(min(p.real, -abs(p.real)), abs(p.imag)) for p in pairs], dtype=complex
    )
    # keep poles strictly stable so the admittance invariants hold
    floor = 1e-12
    if real_poles.size:
        real_poles = np.minimum(real_poles, -floor)
    if pair_poles.size:
        pair_poles = np.minimum(pair_poles.real, -floor) + 1j * pair_poles.imag
    return real_poles, pair_poles, repaired


def vector_fit(freqs, samples, q: int, s: int, iterations: int = 30,
               weights=None) -> VectorFitResult:
    """Fit sampled admittance Y(2*pi*f) to the pole-residue model.

    Classical relocation scheme: solve the sigma-ansatz least squares for
    trial residues, move the poles to the zeros of sigma (eigenvalues of
    the companion update), flip any unstable pole, iterate; finish with a
    plain residue solve on the final poles.  `freqs` are ordinary
    frequencies, poles/residues come out in angular units.

    `weights` multiplies the least-squares rows (default uniform); pass
    1/|samples| to minimize relative instead of absolute misfit.
    """
    freqs = np.asarray(freqs, dtype=float)
    samples = np.asarray(samples, dtype=complex)
    if freqs.shape != samples.shape or freqs.ndim != 1:
        raise ValueError("freqs and samples must be matching 1-d arrays")
    if not np.all(np.isfinite(samples)):
        raise ValueError("admittance samples must be finite")
    if weights is None:
        weights = np.ones_like(freqs)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != freqs.shape or np.any(weights <= 0):
            raise ValueError("weights must be positive, one per sample")
    n_par = q + 2 * s + 1
    if freqs.size < 2 * n_par:
        raise ValueError(f"need at least {2 * n_par} samples to fit q={q}, s={s}")

    omega = 2.0 * np.pi * freqs
    sv = -1j * omega
    w_lo, w_hi = float(omega.min()), float(omega.max())

    # starting poles: real ones log-spaced over the band, pairs lightly damped
    real_poles = -np.geomspace(w_lo, w_hi, q) if q else np.zeros(0)
    if s:
        beta0 = np.geomspace(w_lo, w_hi, s + 2)[1:-1] if s > 1 else np.array(
            [np.sqrt(w_lo * w_hi)]
        )
        pair_poles = -beta0 / 100.0 + 1j * beta0
    else:
        pair_poles = np.zeros(0, dtype=complex)

    def fit_residues(rp, pp):
        basis = _vf_basis(sv, rp, pp)
        m = np.concatenate([basis, np.ones((sv.size, 1))], axis=1)
        sol = _lstsq_real(m * weights[:, None], samples * weights)
        model = m @ sol
        denom = np.maximum(np.abs(samples), 1e-300)
        return sol, float(np.max(np.abs(model - samples) / denom))

    repaired_any = False
    converged = False
    n_done = 0
    if q + s == 0:
        converged = True
    for it in range(iterations if q + s else 0):
        n_done = it + 1
        basis = _vf_basis(sv, real_poles, pair_poles)
        m = np.concatenate(
            [basis, np.ones((sv.size, 1)), -samples[:, None] * basis], axis=1
        )
        sol = _lstsq_real(m * weights[:, None], samples * weights, strict=False)
        c_sigma = sol[q + 2 * s + 1 :]

        # relocated poles are eigenvalues of A - b * c_sigma^T in the real
        # block realization of the sigma rational function
        n_states = q + 2 * s
        a_mat = np.zeros((n_states, n_states))
        b_vec = np.zeros(n_states)
        for j, p in enumerate(real_poles):
            a_mat[j, j] = np.real(p)
            b_vec[j] = 1.0
        # block orientation chosen so c_sigma rows multiply the same two
        # basis columns solved for above: c(sI-A)^-1 b == (b1, b2) exactly
        for k, p in enumerate(pair_poles):
            j = q + 2 * k
            a_mat[j, j] = a_mat[j + 1, j + 1] = p.real
            a_mat[j, j + 1] = p.imag
            a_mat[j + 1, j] = -p.imag
            b_vec[j] = 2.0
        eigs = np.linalg.eigvals(a_mat - np.outer(b_vec, c_sigma))
        new_real, new_pairs, repaired = _classify_poles(eigs, q, s)
        repaired_any = repaired_any or repaired

        move = 0.0
        if q:
            move = max(move, float(np.max(np.abs(new_real - real_poles))))
        if s:
            move = max(move, float(np.max(np.abs(new_pairs - pair_poles))))
        real_poles, pair_poles = new_real, new_pairs
        if move <= 1e-10 * max(w_hi, 1.0):
            converged = True
            break

    sol, max_rel = fit_residues(real_poles, pair_poles)
    # basis coefficients (c1, c2) give residue c1+i*c2 at the Im>0 pole;
    # the model's (b, c) live on the conjugate, hence c = -c2
    adm = RationalAdmittance(
        y_inf=float(sol[q + 2 * s]),
        a=sol[:q],
        lam=-np.real(real_poles) if q else np.zeros(0),
        b=sol[q : q + 2 * s : 2],
        c=-sol[q + 1 : q + 2 * s : 2],
        alpha=-pair_poles.real if s else np.zeros(0),
        beta=pair_poles.imag if s else np.zeros(0),
    )
    return VectorFitResult(
        admittance=adm,
        max_rel_error=max_rel,
        converged=converged,
        structure_repaired=repaired_any,
        iterations=n_done,
    )


@dataclass(frozen=True)
class AccumulatorSeries:
    """Sampled accumulator trajectories, one row per time stamp."""

    t: np.ndarray
    phi: np.ndarray
    psi0: np.ndarray
    psi1: np.ndarray

    def stacked(self) -> np.ndarray:
        """Columns ordered like the ADE network output: phi, psi0, psi1."""
        return np.concatenate([self.phi, self.psi0, self.psi1], axis=1)


def ade_integrate(adm: RationalAdmittance, p_of_t, dt: float, n_steps=None) -> AccumulatorSeries:
    """Classical RK4 for the accumulator ODEs with zero initial state.

        phi_k'  = p - lam_k * phi_k
        psi0_k' = p - alpha_k * psi0_k - beta_k * psi1_k
        psi1_k' =   - alpha_k * psi1_k + beta_k * psi0_k

    `p_of_t` is either a callable evaluated exactly at the RK4 stage
    times, or an array of samples on the dt grid interpolated linearly
    (stage midpoint = average of neighbours).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if callable(p_of_t):
        if n_steps is None:
            raise ValueError("n_steps is required with callable forcing")
        n = int(n_steps)
        t_grid = np.arange(n + 1) * dt

        def stage(i, frac):
            return float(p_of_t((i + frac) * dt))

    else:
        p_samp = np.asarray(p_of_t, dtype=float)
        if p_samp.ndim != 1 or p_samp.size < 2:
            raise ValueError("sampled forcing must be a 1-d array of >= 2 values")
        n = p_samp.size - 1
        if n_steps is not None and int(n_steps) != n:
            raise ValueError("n_steps disagrees with the sample count")
        t_grid = np.arange(n + 1) * dt

        def stage(i, frac):
            if frac == 0.0:
                return p_samp[i]
            if frac == 1.0:
                return p_samp[i + 1]
            return 0.5 * (p_samp[i] + p_samp[i + 1])

    nq, ns = adm.q, adm.s
    phi = np.zeros((n + 1, nq))
    psi0 = np.zeros((n + 1, ns))
    psi1 = np.zeros((n + 1, ns))
    lam, al, be = adm.lam, adm.alpha, adm.beta

    def rhs(p, y):
        f, g0, g1 = y
        return (
            p - lam * f,
            p - al * g0 - be * g1,
            be * g0 - al * g1,
        )

    y = (np.zeros(nq), np.zeros(ns), np.zeros(ns))
    for i in range(n):
        p0, pm, p1 = stage(i, 0.0), stage(i, 0.5), stage(i, 1.0)
        k1 = rhs(p0, y)
        k2 = rhs(pm, tuple(v + 0.5 * dt * k for v, k in zip(y, k1)))
        k3 = rhs(pm, tuple(v + 0.5 * dt * k for v, k in zip(y, k2)))
        k4 = rhs(p1, tuple(v + dt * k for v, k in zip(y, k3)))
        y = tuple(
            v + dt / 6.0 * (a + 2 * b + 2 * c + d)
            for v, a, b, c, d in zip(y, k1, k2, k3, k4)
        )
        phi[i + 1], psi0[i + 1], psi1[i + 1] = y
    return AccumulatorSeries(t=t_grid, phi=phi, psi0=psi0, psi1=psi1)


def estimate_accumulator_scales(adm: RationalAdmittance, p_of_t, dt: float, n_steps=None):
    """Scaling factors l = 1/max|accumulator| for a representative forcing.

    The scaled network targets l*acc should span roughly [-1, 1]; feeding
    the expected boundary pressure history here yields per-accumulator
    factors of the right magnitude.
    """
    series = ade_integrate(adm, p_of_t, dt, n_steps)

    def scale(block):
        peaks = np.max(np.abs(block), axis=0) if block.size else np.zeros(block.shape[1])
        return 1.0 / np.maximum(peaks, 1e-12)

    return scale(series.phi), scale(series.psi0), scale(series.psi1)


def save_material(path, adm: RationalAdmittance, band: FrequencyBand | None = None,
                  fit: VectorFitResult | None = None, meta: dict | None = None):
    """Write the admittance model as versioned JSON."""
    doc = {
        "format_version": MATERIAL_FORMAT_VERSION,
        "y_inf": adm.y_inf,
        "real_poles": [
            {"lam": float(l), "a": float(a)} for l, a in zip(adm.lam, adm.a)
        ],
        "complex_pairs": [
            {"alpha": float(al), "beta": float(be), "b": float(b), "c": float(c)}
            for al, be, b, c in zip(adm.alpha, adm.beta, adm.b, adm.c)
        ],
    }
    if band is not None:
        doc["band"] = {"f_min": band.f_min, "f_max": band.f_max,
                       "n_samples": band.n_samples}
    if fit is not None:
        doc["fit"] = {"max_rel_error": fit.max_rel_error, "converged": fit.converged,
                      "structure_repaired": fit.structure_repaired,
                      "iterations": fit.iterations}
    doc["meta"] = dict(meta or {})
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_material(path):
    """Read a material file; returns (RationalAdmittance, full document)."""
    with open(path) as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != MATERIAL_FORMAT_VERSION:
        raise ValueError(f"unsupported material format_version {version!r}")
    adm = RationalAdmittance(
        y_inf=float(doc["y_inf"]),
        a=np.array([rp["a"] for rp in doc["real_poles"]]),
        lam=np.array([rp["lam"] for rp in doc["real_poles"]]),
        b=np.array([cp["b"] for cp in doc["complex_pairs"]]),
        c=np.array([cp["c"] for cp in doc["complex_pairs"]]),
        alpha=np.array([cp["alpha"] for cp in doc["complex_pairs"]]),
        beta=np.array([cp["beta"] for cp in doc["complex_pairs"]]),
    )
    return adm, doc
