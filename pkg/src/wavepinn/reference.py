"""Ground-truth field generators.

Three layers of reference, in increasing generality:
  - the analytic free-field solution (core.analytic_free_field);
  - an exact image-source sum for frequency-independent walls (1D
    reflections are specular, so this oracle has no discretization
    error at all);
  - a Gauss-Lobatto spectral-element solver in second-order form with
    RK4 time stepping, handling rigid, constant-impedance and fitted
    frequency-dependent boundaries (the latter by integrating the
    accumulator ODEs alongside the field, forced by the boundary
    pressure).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from scipy import sparse
from scipy.interpolate import CubicSpline

from .core import (
    BoundarySpec,
    DomainSpec,
    FrequencyDependent,
    FrequencyIndependent,
    GaussianSource,
    Neumann,
    Normalization,
    RationalAdmittance,
    ic_pressure,
    to_normalized_time,
)

__all__ = [
    "SolverConfig",
    "FieldSnapshotSeries",
    "ReceiverTraces",
    "SolverInstability",
    "DEFAULT_F_MAX",
    "image_source_solution",
    "gll_nodes_weights",
    "gll_diff_matrix",
    "solve_time_domain",
    "reference_ir",
]

# normalized content bound of the sigma0=0.2 pulse (1 kHz at c=343)
DEFAULT_F_MAX = 1000.0 / 343.0


@dataclass(frozen=True)
class SolverConfig:
    """Resolution knobs for the time-domain solver.

    `cfl` left at None picks 1.0 for rigid/constant-impedance walls and
    0.1 for fitted boundaries (whose accumulator ODEs are stiffer than
    the acoustics).  The time step is cfl * (smallest node gap) / c.
    """

    points_per_wavelength: int = 20
    order: int = 4
    cfl: float | None = None
    f_max: float = DEFAULT_F_MAX

    def __post_init__(self):
        if self.points_per_wavelength < 2:
            raise ValueError("need at least 2 points per wavelength")
        if self.order < 1:
            raise ValueError("polynomial order must be at least 1")
        if self.cfl is not None and not (0 < self.cfl <= 1):
            raise ValueError("cfl must lie in (0, 1]")
        if self.f_max <= 0:
            raise ValueError("f_max must be positive")

    def resolved_cfl(self, bc: BoundarySpec) -> float:
        if self.cfl is not None:
            return self.cfl
        return 0.1 if isinstance(bc, FrequencyDependent) else 1.0


@dataclass(frozen=True)
class FieldSnapshotSeries:
    positions: np.ndarray
    times: np.ndarray
    pressure: np.ndarray

    def __post_init__(self):
        if self.pressure.shape != (self.times.size, self.positions.size):
            raise ValueError("pressure must be (n_times, n_positions)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time stamps must be strictly increasing")
        if not np.all(np.isfinite(self.pressure)):
            raise ValueError("snapshot contains non-finite values")


@dataclass(frozen=True)
class ReceiverTraces:
    t: np.ndarray
    pressure: np.ndarray  # (n_times, n_receivers)
    receivers: np.ndarray
    snapshots: FieldSnapshotSeries | None = None
    energy: np.ndarray | None = None


class SolverInstability(RuntimeError):
    pass


def image_source_solution(x, t, src: GaussianSource, xi: float,
                          domain: DomainSpec, c: float = 1.0):
    """Exact field between two walls of specific impedance xi.

    Sums the free-field pulse over mirror images; each wall bounce
    multiplies the amplitude by R = (xi-1)/(xi+1).  The series is
    truncated once images are too weak (|R|^n < 1e-12) or causally out
    of reach of every requested (x, t).
    """
    if xi <= 0:
        raise ValueError(f"specific impedance must be positive, got {xi}")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    refl = 1.0 if np.isinf(xi) else (xi - 1.0) / (xi + 1.0)
    length = domain.length
    a0 = src.x0 - domain.x_min

    # images reachable within the causal horizon plus the pulse tails
    horizon = c * float(np.max(t, initial=0.0)) + 8.0 * src.sigma0 + length
    n_max = int(np.ceil(horizon / (2.0 * length))) + 1

    out = np.zeros(np.broadcast(x, t).shape)
    for n in range(-n_max, n_max + 1):
        for pos, bounces in (
            (domain.x_min + 2 * n * length + a0, abs(2 * n)),
            (domain.x_min + 2 * n * length - a0, abs(2 * n - 1)),
        ):
            amp = refl**bounces
            if abs(amp) < 1e-12:
                continue
            out = out + amp * analytic_pulse(x, t, src, pos, c)
    return out if out.ndim else float(out)


def analytic_pulse(x, t, src: GaussianSource, x0: float, c: float = 1.0):
    """Free-field pulse of core.analytic_free_field emitted at x0."""
    um = (np.asarray(x) - x0 - c * np.asarray(t)) / src.sigma0
    up = (np.asarray(x) - x0 + c * np.asarray(t)) / src.sigma0
    return 0.5 * np.exp(-(um**2)) + 0.5 * np.exp(-(up**2))


def gll_nodes_weights(order: int):
    """Gauss-Lobatto-Legendre nodes and quadrature weights on [-1, 1]."""
    if order < 1:
        raise ValueError("order must be at least 1")
    cs = np.zeros(order + 1)
    cs[order] = 1.0
    interior = legendre.legroots(legendre.legder(cs))
    nodes = np.concatenate([[-1.0], interior, [1.0]])
    pn = legendre.legval(nodes, cs)
    weights = 2.0 / (order * (order + 1) * pn**2)
    return nodes, weights


def gll_diff_matrix(nodes: np.ndarray) -> np.ndarray:
    """Derivative of the nodal Lagrange basis at the GLL nodes."""
    n = nodes.size - 1
    cs = np.zeros(n + 1)
    cs[n] = 1.0
    pn = legendre.legval(nodes, cs)
    d = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        for j in range(n + 1):
            if i != j:
                d[i, j] = pn[i] / (pn[j] * (nodes[i] - nodes[j]))
    d[0, 0] = -n * (n + 1) / 4.0
    d[n, n] = n * (n + 1) / 4.0
    return d


def _lagrange_row(nodes: np.ndarray, r: float) -> np.ndarray:
    """Interpolation weights at reference coordinate r (barycentric)."""
    diffs = r - nodes
    exact = np.isclose(diffs, 0.0, atol=1e-14)
    if np.any(exact):
        row = np.zeros_like(nodes)
        row[np.argmax(exact)] = 1.0
        return row
    bw = np.array([
        1.0 / np.prod(nodes[j] - np.delete(nodes, j)) for j in range(nodes.size)
    ])
    row = bw / diffs
    return row / row.sum()


class _Mesh:
    """Uniform spectral-element mesh with assembled operators."""

    def __init__(self, domain: DomainSpec, solver: SolverConfig, c: float):
        lam_min = c / solver.f_max
        h_target = solver.order * lam_min / solver.points_per_wavelength
        self.n_elems = max(1, int(np.ceil(domain.length / h_target)))
        self.h = domain.length / self.n_elems
        self.order = solver.order
        self.ref_nodes, self.ref_weights = gll_nodes_weights(solver.order)
        self.dmat = gll_diff_matrix(self.ref_nodes)
        self.domain = domain

        p = solver.order
        self.n_nodes = self.n_elems * p + 1
        self.x = np.empty(self.n_nodes)
        for e in range(self.n_elems):
            xl = domain.x_min + e * self.h
            self.x[e * p : e * p + p + 1] = xl + (self.ref_nodes + 1.0) * self.h / 2.0
        self.x[-1] = domain.x_max

        # lumped mass (GLL quadrature is diagonal in the nodal basis)
        self.mass = np.zeros(self.n_nodes)
        w_elem = self.ref_weights * self.h / 2.0
        k_elem = (2.0 / self.h) * self.dmat.T @ np.diag(self.ref_weights) @ self.dmat
        k_global = sparse.lil_matrix((self.n_nodes, self.n_nodes))
        for e in range(self.n_elems):
            sl = slice(e * p, e * p + p + 1)
            self.mass[sl] += w_elem
            k_global[sl, sl] += k_elem
        self.stiffness = k_global.tocsr()
        self.min_gap = float(np.min(np.diff(self.ref_nodes))) * self.h / 2.0

    def interp_rows(self, positions):
        """Sparse sampling matrix evaluating the field at positions."""
        rows = sparse.lil_matrix((len(positions), self.n_nodes))
        p = self.order
        for i, xr in enumerate(positions):
            if not (self.domain.x_min <= xr <= self.domain.x_max):
                raise ValueError(f"receiver {xr} outside the domain")
            e = min(int((xr - self.domain.x_min) / self.h), self.n_elems - 1)
            r = 2.0 * (xr - (self.domain.x_min + e * self.h)) / self.h - 1.0
            rows[i, e * p : e * p + p + 1] = _lagrange_row(self.ref_nodes, r)
        return rows.tocsr()


def _ade_coeffs(adm: RationalAdmittance):
    lam = np.concatenate([adm.lam, adm.alpha, adm.alpha])
    s = adm.s
    coupling = np.concatenate([np.zeros(adm.q), -adm.beta, adm.beta])
    return lam, coupling, s


def solve_time_domain(domain: DomainSpec, src: GaussianSource, bc: BoundarySpec,
                      solver: SolverConfig, receivers, t_max: float,
                      c: float = 1.0, rho0: float = 1.2,
                      snapshot_every: int = 0,
                      energy_check: bool = True) -> ReceiverTraces:
    """March the second-order wave equation with RK4.

    Weak form: mass * p_tt = -c^2 K p + c^2 g, where g carries the
    boundary flux dp/dn expressed through the wall model: zero for rigid
    walls, -p_t/(c xi) for constant impedance, -rho0 * dv_n/dt for a
    fitted admittance, with the accumulator ODEs advanced inside the
    same RK4 stages as the field.

    An energy blow-up (growth beyond 10x the initial pulse energy) stops
    the run with a CFL diagnostic.
    """
    mesh = _Mesh(domain, solver, c)
    cfl = solver.resolved_cfl(bc)
    dt = cfl * mesh.min_gap / c
    n_steps = max(1, int(np.ceil(t_max / dt)))
    dt = t_max / n_steps

    receivers = np.atleast_1d(np.asarray(receivers, dtype=float))
    sample = mesh.interp_rows(receivers)

    m_inv = 1.0 / mesh.mass
    k_mat = mesh.stiffness
    left, right = 0, mesh.n_nodes - 1

    dep = isinstance(bc, FrequencyDependent)
    if dep:
        adm = bc.admittance
        n_acc = adm.n_accumulators
        q, s = adm.q, adm.s

    def acc_rhs(p_b, acc):
        # acc rows: [phi_0..phi_q-1, psi0_0..psi0_s-1, psi1_0..psi1_s-1]
        d = np.empty_like(acc)
        d[:q] = p_b - adm.lam * acc[:q]
        d[q : q + s] = p_b - adm.alpha * acc[q : q + s] - adm.beta * acc[q + s :]
        d[q + s :] = adm.beta * acc[q : q + s] - adm.alpha * acc[q + s :]
        return d

    def vdot(p_b, q_b, acc):
        d = acc_rhs(p_b, acc)
        return (adm.y_inf * q_b + adm.a @ d[:q]
                + 2.0 * adm.b @ d[q : q + s] + 2.0 * adm.c @ d[q + s :])

    def rhs(state):
        p, v, acc_l, acc_r = state
        g = np.zeros(2)
        if isinstance(bc, Neumann):
            pass
        elif isinstance(bc, FrequencyIndependent):
            g[0] = -v[left] / (c * bc.xi)
            g[1] = -v[right] / (c * bc.xi)
        else:
            g[0] = -rho0 * vdot(p[left], v[left], acc_l)
            g[1] = -rho0 * vdot(p[right], v[right], acc_r)
        accel = -(c**2) * (k_mat @ p)
        accel[left] += c**2 * g[0]
        accel[right] += c**2 * g[1]
        accel *= m_inv
        d_acc_l = acc_rhs(p[left], acc_l) if dep else acc_l
        d_acc_r = acc_rhs(p[right], acc_r) if dep else acc_r
        return (v, accel, d_acc_l, d_acc_r)

    zeros_acc = np.zeros(n_acc) if dep else np.zeros(0)
    state = (ic_pressure(mesh.x, src), np.zeros(mesh.n_nodes),
             zeros_acc.copy(), zeros_acc.copy())

    def energy(st):
        p, v = st[0], st[1]
        return 0.5 * (v @ (mesh.mass * v) + c**2 * (p @ (k_mat @ p)))

    t_grid = np.arange(n_steps + 1) * dt
    traces = np.empty((n_steps + 1, receivers.size))
    traces[0] = sample @ state[0]
    energies = np.empty(n_steps + 1)
    energies[0] = e0 = energy(state)

    snap_times, snap_fields = [], []
    if snapshot_every:
        snap_times.append(0.0)
        snap_fields.append(state[0].copy())

    for i in range(n_steps):
        k1 = rhs(state)
        k2 = rhs(tuple(y + 0.5 * dt * k for y, k in zip(state, k1)))
        k3 = rhs(tuple(y + 0.5 * dt * k for y, k in zip(state, k2)))
        k4 = rhs(tuple(y + dt * k for y, k in zip(state, k3)))
        state = tuple(
            y + dt / 6.0 * (a + 2 * b + 2 * g + d)
            for y, a, b, g, d in zip(state, k1, k2, k3, k4)
        )
        traces[i + 1] = sample @ state[0]
        energies[i + 1] = en = energy(state)
        if energy_check and (not np.isfinite(en) or en > 10.0 * e0 + 1e-12):
            raise SolverInstability(
                f"energy blow-up at t={t_grid[i + 1]:.4f} "
                f"(E={en:.3e} vs E0={e0:.3e}); reduce the CFL number"
            )
        if snapshot_every and (i + 1) % snapshot_every == 0:
            snap_times.append(t_grid[i + 1])
            snap_fields.append(state[0].copy())

    snapshots = None
    if snapshot_every:
        snapshots = FieldSnapshotSeries(
            positions=mesh.x.copy(),
            times=np.asarray(snap_times),
            pressure=np.asarray(snap_fields),
        )
    return ReceiverTraces(t=t_grid, pressure=traces, receivers=receivers,
                          snapshots=snapshots, energy=energies)


def reference_ir(domain: DomainSpec, src: GaussianSource, bc: BoundarySpec,
                 receiver: float, fs: float, duration: float,
                 norm: Normalization = Normalization(),
                 solver: SolverConfig | None = None):
    """Impulse response at a receiver, sampled on a physical-time grid.

    Runs the time-domain solver in normalized units, then resamples the
    trace onto the uniform fs grid with a cubic spline (the solver grid
    oversamples the band by a wide margin, so spline error is far below
    the solver's own).  Returns (t_phys, pressure).
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    solver = solver or SolverConfig()
    f_max_phys = solver.f_max * norm.c_phys
    if fs <= 2.0 * f_max_phys:
        raise ValueError(
            f"fs {fs} does not resolve the content bound {f_max_phys:.1f} Hz"
        )
    n = int(round(fs * duration))
    if n == 0:
        return np.zeros(0), np.zeros(0)
    t_phys = np.arange(n) / fs
    t_norm = to_normalized_time(t_phys, norm)
    if t_norm[-1] > domain.t_max + 1e-12:
        raise ValueError(
            f"duration {duration} s exceeds the simulated horizon "
            f"({domain.t_max / norm.c_phys:.4f} s)"
        )
    res = solve_time_domain(domain, src, bc, solver, [receiver],
                            t_max=float(min(domain.t_max, t_norm[-1] + 1e-9))
                            if n > 1 else domain.t_max)
    spline = CubicSpline(res.t, res.pressure[:, 0])
    return t_phys, spline(t_norm)
