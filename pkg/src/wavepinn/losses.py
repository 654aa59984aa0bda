"""Residuals and the composite training loss.

Total objective: L = L_PDE + lambda_ic * L_IC + lambda_bc * L_BC + L_ADE,
all mean-squared over their collocation partitions.  The ADE part sums
per-accumulator residual losses weighted by lambda_ade / l (the scaling
factors cancel the [-1,1] normalization of the accumulator channels).

Every residual accepts either a Network or any adapter exposing
input_derivatives(pts) -> DerivativeBundle, so closed-form solutions can
be pushed through the exact same code path as the trained models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    BoundarySpec,
    FrequencyDependent,
    FrequencyIndependent,
    GaussianSource,
    Neumann,
    RationalAdmittance,
    ic_pressure,
)
from .net import DerivativeBundle, Network, forward_with_input_derivs, loss_gradient
from .sampling import TrainingSet

__all__ = [
    "LossWeights",
    "LossReport",
    "pde_residual",
    "ic_loss",
    "bc_indep_residual",
    "bc_neumann_residual",
    "ade_residuals",
    "boundary_velocity",
    "bc_dep_residual",
    "total_loss",
    "total_loss_and_grads",
]


def _bundle(model, pts) -> DerivativeBundle:
    if isinstance(model, Network):
        return forward_with_input_derivs(model, pts)
    return model.input_derivatives(pts)


@dataclass(frozen=True)
class LossWeights:
    """Balancing weights and accumulator scaling factors.

    lambda_ade is the per-accumulator weight before division by the
    scaling factor: the residual of accumulator k enters the total as
    (lambda_ade / l_k) * mean(residual_k^2).
    """

    lambda_ic: float = 20.0
    lambda_bc: float = 1.0
    lambda_ade: float = 10.0
    l_phi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    l_psi0: np.ndarray = field(default_factory=lambda: np.zeros(0))
    l_psi1: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        for name in ("l_phi", "l_psi0", "l_psi1"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, arr)
            if np.any(arr <= 0):
                raise ValueError(f"{name} entries must be positive, got {arr}")
        if self.l_psi0.shape != self.l_psi1.shape:
            raise ValueError("l_psi0 and l_psi1 must have equal length")
        for name in ("lambda_ic", "lambda_bc", "lambda_ade"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def matches(self, adm: RationalAdmittance) -> bool:
        return self.l_phi.size == adm.q and self.l_psi0.size == adm.s

    def ade_weights(self) -> np.ndarray:
        """lambda-tilde per accumulator, ordered (phi, psi0, psi1)."""
        return self.lambda_ade / np.concatenate([self.l_phi, self.l_psi0, self.l_psi1])


@dataclass(frozen=True)
class LossReport:
    """Decomposed loss values for one evaluation.

    `ade` holds the lambda-tilde-weighted per-accumulator contributions
    (phi..., psi0..., psi1...); `total` is exactly pde + lambda_ic*ic +
    lambda_bc*bc + sum(ade).
    """

    total: float
    pde: float
    ic: float
    bc: float
    ade: tuple = ()
    epoch: int | None = None

    def as_row(self):
        return [self.epoch, self.total, self.pde, self.ic, self.bc, *self.ade]


def pde_residual(nf, pts, c: float = 1.0) -> np.ndarray:
    """Wave-operator residual p_tt - c^2 p_xx per collocation point."""
    b = _bundle(nf, pts)
    return b.d2_dt2[:, 0] - c**2 * b.d2_dx2[:, 0]


def ic_loss(nf, src: GaussianSource, pts) -> float:
    """Initial pressure misfit plus initial pressure-rate energy at t=0."""
    pts = np.asarray(pts, dtype=float)
    b = _bundle(nf, pts)
    target = ic_pressure(pts[:, 0], src, x0=pts[:, 2])
    return _msq(b.value[:, 0] - target) + _msq(b.d_dt[:, 0])


def bc_indep_residual(nf, pts, xi: float, normal_sign, c: float = 1.0) -> np.ndarray:
    """Impedance characteristic p_t + c xi (dp/dn) per boundary point."""
    b = _bundle(nf, pts)
    return b.d_dt[:, 0] + c * xi * np.asarray(normal_sign) * b.d_dx[:, 0]


def bc_neumann_residual(nf, pts, normal_sign) -> np.ndarray:
    """Rigid-wall residual dp/dn per boundary point."""
    b = _bundle(nf, pts)
    return np.asarray(normal_sign) * b.d_dx[:, 0]


def _check_ade_shapes(bundle: DerivativeBundle, adm: RationalAdmittance,
                      weights: LossWeights):
    if bundle.value.shape[1] != adm.n_accumulators:
        raise ValueError(
            f"accumulator network has {bundle.value.shape[1]} outputs, "
            f"admittance needs {adm.n_accumulators}"
        )
    if not weights.matches(adm):
        raise ValueError("scaling factor counts disagree with the admittance")


def ade_residuals(nade, nf, pts_bc, adm: RationalAdmittance,
                  weights: LossWeights) -> np.ndarray:
    """Scaled-accumulator ODE residuals, one column per accumulator.

    Channel order matches the network output: phi_k, then psi0_k, then
    psi1_k.  Residuals are of the scaled states, so the forcing enters
    multiplied by the corresponding l factor and the pair coupling by the
    ratio of the two psi factors.
    """
    ba = _bundle(nade, pts_bc)
    bf = _bundle(nf, pts_bc)
    _check_ade_shapes(ba, adm, weights)
    p = bf.value[:, 0]
    q, s = adm.q, adm.s
    res = np.empty_like(ba.value)
    for k in range(q):
        res[:, k] = ba.d_dt[:, k] + adm.lam[k] * ba.value[:, k] - weights.l_phi[k] * p
    for k in range(s):
        j0, j1 = q + k, q + s + k
        ratio = weights.l_psi0[k] / weights.l_psi1[k]
        res[:, j0] = (
            ba.d_dt[:, j0] + adm.alpha[k] * ba.value[:, j0]
            + adm.beta[k] * ratio * ba.value[:, j1] - weights.l_psi0[k] * p
        )
        res[:, j1] = (
            ba.d_dt[:, j1] + adm.alpha[k] * ba.value[:, j1]
            - adm.beta[k] / ratio * ba.value[:, j0]
        )
    return res


def boundary_velocity(nade, nf, pts, adm: RationalAdmittance,
                      weights: LossWeights):
    """Normal surface velocity v_n and its time derivative per point.

    Accumulator channels are un-scaled (divided by their l factor) before
    entering the admittance sum.
    """
    ba = _bundle(nade, pts)
    bf = _bundle(nf, pts)
    _check_ade_shapes(ba, adm, weights)
    q, s = adm.q, adm.s
    inv_l = 1.0 / np.concatenate([weights.l_phi, weights.l_psi0, weights.l_psi1])
    acc = ba.value * inv_l
    acc_t = ba.d_dt * inv_l
    coef = np.concatenate([adm.a, 2.0 * adm.b, 2.0 * adm.c])
    v_n = adm.y_inf * bf.value[:, 0] + acc @ coef
    dvn_dt = adm.y_inf * bf.d_dt[:, 0] + acc_t @ coef
    return v_n, dvn_dt


def bc_dep_residual(nade, nf, pts, adm: RationalAdmittance, rho0: float,
                    normal_sign, weights: LossWeights) -> np.ndarray:
    """Momentum balance dp/dn + rho0 dv_n/dt per boundary point."""
    bf = _bundle(nf, pts)
    _, dvn_dt = boundary_velocity(nade, nf, pts, adm, weights)
    return np.asarray(normal_sign) * bf.d_dx[:, 0] + rho0 * dvn_dt


def _msq(r) -> float:
    return float(np.mean(np.square(r))) if np.size(r) else 0.0


def total_loss(nf, nade, sets: TrainingSet, weights: LossWeights,
               bc: BoundarySpec, src: GaussianSource, c: float = 1.0,
               rho0: float = 1.2, epoch: int | None = None) -> LossReport:
    """Composite loss over a training set (or any batch shaped like one)."""
    l_pde = _msq(pde_residual(nf, sets.inner, c))
    l_ic = ic_loss(nf, src, sets.ic)

    ade_terms: tuple = ()
    if isinstance(bc, Neumann):
        l_bc = _msq(bc_neumann_residual(nf, sets.bc, sets.bc_normal))
    elif isinstance(bc, FrequencyIndependent):
        l_bc = _msq(bc_indep_residual(nf, sets.bc, bc.xi, sets.bc_normal, c))
    elif isinstance(bc, FrequencyDependent):
        if nade is None:
            raise ValueError("frequency-dependent boundaries need the ADE network")
        adm = bc.admittance
        l_bc = _msq(bc_dep_residual(nade, nf, sets.bc, adm, rho0,
                                    sets.bc_normal, weights))
        res = ade_residuals(nade, nf, sets.bc, adm, weights)
        lam_t = weights.ade_weights()
        ade_terms = tuple(lam_t[k] * _msq(res[:, k]) for k in range(res.shape[1]))
    else:
        raise TypeError(f"unsupported boundary spec {bc!r}")

    total = l_pde + weights.lambda_ic * l_ic + weights.lambda_bc * l_bc + sum(ade_terms)
    return LossReport(total=total, pde=l_pde, ic=l_ic, bc=l_bc,
                      ade=ade_terms, epoch=epoch)


def total_loss_and_grads(nf: Network, nade, sets: TrainingSet,
                         weights: LossWeights, bc: BoundarySpec,
                         src: GaussianSource, c: float = 1.0,
                         rho0: float = 1.2, epoch: int | None = None):
    """Loss report plus parameter gradients for one batch.

    Returns (report, grads_f, grads_ade); grads_ade is None without an
    ADE network.  Cotangents are assembled analytically per loss term and
    pushed through the networks' reverse pass.
    """
    dep = isinstance(bc, FrequencyDependent)
    if dep and nade is None:
        raise ValueError("frequency-dependent boundaries need the ADE network")

    n_in = max(len(sets.inner), 1)
    n_ic = max(len(sets.ic), 1)
    n_bc = max(len(sets.bc), 1)
    nsign = sets.bc_normal
    report_box = {}

    def evaluator(bundles):
        b_in, b_ic, b_bc = bundles[:3]
        c_in = DerivativeBundle.zeros(*b_in.value.shape)
        c_ic = DerivativeBundle.zeros(*b_ic.value.shape)
        c_bc = DerivativeBundle.zeros(*b_bc.value.shape)

        r_pde = b_in.d2_dt2[:, 0] - c**2 * b_in.d2_dx2[:, 0]
        l_pde = _msq(r_pde)
        c_in.d2_dt2[:, 0] = 2.0 * r_pde / n_in
        c_in.d2_dx2[:, 0] = -2.0 * c**2 * r_pde / n_in

        target = ic_pressure(sets.ic[:, 0], src, x0=sets.ic[:, 2])
        mis = b_ic.value[:, 0] - target
        l_ic = _msq(mis) + _msq(b_ic.d_dt[:, 0])
        c_ic.value[:, 0] = weights.lambda_ic * 2.0 * mis / n_ic
        c_ic.d_dt[:, 0] = weights.lambda_ic * 2.0 * b_ic.d_dt[:, 0] / n_ic

        ade_terms: tuple = ()
        if isinstance(bc, Neumann):
            r_bc = nsign * b_bc.d_dx[:, 0]
            l_bc = _msq(r_bc)
            c_bc.d_dx[:, 0] = weights.lambda_bc * 2.0 * r_bc * nsign / n_bc
            cots = [c_in, c_ic, c_bc]
        elif isinstance(bc, FrequencyIndependent):
            r_bc = b_bc.d_dt[:, 0] + c * bc.xi * nsign * b_bc.d_dx[:, 0]
            l_bc = _msq(r_bc)
            c_bc.d_dt[:, 0] = weights.lambda_bc * 2.0 * r_bc / n_bc
            c_bc.d_dx[:, 0] = weights.lambda_bc * 2.0 * r_bc * c * bc.xi * nsign / n_bc
            cots = [c_in, c_ic, c_bc]
        else:
            b_ade = bundles[3]
            c_ade = DerivativeBundle.zeros(*b_ade.value.shape)
            adm = bc.admittance
            q, s = adm.q, adm.s
            inv_l = 1.0 / np.concatenate(
                [weights.l_phi, weights.l_psi0, weights.l_psi1]
            )
            coef = np.concatenate([adm.a, 2.0 * adm.b, 2.0 * adm.c])

            dvn_dt = adm.y_inf * b_bc.d_dt[:, 0] + (b_ade.d_dt * inv_l) @ coef
            r_bc = nsign * b_bc.d_dx[:, 0] + rho0 * dvn_dt
            l_bc = _msq(r_bc)
            g = weights.lambda_bc * 2.0 * r_bc / n_bc
            c_bc.d_dx[:, 0] += g * nsign
            c_bc.d_dt[:, 0] += g * rho0 * adm.y_inf
            c_ade.d_dt += np.outer(g, rho0 * coef * inv_l)

            p = b_bc.value[:, 0]
            lam_t = weights.ade_weights()
            terms = []
            for k in range(q):
                r = b_ade.d_dt[:, k] + adm.lam[k] * b_ade.value[:, k] \
                    - weights.l_phi[k] * p
                terms.append(lam_t[k] * _msq(r))
                gk = lam_t[k] * 2.0 * r / n_bc
                c_ade.d_dt[:, k] += gk
                c_ade.value[:, k] += gk * adm.lam[k]
                c_bc.value[:, 0] += -gk * weights.l_phi[k]
            for k in range(s):
                j0, j1 = q + k, q + s + k
                ratio = weights.l_psi0[k] / weights.l_psi1[k]
                r0 = (b_ade.d_dt[:, j0] + adm.alpha[k] * b_ade.value[:, j0]
                      + adm.beta[k] * ratio * b_ade.value[:, j1]
                      - weights.l_psi0[k] * p)
                terms.append(lam_t[j0] * _msq(r0))
                g0 = lam_t[j0] * 2.0 * r0 / n_bc
                c_ade.d_dt[:, j0] += g0
                c_ade.value[:, j0] += g0 * adm.alpha[k]
                c_ade.value[:, j1] += g0 * adm.beta[k] * ratio
                c_bc.value[:, 0] += -g0 * weights.l_psi0[k]

                r1 = (b_ade.d_dt[:, j1] + adm.alpha[k] * b_ade.value[:, j1]
                      - adm.beta[k] / ratio * b_ade.value[:, j0])
                terms.append(lam_t[j1] * _msq(r1))
                g1 = lam_t[j1] * 2.0 * r1 / n_bc
                c_ade.d_dt[:, j1] += g1
                c_ade.value[:, j1] += g1 * adm.alpha[k]
                c_ade.value[:, j0] += -g1 * adm.beta[k] / ratio
            # reorder psi terms into channel order phi, psi0, psi1
            phi_t = terms[:q]
            psi_t = terms[q:]
            ade_terms = tuple(phi_t + psi_t[0::2] + psi_t[1::2])
            cots = [c_in, c_ic, c_bc, c_ade]

        total = (l_pde + weights.lambda_ic * l_ic
                 + weights.lambda_bc * l_bc + sum(ade_terms))
        report_box["report"] = LossReport(
            total=total, pde=l_pde, ic=l_ic, bc=l_bc, ade=ade_terms, epoch=epoch
        )
        return total, cots

    nets = [nf, nf, nf] + ([nade] if dep else [])
    inputs = [sets.inner, sets.ic, sets.bc] + ([sets.bc] if dep else [])
    _, grads = loss_gradient(nets, inputs, evaluator)
    grads_f = [a + b + d for a, b, d in zip(grads[0], grads[1], grads[2])]
    grads_ade = grads[3] if dep else None
    return report_box["report"], grads_f, grads_ade
