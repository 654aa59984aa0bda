"""Adam training loop over the collocation partitions.

One optimizer instance covers the concatenated parameters of both
networks; batches are drawn by stratified shuffling so each keeps the
partition proportions of the full set.  Epoch shuffles are seeded per
epoch, which makes checkpoint/resume replay the exact uninterrupted
trajectory.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import BoundarySpec, FrequencyDependent, GaussianSource
from .losses import LossReport, LossWeights, total_loss, total_loss_and_grads
from .net import Network, NonFiniteLossError, load_checkpoint, save_checkpoint
from .sampling import TrainingSet

__all__ = [
    "TrainConfig",
    "AdamState",
    "TrainResult",
    "init_adam",
    "adam_step",
    "train",
    "save_training_checkpoint",
    "load_training_checkpoint",
]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 512
    loss_threshold: float = 2e-4
    max_epochs: int = 25000
    seed: int = 0
    deterministic: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.loss_threshold <= 0:
            raise ValueError("loss_threshold must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be non-negative")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


@dataclass
class AdamState:
    """First/second moment estimates mirroring a flat parameter list."""

    m: list
    v: list
    step: int = 0


def init_adam(params) -> AdamState:
    return AdamState(m=[np.zeros_like(p) for p in params],
                     v=[np.zeros_like(p) for p in params], step=0)


def adam_step(params, grads, state: AdamState, config: TrainConfig):
    """One bias-corrected Adam update; returns the new parameter list.

    Moments are updated in place.  Non-finite gradients abort before any
    state is touched so the caller can keep the last good iterate.
    """
    if len(params) != len(state.m):
        raise ValueError("optimizer state does not match the parameter list")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NonFiniteLossError("non-finite gradient in adam_step")
    b1, b2 = config.beta1, config.beta2
    state.step += 1
    corr1 = 1.0 - b1**state.step
    corr2 = 1.0 - b2**state.step
    out = []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        out.append(p - config.learning_rate * (m / corr1)
                   / (np.sqrt(v / corr2) + config.eps))
    return out


@dataclass
class TrainResult:
    nf: Network
    nade: Network | None
    history: list
    stop_reason: str
    adam: AdamState
    diverged: bool = False


def _partition_batches(sets: TrainingSet, batch_size: int, rng):
    """Stratified batches: shuffle each partition, chunk all into the
    same number of nearly equal pieces."""
    n_batches = max(1, -(-sets.total // batch_size))
    order_in = rng.permutation(len(sets.inner))
    order_ic = rng.permutation(len(sets.ic))
    order_bc = rng.permutation(len(sets.bc))
    chunks = []
    inner_parts = np.array_split(sets.inner[order_in], n_batches)
    ic_parts = np.array_split(sets.ic[order_ic], n_batches)
    bc_parts = np.array_split(sets.bc[order_bc], n_batches)
    nrm_parts = np.array_split(sets.bc_normal[order_bc], n_batches)
    for parts in zip(inner_parts, ic_parts, bc_parts, nrm_parts):
        chunks.append(TrainingSet(*parts))
    return chunks


def train(nf: Network, nade: Network | None, sets: TrainingSet,
          weights: LossWeights, config: TrainConfig, bc: BoundarySpec,
          src: GaussianSource, c: float = 1.0, rho0: float = 1.2,
          callbacks=(), start_epoch: int = 0,
          adam: AdamState | None = None) -> TrainResult:
    """Minimize the total loss until it drops below the threshold.

    Every epoch starts with a full-set loss evaluation appended to the
    history (so the threshold is checked on the whole set, not a batch),
    followed by one stratified pass over the data.  A final evaluation
    lands after the last epoch.  On divergence the last finite iterate is
    returned with diverged=True.
    """
    dep = isinstance(bc, FrequencyDependent)
    if dep and nade is None:
        raise ValueError("frequency-dependent boundaries need the ADE network")

    def all_params():
        ps = list(nf.parameters())
        return ps + (list(nade.parameters()) if dep else ps[:0])

    if adam is None:
        adam = init_adam(all_params())
    history: list[LossReport] = []

    def evaluate(epoch):
        rep = total_loss(nf, nade, sets, weights, bc, src, c, rho0, epoch=epoch)
        history.append(rep)
        for cb in callbacks:
            cb(epoch, rep)
        return rep

    def warn_if_stalling():
        if len(history) >= 200 and len(history) % 100 == 0:
            recent = np.mean([r.total for r in history[-100:]])
            prior = np.mean([r.total for r in history[-200:-100]])
            if recent > prior:
                warnings.warn(
                    f"loss rising over the last 100 epochs ({prior:.3e} -> {recent:.3e})",
                    RuntimeWarning,
                )

    stop_reason = "max_epochs"
    for epoch in range(start_epoch, config.max_epochs):
        rep = evaluate(epoch)
        if not np.isfinite(rep.total):
            return TrainResult(nf, nade, history, "diverged", adam, diverged=True)
        if rep.total <= config.loss_threshold:
            return TrainResult(nf, nade, history, "threshold", adam)
        warn_if_stalling()

        rng = np.random.default_rng(np.random.SeedSequence((config.seed, epoch)))
        n_f_params = len(nf.parameters())
        for batch in _partition_batches(sets, config.batch_size, rng):
            try:
                _, gf, ga = total_loss_and_grads(
                    nf, nade, batch, weights, bc, src, c, rho0, epoch=epoch
                )
                grads = gf + (ga if dep else [])
                new_params = adam_step(all_params(), grads, adam, config)
            except NonFiniteLossError:
                return TrainResult(nf, nade, history, "diverged", adam, diverged=True)
            nf = nf.with_parameters(new_params[:n_f_params])
            if dep:
                nade = nade.with_parameters(new_params[n_f_params:])

    rep = evaluate(config.max_epochs) if config.max_epochs >= start_epoch else None
    if rep is not None and rep.total <= config.loss_threshold:
        stop_reason = "threshold"
    return TrainResult(nf, nade, history, stop_reason, adam)


def save_training_checkpoint(path, result_or_nets, extra: dict | None = None):
    """Persist networks and optimizer state for later resumption."""
    if isinstance(result_or_nets, TrainResult):
        nets = {"nf": result_or_nets.nf}
        if result_or_nets.nade is not None:
            nets["nade"] = result_or_nets.nade
        adam = result_or_nets.adam
    else:
        nets, adam = result_or_nets
    aux = {}
    meta = dict(extra or {})
    if adam is not None:
        aux = {f"adam_m{i}": m for i, m in enumerate(adam.m)}
        aux.update({f"adam_v{i}": v for i, v in enumerate(adam.v)})
        meta["adam_step"] = adam.step
        meta["adam_len"] = len(adam.m)
    save_checkpoint(path, nets, extra=meta, aux_arrays=aux)


def load_training_checkpoint(path):
    """Returns (networks dict, extra dict, AdamState or None)."""
    nets, extra, aux = load_checkpoint(path)
    adam = None
    if "adam_len" in extra:
        n = int(extra["adam_len"])
        adam = AdamState(
            m=[aux[f"adam_m{i}"] for i in range(n)],
            v=[aux[f"adam_v{i}"] for i in range(n)],
            step=int(extra["adam_step"]),
        )
    return nets, extra, adam
