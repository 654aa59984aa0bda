"""Time-series error metrics, impulse-response extraction, and benchmarks.

The two headline metrics compare a surrogate trace against a reference
trace on a shared time grid:

* ``mu_rel``  -- mean relative error, gated to samples where the reference
  is within 60 dB of its own peak (the relative error is meaningless where
  the reference is essentially zero).
* ``inf_abs`` -- plain maximum absolute error over all samples, ungated.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import DomainSpec, Normalization, to_normalized_time
from .net import Network, forward, load_checkpoint

GATE_DB = -60.0


def _series_pair(pred, ref):
    p = np.asarray(pred, dtype=float).ravel()
    r = np.asarray(ref, dtype=float).ravel()
    if p.shape != r.shape:
        raise ValueError(f"series lengths differ: {p.shape[0]} vs {r.shape[0]}")
    if p.size == 0:
        raise ValueError("empty series")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(r))):
        raise ValueError("series must be finite")
    return p, r


def gate_mask(ref, gate_db: float = GATE_DB) -> np.ndarray:
    """Boolean mask of samples where |ref| is within ``gate_db`` of peak."""
    r = np.asarray(ref, dtype=float).ravel()
    peak = np.max(np.abs(r))
    if peak == 0.0:
        raise ValueError("reference is silent; gate is empty")
    return np.abs(r) >= 10.0 ** (gate_db / 20.0) * peak


def mu_rel(pred, ref) -> float:
    """Mean |pred - ref| / |ref| over the -60 dB gate of the reference."""
    p, r = _series_pair(pred, ref)
    mask = gate_mask(r)
    return float(np.mean(np.abs(p[mask] - r[mask]) / np.abs(r[mask])))


def inf_abs(pred, ref) -> float:
    """Maximum absolute error over all samples (no gating)."""
    p, r = _series_pair(pred, ref)
    return float(np.max(np.abs(p - r)))


@dataclass(frozen=True)
class ErrorSummary:
    """Gated relative mean error and ungated max error for one trace pair."""

    mu_rel: float
    inf_abs: float
    n_gated: int

    def __post_init__(self):
        if self.mu_rel < 0 or self.inf_abs < 0:
            raise ValueError("error metrics must be non-negative")
        if self.n_gated < 1:
            raise ValueError("a valid summary needs at least one gated sample")


def error_summary(pred, ref) -> ErrorSummary:
    p, r = _series_pair(pred, ref)
    mask = gate_mask(r)
    return ErrorSummary(
        mu_rel=float(np.mean(np.abs(p[mask] - r[mask]) / np.abs(r[mask]))),
        inf_abs=float(np.max(np.abs(p - r))),
        n_gated=int(np.count_nonzero(mask)),
    )


# ---------------------------------------------------------------------------
# impulse-response extraction


@dataclass(frozen=True)
class ImpulseResponse:
    """Sampled surrogate pressure at one receiver, on a physical time grid."""

    t: np.ndarray  # seconds
    pressure: np.ndarray
    eval_seconds: float  # forward-pass wall clock, excludes checkpoint load
    beyond_trained: bool  # grid extends past the trained time horizon

    @property
    def n_samples(self) -> int:
        return int(self.t.size)


def _field_network(model) -> Network:
    if isinstance(model, Network):
        return model
    networks, _, _ = load_checkpoint(model)
    if "nf" in networks:
        return networks["nf"]
    if len(networks) == 1:
        return next(iter(networks.values()))
    raise ValueError(f"checkpoint holds {sorted(networks)}; expected a field network 'nf'")


def extract_ir(model, x_receiver: float, x0: float, fs: float, duration: float,
               norm: Normalization = Normalization(),
               domain: DomainSpec = DomainSpec()) -> ImpulseResponse:
    """Sample the field network at a receiver on a physical-rate time grid.

    ``model`` is either a loaded Network or a checkpoint path (loading is
    excluded from the reported timing).  ``fs`` and ``duration`` are in
    physical units (Hz, seconds); the grid is mapped to normalized time
    before evaluation.  Sample count is round(fs * duration).
    """
    if fs <= 0:
        raise ValueError(f"sample rate must be positive, got {fs}")
    if duration < 0:
        raise ValueError(f"duration must be non-negative, got {duration}")
    if not (domain.x_min <= x_receiver <= domain.x_max):
        raise ValueError(f"receiver {x_receiver} outside domain")
    if not (domain.x_min <= x0 <= domain.x_max):
        raise ValueError(f"source position {x0} outside domain")

    net = _field_network(model)
    n = int(round(fs * duration))
    t_phys = np.arange(n) / fs
    t_norm = to_normalized_time(t_phys, norm)
    beyond = bool(n > 0 and t_norm[-1] > domain.t_max + 1e-12)

    inputs = np.column_stack([
        np.full(n, float(x_receiver)),
        t_norm,
        np.full(n, float(x0)),
    ])
    tic = time.perf_counter()
    pressure = forward(net, inputs)[:, 0] if n else np.zeros(0)
    toc = time.perf_counter()
    return ImpulseResponse(t=t_phys, pressure=pressure,
                           eval_seconds=toc - tic, beyond_trained=beyond)


# ---------------------------------------------------------------------------
# runtime benchmark


@dataclass(frozen=True)
class BenchmarkResult:
    """Wall-clock statistics for repeated batched forward passes."""

    n_samples: int
    seconds: np.ndarray  # one entry per repeat
    threads: int | None  # requested cap, None = library default

    @property
    def median(self) -> float:
        return float(np.median(self.seconds))

    @property
    def min(self) -> float:
        return float(np.min(self.seconds))

    @property
    def max(self) -> float:
        return float(np.max(self.seconds))

    @property
    def samples_per_second(self) -> float:
        return self.n_samples / self.median


def benchmark_eval(model, n_samples: int, repeats: int = 5,
                   threads: int | None = None, seed: int = 0,
                   domain: DomainSpec = DomainSpec()) -> BenchmarkResult:
    """Time ``repeats`` forward passes of a random (n_samples, 3) batch."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    net = _field_network(model)

    rng = np.random.default_rng(seed)
    inputs = np.column_stack([
        rng.uniform(domain.x_min, domain.x_max, n_samples),
        rng.uniform(0.0, domain.t_max, n_samples),
        rng.uniform(domain.x_min, domain.x_max, n_samples),
    ])

    limiter = _thread_limiter(threads)
    with limiter:
        forward(net, inputs[: min(n_samples, 64)])  # warm-up
        seconds = np.empty(repeats)
        for i in range(repeats):
            tic = time.perf_counter()
            forward(net, inputs)
            seconds[i] = time.perf_counter() - tic
    return BenchmarkResult(n_samples=n_samples, seconds=seconds, threads=threads)


def _thread_limiter(threads: int | None):
    """Cap BLAS worker threads if a limiter is available, else no-op."""
    import contextlib

    if threads is None:
        return contextlib.nullcontext()
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return contextlib.nullcontext()
    return threadpool_limits(limits=threads)


__all__ = [
    "GATE_DB",
    "BenchmarkResult",
    "ErrorSummary",
    "ImpulseResponse",
    "benchmark_eval",
    "error_summary",
    "extract_ir",
    "gate_mask",
    "inf_abs",
    "mu_rel",
]
