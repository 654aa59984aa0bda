"""Closed-form stand-ins for networks.

An adapter exposes the same derivative-bundle interface as a trained
network but computes values and derivatives from analytic expressions.
The loss residuals are validated by feeding adapters built from known
PDE/ODE solutions, for which every residual must vanish to roundoff.
"""

from __future__ import annotations

import numpy as np

from .core import GaussianSource
from .net import DerivativeBundle

__all__ = ["ClosedFormAdapter", "free_field_adapter", "constant_adapter"]


class ClosedFormAdapter:
    """Bundle provider backed by per-channel callables.

    `channels` is a sequence of 5-tuples (value, d_dx, d_dt, d2_dx2,
    d2_dt2), each callable mapping (x, t, x0) arrays to an array.  A
    callable may be None for an identically-zero derivative.
    """

    def __init__(self, channels):
        self.channels = list(channels)
        if not self.channels:
            raise ValueError("need at least one output channel")

    @property
    def output_dim(self) -> int:
        return len(self.channels)

    @classmethod
    def from_scalar(cls, value=None, d_dx=None, d_dt=None, d2_dx2=None,
                    d2_dt2=None) -> "ClosedFormAdapter":
        """Single-channel adapter from named derivative callables."""
        return cls([(value, d_dx, d_dt, d2_dx2, d2_dt2)])

    def input_derivatives(self, inputs) -> DerivativeBundle:
        inputs = np.asarray(inputs, dtype=float)
        x, t, x0 = inputs[:, 0], inputs[:, 1], inputs[:, 2]
        n, m = inputs.shape[0], len(self.channels)
        bundle = DerivativeBundle.zeros(n, m)
        slots = ("value", "d_dx", "d_dt", "d2_dx2", "d2_dt2")
        for j, fns in enumerate(self.channels):
            for slot, fn in zip(slots, fns):
                if fn is not None:
                    getattr(bundle, slot)[:, j] = fn(x, t, x0)
        return bundle


def free_field_adapter(src: GaussianSource, c: float = 1.0) -> ClosedFormAdapter:
    """Exact free-field solution with hand-written derivatives.

    The single output channel reproduces the two counter-propagating
    half-Gaussians; x0 is taken from each input row, not from `src`.
    """
    sig2 = src.sigma0**2

    def parts(x, t, x0):
        um = x - x0 - c * t
        up = x - x0 + c * t
        return um, up, np.exp(-(um**2) / sig2), np.exp(-(up**2) / sig2)

    def value(x, t, x0):
        _, _, gm, gp = parts(x, t, x0)
        return 0.5 * (gm + gp)

    def d_dx(x, t, x0):
        um, up, gm, gp = parts(x, t, x0)
        return 0.5 * (-2.0 * um / sig2 * gm - 2.0 * up / sig2 * gp)

    def d_dt(x, t, x0):
        um, up, gm, gp = parts(x, t, x0)
        return 0.5 * c * (2.0 * um / sig2 * gm - 2.0 * up / sig2 * gp)

    def curvature(x, t, x0):
        um, up, gm, gp = parts(x, t, x0)
        return 0.5 * (
            (4.0 * um**2 / sig2**2 - 2.0 / sig2) * gm
            + (4.0 * up**2 / sig2**2 - 2.0 / sig2) * gp
        )

    def d2_dt2(x, t, x0):
        return c**2 * curvature(x, t, x0)

    return ClosedFormAdapter([(value, d_dx, d_dt, curvature, d2_dt2)])


def constant_adapter(values) -> ClosedFormAdapter:
    """Channels frozen at given constants; all derivatives zero."""
    values = np.atleast_1d(np.asarray(values, dtype=float))

    def const(v):
        return lambda x, t, x0: np.full_like(x, v)

    return ClosedFormAdapter([(const(v), None, None, None, None) for v in values])
