"""Feed-forward network engine with analytic input derivatives.

Plain numpy implementation of the two surrogate networks.  Forward
evaluation propagates, alongside the values, the first and second
derivatives with respect to the first two input columns (x and t).
Parameter gradients of any scalar built from those channels are computed
by a hand-derived reverse pass through the same recurrence, so losses
containing second-order input derivatives can be trained without an ML
framework.

Derivative-channel recurrence per layer (u = z W + b, z_new = f(u)):

    u'  = z' W                  z_new'  = f'(u) u'
    u'' = z'' W                 z_new'' = f''(u) u'^2 + f'(u) u''

The reverse pass adjoints these equations exactly; third derivatives of
the activations appear there, so activations must be C^3 (sine, tanh,
identity all are).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Network",
    "DerivativeBundle",
    "NonFiniteLossError",
    "init_siren",
    "init_glorot",
    "forward",
    "forward_with_input_derivs",
    "bundle_with_vjp",
    "loss_gradient",
    "zero_gradients",
    "save_checkpoint",
    "load_checkpoint",
]

ACTIVATIONS = ("sine", "tanh", "identity")


class NonFiniteLossError(ArithmeticError):
    """Raised when a loss or gradient evaluates to NaN/inf (divergence)."""


@dataclass(frozen=True)
class Network:
    """Immutable stack of affine layers with per-layer activation tags.

    `weights[i]` has shape (fan_in, fan_out); activations are one of
    "sine" (u -> sin(omega0 u)), "tanh", or "identity".  The final layer
    of a trained surrogate is always "identity".
    """

    weights: tuple
    biases: tuple
    activations: tuple
    omega0: float = 30.0

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or len(self.weights) != len(self.activations):
            raise ValueError("weights/biases/activations must have equal length")
        if not self.weights:
            raise ValueError("network needs at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} mismatch")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ValueError(
                    f"layer {i}: fan_in {w.shape[0]} != previous fan_out "
                    f"{self.weights[i - 1].shape[1]}"
                )
        for act in self.activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def layer_sizes(self) -> list:
        return [self.input_dim] + [w.shape[1] for w in self.weights]

    def parameters(self):
        """Flat list of parameter arrays, ordered (W0, b0, W1, b1, ...)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def with_parameters(self, params) -> "Network":
        """New network with the same topology and the given flat parameter list."""
        n = len(self.weights)
        if len(params) != 2 * n:
            raise ValueError(f"expected {2 * n} parameter arrays, got {len(params)}")
        ws, bs = [], []
        for i in range(n):
            w, b = params[2 * i], params[2 * i + 1]
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ValueError(f"layer {i}: parameter shape mismatch")
            ws.append(np.asarray(w, dtype=float))
            bs.append(np.asarray(b, dtype=float))
        return Network(tuple(ws), tuple(bs), self.activations, self.omega0)


@dataclass
class DerivativeBundle:
    """Network outputs with first/second derivatives wrt x and t.

    All arrays have shape (batch, output_dim).  Also used as the
    cotangent container for the reverse pass.
    """

    value: np.ndarray
    d_dx: np.ndarray
    d_dt: np.ndarray
    d2_dx2: np.ndarray
    d2_dt2: np.ndarray

    @classmethod
    def zeros(cls, n: int, m: int) -> "DerivativeBundle":
        return cls(*(np.zeros((n, m)) for _ in range(5)))

    def channels(self):
        return (self.value, self.d_dx, self.d_dt, self.d2_dx2, self.d2_dt2)


def _act_derivs(tag: str, u: np.ndarray, omega0: float, order: int):
    """(f, f', f'', f''') of the activation at pre-activation u, up to `order`."""
    if tag == "sine":
        su = np.sin(omega0 * u)
        cu = np.cos(omega0 * u)
        f = su
        f1 = omega0 * cu
        f2 = -(omega0**2) * su
        f3 = -(omega0**3) * cu if order >= 3 else None
    elif tag == "tanh":
        f = np.tanh(u)
        s = 1.0 - f**2
        f1 = s
        f2 = -2.0 * f * s
        f3 = s * (4.0 * f**2 - 2.0 * s) if order >= 3 else None
    elif tag == "identity":
        f = u
        f1 = np.ones_like(u)
        f2 = np.zeros_like(u)
        f3 = np.zeros_like(u) if order >= 3 else None
    else:  # pragma: no cover - guarded at construction
        raise ValueError(f"unknown activation {tag!r}")
    return f, f1, f2, f3


def init_siren(layer_sizes, omega0: float = 30.0, seed: int = 0) -> Network:
    """Sine-activated network with SIREN-style initialization.

    First layer weights are uniform in +-1/fan_in, deeper layers uniform
    in +-sqrt(6/fan_in)/omega0 (final identity layer included).  Biases of
    sine layers are uniform in +-1/sqrt(fan_in) for phase diversity; the
    output bias starts at zero.
    """
    _check_sizes(layer_sizes)
    if omega0 <= 0:
        raise ValueError(f"omega0 must be positive, got {omega0}")
    rng = np.random.default_rng(seed)
    ws, bs, acts = [], [], []
    n_layers = len(layer_sizes) - 1
    for i in range(n_layers):
        fan_in, fan_out = layer_sizes[i], layer_sizes[i + 1]
        last = i == n_layers - 1
        if i == 0:
            bound = 1.0 / fan_in
        else:
            bound = np.sqrt(6.0 / fan_in) / omega0
        ws.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        if last:
            bs.append(np.zeros(fan_out))
        else:
            bs.append(rng.uniform(-1.0, 1.0, size=fan_out) / np.sqrt(fan_in))
        acts.append("identity" if last else "sine")
    return Network(tuple(ws), tuple(bs), tuple(acts), omega0)


def init_glorot(layer_sizes, seed: int = 0) -> Network:
    """Tanh network with Glorot-normal weights and zero biases."""
    _check_sizes(layer_sizes)
    rng = np.random.default_rng(seed)
    ws, bs, acts = [], [], []
    n_layers = len(layer_sizes) - 1
    for i in range(n_layers):
        fan_in, fan_out = layer_sizes[i], layer_sizes[i + 1]
        std = np.sqrt(2.0 / (fan_in + fan_out))
        ws.append(rng.normal(0.0, std, size=(fan_in, fan_out)))
        bs.append(np.zeros(fan_out))
        acts.append("identity" if i == n_layers - 1 else "tanh")
    return Network(tuple(ws), tuple(bs), tuple(acts))


def _check_sizes(layer_sizes):
    if len(layer_sizes) < 2:
        raise ValueError("need at least input and output sizes")
    if any(int(s) < 1 for s in layer_sizes):
        raise ValueError(f"layer sizes must be >= 1, got {layer_sizes}")
    if layer_sizes[0] != 3:
        raise ValueError(f"networks take inputs (x, t, x0); first size must be 3, got {layer_sizes[0]}")


def _check_inputs(net: Network, inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ValueError(f"inputs must be (batch, {net.input_dim}), got {x.shape}")
    return x


def forward(net: Network, inputs) -> np.ndarray:
    """Evaluate the network on a (batch, input_dim) array."""
    z = _check_inputs(net, inputs)
    for w, b, act in zip(net.weights, net.biases, net.activations):
        u = z @ w + b
        z = _act_derivs(act, u, net.omega0, order=0)[0]
    return z


def forward_with_input_derivs(net: Network, inputs) -> DerivativeBundle:
    """Forward pass carrying exact derivatives wrt input columns 0 (x) and 1 (t)."""
    bundle, _ = _forward_derivs(net, inputs, keep_tape=False)
    return bundle


def _forward_derivs(net: Network, inputs, keep_tape: bool):
    z = _check_inputs(net, inputs)
    if net.input_dim < 2:
        raise ValueError("derivative bundle needs inputs with at least (x, t) columns")
    n = z.shape[0]
    zx = np.zeros_like(z)
    zx[:, 0] = 1.0
    zt = np.zeros_like(z)
    zt[:, 1] = 1.0
    zxx = np.zeros_like(z)
    ztt = np.zeros_like(z)

    tape = [] if keep_tape else None
    for w, b, act in zip(net.weights, net.biases, net.activations):
        u = z @ w + b
        ux, ut = zx @ w, zt @ w
        uxx, utt = zxx @ w, ztt @ w
        f, f1, f2, _ = _act_derivs(act, u, net.omega0, order=2)
        if keep_tape:
            tape.append((z, zx, zt, zxx, ztt, u, ux, ut, uxx, utt))
        z = f
        zx = f1 * ux
        zt = f1 * ut
        zxx = f2 * ux**2 + f1 * uxx
        ztt = f2 * ut**2 + f1 * utt
    return DerivativeBundle(z, zx, zt, zxx, ztt), tape


def bundle_with_vjp(net: Network, inputs):
    """Evaluate derivative channels and return (bundle, vjp).

    vjp(cotangents) contracts a DerivativeBundle of dL/d(channel) arrays
    against the network Jacobian, returning the flat parameter gradient
    list (matching net.parameters() order).  This is the full adjoint of
    the derivative-propagating forward pass: gradients flow through the
    second-order input-derivative channels as well.
    """
    bundle, tape = _forward_derivs(net, inputs, keep_tape=True)

    def vjp(cot: DerivativeBundle):
        gz, gx, gt, gxx, gtt = (np.asarray(a, dtype=float) for a in cot.channels())
        grads = [None] * (2 * len(net.weights))
        for i in range(len(net.weights) - 1, -1, -1):
            w = net.weights[i]
            act = net.activations[i]
            z, zx, zt, zxx, ztt, u, ux, ut, uxx, utt = tape[i]
            _, f1, f2, f3 = _act_derivs(act, u, net.omega0, order=3)
            # adjoint of z_new = f(u), z_new' = f'(u)u', z_new'' = f''(u)u'^2 + f'(u)u''
            au = (
                gz * f1
                + (gx * ux + gt * ut) * f2
                + gxx * (f3 * ux**2 + f2 * uxx)
                + gtt * (f3 * ut**2 + f2 * utt)
            )
            aux = gx * f1 + 2.0 * gxx * f2 * ux
            aut = gt * f1 + 2.0 * gtt * f2 * ut
            auxx = gxx * f1
            autt = gtt * f1
            grads[2 * i] = z.T @ au + zx.T @ aux + zt.T @ aut + zxx.T @ auxx + ztt.T @ autt
            grads[2 * i + 1] = au.sum(axis=0)
            if i > 0:
                gz = au @ w.T
                gx = aux @ w.T
                gt = aut @ w.T
                gxx = auxx @ w.T
                gtt = autt @ w.T
        return grads

    return bundle, vjp


def zero_gradients(net: Network):
    """Zero-filled gradient list matching net.parameters()."""
    return [np.zeros_like(p) for p in net.parameters()]


def accumulate_gradients(total, extra):
    for g, e in zip(total, extra):
        g += e
    return total


def loss_gradient(nets, inputs_list, evaluator):
    """Gradient of a derivative-bundle loss wrt every network parameter.

    `nets` and `inputs_list` are matching sequences; `evaluator` receives
    the list of DerivativeBundles and returns (scalar loss, list of
    cotangent bundles, one per network).  Returns (loss, gradient lists).
    Raises NonFiniteLossError when the loss or any gradient diverges.
    """
    bundles, vjps = [], []
    for net, x in zip(nets, inputs_list):
        bundle, vjp = bundle_with_vjp(net, x)
        bundles.append(bundle)
        vjps.append(vjp)
    loss, cotangents = evaluator(bundles)
    if not np.isfinite(loss):
        raise NonFiniteLossError(f"loss is non-finite: {loss}")
    grads = [vjp(cot) for vjp, cot in zip(vjps, cotangents)]
    for gs in grads:
        for g in gs:
            if not np.all(np.isfinite(g)):
                raise NonFiniteLossError("parameter gradient is non-finite")
    return loss, grads


# ---------------------------------------------------------------------------
# Checkpoint container: versioned npz with a JSON header and 64-bit
# little-endian weight arrays.  Round-trips bit-exactly.

CHECKPOINT_VERSION = 1


def save_checkpoint(path, networks: dict, extra: dict | None = None,
                    aux_arrays: dict | None = None):
    """Write named networks plus a JSON-serializable config snapshot.

    `aux_arrays` holds extra named float arrays (e.g. optimizer moments)
    that ride along without belonging to any network.
    """
    aux_arrays = aux_arrays or {}
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "networks": {},
        "extra": extra or {},
        "aux": sorted(aux_arrays),
    }
    arrays = {}
    for name, net in networks.items():
        meta["networks"][name] = {
            "layer_sizes": [int(s) for s in net.layer_sizes],
            "activations": list(net.activations),
            "omega0": float(net.omega0),
        }
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            arrays[f"{name}.W{i}"] = np.ascontiguousarray(w, dtype="<f8")
            arrays[f"{name}.b{i}"] = np.ascontiguousarray(b, dtype="<f8")
    for name, arr in aux_arrays.items():
        arrays[f"aux.{name}"] = np.ascontiguousarray(arr, dtype="<f8")
    arrays["__meta__"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_checkpoint(path):
    """Read a checkpoint; returns ({name: Network}, extra dict, aux dict)."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version: {meta.get('format_version')}")
        networks = {}
        for name, info in meta["networks"].items():
            n_layers = len(info["layer_sizes"]) - 1
            ws = tuple(data[f"{name}.W{i}"].astype(float) for i in range(n_layers))
            bs = tuple(data[f"{name}.b{i}"].astype(float) for i in range(n_layers))
            networks[name] = Network(ws, bs, tuple(info["activations"]), info["omega0"])
        aux = {name: data[f"aux.{name}"].astype(float) for name in meta.get("aux", [])}
    return networks, meta["extra"], aux
