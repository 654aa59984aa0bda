"""YAML run configuration: schema, defaults, and object builders.

A run config is a nested mapping whose defaults reproduce the full-scale
setup (five-source grid on [-1, 1], 47,089 collocation points, 3x256 sine
field network, 3x20 tanh accumulator network).  Loading merges the user
file over the defaults and rejects unknown keys, so typos fail loudly
instead of silently falling back to a default.

The merged ("effective") config is written next to every command's
outputs; reloading that file reproduces the run.
"""

from __future__ import annotations

import copy
import os
from pathlib import Path

import numpy as np
import yaml

from .core import (
    DomainSpec,
    FrequencyDependent,
    FrequencyIndependent,
    GaussianSource,
    Neumann,
    Normalization,
)
from .losses import LossWeights
from .material import (
    FrequencyBand,
    PorousLayer,
    estimate_accumulator_scales,
    load_material,
)
from .net import init_glorot, init_siren
from .reference import SolverConfig
from .trainer import TrainConfig

OUTPUT_ROOT_ENV = "WAVEPINN_OUTPUT_ROOT"

# Five source/receiver pairs spanning the domain, symmetric about x = 0.
DEFAULT_PAIRS = [
    [-0.3, 0.64],
    [-0.15, 0.58],
    [0.0, 0.5],
    [0.15, -0.58],
    [0.3, -0.66],
]

DEFAULTS = {
    "run": {
        "output_dir": "runs/default",
        "seed": 0,
    },
    "domain": {"x_min": -1.0, "x_max": 1.0, "t_max": 2.0},
    "source": {
        "sigma0": 0.2,
        "positions": [-0.3, -0.15, 0.0, 0.15, 0.3],
    },
    "boundary": {
        # neumann | frequency_independent | frequency_dependent
        "kind": "frequency_independent",
        "xi": 5.83,
        "material_file": None,
    },
    "material": {
        "d_mat": 0.10,
        "sigma_mat": 8000.0,
        "c_phys": 343.0,
        "f_min": 20.0,
        "f_max": 1000.0,
        "n_samples": 200,
        "q": 2,
        "s": 1,
        "iterations": 30,
        "weighting": "relative",  # relative (1/|Y|) or uniform
        "max_rel_error": 0.01,
        # synthetic constant admittance instead of the Miki layer (testing)
        "constant_y": None,
    },
    "sampling": {
        "total": 47089,
        "fractions": [0.45, 0.25, 0.30],  # bc, ic, inner
    },
    "networks": {
        "field": {"hidden": [256, 256, 256], "activation": "sine", "omega0": 30.0},
        "ade": {"hidden": [20, 20, 20], "activation": "tanh", "omega0": 30.0},
    },
    "loss": {
        "lambda_ic": 20.0,
        "lambda_bc": 1.0,
        "lambda_ade": 10.0,
        # auto: integrate the accumulator ODEs once per source position with
        # the analytic free-field wall pressure and take the worst-case peak.
        "ade_scales": "auto",
    },
    "trainer": {
        "learning_rate": 1.0e-4,
        "batch_size": 512,
        "loss_threshold": 2.0e-4,
        "max_epochs": 25000,
        "deterministic": True,
        "log_every": 100,
    },
    "reference": {
        "method": "auto",  # auto | image_source | solver
        "fs": 44100.0,
        "duration": None,  # seconds; None = full trained window t_max/c_phys
        "points_per_wavelength": 20,
        "order": 4,
        "cfl": None,
        "f_max": 1000.0,  # Hz, resolution target for the solver mesh
    },
    "evaluate": {
        "pairs": DEFAULT_PAIRS,
        "checkpoint": None,  # default: <output_dir>/checkpoint.npz
        "reference_dir": None,  # default: <output_dir>/reference
    },
    "extract_ir": {
        "receiver": 0.5,
        "x0": 0.0,
        "fs": 44100.0,
        "duration": None,
    },
    "benchmark": {
        "n_samples": 44100,
        "repeats": 5,
        "threads": None,
    },
}


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


def _merge(defaults: dict, user: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        dotted = f"{path}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown config key: {dotted}")
        if isinstance(defaults[key], dict):
            if value is None:
                continue
            if not isinstance(value, dict):
                raise ConfigError(f"{dotted} must be a mapping")
            out[key] = _merge(defaults[key], value, dotted + ".")
        else:
            out[key] = value
    return out


class RunConfig:
    """Merged configuration plus builders for the domain objects.

    Construction validates everything that does not require touching the
    filesystem; material files referenced by a frequency-dependent
    boundary are resolved lazily by build_boundary().
    """

    def __init__(self, data: dict, base_dir: Path | None = None):
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        self.data = _merge(DEFAULTS, data)
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self._validate()

    def __getitem__(self, key):
        return self.data[key]

    # -- validation ------------------------------------------------------

    def _validate(self):
        domain = self.build_domain()
        self.build_source()
        if not self.source_positions:
            raise ConfigError("source.positions must be non-empty")
        for p in self.source_positions:
            if not (domain.x_min <= p <= domain.x_max):
                raise ConfigError(f"source position {p} outside the domain")
        kind = self["boundary"]["kind"]
        if kind not in ("neumann", "frequency_independent", "frequency_dependent"):
            raise ConfigError(f"unknown boundary.kind: {kind!r}")
        if kind == "frequency_independent":
            FrequencyIndependent(xi=float(self["boundary"]["xi"]))
        if kind == "frequency_dependent" and not self["boundary"]["material_file"]:
            raise ConfigError("frequency_dependent boundary needs boundary.material_file")

        fr = self["sampling"]["fractions"]
        if len(fr) != 3 or any(f < 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
            raise ConfigError(f"sampling.fractions must be 3 non-negative values summing to 1, got {fr}")
        if int(self["sampling"]["total"]) < 1:
            raise ConfigError("sampling.total must be >= 1")

        for name in ("field", "ade"):
            net = self["networks"][name]
            if net["activation"] not in ("sine", "tanh"):
                raise ConfigError(f"networks.{name}.activation must be sine or tanh")
            if not net["hidden"] or any(int(h) < 1 for h in net["hidden"]):
                raise ConfigError(f"networks.{name}.hidden must be positive sizes")

        scales = self["loss"]["ade_scales"]
        if not (scales == "auto" or isinstance(scales, dict)):
            raise ConfigError("loss.ade_scales must be 'auto' or a {phi, psi0, psi1} mapping")
        if isinstance(scales, dict) and set(scales) != {"phi", "psi0", "psi1"}:
            raise ConfigError("loss.ade_scales mapping needs exactly the keys phi, psi0, psi1")

        self.build_train_config()
        self.build_solver_config()
        mat = self["material"]
        PorousLayer(d_mat=float(mat["d_mat"]), sigma_mat=float(mat["sigma_mat"]))
        FrequencyBand(float(mat["f_min"]), float(mat["f_max"]), int(mat["n_samples"]))
        if self["reference"]["method"] not in ("auto", "image_source", "solver"):
            raise ConfigError(f"unknown reference.method: {self['reference']['method']!r}")
        for pair in self["evaluate"]["pairs"]:
            if len(pair) != 2:
                raise ConfigError(f"evaluate.pairs entries must be [x0, receiver], got {pair}")

    # -- simple accessors --------------------------------------------------

    @property
    def seed(self) -> int:
        return int(self["run"]["seed"])

    @property
    def source_positions(self) -> list:
        return [float(p) for p in self["source"]["positions"]]

    @property
    def normalization(self) -> Normalization:
        return Normalization(c_phys=float(self["material"]["c_phys"]))

    def output_dir(self) -> Path:
        """Configured output directory, honoring the output-root env var."""
        out = Path(self["run"]["output_dir"])
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not out.is_absolute():
            return Path(root) / out
        return out

    # -- builders ----------------------------------------------------------

    def build_domain(self) -> DomainSpec:
        d = self["domain"]
        return DomainSpec(x_min=float(d["x_min"]), x_max=float(d["x_max"]),
                          t_max=float(d["t_max"]))

    def build_source(self, x0: float | None = None) -> GaussianSource:
        pos = self.source_positions
        return GaussianSource(x0=float(pos[0] if x0 is None else x0),
                              sigma0=float(self["source"]["sigma0"]))

    def material_path(self) -> Path:
        raw = self["boundary"]["material_file"]
        if not raw:
            raise ConfigError("boundary.material_file is not set")
        path = Path(raw)
        return path if path.is_absolute() else self.base_dir / path

    def build_boundary(self):
        kind = self["boundary"]["kind"]
        if kind == "neumann":
            return Neumann()
        if kind == "frequency_independent":
            return FrequencyIndependent(xi=float(self["boundary"]["xi"]))
        adm, _ = load_material(self.material_path())
        return FrequencyDependent(admittance=adm)

    def build_layer_and_band(self):
        mat = self["material"]
        layer = PorousLayer(d_mat=float(mat["d_mat"]), sigma_mat=float(mat["sigma_mat"]))
        band = FrequencyBand(float(mat["f_min"]), float(mat["f_max"]), int(mat["n_samples"]))
        return layer, band

    def _build_net(self, section: str, n_out: int, seed: int):
        net = self["networks"][section]
        sizes = [3, *[int(h) for h in net["hidden"]], n_out]
        if net["activation"] == "sine":
            return init_siren(sizes, omega0=float(net["omega0"]), seed=seed)
        return init_glorot(sizes, seed=seed)

    def build_networks(self, bc=None, seed: int | None = None):
        """Field network plus, for dependent boundaries, the ADE network."""
        seed = self.seed if seed is None else seed
        nf = self._build_net("field", 1, seed)
        nade = None
        if isinstance(bc, FrequencyDependent):
            nade = self._build_net("ade", bc.admittance.n_accumulators, seed + 1)
        return nf, nade

    def build_weights(self, bc=None) -> LossWeights:
        loss = self["loss"]
        kw = dict(lambda_ic=float(loss["lambda_ic"]), lambda_bc=float(loss["lambda_bc"]),
                  lambda_ade=float(loss["lambda_ade"]))
        if not isinstance(bc, FrequencyDependent):
            return LossWeights(**kw)
        scales = loss["ade_scales"]
        if scales == "auto":
            l_phi, l_psi0, l_psi1 = self._auto_scales(bc.admittance)
        else:
            l_phi = np.asarray(scales["phi"], dtype=float)
            l_psi0 = np.asarray(scales["psi0"], dtype=float)
            l_psi1 = np.asarray(scales["psi1"], dtype=float)
        return LossWeights(l_phi=l_phi, l_psi0=l_psi0, l_psi1=l_psi1, **kw)

    def _auto_scales(self, adm):
        """Worst-case accumulator peaks over the source grid.

        Drives the accumulator ODEs with the analytic free-field pressure
        at the right wall for each source position; the reflected
        contribution changes amplitudes by at most the reflection
        coefficient, so the free-field peak is the right magnitude.
        """
        from .core import analytic_free_field

        domain = self.build_domain()
        dt = 1e-3
        n_steps = int(round(domain.t_max / dt))
        best = None
        for x0 in self.source_positions:
            src = self.build_source(x0)
            p = lambda t: analytic_free_field(domain.x_max, t, src)
            scales = estimate_accumulator_scales(adm, p, dt, n_steps)
            if best is None:
                best = [np.asarray(s, dtype=float) for s in scales]
            else:
                best = [np.minimum(b, s) for b, s in zip(best, scales)]
        return best

    def build_train_config(self, seed: int | None = None, **overrides) -> TrainConfig:
        tr = self["trainer"]
        kw = dict(
            learning_rate=float(tr["learning_rate"]),
            batch_size=int(tr["batch_size"]),
            loss_threshold=float(tr["loss_threshold"]),
            max_epochs=int(tr["max_epochs"]),
            seed=self.seed if seed is None else seed,
            deterministic=bool(tr["deterministic"]),
        )
        kw.update(overrides)
        return TrainConfig(**kw)

    def build_solver_config(self) -> SolverConfig:
        ref = self["reference"]
        f_max_norm = float(ref["f_max"]) / float(self["material"]["c_phys"])
        return SolverConfig(
            points_per_wavelength=float(ref["points_per_wavelength"]),
            order=int(ref["order"]),
            cfl=None if ref["cfl"] is None else float(ref["cfl"]),
            f_max=f_max_norm,
        )

    def reference_duration(self) -> float:
        """Reference/IR duration in seconds (defaults to the trained window)."""
        dur = self["reference"]["duration"]
        if dur is not None:
            return float(dur)
        return self.build_domain().t_max / float(self["material"]["c_phys"])


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read a YAML run config, merge defaults, and validate."""
    path = Path(path)
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    cfg = RunConfig(raw, base_dir=path.parent)
    if overrides:
        data = copy.deepcopy(cfg.data)
        for dotted, value in overrides.items():
            node = data
            *parents, leaf = dotted.split(".")
            for part in parents:
                node = node[part]
            node[leaf] = value
        cfg = RunConfig(data, base_dir=path.parent)
    return cfg


def save_effective_config(cfg: RunConfig, out_dir) -> Path:
    """Write the merged config next to a command's outputs."""
    out = Path(out_dir) / "config.effective.yaml"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        yaml.safe_dump(cfg.data, fh, sort_keys=False)
    return out


__all__ = [
    "DEFAULT_PAIRS",
    "DEFAULTS",
    "OUTPUT_ROOT_ENV",
    "ConfigError",
    "RunConfig",
    "load_config",
    "save_effective_config",
]
