"""Command-line entry point.

Subcommands wire a YAML run config to the pipeline stages:

  fit-material   porous-layer impedance -> rational admittance file
  train          assemble samples, build networks, run the optimizer
  reference      generate reference traces per source/receiver pair
  evaluate       error summary of a checkpoint against reference CSVs
  extract-ir     sample a trained field network on a physical-rate grid
  benchmark      forward-pass timing statistics

Exit codes: 0 success, 1 config/validation error, 2 quality-threshold
miss, 3 numerical failure.  The WAVEPINN_OUTPUT_ROOT environment variable
prefixes relative output directories.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ConfigError, RunConfig, load_config, save_effective_config
from .core import (
    FrequencyDependent,
    FrequencyIndependent,
    Neumann,
    to_normalized_time,
)
from .material import (
    VectorFitError,
    evaluate_admittance,
    miki_surface_impedance,
    normalize_material,
    save_material,
    vector_fit,
)
from .metrics import benchmark_eval, error_summary, extract_ir
from .net import NonFiniteLossError, forward
from .reference import SolverInstability, image_source_solution, reference_ir
from .sampling import assemble_training_set
from .trainer import load_training_checkpoint, save_training_checkpoint, train

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_QUALITY = 2
EXIT_NUMERIC = 3


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _pair_name(x0: float, receiver: float) -> str:
    return f"x0_{x0:+.4f}_r_{receiver:+.4f}"


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit_material(cfg: RunConfig, args) -> int:
    layer, band = cfg.build_layer_and_band()
    mat = cfg["material"]
    c_phys = float(mat["c_phys"])
    layer_n, band_n = normalize_material(layer, band, c_phys)
    f_norm = band_n.frequencies()
    if mat["constant_y"] is not None:
        y = np.full(f_norm.size, float(mat["constant_y"]), dtype=complex)
    else:
        y = 1.0 / miki_surface_impedance(f_norm, layer_n)

    weights = None
    if mat["weighting"] == "relative":
        weights = 1.0 / np.abs(y)
    elif mat["weighting"] != "uniform":
        return _fail(f"material.weighting must be uniform or relative, got {mat['weighting']!r}",
                     EXIT_CONFIG)

    try:
        fit = vector_fit(f_norm, y, q=int(mat["q"]), s=int(mat["s"]),
                         iterations=int(mat["iterations"]), weights=weights)
    except VectorFitError as exc:
        return _fail(f"vector fit failed: {exc}", EXIT_NUMERIC)

    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    save_effective_config(cfg, out)
    save_material(out / "material.json", fit.admittance, band=band_n, fit=fit,
                  meta={"d_mat": layer.d_mat, "sigma_mat": layer.sigma_mat,
                        "c_phys": c_phys, "weighting": mat["weighting"]})

    y_fit = evaluate_admittance(fit.admittance, 2.0 * np.pi * f_norm)
    rel = np.abs(y_fit - y) / np.abs(y)
    _write_csv(out / "fit_quality.csv",
               ["f_norm", "f_hz", "y_re", "y_im", "fit_re", "fit_im", "rel_error"],
               [[f, f * c_phys, yi.real, yi.imag, fi.real, fi.imag, r]
                for f, yi, fi, r in zip(f_norm, y, y_fit, rel)])

    print(f"fit: q={fit.admittance.q} s={fit.admittance.s} "
          f"max_rel_error={fit.max_rel_error:.3e} converged={fit.converged}")
    print(f"wrote {out / 'material.json'}")
    if fit.max_rel_error >= float(mat["max_rel_error"]):
        return _fail(
            f"fit error {fit.max_rel_error:.3e} above threshold {mat['max_rel_error']:.3e}",
            EXIT_QUALITY)
    return EXIT_OK


def cmd_train(cfg: RunConfig, args) -> int:
    domain = cfg.build_domain()
    src = cfg.build_source()
    try:
        bc = cfg.build_boundary()
    except FileNotFoundError as exc:
        return _fail(f"material file not found: {exc.filename}", EXIT_CONFIG)
    weights = cfg.build_weights(bc)
    sets = assemble_training_set(domain, cfg.source_positions,
                                 int(cfg["sampling"]["total"]),
                                 tuple(cfg["sampling"]["fractions"]),
                                 seed=cfg.seed)
    train_cfg = cfg.build_train_config()

    start_epoch, adam = 0, None
    if args.resume:
        nets, extra, adam = load_training_checkpoint(args.resume)
        nf, nade = nets["nf"], nets.get("nade")
        start_epoch = int(extra.get("epoch", 0))
        print(f"resuming from {args.resume} at epoch {start_epoch}")
    else:
        nf, nade = cfg.build_networks(bc)

    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    save_effective_config(cfg, out)

    log_every = max(1, int(cfg["trainer"]["log_every"]))
    log_rows = []

    def log(epoch, rep):
        log_rows.append(rep.as_row())
        if epoch % log_every == 0:
            print(f"epoch {epoch}: total={rep.total:.6e} pde={rep.pde:.3e} "
                  f"ic={rep.ic:.3e} bc={rep.bc:.3e}")

    result = train(nf, nade, sets, weights, train_cfg, bc, src,
                   callbacks=[log], start_epoch=start_epoch, adam=adam)

    final_epoch = start_epoch + max(0, len(result.history) - 1)
    save_training_checkpoint(out / "checkpoint.npz", result,
                             extra={"epoch": final_epoch,
                                    "stop_reason": result.stop_reason,
                                    "final_loss": result.history[-1].total})
    n_ade = 0 if result.nade is None else 2 * weights.l_psi0.size + weights.l_phi.size
    _write_csv(out / "training_log.csv",
               ["epoch", "total", "pde", "ic", "bc",
                *[f"ade_{i}" for i in range(n_ade)]], log_rows)

    print(f"stopped: {result.stop_reason} after epoch {final_epoch}, "
          f"loss {result.history[-1].total:.6e}")
    print(f"wrote {out / 'checkpoint.npz'}")
    if result.diverged:
        return _fail("training diverged; last finite checkpoint retained", EXIT_NUMERIC)
    return EXIT_OK


def _reference_trace(cfg: RunConfig, domain, bc, x0: float, receiver: float):
    """One reference trace on the physical fs grid; returns (t_phys, p)."""
    src = cfg.build_source(x0)
    fs = float(cfg["reference"]["fs"])
    duration = cfg.reference_duration()
    method = cfg["reference"]["method"]
    if method == "auto":
        method = "solver" if isinstance(bc, FrequencyDependent) else "image_source"

    if method == "image_source":
        if isinstance(bc, FrequencyDependent):
            raise ConfigError("image_source reference needs a constant-impedance boundary")
        xi = np.inf if isinstance(bc, Neumann) else bc.xi
        n = int(round(fs * duration))
        t_phys = np.arange(n) / fs
        t_norm = to_normalized_time(t_phys, cfg.normalization)
        p = image_source_solution(receiver, t_norm, src, xi, domain)
        return t_phys, p
    return reference_ir(domain, src, bc, receiver, fs, duration,
                        norm=cfg.normalization, solver=cfg.build_solver_config())


def cmd_reference(cfg: RunConfig, args) -> int:
    domain = cfg.build_domain()
    try:
        bc = cfg.build_boundary()
    except FileNotFoundError as exc:
        return _fail(f"material file not found: {exc.filename}", EXIT_CONFIG)

    out = cfg.output_dir() / "reference"
    out.mkdir(parents=True, exist_ok=True)
    save_effective_config(cfg, out.parent)

    try:
        for x0, receiver in cfg["evaluate"]["pairs"]:
            t_phys, p = _reference_trace(cfg, domain, bc, float(x0), float(receiver))
            path = out / f"ref_{_pair_name(float(x0), float(receiver))}.csv"
            _write_csv(path, ["t", "p"], zip(t_phys, p))
            print(f"wrote {path} ({t_phys.size} samples)")
    except SolverInstability as exc:
        return _fail(f"reference solver unstable: {exc}", EXIT_NUMERIC)
    return EXIT_OK


def _read_trace(path: Path):
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.shape[1] != 2:
        raise ConfigError(f"{path}: expected two columns t,p")
    t = rows[:, 0]
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ConfigError(f"{path}: time grid must be strictly increasing")
    return t, rows[:, 1]


def cmd_evaluate(cfg: RunConfig, args) -> int:
    out = cfg.output_dir()
    ckpt = Path(cfg["evaluate"]["checkpoint"] or out / "checkpoint.npz")
    ref_dir = Path(cfg["evaluate"]["reference_dir"] or out / "reference")
    if not ckpt.exists():
        return _fail(f"checkpoint not found: {ckpt}", EXIT_CONFIG)

    nets, _, _ = load_training_checkpoint(ckpt)
    nf = nets["nf"]
    norm = cfg.normalization

    rows = []
    for i, (x0, receiver) in enumerate(cfg["evaluate"]["pairs"]):
        x0, receiver = float(x0), float(receiver)
        path = ref_dir / f"ref_{_pair_name(x0, receiver)}.csv"
        if not path.exists():
            return _fail(f"reference trace not found: {path}", EXIT_CONFIG)
        try:
            t_phys, p_ref = _read_trace(path)
        except (ConfigError, ValueError) as exc:
            return _fail(str(exc), EXIT_CONFIG)
        t_norm = to_normalized_time(t_phys, norm)
        inputs = np.column_stack([np.full(t_norm.size, receiver), t_norm,
                                  np.full(t_norm.size, x0)])
        pred = forward(nf, inputs)[:, 0]
        try:
            summary = error_summary(pred, p_ref)
        except ValueError as exc:
            return _fail(f"{path}: {exc}", EXIT_CONFIG)
        rows.append([f"s{i}", x0, receiver, summary.mu_rel, summary.inf_abs,
                     summary.n_gated])
        print(f"s{i} (x0={x0:+.3f}, r={receiver:+.3f}): "
              f"mu_rel={summary.mu_rel:.4%} inf_abs={summary.inf_abs:.4e}")

    out.mkdir(parents=True, exist_ok=True)
    save_effective_config(cfg, out)
    _write_csv(out / "errors.csv",
               ["pair", "x0", "receiver", "mu_rel", "inf_abs", "n_gated"], rows)
    print(f"wrote {out / 'errors.csv'}")
    return EXIT_OK


def cmd_extract_ir(cfg: RunConfig, args) -> int:
    out = cfg.output_dir()
    ckpt = Path(cfg["evaluate"]["checkpoint"] or out / "checkpoint.npz")
    if not ckpt.exists():
        return _fail(f"checkpoint not found: {ckpt}", EXIT_CONFIG)
    section = cfg["extract_ir"]
    duration = section["duration"]
    if duration is None:
        duration = cfg.reference_duration()

    nets, _, _ = load_training_checkpoint(ckpt)
    ir = extract_ir(nets["nf"], float(section["receiver"]), float(section["x0"]),
                    float(section["fs"]), float(duration),
                    norm=cfg.normalization, domain=cfg.build_domain())

    out.mkdir(parents=True, exist_ok=True)
    save_effective_config(cfg, out)
    path = out / f"ir_{_pair_name(float(section['x0']), float(section['receiver']))}.csv"
    _write_csv(path, ["t", "p"], zip(ir.t, ir.pressure))
    if ir.beyond_trained:
        print("warning: grid extends beyond the trained time window", file=sys.stderr)
    print(f"wrote {path} ({ir.n_samples} samples, eval {ir.eval_seconds * 1e3:.2f} ms)")
    return EXIT_OK


def cmd_benchmark(cfg: RunConfig, args) -> int:
    out = cfg.output_dir()
    ckpt = Path(cfg["evaluate"]["checkpoint"] or out / "checkpoint.npz")
    if ckpt.exists():
        nets, _, _ = load_training_checkpoint(ckpt)
        nf = nets["nf"]
        source = str(ckpt)
    else:
        nf, _ = cfg.build_networks()
        source = "fresh init"

    section = cfg["benchmark"]
    threads = section["threads"] if args.threads is None else args.threads
    result = benchmark_eval(nf, int(section["n_samples"]), int(section["repeats"]),
                            threads=None if threads is None else int(threads),
                            seed=cfg.seed, domain=cfg.build_domain())

    out.mkdir(parents=True, exist_ok=True)
    save_effective_config(cfg, out)
    rows = [[i, s] for i, s in enumerate(result.seconds)]
    _write_csv(out / "benchmark.csv", ["repeat", "seconds"], rows)
    summary = {
        "network": source,
        "n_samples": result.n_samples,
        "median_s": result.median,
        "min_s": result.min,
        "max_s": result.max,
        "samples_per_second": result.samples_per_second,
        "threads": result.threads,
        "machine": platform.machine(),
        "python": platform.python_version(),
    }
    with open(out / "benchmark_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"benchmark: n={result.n_samples} median={result.median * 1e3:.2f} ms "
          f"min={result.min * 1e3:.2f} ms max={result.max * 1e3:.2f} ms")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavepinn",
        description="Wave-equation surrogate workbench: fit materials, train, "
                    "generate references, evaluate, extract IRs, benchmark.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="YAML run configuration")
        p.add_argument("--output-dir", default=None,
                       help="override run.output_dir")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.set_defaults(func=func)
        return p

    add("fit-material", cmd_fit_material,
        "fit a rational admittance to the configured porous layer")
    p_train = add("train", cmd_train, "train the surrogate networks")
    p_train.add_argument("--resume", default=None, metavar="CKPT",
                         help="resume from a training checkpoint")
    p_train.add_argument("--max-epochs", type=int, default=None,
                         help="override trainer.max_epochs")
    add("reference", cmd_reference,
        "generate reference traces for the evaluation pairs")
    add("evaluate", cmd_evaluate,
        "compare a checkpoint against reference traces")
    add("extract-ir", cmd_extract_ir,
        "sample a trained field network as an impulse response")
    p_bench = add("benchmark", cmd_benchmark, "time batched forward passes")
    p_bench.add_argument("--threads", type=int, default=None,
                         help="cap BLAS threads during the benchmark")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if not hasattr(args, "max_epochs"):
        args.max_epochs = None
    if not hasattr(args, "threads"):
        args.threads = None

    overrides = {}
    if args.output_dir is not None:
        overrides["run.output_dir"] = args.output_dir
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.max_epochs is not None:
        overrides["trainer.max_epochs"] = args.max_epochs
    try:
        cfg = load_config(args.config, overrides)
    except FileNotFoundError:
        return _fail(f"config file not found: {args.config}", EXIT_CONFIG)
    except yaml.YAMLError as exc:
        return _fail(f"malformed config: {exc}", EXIT_CONFIG)
    except (ConfigError, ValueError) as exc:
        return _fail(str(exc), EXIT_CONFIG)

    try:
        return args.func(cfg, args)
    except SolverInstability as exc:
        return _fail(f"numerical failure: {exc}", EXIT_NUMERIC)
    except NonFiniteLossError as exc:
        return _fail(f"numerical failure: {exc}", EXIT_NUMERIC)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
