import numpy as np
import pytest
import yaml

from wavepinn.config import (
    DEFAULT_PAIRS,
    ConfigError,
    RunConfig,
    load_config,
    save_effective_config,
)
from wavepinn.core import FrequencyDependent, FrequencyIndependent, Neumann
from wavepinn.material import save_material
from wavepinn.trainer import TrainConfig


def write_config(tmp_path, text):
    path = tmp_path / "run.yaml"
    path.write_text(text)
    return path


class TestSchema:
    def test_empty_config_gets_defaults(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "{}"))
        assert cfg["sampling"]["total"] == 47089
        assert cfg["networks"]["field"]["hidden"] == [256, 256, 256]
        assert cfg["networks"]["field"]["activation"] == "sine"
        assert cfg["networks"]["ade"]["hidden"] == [20, 20, 20]
        assert cfg["networks"]["ade"]["activation"] == "tanh"
        assert cfg["evaluate"]["pairs"] == DEFAULT_PAIRS
        assert cfg.source_positions == [-0.3, -0.15, 0.0, 0.15, 0.3]

    def test_unknown_top_level_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="trianer"):
            load_config(write_config(tmp_path, "trianer: {max_epochs: 3}"))

    def test_unknown_nested_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="trainer.lern_rate"):
            load_config(write_config(tmp_path, "trainer: {lern_rate: 0.1}"))

    def test_bad_fractions_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_config(
                tmp_path, "sampling: {fractions: [0.5, 0.2, 0.2]}"))

    def test_bad_boundary_kind_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, "boundary: {kind: rigid}"))

    def test_dependent_without_material_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_config(
                tmp_path, "boundary: {kind: frequency_dependent}"))

    def test_module_invariants_checked_at_load(self, tmp_path):
        with pytest.raises((ConfigError, ValueError)):
            load_config(write_config(tmp_path, "boundary: {xi: -2.0}"))
        with pytest.raises((ConfigError, ValueError)):
            load_config(write_config(tmp_path, "domain: {x_min: 2.0, x_max: -2.0}"))
        with pytest.raises((ConfigError, ValueError)):
            load_config(write_config(tmp_path, "source: {positions: [9.0]}"))


class TestBuilders:
    def test_boundary_kinds(self, tmp_path, paper_material_fit):
        fit, band, _ = paper_material_fit
        cfg = load_config(write_config(tmp_path, "boundary: {kind: neumann}"))
        assert isinstance(cfg.build_boundary(), Neumann)

        cfg = load_config(write_config(
            tmp_path, "boundary: {kind: frequency_independent, xi: 3.5}"))
        bc = cfg.build_boundary()
        assert isinstance(bc, FrequencyIndependent) and bc.xi == 3.5

        save_material(tmp_path / "mat.json", fit.admittance, band=band)
        cfg = load_config(write_config(
            tmp_path, "boundary: {kind: frequency_dependent, material_file: mat.json}"))
        bc = cfg.build_boundary()
        assert isinstance(bc, FrequencyDependent)
        assert bc.admittance.q == 2

    def test_material_path_relative_to_config(self, tmp_path, paper_material_fit):
        fit, band, _ = paper_material_fit
        sub = tmp_path / "nested"
        sub.mkdir()
        save_material(sub / "m.json", fit.admittance)
        cfg = load_config(write_config(
            sub, "boundary: {kind: frequency_dependent, material_file: m.json}"))
        assert cfg.material_path() == sub / "m.json"

    def test_networks_built_from_spec(self, tmp_path, paper_material_fit):
        fit, _, _ = paper_material_fit
        cfg = load_config(write_config(tmp_path, """
networks:
  field: {hidden: [32, 32], activation: sine, omega0: 12.0}
  ade: {hidden: [8], activation: tanh}
"""))
        nf, nade = cfg.build_networks()
        assert [w.shape[0] for w in nf.weights] == [3, 32, 32]
        assert nade is None
        nf, nade = cfg.build_networks(FrequencyDependent(admittance=fit.admittance))
        assert nade is not None
        assert nade.weights[-1].shape[1] == fit.admittance.n_accumulators
        assert nade.activations[0] == "tanh"

    def test_train_config_built(self, tmp_path):
        cfg = load_config(write_config(
            tmp_path, "trainer: {max_epochs: 7, batch_size: 64}"))
        tc = cfg.build_train_config()
        assert isinstance(tc, TrainConfig)
        assert tc.max_epochs == 7 and tc.batch_size == 64

    def test_auto_scales_positive_and_explicit_scales_used(
            self, tmp_path, paper_material_fit):
        fit, band, _ = paper_material_fit
        save_material(tmp_path / "m.json", fit.admittance, band=band)
        base = "boundary: {kind: frequency_dependent, material_file: m.json}\n"
        cfg = load_config(write_config(tmp_path, base))
        w = cfg.build_weights(cfg.build_boundary())
        assert w.l_phi.shape == (2,) and np.all(w.l_phi > 0)
        assert w.l_psi0.shape == (1,) and np.all(w.l_psi1 > 0)

        cfg = load_config(write_config(tmp_path, base + """
loss:
  ade_scales: {phi: [10.3, 261.4], psi0: [45.9], psi1: [22.0]}
"""))
        w = cfg.build_weights(cfg.build_boundary())
        assert np.allclose(w.l_phi, [10.3, 261.4])
        assert w.l_psi0[0] == 45.9 and w.l_psi1[0] == 22.0

    def test_solver_config_normalizes_f_max(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "{}"))
        sc = cfg.build_solver_config()
        assert sc.f_max == pytest.approx(1000.0 / 343.0)

    def test_reference_duration_defaults_to_window(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "{}"))
        assert cfg.reference_duration() == pytest.approx(2.0 / 343.0)
        cfg = load_config(write_config(tmp_path, "reference: {duration: 0.5}"))
        assert cfg.reference_duration() == 0.5


class TestOutputRoot:
    def test_env_var_prefixes_relative_dir(self, tmp_path, monkeypatch):
        cfg = load_config(write_config(tmp_path, "run: {output_dir: runs/x}"))
        monkeypatch.setenv("WAVEPINN_OUTPUT_ROOT", str(tmp_path / "root"))
        assert cfg.output_dir() == tmp_path / "root" / "runs" / "x"

    def test_absolute_dir_wins(self, tmp_path, monkeypatch):
        cfg = load_config(write_config(
            tmp_path, f"run: {{output_dir: {tmp_path / 'abs'}}}"))
        monkeypatch.setenv("WAVEPINN_OUTPUT_ROOT", "/nonexistent")
        assert cfg.output_dir() == tmp_path / "abs"


class TestEffectiveConfig:
    def test_roundtrip_reproduces_merged_data(self, tmp_path):
        cfg = load_config(write_config(tmp_path, """
run: {seed: 9}
trainer: {max_epochs: 3}
"""))
        out = save_effective_config(cfg, tmp_path / "out")
        again = load_config(out)
        assert again.data == cfg.data
        assert yaml.safe_load(out.read_text())["trainer"]["max_epochs"] == 3

    def test_overrides_applied(self, tmp_path):
        path = write_config(tmp_path, "{}")
        cfg = load_config(path, overrides={"run.seed": 5,
                                           "run.output_dir": "elsewhere"})
        assert cfg.seed == 5
        assert cfg["run"]["output_dir"] == "elsewhere"

    def test_direct_runconfig_requires_mapping(self):
        with pytest.raises(ConfigError):
            RunConfig(["not", "a", "mapping"])
