import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavepinn.core import RationalAdmittance
from wavepinn.material import (
    FrequencyBand,
    PorousLayer,
    VectorFitError,
    ade_integrate,
    estimate_accumulator_scales,
    evaluate_admittance,
    load_material,
    miki_surface_impedance,
    normalize_material,
    save_material,
    vector_fit,
)

RHO0_C = 1.2  # characteristic impedance of air in normalized units


@pytest.fixture(scope="module")
def paper_layer_normalized():
    layer = PorousLayer(d_mat=0.10, sigma_mat=8000.0)
    band = FrequencyBand(20.0, 1000.0, 200)
    return normalize_material(layer, band, 343.0)


class TestMiki:
    def test_normalized_band_endpoints(self, paper_layer_normalized):
        _, band = paper_layer_normalized
        assert band.f_min == pytest.approx(20.0 / 343.0)
        assert band.f_max == pytest.approx(1000.0 / 343.0)

    def test_passive_over_band(self, paper_layer_normalized):
        # a rigid-backed porous layer absorbs: Re(Zs) >= 0
        layer, band = paper_layer_normalized
        zs = miki_surface_impedance(band.frequencies(), layer)
        assert np.all(zs.real >= 0.0)

    def test_thick_layer_approaches_characteristic_impedance(self):
        # tanh(k d) -> 1 for large d, so Zs -> Zc; compare via Miki's Zc form
        layer = PorousLayer(d_mat=80.0, sigma_mat=30.0)
        f = np.array([1.0])
        x = f / layer.sigma_mat
        zc = RHO0_C * (1 + 0.070 * x**-0.632 + 1j * 0.107 * x**-0.632)
        zs = miki_surface_impedance(f, layer, rho0=1.2)
        assert abs(zs[0] - zc[0]) / abs(zc[0]) < 1e-6

    def test_normalization_preserves_specific_impedance(self):
        # xi = Zs / (rho0 c) is dimensionless and must survive normalization
        layer = PorousLayer(d_mat=0.10, sigma_mat=8000.0)
        band = FrequencyBand(20.0, 1000.0, 50)
        layer_n, band_n = normalize_material(layer, band, 343.0)
        f_phys = band.frequencies()
        xi_phys = miki_surface_impedance(f_phys, layer, c=343.0, rho0=1.2) / (1.2 * 343.0)
        xi_norm = miki_surface_impedance(band_n.frequencies(), layer_n) / 1.2
        assert np.max(np.abs(xi_phys - xi_norm) / np.abs(xi_phys)) < 1e-12

    def test_rejects_nonpositive_frequency(self, paper_layer_normalized):
        layer, _ = paper_layer_normalized
        with pytest.raises(ValueError):
            miki_surface_impedance(np.array([0.0]), layer)

    def test_layer_validation(self):
        with pytest.raises(ValueError):
            PorousLayer(d_mat=-0.1, sigma_mat=8000.0)
        with pytest.raises(ValueError):
            PorousLayer(d_mat=0.1, sigma_mat=0.0)
        with pytest.raises(ValueError):
            FrequencyBand(100.0, 20.0)


class TestEvaluateAdmittance:
    def test_matches_partial_fraction_sum(self):
        adm = RationalAdmittance(y_inf=0.3, a=[1.5], lam=[2.0], b=[0.4], c=[-0.2],
                                 alpha=[1.0], beta=[6.0])
        omega = np.linspace(0.1, 30.0, 57)
        s = -1j * omega
        expect = (0.3 + 1.5 / (s + 2.0)
                  + (0.4 + 1j * (-0.2)) / (s + (1.0 + 1j * 6.0))
                  + (0.4 - 1j * (-0.2)) / (s + (1.0 - 1j * 6.0)))
        got = evaluate_admittance(adm, omega)
        assert np.max(np.abs(got - expect)) < 1e-14

    def test_hermitian_symmetry(self):
        adm = RationalAdmittance(y_inf=0.1, a=[2.0], lam=[1.0], b=[1.0], c=[3.0],
                                 alpha=[0.5], beta=[4.0])
        omega = np.linspace(0.5, 10, 7)
        assert np.allclose(evaluate_admittance(adm, -omega),
                           np.conj(evaluate_admittance(adm, omega)), atol=1e-15)

    def test_limits(self):
        adm = RationalAdmittance(y_inf=0.9, a=[2.0], lam=[4.0], b=[], c=[],
                                 alpha=[], beta=[])
        assert evaluate_admittance(adm, np.array([0.0]))[0] == pytest.approx(0.9 + 0.5)
        assert abs(evaluate_admittance(adm, np.array([1e9]))[0] - 0.9) < 1e-8


class TestVectorFit:
    def test_roundtrip_exact(self):
        true = RationalAdmittance(y_inf=0.9526, a=[3.1, 0.52], lam=[34.8, 1.19],
                                  b=[0.93], c=[-0.41], alpha=[6.8], beta=[8.3])
        f = np.linspace(0.05, 3.0, 150)
        y = evaluate_admittance(true, 2 * np.pi * f)
        fit = vector_fit(f, y, q=2, s=1, iterations=30)
        yfit = evaluate_admittance(fit.admittance, 2 * np.pi * f)
        assert fit.converged
        assert np.max(np.abs(yfit - y) / np.abs(y)) < 1e-10
        assert np.allclose(np.sort(fit.admittance.lam), [1.19, 34.8], rtol=1e-8)
        assert fit.admittance.alpha[0] == pytest.approx(6.8, rel=1e-8)
        assert fit.admittance.beta[0] == pytest.approx(8.3, rel=1e-8)

    def test_constant_target_gives_y_inf_only(self):
        f = np.linspace(0.1, 2.0, 40)
        y = np.full(40, 0.7 + 0j)
        fit = vector_fit(f, y, q=0, s=0)
        assert fit.admittance.y_inf == pytest.approx(0.7, abs=1e-12)
        assert fit.max_rel_error < 1e-12

    def test_paper_material_under_one_percent(self, paper_material_fit):
        fit, band, _ = paper_material_fit
        assert fit.admittance.q == 2 and fit.admittance.s == 1
        assert fit.max_rel_error < 0.01
        assert fit.converged

    def test_fitted_poles_are_stable(self, paper_material_fit):
        fit, _, _ = paper_material_fit
        assert np.all(fit.admittance.lam > 0)
        assert np.all(fit.admittance.alpha > 0)

    def test_structure_repair_flagged_or_exact(self):
        # fitting a 3-real-pole target with q=1, s=1 forces a repair or a
        # legitimate (1,1) fit; either way the result must be well-formed
        true = RationalAdmittance(y_inf=0.5, a=[1.0, 0.8, 0.3], lam=[1.0, 5.0, 20.0],
                                  b=[], c=[], alpha=[], beta=[])
        f = np.linspace(0.05, 4.0, 120)
        y = evaluate_admittance(true, 2 * np.pi * f)
        fit = vector_fit(f, y, q=1, s=1, iterations=25)
        assert fit.admittance.q == 1 and fit.admittance.s == 1

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            vector_fit(np.array([1.0, 2.0]), np.array([1.0 + 0j]), q=1, s=0)
        with pytest.raises(ValueError):
            vector_fit(np.array([]), np.array([], dtype=complex), q=1, s=0)

    def test_too_few_samples_rejected(self):
        f = np.array([1.0])
        y = np.array([0.5 + 0.1j])
        with pytest.raises((VectorFitError, ValueError)):
            vector_fit(f, y, q=2, s=1)


class TestAdeIntegrate:
    def test_zero_forcing_stays_zero(self):
        adm = RationalAdmittance(y_inf=0.1, a=[1.0], lam=[2.0], b=[1.0], c=[1.0],
                                 alpha=[1.0], beta=[3.0])
        series = ade_integrate(adm, lambda t: np.zeros_like(t), dt=0.01, n_steps=100)
        assert not series.stacked().any()

    def test_constant_forcing_closed_form(self):
        # phi' = p - lam*phi with p = 1 gives phi(t) = (1 - exp(-lam t))/lam
        lam = 2.5
        adm = RationalAdmittance(y_inf=0.0, a=[1.0], lam=[lam], b=[], c=[],
                                 alpha=[], beta=[])
        series = ade_integrate(adm, lambda t: np.ones_like(t), dt=0.01, n_steps=200)
        expect = (1 - np.exp(-lam * series.t)) / lam
        assert np.max(np.abs(series.phi[:, 0] - expect)) < 1e-8

    def test_complex_pair_constant_forcing(self):
        # steady state of psi0' = p - a psi0 - b psi1, psi1' = b psi0 - a psi1
        a, b = 1.3, 4.2
        adm = RationalAdmittance(y_inf=0.0, a=[], lam=[], b=[1.0], c=[1.0],
                                 alpha=[a], beta=[b])
        series = ade_integrate(adm, lambda t: np.ones_like(t), dt=0.002,
                               n_steps=8000)
        denom = a**2 + b**2
        assert series.psi0[-1, 0] == pytest.approx(a / denom, abs=1e-8)
        assert series.psi1[-1, 0] == pytest.approx(b / denom, abs=1e-8)

    def test_sinusoid_steady_amplitude(self):
        # |phi_ss| = |1/(lam - i w)| for p = sin(w t)
        lam, w = 3.0, 7.0
        adm = RationalAdmittance(y_inf=0.0, a=[1.0], lam=[lam], b=[], c=[],
                                 alpha=[], beta=[])
        series = ade_integrate(adm, lambda t: np.sin(w * t), dt=2e-4, n_steps=100000)
        tail = series.phi[-int(2 * np.pi / w / 2e-4):, 0]
        amp = 0.5 * (tail.max() - tail.min())
        assert amp == pytest.approx(1 / abs(lam - 1j * w), rel=5e-3)

    def test_fourth_order_convergence(self):
        lam = 1.7
        adm = RationalAdmittance(y_inf=0.0, a=[1.0], lam=[lam], b=[], c=[],
                                 alpha=[], beta=[])
        errs = []
        for dt in (0.2, 0.1, 0.05):
            series = ade_integrate(adm, lambda t: np.ones_like(t), dt=dt,
                                   n_steps=int(round(2.0 / dt)))
            expect = (1 - np.exp(-lam * series.t)) / lam
            errs.append(np.max(np.abs(series.phi[:, 0] - expect)))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.abs(orders - 4.0) < 0.3)

    def test_sampled_forcing_matches_callable_for_linear_p(self):
        adm = RationalAdmittance(y_inf=0.0, a=[1.0], lam=[1.0], b=[], c=[],
                                 alpha=[], beta=[])
        dt, n = 0.01, 300
        t = np.arange(n + 1) * dt
        a = ade_integrate(adm, lambda tt: 2.0 * tt + 1.0, dt, n)
        b = ade_integrate(adm, 2.0 * t + 1.0, dt)
        assert np.max(np.abs(a.phi - b.phi)) < 1e-10

    def test_scale_estimate_normalizes_peaks(self):
        adm = RationalAdmittance(y_inf=0.2, a=[1.0], lam=[2.0], b=[0.5], c=[0.1],
                                 alpha=[1.5], beta=[5.0])
        l_phi, l_psi0, l_psi1 = estimate_accumulator_scales(
            adm, lambda t: np.sin(3 * t), dt=0.005, n_steps=2000)
        series = ade_integrate(adm, lambda t: np.sin(3 * t), dt=0.005, n_steps=2000)
        assert np.max(np.abs(series.phi[:, 0])) * l_phi[0] == pytest.approx(1.0)
        assert np.max(np.abs(series.psi0[:, 0])) * l_psi0[0] == pytest.approx(1.0)
        assert np.max(np.abs(series.psi1[:, 0])) * l_psi1[0] == pytest.approx(1.0)


class TestMaterialFile:
    def test_roundtrip(self, tmp_path, paper_material_fit):
        fit, band, _ = paper_material_fit
        path = tmp_path / "mat.json"
        save_material(path, fit.admittance, band=band, fit=fit, meta={"k": 1})
        adm, doc = load_material(path)
        assert doc["format_version"] == 1
        assert doc["meta"]["k"] == 1
        assert adm.y_inf == pytest.approx(fit.admittance.y_inf)
        assert np.allclose(adm.lam, fit.admittance.lam)
        assert np.allclose(adm.beta, fit.admittance.beta)
        omega = np.linspace(0.5, 18, 40)
        assert np.allclose(evaluate_admittance(adm, omega),
                           evaluate_admittance(fit.admittance, omega), atol=1e-14)

    def test_rejects_wrong_version(self, tmp_path):
        path = tmp_path / "mat.json"
        path.write_text('{"format_version": 99}')
        with pytest.raises(ValueError):
            load_material(path)


@given(st.floats(0.02, 0.5), st.floats(500.0, 60000.0), st.floats(0.1, 2.9))
@settings(max_examples=60, deadline=None)
def test_miki_passivity_property(d, sigma, f_norm):
    """Rigid-backed layers never produce an active surface (Re Zs < 0)."""
    layer = PorousLayer(d_mat=d, sigma_mat=sigma / 343.0)
    zs = miki_surface_impedance(np.array([f_norm]), layer)
    assert zs[0].real >= -1e-12


@given(st.integers(0, 3), st.integers(0, 2), st.integers(0, 2**16))
@settings(max_examples=25, deadline=None)
def test_vector_fit_reconstruction_property(q, s, seed):
    """Fitting samples generated by a random stable model reproduces them."""
    rng = np.random.default_rng(seed)
    if q + s == 0:
        q = 1
    true = RationalAdmittance(
        y_inf=rng.uniform(0.1, 2.0),
        a=rng.uniform(0.2, 3.0, q),
        lam=rng.uniform(0.3, 30.0, q),
        b=rng.uniform(-1.0, 1.0, s),
        c=rng.uniform(-1.0, 1.0, s),
        alpha=rng.uniform(0.3, 5.0, s),
        beta=rng.uniform(1.0, 20.0, s),
    )
    f = np.linspace(0.05, 3.0, 160)
    y = evaluate_admittance(true, 2 * np.pi * f)
    fit = vector_fit(f, y, q=q, s=s, iterations=40)
    yfit = evaluate_admittance(fit.admittance, 2 * np.pi * f)
    assert np.max(np.abs(yfit - y)) / np.max(np.abs(y)) < 1e-6
