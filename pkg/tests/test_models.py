import numpy as np
import pytest

from fisherctl import FisherctlError, get_model
from fisherctl.models import (
    MODEL_NAMES,
    bell_povm,
    local_control_hams,
    model_magnetic_field,
    model_xxz,
    model_zz,
    pm_povm,
)
from fisherctl.operators import (
    I2,
    SX,
    SY,
    SZ,
    kron,
    validate_density_matrix,
)

from conftest import uncontrolled_trajectory


class TestCatalog:
    def test_names_resolve(self):
        for name in MODEL_NAMES:
            model = get_model(name)
            assert model.name == name

    def test_unknown_name(self):
        with pytest.raises(FisherctlError):
            get_model("heisenberg")

    def test_rate_count_checked(self):
        with pytest.raises(FisherctlError):
            get_model("zz", rates=(0.1,))

    def test_probes_and_povms_valid(self):
        for name in MODEL_NAMES:
            model = get_model(name)
            validate_density_matrix(model.default_probe)
            assert model.default_povm.dim == model.dim  # Povm validates itself

    def test_noise_off(self):
        for name in MODEL_NAMES:
            assert not get_model(name, noise=False).noise

    def test_six_local_fields(self):
        hams = local_control_hams()
        assert len(hams) == 6
        assert np.array_equal(hams[0], kron(SX, I2))
        assert np.array_equal(hams[5], kron(I2, SZ))


class TestPovms:
    def test_bell_completeness(self):
        total = sum(bell_povm().effects)
        assert np.abs(total - np.eye(4)).max() < 1e-14

    def test_pm_completeness(self):
        total = sum(pm_povm().effects)
        assert np.abs(total - np.eye(4)).max() < 1e-14


class TestMagneticField:
    def test_polar_axis(self):
        model = model_magnetic_field()
        h = model.h0(np.array([1.0, 0.0, 0.3]))
        assert np.abs(h - kron(SZ, I2)).max() < 1e-14

    def test_dphi_generator_at_reference_point(self):
        model = model_magnetic_field()
        d_phi = model.dh0(model.true_values)[2]
        expected = 0.5 * (-kron(SX, I2) + kron(SY, I2))
        assert np.abs(d_phi - expected).max() < 1e-12

    def test_generators_match_finite_differences(self):
        model = model_magnetic_field()
        x = model.true_values
        h = 1e-6
        analytic = model.dh0(x)
        for a in range(3):
            xp, xm = x.copy(), x.copy()
            xp[a] += h
            xm[a] -= h
            fd = (model.h0(xp) - model.h0(xm)) / (2 * h)
            assert np.abs(analytic[a] - fd).max() < 1e-8

    def test_cartesian_variant_same_physical_point(self):
        spherical = get_model("magfield", noise=False)
        cartesian = get_model("magfield-xyz", noise=False)
        h1 = spherical.h0(spherical.true_values)
        h2 = cartesian.h0(cartesian.true_values)
        assert np.abs(h1 - h2).max() < 1e-14

    def test_cartesian_linearity(self):
        model = get_model("magfield-xyz")
        x = np.array([0.3, -0.8, 1.1])
        expected = sum(x[a] * g for a, g in enumerate(model.dh0(x)))
        assert np.abs(model.h0(x) - expected).max() < 1e-14


class TestZZ:
    def test_generators_commute(self):
        model = model_zz()
        d = model.dh0(model.true_values)
        for i in range(3):
            for j in range(3):
                assert np.abs(d[i] @ d[j] - d[j] @ d[i]).max() < 1e-14

    def test_diagonal_at_reference_values(self):
        model = model_zz()
        h = model.h0(model.true_values)
        assert np.abs(h - np.diag([2.3, -0.3, 0.1, -2.1])).max() < 1e-14

    def test_probe_expectations_vanish(self):
        model = model_zz()
        probe = model.default_probe
        for op in (kron(SZ, I2), kron(I2, SZ), kron(SZ, SZ)):
            assert abs(np.trace(probe @ op)) < 1e-14

    def test_linearity(self):
        model = model_zz()
        x = np.array([0.4, -1.0, 0.25])
        expected = sum(x[a] * g for a, g in enumerate(model.dh0(x)))
        assert np.abs(model.h0(x) - expected).max() < 1e-14


class TestXXZ:
    def test_generators_commute(self):
        zz = kron(SZ, SZ)
        xx = kron(SX, SX)
        assert np.abs(zz @ xx - xx @ zz).max() < 1e-14

    def test_probe_expectations_vanish(self):
        model = model_xxz()
        probe = model.default_probe
        zz = kron(SZ, SZ)
        xy = kron(SX, SX) + kron(SY, SY)
        assert abs(np.trace(probe @ zz)) < 1e-14
        assert abs(np.trace(probe @ xy)) < 1e-14

    def test_linearity(self):
        model = model_xxz()
        x = np.array([1.4, -0.3])
        expected = sum(x[a] * g for a, g in enumerate(model.dh0(x)))
        assert np.abs(model.h0(x) - expected).max() < 1e-14

    @pytest.mark.parametrize("t", [0.4, 1.0, 2.3])
    def test_evolved_state_matches_closed_form(self, t):
        # (1/sqrt2)[e^{i 2 x2 T}|00> + i cos(2 x1 T)|01> - sin(2 x1 T)|10>]
        # up to a global phase
        model = get_model("xxz", noise=False)
        x1, x2 = model.true_values
        traj = uncontrolled_trajectory(model, t, deriv_method=None)
        ket = np.array([
            np.exp(1j * 2 * x2 * t),
            1j * np.cos(2 * x1 * t),
            -np.sin(2 * x1 * t),
            0.0,
        ]) / np.sqrt(2)
        expected = np.outer(ket, ket.conj())  # projector removes global phase
        assert np.abs(traj.final_state - expected).max() < 1e-12
