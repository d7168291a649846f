"""Spectral calculus and Fourier-multiplier operators on small grids."""

import math

import numpy as np
import pytest

from convint.errors import FieldShapeError, NonzeroMeanError, ParameterError
from convint.operators.multipliers import (
    biot_savart,
    calderon_zygmund,
    fractional_energy,
    fractional_laplacian,
    inverse_divergence,
    leray_project,
    pressure_from_velocity,
)
from convint.spectral.field import PeriodicField, Rank
from convint.spectral.grid import Grid
from convint.spectral.ops import (
    curl,
    dealias,
    divergence,
    gradient,
    parseval_defect,
    partial,
    roundtrip_error,
    traceless_outer,
)
from convint.spectral.random_fields import random_band_limited, random_divergence_free


class TestGridAndField:
    @pytest.mark.parametrize("n", [4, 7, 15])
    def test_rejects_odd_or_tiny_grids(self, n):
        with pytest.raises(ParameterError):
            Grid(n)

    def test_rejects_bad_dealias_fraction(self):
        with pytest.raises(ParameterError):
            Grid(16, dealias_fraction=0.0)

    def test_shape_mismatch_is_reported(self, grid16):
        with pytest.raises(FieldShapeError):
            PeriodicField(grid16, Rank.VECTOR, np.zeros(grid16.shape))

    def test_symtensor_must_be_symmetric(self, grid16, rng):
        values = rng.standard_normal((3, 3) + grid16.shape)
        with pytest.raises(FieldShapeError):
            PeriodicField(grid16, Rank.SYMTENSOR, values)

    def test_values_are_frozen(self, grid16):
        f = PeriodicField.zeros(grid16)
        with pytest.raises(ValueError):
            f.values[0, 0, 0] = 1.0

    def test_roundtrip_and_parseval(self, grid16, rng):
        f = random_band_limited(grid16, Rank.VECTOR, rng)
        assert roundtrip_error(f) < 1e-12
        assert parseval_defect(f) < 1e-10

    def test_zero_mode_is_the_mean(self, grid16):
        f = PeriodicField.from_function(grid16, Rank.SCALAR, lambda x, y, z: 0.3 + np.sin(x))
        assert f.modes[0, 0, 0].real == pytest.approx(0.3, abs=1e-14)


class TestDifferentialOperators:
    def test_partial_of_sine(self, grid16):
        f = PeriodicField.from_function(grid16, Rank.SCALAR, lambda x, y, z: np.sin(2 * x) * np.cos(y))
        expected = PeriodicField.from_function(
            grid16, Rank.SCALAR, lambda x, y, z: 2 * np.cos(2 * x) * np.cos(y)
        )
        np.testing.assert_allclose(partial(f, 0).values, expected.values, atol=1e-12)

    def test_divergence_of_curl_vanishes(self, grid16, rng):
        a = random_band_limited(grid16, Rank.VECTOR, rng)
        assert divergence(curl(a)).sup_norm() < 1e-12

    def test_gradient_of_tensor_is_rejected(self, grid16):
        with pytest.raises(FieldShapeError):
            gradient(PeriodicField.zeros(grid16, Rank.TENSOR))

    def test_dealias_keeps_low_modes(self, grid16):
        f = PeriodicField.from_function(grid16, Rank.SCALAR, lambda x, y, z: np.sin(x) + np.sin(7 * y))
        low = PeriodicField.from_function(grid16, Rank.SCALAR, lambda x, y, z: np.sin(x))
        np.testing.assert_allclose(dealias(f).values, low.values, atol=1e-12)

    def test_traceless_outer_has_zero_trace(self, grid16, rng):
        u = random_divergence_free(grid16, rng)
        assert traceless_outer(u).trace().sup_norm() < 1e-12


class TestMultipliers:
    @pytest.mark.parametrize("gamma", [0.2, 0.5, 1.0])
    def test_fractional_laplacian_scales_a_single_mode(self, grid16, gamma):
        f = PeriodicField.from_function(grid16, Rank.SCALAR, lambda x, y, z: np.sin(2 * x))
        result = fractional_laplacian(f, gamma)
        np.testing.assert_allclose(result.values, 2.0 ** (2 * gamma) * f.values, atol=1e-12)

    @pytest.mark.parametrize("gamma", [0.0, -0.1, 1.5])
    def test_fractional_order_outside_range(self, grid16, gamma):
        with pytest.raises(ParameterError):
            fractional_laplacian(PeriodicField.zeros(grid16), gamma)

    def test_fractional_energy_of_a_mode(self, grid16):
        gamma = 0.2
        f = PeriodicField.from_function(grid16, Rank.SCALAR, lambda x, y, z: np.sin(3 * y))
        assert fractional_energy(f, gamma) == pytest.approx(0.5 * 3.0 ** (2 * gamma), rel=1e-12)

    def test_fractional_laplacian_kills_constants(self, grid16):
        f = PeriodicField.constant(grid16, 1.7)
        assert fractional_laplacian(f, 0.3).sup_norm() < 1e-14

    def test_inverse_divergence_inverts_divergence(self, grid16, rng):
        f = random_band_limited(grid16, Rank.VECTOR, rng)
        R = inverse_divergence(f)
        assert R.rank is Rank.SYMTENSOR
        np.testing.assert_allclose(divergence(R).values, f.values, atol=1e-10)
        assert R.metadata["trace_norm"] < 1e-10

    def test_inverse_divergence_refuses_a_mean(self, grid16):
        f = PeriodicField.constant(grid16, [1.0, 0.0, 0.0])
        with pytest.raises(NonzeroMeanError):
            inverse_divergence(f)

    def test_biot_savart_recovers_velocity(self, grid16, rng):
        v = random_divergence_free(grid16, rng)
        z = biot_savart(v)
        assert divergence(z).sup_norm() < 1e-10
        np.testing.assert_allclose(curl(z).values, v.values, atol=1e-10)

    def test_leray_projection_is_idempotent(self, grid16, rng):
        u = random_band_limited(grid16, Rank.VECTOR, rng)
        p = leray_project(u)
        assert divergence(p).sup_norm() < 1e-10
        np.testing.assert_allclose(leray_project(p).values, p.values, atol=1e-12)

    def test_pressure_is_mean_free(self, grid16, rng):
        v = random_divergence_free(grid16, rng)
        assert abs(float(pressure_from_velocity(v).mean())) < 1e-14

    def test_calderon_zygmund_trace_is_identity(self, grid16, rng):
        f = random_band_limited(grid16, Rank.SCALAR, rng)
        total = sum(calderon_zygmund(f, i, i).values for i in range(3))
        np.testing.assert_allclose(total, f.values, atol=1e-12)

    def test_odd_operators_drop_nyquist(self, grid16):
        n = grid16.n // 2
        f = PeriodicField.from_function(
            grid16, Rank.VECTOR, lambda x, y, z: [np.cos(n * x), np.cos(y), 0.0 * z]
        )
        z = biot_savart(f)
        assert np.all(np.abs(z.modes[:, n, :, :]) < 1e-14)
        assert math.isfinite(z.sup_norm())
