"""Hölder estimators, mollifiers, power-law fits and field snapshots."""

import math

import numpy as np
import pytest

from convint.errors import CheckpointError, HolderOrderError, ParameterError, SamplingError
from convint.spectral.field import PeriodicField, Rank
from convint.spectral.fitting import convergence_order, fit_power_law, fitted_constant
from convint.spectral.holder import holder_norm, holder_seminorm, ledger_norm, split_exponent
from convint.spectral.mollifier import (
    commutator_probe,
    mollify,
    mollify_time,
    smooth_step,
    smooth_step_derivative,
    time_kernel_weights,
)
from convint.spectral.random_fields import random_band_limited
from convint.spectral.snapshot import read_header, read_snapshot, write_snapshot


def sine(grid, k=1):
    return PeriodicField.from_function(grid, Rank.SCALAR, lambda x, y, z: np.sin(k * x))


class TestHolder:
    def test_split_exponent(self):
        assert split_exponent(2.0) == (2, 0.0)
        m, alpha = split_exponent(1.25)
        assert m == 1
        assert alpha == pytest.approx(0.25)

    def test_integer_seminorms_of_a_sine(self, grid16):
        f = sine(grid16, 2)
        assert holder_seminorm(f, 0.0).value == pytest.approx(1.0, abs=1e-12)
        assert holder_seminorm(f, 1.0).value == pytest.approx(2.0, abs=1e-12)

    def test_fractional_seminorm_is_homogeneous(self, grid16, rng):
        f = random_band_limited(grid16, Rank.SCALAR, rng)
        one = holder_seminorm(f, 0.5).value
        assert one > 0.0
        assert holder_seminorm(f * 3.0, 0.5).value == pytest.approx(3.0 * one, rel=1e-12)

    def test_constants_have_no_fractional_seminorm(self, grid16):
        assert holder_seminorm(PeriodicField.constant(grid16, 2.0), 0.3).value == 0.0

    def test_scale_multiplies_by_power(self, grid16):
        f = sine(grid16)
        base = holder_seminorm(f, 1.0).value
        assert holder_seminorm(f, 1.0, scale=2.0).value == pytest.approx(2.0 * base)

    @pytest.mark.parametrize("exponent", [-0.5, 5.0])
    def test_exponent_out_of_range(self, grid16, exponent):
        with pytest.raises(HolderOrderError):
            holder_seminorm(sine(grid16), exponent)

    def test_norm_sums_integer_seminorms(self, grid16):
        f = sine(grid16)
        assert holder_norm(f, 1.0) == pytest.approx(2.0, abs=1e-12)
        assert ledger_norm(f, 1.5) >= holder_norm(f, 1.0)


class TestMollifier:
    def test_constants_are_fixed(self, grid16):
        f = PeriodicField.constant(grid16, [1.0, -2.0, 0.5])
        np.testing.assert_allclose(mollify(f, 0.8).values, f.values, atol=1e-12)

    def test_metadata_records_resolution(self, grid16):
        coarse = mollify(sine(grid16), 0.1)
        assert coarse.metadata["under_resolved"] is True
        assert coarse.metadata["mollifier_ell"] == pytest.approx(0.1)
        assert mollify(sine(grid16), 1.0).metadata["under_resolved"] is False

    @pytest.mark.parametrize("ell", [0.0, -1.0, 4.0])
    def test_rejects_bad_scales(self, grid16, ell):
        with pytest.raises(ParameterError):
            mollify(sine(grid16), ell)

    def test_commutator_shrinks_with_scale(self, grid32):
        f = PeriodicField.from_function(grid32, Rank.SCALAR, lambda x, y, z: np.sin(x) * np.cos(z))
        g = PeriodicField.from_function(grid32, Rank.SCALAR, lambda x, y, z: np.cos(2 * y))
        points = commutator_probe(f, g, [1.2, 0.6])
        assert points[1].norm < points[0].norm
        assert not points[1].under_resolved

    def test_smooth_step_endpoints(self):
        s = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
        np.testing.assert_allclose(smooth_step(s), [0.0, 0.0, 0.5, 1.0, 1.0], atol=1e-15)
        derivative = smooth_step_derivative(s)
        assert derivative[0] == 0.0 and derivative[-1] == 0.0
        assert derivative[2] > 0.0

    def test_time_kernel_has_unit_mass(self):
        assert float(np.sum(time_kernel_weights(0.01, 0.1))) == pytest.approx(1.0)

    def test_time_kernel_needs_fine_sampling(self):
        with pytest.raises(SamplingError):
            time_kernel_weights(0.05, 0.1)

    def test_time_mollification_fixes_constants(self):
        samples = np.full((20, 3), 1.5)
        np.testing.assert_allclose(mollify_time(samples, 0.01, 0.05), samples, rtol=1e-12)


class TestFitting:
    def test_power_law(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        fit = fit_power_law(x, 3.0 * x**2)
        assert fit.slope == pytest.approx(2.0)
        assert fit.constant == pytest.approx(3.0)
        assert fit.points == 4

    def test_floor_drops_plateau(self):
        with pytest.raises(ParameterError):
            fit_power_law([1.0, 2.0, 3.0], [1e-20, 1e-20, 1e-3], floor=1e-16)

    def test_fitted_constant(self):
        assert fitted_constant([1.0, 3.0, 2.0], [1.0, 2.0, 0.0]) == pytest.approx(1.5)
        assert fitted_constant([1.0], [0.0]) == 0.0

    def test_convergence_order(self):
        errors = [2.0 ** (-4 * j) for j in range(4)]
        assert convergence_order(errors) == pytest.approx(4.0)


class TestSnapshots:
    @pytest.mark.parametrize("rank", [Rank.SCALAR, Rank.VECTOR, Rank.SYMTENSOR])
    def test_write_read_is_exact(self, tmp_path, grid16, rng, rank):
        f = random_band_limited(grid16, rank, rng)
        path = write_snapshot(tmp_path / "f.cvx", f)
        header = read_header(path)
        assert header["rank"] is rank and header["real"]
        back = read_snapshot(path)
        assert back.rank is rank
        assert np.array_equal(back.values, f.values)

    def test_complex_fields_survive(self, tmp_path, grid16):
        values = np.exp(1j * grid16.full_mesh()[0])
        f = PeriodicField(grid16, Rank.SCALAR, values)
        back = read_snapshot(write_snapshot(tmp_path / "c.cvx", f))
        assert np.array_equal(back.values, values)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.cvx"
        path.write_bytes(b"NOTAFIELD" + bytes(64))
        with pytest.raises(CheckpointError):
            read_snapshot(path)

    def test_truncated_data(self, tmp_path, grid16):
        path = write_snapshot(tmp_path / "t.cvx", sine(grid16))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(CheckpointError):
            read_snapshot(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            read_snapshot(tmp_path / "absent.cvx")

    def test_reading_keeps_the_period(self, tmp_path, grid16):
        back = read_snapshot(write_snapshot(tmp_path / "s.cvx", sine(grid16)))
        assert back.grid.spacing == pytest.approx(2.0 * math.pi / 16)
