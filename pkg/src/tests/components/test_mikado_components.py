"""Positive decomposition, the pipe family, its Fourier data and the constant M."""

import numpy as np
import pytest
import yaml

from convint.errors import DecompositionError, NyquistError, OutOfBallError, ParameterError
from convint.mikado import (
    build_family,
    compute_M,
    decompose_field,
    decompose_matrix,
    fourier_data,
    lattice_sum,
    lattice_tail,
    mikado_identities,
    potential_coefficients,
    reconstruct,
    write_descriptor,
)
from convint.mikado.decompose import ball_distance, random_ball_matrices, unvec6, vec6
from convint.mikado import fourier as fourier_module
from convint.mikado.fourier import cube_wavevectors, decay_fit
from convint.tolerances import get_tolerances


@pytest.fixture(scope="module")
def family():
    return build_family(quadrature_n=32)


@pytest.fixture(scope="module")
def fourier(family):
    return fourier_data(family, k_max=8, samples=20)


class TestDecomposition:
    def test_identity(self):
        weights = decompose_matrix(np.eye(3))
        assert np.all(weights > 0)
        np.testing.assert_allclose(reconstruct(weights), np.eye(3), atol=1e-10)

    def test_ball_samples_reconstruct(self, rng):
        matrices = random_ball_matrices(rng, 40)
        assert np.all(ball_distance(np.moveaxis(matrices, 0, -1)) <= 0.5 + 1e-12)
        weights = decompose_field(np.moveaxis(matrices, 0, -1))
        assert weights.shape == (9, 40)
        assert np.all(weights > 0)
        np.testing.assert_allclose(np.moveaxis(reconstruct(weights), -1, 0), matrices, atol=1e-10)

    def test_weights_depend_continuously(self, rng):
        R = random_ball_matrices(rng, 1, radius=0.3)[0]
        nudge = unvec6(rng.standard_normal(6)) * 1e-7
        change = np.max(np.abs(decompose_matrix(R + nudge) - decompose_matrix(R)))
        assert change < 1e-5

    def test_vec6_is_isometric(self, rng):
        R = random_ball_matrices(rng, 1)[0]
        assert np.linalg.norm(vec6(R)) == pytest.approx(np.linalg.norm(R))
        np.testing.assert_allclose(unvec6(vec6(R)), R)

    def test_outside_ball(self):
        with pytest.raises(OutOfBallError):
            decompose_matrix(2.0 * np.eye(3))

    def test_asymmetric(self):
        R = np.eye(3)
        R[0, 1] = 0.1
        with pytest.raises(DecompositionError):
            decompose_matrix(R)


class TestFamily:
    def test_geometry(self, family):
        assert family.count == 9
        assert family.check_overlap() == 0
        np.testing.assert_allclose(np.linalg.norm(family.units, axis=1), 1.0)

    def test_identities_at_identity(self, family):
        checks = mikado_identities(family, np.eye(3))
        assert checks["mean"] < 1e-12
        assert checks["second_moment"] < 1e-10

    def test_identities_in_the_ball(self, family, rng):
        R = random_ball_matrices(rng, 1)[0]
        checks = mikado_identities(family, R)
        assert checks["mean"] < 1e-12
        assert checks["second_moment"] < 1e-10

    def test_pointwise_evaluation_matches_grid(self, family):
        R = np.diag([1.2, 0.9, 1.0])
        W = family.evaluate_W(R)
        mesh = W.grid.full_mesh()
        np.testing.assert_allclose(family.evaluate_at(R, mesh), W.values, atol=1e-12)


class TestFourierData:
    def test_orthogonality(self, fourier):
        defects = fourier.describe()["orthogonality"]
        assert defects["a_k"] < 1e-12
        assert defects["C_k"] < 1e-12

    def test_coefficients_are_hermitian(self, fourier):
        a = fourier.a_k(np.eye(3))
        lookup = {tuple(k): i for i, k in enumerate(fourier.wavevectors)}
        for i, k in enumerate(fourier.wavevectors[:50]):
            np.testing.assert_allclose(a[lookup[tuple(-k)]], np.conj(a[i]), atol=1e-14)

    def test_truncation(self, fourier):
        small = fourier.truncated(2)
        assert small.k_max == 2
        assert np.max(np.abs(small.wavevectors)) <= 2
        assert all(e <= 1.0 + 1e-12 for e in small.metadata["retained_energy"])
        assert np.all(small.tail_l1 >= fourier.tail_l1)
        with pytest.raises(ParameterError):
            fourier.truncated(9)

    def test_truncation_keeps_exact_moments(self, fourier):
        small = fourier.truncated(2)
        assert small.metadata["cross_direction"] < 1e-9
        assert small.metadata["energy"] < 1e-9
        assert np.all(np.count_nonzero(fourier.owned_modes(2), axis=0) <= 1)
        assert np.all(np.count_nonzero(small.profile_modes, axis=0) <= 1)
        assert all(count > 0 for count in small.metadata["owned_modes"])
        energies = np.sum(np.abs(small.profile_modes) ** 2, axis=1)
        np.testing.assert_allclose(energies, 1.0, rtol=1e-12)

    def test_truncation_needs_modes_of_each_pipe(self, fourier):
        with pytest.raises(ParameterError, match="without modes"):
            fourier.truncated(1)

    def test_low_retained_energy_is_logged(self, fourier, mocker):
        get_tolerances().truncation_energy = 1.0
        warning = mocker.patch.object(fourier_module.logger, "warning")
        small = fourier.truncated(2)
        assert small.metadata["k_max_for_energy"] is None
        assert warning.called
        message = warning.call_args[0][0]
        assert "k_max=2" in message
        assert "no k_max up to 8" in message

    def test_slow_decay_warning_reports_the_slope(self, mocker):
        warning = mocker.patch.object(fourier_module.logger, "warning")
        radii = np.array([1.0, 2.0, 3.0, 4.0])
        result = decay_fit(radii, radii**0.5)
        assert result["exponent"] == pytest.approx(-0.5)
        assert not result["passed"]
        message = warning.call_args[0][0]
        assert "slope 0.50" in message
        assert "|k|^--" not in message

    def test_grid_too_coarse(self, family):
        with pytest.raises(NyquistError):
            fourier_data(family, k_max=16)

    def test_M_bar_positive(self, fourier):
        assert fourier.M_bar > 0.0
        assert compute_M(fourier) > 64.0 * fourier.M_bar * lattice_sum(8)


class TestConstants:
    def test_lattice_sum(self):
        assert lattice_sum(1) == pytest.approx(6.0 + 12.0 / 4.0 + 8.0 / 9.0)
        assert len(cube_wavevectors(1)) == 26

    def test_tail_shrinks(self):
        assert lattice_tail(16) < lattice_tail(4) < lattice_tail(1)

    def test_compute_M_from_a_number(self):
        assert compute_M(1.0, k_max=1) == pytest.approx(64.0 * (lattice_sum(1) + lattice_tail(1)))

    def test_potential_curl(self, rng):
        k = np.array([1.0, -2.0, 3.0])
        a = np.cross(k, rng.standard_normal(3))
        b = potential_coefficients(a, k)
        np.testing.assert_allclose(np.cross(1j * k, b), a, atol=1e-12)
        with pytest.raises(ParameterError):
            potential_coefficients(a, np.zeros(3))

    def test_descriptor(self, fourier, tmp_path):
        path = write_descriptor(tmp_path / "mikado.yaml", fourier, fourier.truncated(2))
        with open(path, encoding="utf-8") as f:
            document = yaml.safe_load(f)
        assert document["constants"]["M"] == pytest.approx(compute_M(fourier))
        assert document["truncation"]["k_max"] == 2
        assert len(document["family"]["directions"]) == 9
