"""Fractional Navier–Stokes solver, advection–diffusion, flow maps and the stability harness."""

import math

import numpy as np
import pytest

from convint.errors import CFLViolation, HorizonError, ParameterError
from convint.pipeline.audit import dissipation_audit
from convint.solver.advection import lagrange_weights, series_sampler, solve_advection_diffusion
from convint.solver.flow_map import (
    flow_map,
    lagrangian_displacement,
    trace_characteristics,
    transport_residual,
)
from convint.solver.fns import SolverConfig, fns_rate, solve_fns
from convint.solver.stability import (
    CONSTANT_CEILING,
    StabilityCase,
    higher_order_constant,
    randomized_cases,
    shear_velocity,
    stability_harness,
)
from convint.spectral.field import PeriodicField, Rank
from convint.spectral.random_fields import random_band_limited, random_divergence_free
from convint.state import TimeSeries


class TestSolverConfig:
    @pytest.mark.parametrize("values", [{"dt": 0.0}, {"horizon": -1.0}, {"scheme": "euler"}, {"save_every": 0}])
    def test_rejects_bad_settings(self, values):
        with pytest.raises(ParameterError):
            SolverConfig(**values)

    def test_steps_land_on_horizon(self):
        count, h = SolverConfig(dt=0.3).steps(1.0)
        assert count == 4
        assert h == pytest.approx(0.25)

    def test_from_mapping_ignores_unknown_keys(self):
        config = SolverConfig.from_mapping({"dt": 0.05, "enforce_horizon": True, "unrelated": 3})
        assert config.dt == 0.05 and config.enforce_horizon


class TestSolveFns:
    def test_shear_decays_exactly(self, grid16):
        nu, gamma, amplitude = 0.2, 0.3, 0.5
        u0 = shear_velocity(grid16, amplitude, mode=2)
        result = solve_fns(u0, nu, gamma, SolverConfig(dt=0.05), horizon=1.0)
        decay = math.exp(-nu * 2.0 ** (2 * gamma) * 1.0)
        np.testing.assert_allclose(result.v[-1].values, decay * u0.values, atol=1e-12)
        assert result.metadata["steps"] == 20

    def test_output_times_are_hit_exactly(self, grid16):
        u0 = shear_velocity(grid16, 0.5)
        outputs = [0.1, 0.25, 0.4]
        result = solve_fns(u0, 0.1, 0.2, SolverConfig(dt=0.04), t0=0.0, output_times=outputs)
        assert list(result.v.times) == [0.0] + outputs

    def test_energy_identity(self, grid16, rng):
        nu, gamma = 0.1, 0.25
        u0 = random_divergence_free(grid16, rng, k_max=2) * 0.5
        result = solve_fns(u0, nu, gamma, SolverConfig(dt=0.01), horizon=0.2)
        audit = dissipation_audit(result.v, nu, gamma)
        assert audit.relative_variation < 1e-3
        assert audit.kinetic_energy[-1] < audit.kinetic_energy[0]

    def test_rate_matches_finite_difference(self, grid16, rng):
        nu, gamma = 0.1, 0.25
        u0 = random_divergence_free(grid16, rng, k_max=2) * 0.5
        result = solve_fns(u0, nu, gamma, SolverConfig(dt=0.005), horizon=0.1)
        index = len(result.v) // 2
        rate = fns_rate(result.v[index], nu, gamma)
        np.testing.assert_allclose(result.v.time_derivative(index).values, rate.values, atol=1e-6)

    def test_rejects_compressible_data(self, grid16):
        u0 = PeriodicField.from_function(grid16, Rank.VECTOR, lambda x, y, z: [np.sin(x), 0 * y, 0 * z])
        with pytest.raises(ParameterError):
            solve_fns(u0, 0.1, 0.2, SolverConfig())

    def test_cfl_violation(self, grid16):
        with pytest.raises(CFLViolation):
            solve_fns(shear_velocity(grid16, 50.0), 0.0, 0.2, SolverConfig(dt=0.5), horizon=1.0)

    def test_enforced_horizon(self, grid16):
        config = SolverConfig(dt=0.01, enforce_horizon=True, horizon_constant=1e-3)
        with pytest.raises(HorizonError):
            solve_fns(shear_velocity(grid16, 1.0), 0.0, 0.2, config, horizon=0.5)


class TestAdvection:
    def test_lagrange_weights_reproduce_cubics(self):
        nodes = np.array([0.0, 1.0, 2.0, 3.0])
        weights = lagrange_weights(nodes, 1.7)
        assert float(np.dot(weights, nodes**3)) == pytest.approx(1.7**3)

    def test_sampler_outside_window(self, grid16):
        series = TimeSeries([0.0, 1.0], [PeriodicField.zeros(grid16)] * 2)
        with pytest.raises(ParameterError):
            series_sampler(series)(1.5)

    def test_pure_diffusion(self, grid16):
        nu, gamma = 0.3, 0.2
        u0 = PeriodicField.from_function(grid16, Rank.SCALAR, lambda x, y, z: np.cos(3 * z))
        still = PeriodicField.zeros(grid16, Rank.VECTOR)
        result = solve_advection_diffusion(u0, still, nu, gamma, SolverConfig(dt=0.05, horizon=0.5))
        decay = math.exp(-nu * 3.0 ** (2 * gamma) * 0.5)
        np.testing.assert_allclose(result.v[-1].values, decay * u0.values, atol=1e-12)

    def test_transport_keeps_the_maximum(self, grid16, rng):
        u0 = random_band_limited(grid16, Rank.SCALAR, rng, k_max=2)
        velocity = shear_velocity(grid16, 0.8)
        result = solve_advection_diffusion(u0, velocity, 0.0, 0.2, SolverConfig(dt=0.02, horizon=0.4))
        assert float(np.max(result.v[-1].values)) <= float(np.max(u0.values)) + 5e-2


class TestFlowMaps:
    def test_constant_velocity_shifts(self, grid16):
        velocity = PeriodicField.constant(grid16, [0.5, 0.0, 0.0])
        flow = flow_map(velocity, 0.0, (-0.1, 0.2), SolverConfig(dt=0.05), times=[-0.1, 0.0, 0.2])
        np.testing.assert_allclose(flow.displacement[2].values[0], -0.1, atol=1e-13)
        np.testing.assert_allclose(flow.displacement[0].values[0], 0.05, atol=1e-13)
        np.testing.assert_allclose(flow.determinant(2), 1.0, atol=1e-12)
        assert flow.deviation(1) == 0.0

    def test_missing_velocity_is_a_parameter_error(self, grid16):
        with pytest.raises(ParameterError, match="velocity"):
            flow_map(None, 0.0, (0.0, 1.0), times=[0.0, 1.0])  # type: ignore[arg-type]
        with pytest.raises(ParameterError, match="velocity"):
            trace_characteristics(None, np.zeros((3, 1)), 0.0, 1.0, 4)  # type: ignore[arg-type]

    def test_times_required_for_steady_velocity(self, grid16):
        with pytest.raises(ParameterError):
            flow_map(PeriodicField.zeros(grid16, Rank.VECTOR), 0.0, (0.0, 1.0))

    def test_shear_flow_matches_characteristics(self, grid16):
        velocity = shear_velocity(grid16, 0.6)
        times = np.linspace(0.0, 0.2, 5)
        flow = flow_map(velocity, 0.0, (0.0, 0.2), SolverConfig(dt=0.01), times=times)
        traced = lagrangian_displacement(velocity, grid16, 0.0, 0.2, steps=8)
        np.testing.assert_allclose(flow.displacement[-1].values, traced.values, atol=1e-6)
        assert flow.metadata["volume_defect"] < 1e-10
        assert max(transport_residual(flow, velocity)) < 1e-6

    def test_backward_flow_of_a_swirling_field_matches_characteristics(self, grid32, rng):
        swirl = random_divergence_free(grid32, rng, k_max=2)
        velocity = swirl * (0.3 / swirl.sup_norm())
        flow = flow_map(velocity, 0.2, (0.0, 0.2), SolverConfig(dt=0.01), times=[0.0, 0.2])
        traced = lagrangian_displacement(velocity, grid32, 0.2, 0.0, steps=16)
        assert flow.displacement[0].sup_norm() > 1e-2
        np.testing.assert_allclose(flow.displacement[0].values, traced.values, atol=1e-3)
        assert flow.displacement[1].sup_norm() == 0.0

    def test_phase_has_unit_modulus(self, grid16):
        flow = flow_map(
            shear_velocity(grid16, 0.3), 0.0, (0.0, 0.1), SolverConfig(dt=0.02), times=[0.0, 0.1]
        )
        np.testing.assert_allclose(np.abs(flow.phase(1, [1.0, 0.0, 0.0], 4.0)), 1.0, atol=1e-14)


class TestStabilityHarness:
    def test_randomized_cases_are_seeded(self, grid16):
        first = randomized_cases(grid16, 2, seed=3)
        second = randomized_cases(grid16, 2, seed=3)
        assert np.array_equal(first[1].u0.values, second[1].u0.values)
        assert all(case.forcing is not None for case in first)
        assert all(case.forcing is None for case in randomized_cases(grid16, 2, forced=False))

    def test_harness_records_estimates(self, grid16):
        case = randomized_cases(grid16, 1, seed=0, horizon=0.2)[0]
        report = stability_harness(case)
        assert report.ledger.find("transport.gradient_bound").relation == "<="
        assert "stability_order_2_constant" in report.fits
        assert len(report.series["t"]) == len(report.series["sup"])
        assert report.to_dict()["name"] == case.name

    def test_case_without_velocity_is_rejected(self, grid16):
        case = StabilityCase("still", PeriodicField.zeros(grid16), None, 0.05, 0.2)  # type: ignore[arg-type]
        with pytest.raises(ParameterError, match="needs a velocity"):
            stability_harness(case)


class TestHigherOrderConstant:
    def test_bound_already_holds(self):
        assert higher_order_constant(1.0, 2.0, 1.0, 1.0, 1.0, 0.5, 0.0) == 0.0
        assert higher_order_constant(1.0, 0.5, 1.0, 1.0, 1.0, 0.5, 0.6) == 0.0

    def test_solves_the_homogeneous_part(self):
        c = higher_order_constant(3.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.0)
        assert (1.0 + c * 0.5) * math.exp(c * 0.5) == pytest.approx(3.0, rel=1e-9)

    def test_large_rates_do_not_overflow(self):
        c = higher_order_constant(50.0, 1.0, 1.0, 2.0, 40.0, 0.3, 0.0)
        assert 0.0 < c < CONSTANT_CEILING
        assert math.log(1.0 + c * 0.3 * 2.0) + c * 0.3 * 40.0 == pytest.approx(math.log(50.0), rel=1e-9)

    def test_unreachable_bound_is_infinite(self):
        assert higher_order_constant(5.0, 0.0, 0.0, 1.0, 0.0, 0.5, 0.0) == math.inf
