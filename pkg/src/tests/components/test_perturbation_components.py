"""Space-time cutoffs, flow maps, energy pumping, the perturbation build, assembly and their ledgers."""

import numpy as np
import pytest

from convint.errors import EnergyGapError, NyquistError
from convint.gluing.glue import GluedState, glue
from convint.gluing.partition import TimePartition, build_chi
from convint.mikado import build_family, fourier_data
from convint.perturbation.assemble import assemble_next
from convint.perturbation.build import (
    PerturbationBundle,
    build_perturbation,
    nyquist_guard,
    perturbation_sample,
    truncation_summary,
)
from convint.perturbation.cutoffs import build_eta
from convint.perturbation.flows import build_flow_maps
from convint.perturbation.ledger import perturbation_ledger, step_ledger
from convint.perturbation.pumping import PumpingState, pump
from convint.schedule.params import IterationParams, frequency, level_values
from convint.schedule.profile import constant_profile
from convint.solver.flow_map import FlowMap
from convint.solver.fns import SolverConfig, fns_rate
from convint.solver.stability import shear_velocity
from convint.spectral.field import PeriodicField, Rank
from convint.spectral.grid import Grid
from convint.spectral.ops import divergence
from convint.state import ReynoldsTriple, TimeSeries


def gentle_drift(grid, times) -> ReynoldsTriple:
    base = shear_velocity(grid, 0.05, mode=1)
    n = len(times)
    return ReynoldsTriple(
        v=TimeSeries(times, [base * (1.0 + t) for t in times]),
        p=TimeSeries(times, [PeriodicField.zeros(grid)] * n),
        R=TimeSeries(times, [PeriodicField.zeros(grid, Rank.SYMTENSOR)] * n),
        nu=0.05,
        gamma=0.2,
    )


def decaying_shear(grid, times, stress=None, nu=0.05, gamma=0.2) -> ReynoldsTriple:
    """0.3 e^{-νt} sin(x₂) e₁ with its exact rate; solves the system when ``stress`` is None."""
    vs = [shear_velocity(grid, 0.3 * np.exp(-nu * t)) for t in times]
    n = len(times)
    if stress is None:
        stress = PeriodicField.zeros(grid, Rank.SYMTENSOR)
    stresses = [stress] * n
    return ReynoldsTriple(
        v=TimeSeries(times, vs, name="v"),
        p=TimeSeries(times, [PeriodicField.zeros(grid)] * n, name="p"),
        R=TimeSeries(times, stresses, name="R"),
        nu=nu,
        gamma=gamma,
        dvdt=TimeSeries(times, [fns_rate(v, nu, gamma) for v in vs], name="dvdt"),
    )


def identity_pumping(triple: ReynoldsTriple, rho: float) -> PumpingState:
    """One cutoff η ≡ 1, Φ = id and ρ_q ≡ rho on the triple's times."""
    grid, times = triple.grid, triple.times
    partition = TimePartition(1.0, float(times[-1] - times[0]))
    glued = GluedState(triple, partition, build_chi(partition), [], triple)
    eta = build_eta(partition)
    zero = PeriodicField.zeros(grid, Rank.VECTOR)
    flow = FlowMap(float(times[0]), TimeSeries(times, [zero] * len(times), name="psi"))
    eta_energy = np.array([eta.energy_sum(float(t), grid.coordinates()) for t in times])
    n = len(times)
    return PumpingState(glued, eta, [flow], np.ones(n), np.full(n, rho), eta_energy)


@pytest.fixture
def glued(grid16):
    return glue(gentle_drift(grid16, np.linspace(0.0, 1.5, 31)), IterationParams(), 0, SolverConfig(dt=0.025))


@pytest.fixture(scope="module")
def truncated():
    return fourier_data(build_family(quadrature_n=32), k_max=8, samples=20).truncated(2)


class TestEtaCutoffs:
    def test_verify(self, grid16):
        eta = build_eta(TimePartition(1.0, 5.0))
        checks = eta.verify(grid16, np.linspace(0.0, 5.0, 201))
        assert eta.count == 4
        assert checks["range"] == [0.0, 1.0]
        assert checks["overlap"] == 0.0
        assert checks["one_on_I"] < 1e-12
        assert checks["outside_support"] == 0.0
        assert checks["c0"] > 0.1

    def test_single_cutoff(self, grid16):
        eta = build_eta(TimePartition(1.0, 0.5))
        assert eta.count == 1
        np.testing.assert_array_equal(eta.field(0, 0.3, grid16).values, 1.0)
        assert eta.support(0) == (0.0, 0.5)

    def test_rate_matches_profile(self):
        eta = build_eta(TimePartition(1.0, 3.0))
        x1 = np.linspace(0.0, 2 * np.pi, 9)
        h = 1e-6
        for t in (1.9, 2.0, 2.1):
            numeric = (eta.profile(1, t + h, x1) - eta.profile(1, t - h, x1)) / (2 * h)
            np.testing.assert_allclose(eta.profile_rate(1, t, x1), numeric, atol=1e-4)

    def test_supports_cover_the_horizon(self):
        eta = build_eta(TimePartition(1.0, 5.0))
        for t in np.linspace(0.0, 5.0, 51):
            assert eta.active(float(t))


class TestFlowMapsAndPumping:
    def test_flow_maps_follow_the_cutoffs(self, glued):
        eta = build_eta(glued.partition)
        flows = build_flow_maps(glued, eta, SolverConfig(dt=0.025))
        assert len(flows) == eta.count == 2
        for i, flow in enumerate(flows):
            assert flow.anchor == glued.partition.start(i)
            assert flow.metadata["cutoff"] == i
            assert flow.metadata["max_deviation"] < 0.5

    def test_pump(self, glued):
        eta = build_eta(glued.partition)
        flows = build_flow_maps(glued, eta, SolverConfig(dt=0.025))
        state = pump(glued, constant_profile(30.0), IterationParams(), 0, eta, flows)
        assert np.all(state.rho_q > 0.0)
        assert not state.ledger.failures(hard_only=True)
        assert state.metadata["rho_normalization"] < 1e-10
        assert state.metadata["max_ball_distance"] < 0.5
        index = len(state.times) // 2
        active = [i for i in range(eta.count) if state.is_active(i, index)]
        total = sum(float(state.rho_i(i, index).mean()) for i in active)
        assert total == pytest.approx(state.rho_q[index], rel=1e-10)

    def test_pump_needs_an_energy_gap(self, glued):
        eta = build_eta(glued.partition)
        flows = build_flow_maps(glued, eta, SolverConfig(dt=0.025))
        with pytest.raises(EnergyGapError):
            pump(glued, constant_profile(0.0), IterationParams(), 0, eta, flows)


class TestNyquistGuard:
    def test_resolved(self):
        assert nyquist_guard(Grid(32), 4, 2, 0.1) == pytest.approx(8.8)

    def test_unresolved(self):
        with pytest.raises(NyquistError):
            nyquist_guard(Grid(16), 6, 1, 0.0)


class TestPerturbationBuild:
    times = np.linspace(0.0, 0.2, 3)

    def test_no_energy_gives_no_perturbation(self, grid32, truncated):
        params = IterationParams(a=2.5)
        state = identity_pumping(decaying_shear(grid32, self.times), 0.0)
        bundle = build_perturbation(state, truncated, params, 0)
        assert bundle.frequency == frequency(params, 1)
        for index in range(len(self.times)):
            assert bundle.w[index].sup_norm() < 1e-14
            assert bundle.w_o[index].sup_norm() < 1e-14
            assert bundle.w_c[index].sup_norm() < 1e-14

    def test_identity_flow_gives_the_mikado_field(self, grid32, truncated):
        rho = 0.04
        state = identity_pumping(decaying_shear(grid32, self.times), rho)
        n = 4
        sample = perturbation_sample(state, truncated, n, 1)
        amplitude = float(np.max(state.amplitude(0, 1)))
        assert amplitude == pytest.approx(np.sqrt(rho), rel=1e-12)
        expected = amplitude * truncated.reconstruct(np.eye(3), n * grid32.full_mesh())
        np.testing.assert_allclose(sample.w_o.values, expected, atol=1e-10)
        assert sample.w_o.sup_norm() > 0.0
        assert sample.w_c.sup_norm() < 1e-12
        np.testing.assert_allclose(sample.w.values, sample.w_o.values, atol=1e-10)
        assert divergence(sample.w_o).sup_norm() < 1e-9
        assert np.max(np.abs(sample.w_o.mean())) < 1e-12
        # ⨍ W ⊗ W = Id for the truncated family
        assert sample.w_o.mean_square() == pytest.approx(3.0 * rho, rel=1e-8)

    def test_curl_identity_with_a_varying_amplitude(self, grid32, truncated):
        rho = 0.04
        x1 = grid32.mesh()[0]
        values = np.zeros((3, 3) + grid32.shape)
        values[0, 1] = values[1, 0] = np.broadcast_to(0.1 * rho * np.sin(x1), grid32.shape)
        stress = PeriodicField(grid32, Rank.SYMTENSOR, values)
        state = identity_pumping(decaying_shear(grid32, self.times, stress=stress), rho)
        sample = perturbation_sample(state, truncated, 4, 0)
        assert sample.w_c.sup_norm() > 1e-6
        assert sample.det_defect < 1e-12
        assert sample.identity_residual < 1e-6
        np.testing.assert_allclose(
            sample.w.values, sample.w_o.values + sample.w_c.values, atol=1e-6
        )

    def test_perturbation_ledger(self, grid32, truncated):
        params = IterationParams(a=2.5)
        state = identity_pumping(decaying_shear(grid32, self.times), 0.04)
        bundle = build_perturbation(state, truncated, params, 0)
        ledger = perturbation_ledger(bundle, state, params, 0, truncated.M_bar)
        summary = truncation_summary(truncated)
        assert ledger.find("perturbation.truncation.cross_direction").passed
        assert ledger.find("perturbation.truncation.cross_direction").lhs < 1e-9
        assert ledger.find("perturbation.truncation.energy").passed
        retained = ledger.find("perturbation.truncation.retained_energy")
        assert retained.lhs == pytest.approx(summary["retained_energy"])
        assert retained.relation == ">="
        assert ledger.find("perturbation.curl_identity").passed
        assert not ledger.failures(hard_only=True)


class TestAssembly:
    times = np.linspace(0.0, 0.2, 3)

    def zero_step(self, grid):
        triple = decaying_shear(grid, self.times)
        state = identity_pumping(triple, 0.01)
        zero = PeriodicField.zeros(grid, Rank.VECTOR)
        series = TimeSeries(self.times, [zero] * len(self.times), name="w")
        bundle = PerturbationBundle(w=series, w_o=series, w_c=series, frequency=4, k_max=2)
        return triple, assemble_next(state.glued, state, bundle, 0)

    def test_zero_perturbation_keeps_the_stress_zero(self, grid16):
        triple, step = self.zero_step(grid16)
        for index in range(len(self.times)):
            assert step.triple.R[index].sup_norm() < 1e-12
            assert step.euler[index].sup_norm() < 1e-12
            assert step.dissipative[index].sup_norm() < 1e-14
            np.testing.assert_allclose(step.triple.v[index].values, triple.v[index].values)
            assert step.triple.p[index].sup_norm() < 1e-12
        assert step.triple.level == 1
        assert step.metadata["weak_residual"] < 1e-8

    def test_step_ledger(self, grid16):
        triple, step = self.zero_step(grid16)
        energy = 0.1
        report = step_ledger(triple, step, triple, constant_profile(energy), IterationParams(a=2.5), 0)
        ledger = report.ledger
        kinetic = step.triple.v.scalar(lambda f: f.mean_square())
        assert ledger.find("step.energy_window.upper").lhs == pytest.approx(energy - float(np.min(kinetic)))
        assert ledger.find("step.energy_window.lower").lhs == pytest.approx(energy - float(np.max(kinetic)))
        assert ledger.find("step.stress_inductive").lhs < 1e-12
        assert ledger.find("step.stress_inductive").passed
        assert not ledger.failures(hard_only=True)
        assert report.metadata["initial_digest"] == report.metadata["parent_initial_digest"]

    def test_step_ledger_reports_the_window_design(self, grid16):
        triple, step = self.zero_step(grid16)
        params = IterationParams(a=2.5)
        report = step_ledger(triple, step, triple, constant_profile(0.1), params, 0)
        design = report.ledger.find("step.energy_window.design_ratio")
        assert design.lhs == pytest.approx(0.5 * level_values(params, 1).lambda_q ** params.alpha)
        assert design.lhs < 1.0
