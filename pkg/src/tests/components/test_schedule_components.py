"""Iteration parameters, level schedule, energy profiles and starting triples."""

import math

import numpy as np
import pytest

from convint.errors import ParameterError, ProfileHypothesisError, ScheduleOverflowError
from convint.schedule.params import (
    TWO_PI,
    IterationParams,
    check_b_beta,
    delta,
    frequency,
    lambda_,
    level_values,
    max_feasible_level,
    schedule_ledger,
)
from convint.schedule.profile import (
    EnergyProfile,
    build_profile,
    check_hypotheses,
    constant_profile,
    cosine_profile,
    decreasing_profile,
    denormalize_profile,
    dissipation_gate,
    normalization_ledger,
    normalize_profile,
)
from convint.schedule.seed import mollification_scale, seed_from_euler_field, seed_viscosity, zero_seed
from convint.spectral.field import PeriodicField, Rank
from convint.state import TimeSeries


@pytest.fixture
def params():
    return IterationParams()


class TestParams:
    @pytest.mark.parametrize(
        "values",
        [{"a": 1.0}, {"b": 1.0}, {"beta": 0.34}, {"alpha": 0.0}, {"gamma": 0.4}, {"M": 0.0}, {"nu": 1.5}],
    )
    def test_inadmissible_values(self, values):
        with pytest.raises(ParameterError):
            IterationParams(**values)

    def test_b_beta_window(self, params):
        ok, margin = check_b_beta(params)
        assert ok
        assert margin == pytest.approx(4.0 / 3.0 - 1.25)
        assert not check_b_beta(IterationParams(b=1.4))[0]

    def test_default_viscosity(self, params):
        assert params.viscosity == pytest.approx(math.sqrt(delta(params, 1)))
        assert params.viscosity_torus == pytest.approx(params.viscosity * TWO_PI ** (2 * 0.2 - 1))
        assert IterationParams(nu=0.5).viscosity == 0.5

    def test_with_M_copies(self, params):
        other = params.with_M(3.0)
        assert other.M == 3.0 and params.M == 1.0
        assert other.to_dict()["a"] == params.a


class TestSchedule:
    def test_frequencies(self, params):
        assert frequency(params, 0) == 4
        assert frequency(params, 1) == math.ceil(4.0**1.25)
        assert lambda_(params, 0) == pytest.approx(TWO_PI * 4)

    def test_delta_decreases(self, params):
        deltas = [delta(params, q) for q in range(5)]
        assert all(a > b for a, b in zip(deltas, deltas[1:]))
        assert deltas[0] == pytest.approx((TWO_PI * 4) ** -0.5)

    def test_negative_level(self, params):
        with pytest.raises(ParameterError):
            frequency(params, -1)

    def test_overflow_names_largest_level(self, params):
        top = max_feasible_level(params)
        frequency(params, top)
        with pytest.raises(ScheduleOverflowError) as info:
            frequency(params, top + 1)
        assert info.value.max_feasible_q == top

    def test_level_values_ordering(self, params):
        lv = level_values(params, 0)
        assert lv.lambda_q ** -1.5 <= lv.ell <= 1.0 / lv.lambda_q
        assert lv.tau_torus == pytest.approx(TWO_PI * lv.tau_q)
        assert lv.to_dict()["frequency"] == 4

    def test_schedule_ledger_passes_for_defaults(self, params):
        ledger = schedule_ledger(params, 0)
        assert ledger.summary()["soft_failures"] == 0
        assert ledger.find("schedule.lambda").lhs == pytest.approx(TWO_PI * 4)


class TestProfiles:
    def test_constant(self):
        profile = constant_profile(0.75)
        assert profile(0.3) == pytest.approx(0.75)
        assert profile.K == 0.0
        check_hypotheses(profile)

    @pytest.mark.parametrize(
        "profile,bound",
        [
            (constant_profile(0.3), "lower_bound"),
            (constant_profile(1.2), "upper_bound"),
            (cosine_profile(K=0.1), "derivative_bound"),
        ],
    )
    def test_hypotheses_name_the_bound(self, profile, bound):
        with pytest.raises(ProfileHypothesisError) as info:
            check_hypotheses(profile)
        assert info.value.bound == bound

    def test_decreasing_profile(self):
        profile = decreasing_profile(2.0)
        check_hypotheses(profile)
        assert profile.max_derivative() <= 1e-3
        assert profile.metadata["dissipation_K"] == 2.0
        with pytest.raises(ParameterError):
            decreasing_profile(1.0)

    def test_uniform_grid_required(self):
        t = np.array([0.0, 0.1, 0.3, 0.4])
        with pytest.raises(ParameterError):
            EnergyProfile(t, np.ones(4), 0.0)

    def test_normalization_roundtrip(self, params):
        original = cosine_profile(K=1.0)
        rescaled, mu = normalize_profile(original, params)
        assert mu == pytest.approx(math.sqrt(delta(params, 1)))
        assert normalization_ledger(rescaled, original.K, params).summary()["soft_failures"] == 0
        back = denormalize_profile(rescaled, mu)
        np.testing.assert_allclose(back.values, original.values, rtol=1e-12)
        np.testing.assert_allclose(back.times, original.times, rtol=1e-12)

    def test_build_profile(self):
        assert build_profile({"kind": "cosine", "horizon": 0.5}).end == pytest.approx(0.5)
        samples = build_profile({"kind": "samples", "times": [0, 1, 2, 3], "values": [1, 0.9, 0.8, 0.7]})
        assert samples.K == pytest.approx(0.1)
        with pytest.raises(ParameterError):
            build_profile({"kind": "sawtooth"})

    def test_dissipation_gate(self):
        assert dissipation_gate(10.0)["passed"]
        assert not dissipation_gate(1.5)["passed"]
        assert dissipation_gate(0.0)["max_passing_constant"] is None


class TestSeeds:
    def test_zero_seed(self, grid16, params):
        seed = zero_seed(grid16, np.linspace(0, 1, 5), params)
        assert seed.provenance == "zero_seed"
        assert seed.triple.v[3].sup_norm() == 0.0
        assert seed.triple.nu == pytest.approx(params.viscosity_torus)

    def test_scales(self, params):
        assert mollification_scale(params, 0) == pytest.approx(4.0 ** (-(1.25**2)))
        assert seed_viscosity(params, 0, 0.3) == pytest.approx(mollification_scale(params, 0) ** 1.3)

    def test_vanishing_euler_input_degenerates(self, grid16, params):
        times = np.linspace(0.0, 1.0, 11)
        zero = PeriodicField.zeros(grid16, Rank.VECTOR)
        seed = seed_from_euler_field(TimeSeries(times, [zero] * 11), params, 0)
        assert seed.provenance == "zero_seed"
        assert seed.metadata["degenerate_euler_input"]

    def test_rejects_compressible_input(self, grid16, params):
        times = np.linspace(0.0, 1.0, 11)
        u = PeriodicField.from_function(grid16, Rank.VECTOR, lambda x, y, z: [np.sin(x), 0 * y, 0 * z])
        with pytest.raises(ParameterError):
            seed_from_euler_field(TimeSeries(times, [u] * 11), params, 0)

    def test_rejects_small_beta_prime(self, grid16, params):
        times = np.linspace(0.0, 1.0, 11)
        zero = PeriodicField.zeros(grid16, Rank.VECTOR)
        with pytest.raises(ParameterError):
            seed_from_euler_field(TimeSeries(times, [zero] * 11), params, 0, beta_prime=0.2)

    def test_shear_seed(self, grid16, params):
        times = np.linspace(0.0, 1.0, 11)
        shear = PeriodicField.from_function(grid16, Rank.VECTOR, lambda x, y, z: [np.sin(y), 0 * x, 0 * z])
        seed = seed_from_euler_field(TimeSeries(times, [shear] * 11), params, 0)
        assert seed.provenance == "mollified_euler_seed"
        assert seed.triple.nu > 0.0
        assert seed.triple.R[5].trace().sup_norm() < 1e-10
        assert np.all(seed.profile.values >= seed.metadata["energy_floor"])
        assert seed.describe()["level"] == 0
        assert len(seed.ledger) > 0
