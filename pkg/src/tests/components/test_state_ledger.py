"""Time series, the Reynolds triple residual, ledgers and tolerances."""

import math

import numpy as np
import pytest

from convint.errors import FieldShapeError, ParameterError, StageError, StressRangeError
from convint.ledger import Ledger, ledger_indices
from convint.operators.multipliers import pressure_from_velocity
from convint.spectral.field import PeriodicField, Rank
from convint.state import (
    ReynoldsTriple,
    TimeSeries,
    field_digest,
    random_test_fields,
    stencil_offsets,
    stencil_weights,
    zero_triple,
)
from convint.tolerances import Tolerances, get_tolerances


def decaying_shear(grid, nu, times):
    """Exact solution v = e^{−νt} (sin y, 0, 0) of the Navier–Stokes equations with γ = 1."""
    shape = PeriodicField.from_function(grid, Rank.VECTOR, lambda x, y, z: [np.sin(y), 0 * x, 0 * z])
    return TimeSeries(times, [shape * math.exp(-nu * t) for t in times], name="v")


class TestTimeSeries:
    def test_stencil_weights_first_derivative(self):
        np.testing.assert_allclose(stencil_weights([-1, 0, 1]), [-0.5, 0.0, 0.5], atol=1e-14)

    def test_stencil_offsets_shift_at_edges(self):
        assert stencil_offsets(0, 10) == [0, 1, 2, 3, 4]
        assert stencil_offsets(5, 10) == [-2, -1, 0, 1, 2]
        assert stencil_offsets(9, 10) == [-4, -3, -2, -1, 0]

    def test_times_must_increase(self, grid16):
        zero = PeriodicField.zeros(grid16)
        with pytest.raises(ParameterError):
            TimeSeries([0.0, 0.0], [zero, zero])

    def test_field_count_must_match(self, grid16):
        with pytest.raises(FieldShapeError):
            TimeSeries([0.0, 1.0], [PeriodicField.zeros(grid16)])

    def test_lazy_series_evaluates_on_demand(self, grid16):
        calls = []

        def factory(i):
            calls.append(i)
            return PeriodicField.constant(grid16, float(i))

        series = TimeSeries.lazy(np.arange(10.0), factory)
        assert series.is_lazy
        assert series[3].values[0, 0, 0] == 3.0
        series[3]
        assert calls == [3]
        assert series[-1].values[0, 0, 0] == 9.0
        with pytest.raises(IndexError):
            series[10]

    def test_time_derivative_is_fourth_order(self, grid16):
        times = np.linspace(0.0, 1.0, 21)
        series = decaying_shear(grid16, 0.5, times)
        derivative = series.time_derivative(10)
        np.testing.assert_allclose(derivative.values, -0.5 * series[10].values, atol=1e-6)

    def test_restrict_and_index(self, grid16):
        series = decaying_shear(grid16, 1.0, np.linspace(0.0, 1.0, 11))
        part = series.restrict(0.2, 0.5)
        assert len(part) == 4
        assert part.index_of(0.3) == 1
        with pytest.raises(KeyError):
            part.index_of(0.35)


class TestReynoldsTriple:
    def test_exact_solution_has_small_residual(self, grid16):
        nu = 0.3
        times = np.linspace(0.0, 0.5, 21)
        v = decaying_shear(grid16, nu, times)
        p = v.map(pressure_from_velocity, "p")
        R = TimeSeries(times, [PeriodicField.zeros(grid16, Rank.SYMTENSOR)] * len(times))
        triple = ReynoldsTriple(v, p, R, nu=nu, gamma=1.0)
        assert triple.strong_residual(10)["relative"] < 1e-6
        assert triple.divergence_norm(10) < 1e-12
        assert triple.weak_residual(10, random_test_fields(grid16, 3)) < 1e-6

    def test_wrong_viscosity_is_detected(self, grid16):
        times = np.linspace(0.0, 0.5, 21)
        v = decaying_shear(grid16, 0.3, times)
        zero_p = TimeSeries(times, [PeriodicField.zeros(grid16)] * len(times))
        R = TimeSeries(times, [PeriodicField.zeros(grid16, Rank.SYMTENSOR)] * len(times))
        triple = ReynoldsTriple(v, zero_p, R, nu=0.6, gamma=1.0)
        assert triple.strong_residual(10)["relative"] > 1e-2

    def test_zero_triple(self, grid16):
        triple = zero_triple(grid16, [0.0, 1.0, 2.0], nu=0.1, gamma=0.2)
        assert triple.trace_norm(1) == 0.0
        assert triple.strong_residual(1)["absolute"] == 0.0
        assert triple.initial_digest() == field_digest(PeriodicField.zeros(grid16, Rank.VECTOR))

    def test_test_fields_are_seeded(self, grid16):
        a = random_test_fields(grid16, 2, seed=5)
        b = random_test_fields(grid16, 2, seed=5)
        assert [field_digest(f) for f in a] == [field_digest(f) for f in b]


class TestLedger:
    def test_relations(self):
        ledger = Ledger(level=2, stage="demo")
        assert ledger.check_le("a", 1.0, 2.0).passed
        assert not ledger.check_ge("b", 1.0, 2.0, hard=True).passed
        line = ledger.check_lesssim("c", 3.0, 2.0)
        assert line.constant == pytest.approx(1.5) and line.passed
        assert ledger.record("d", 7.0).relation == "info"
        assert ledger.summary() == {"total": 4, "passed": 3, "soft_failures": 0, "hard_failures": 1}
        assert [line.identifier for line in ledger.failures(hard_only=True)] == ["b"]
        assert ledger.find("a").level == 2

    def test_lesssim_cap_and_zero_rhs(self):
        ledger = Ledger()
        assert not ledger.check_lesssim("big", 1e3, 1.0, cap=10.0).passed
        assert ledger.check_lesssim("zero", 0.0, 0.0).constant == 0.0
        assert math.isinf(ledger.check_lesssim("inf", 1.0, 0.0).constant)

    def test_range_and_slack(self):
        ledger = Ledger()
        ledger.check_range("r", 0.5, 0.0, 1.0)
        assert len(ledger) == 2 and not ledger.failures()
        assert ledger.check_le("s", 1.0 + 1e-13, 1.0, slack=1e-12).passed

    def test_serialization_cleans_infinities(self):
        ledger = Ledger()
        ledger.check_lesssim("inf", 1.0, 0.0)
        assert ledger.to_list()[0]["constant"] == "inf"

    def test_find_missing(self):
        with pytest.raises(KeyError):
            Ledger().find("nothing")

    def test_indices(self):
        assert ledger_indices(5) == [0, 1, 2, 3, 4]
        picked = ledger_indices(100, 9)
        assert picked[0] == 0 and picked[-1] == 99 and len(picked) == 9


class TestTolerancesAndErrors:
    def test_environment_override(self, monkeypatch):
        monkeypatch.setenv("CONVINT_TOL_RESIDUAL_RELATIVE", "0.5")
        assert Tolerances().for_residual() == 0.5

    def test_override_known_and_unknown(self):
        tol = get_tolerances()
        tol.override({"energy_slack": 1e-9})
        assert tol.as_dict()["energy_slack"] == 1e-9
        with pytest.raises(KeyError):
            tol.override({"no_such_tolerance": 1.0})

    def test_ball_radius(self):
        assert get_tolerances().for_ball() == pytest.approx(0.5 + get_tolerances().ball_slack)

    def test_stage_error_keeps_cause(self):
        cause = StressRangeError(1, 0.25, (0, 1, 2), 0.6)
        error = StageError(3, "pump", cause)
        assert error.level == 3 and error.stage == "pump" and error.cause is cause
        assert "0.6000" in str(cause)
