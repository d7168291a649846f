#!/usr/bin/env python3
"""Run configuration.

A run file is YAML (or JSON) with the sections ``params``, ``grid``, ``solver``,
``profile``, ``scenario``, ``mikado``, ``perturbation``, ``run``,
``concurrency``, ``tolerances`` and ``stages`` (per-stage settings such as
``enabled``). It is deep-merged over ``DEFAULTS``, then
command-line overrides are applied, then every value is validated.
"""

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from ..errors import ParameterError
from ..ledger import Ledger
from ..logger import get_logger
from ..schedule.params import TWO_PI, IterationParams, check_b_beta, delta, frequency, level_values
from ..schedule.profile import EnergyProfile, build_profile, normalization_ledger, normalize_profile
from ..solver.fns import SolverConfig
from ..spectral.grid import Grid
from ..utils import ConfigLoader, deep_merge

logger = get_logger(__name__)

SCENARIOS = ("zero", "euler_seed")
FIELD_KINDS = ("zero", "random", "shear")

DEFAULTS: Dict[str, Any] = {
    "params": {"a": 4.0, "b": 1.25, "beta": 0.25, "alpha": 0.01, "gamma": 0.2, "nu": None, "M": None},
    "grid": {"n": 64, "dealias_fraction": 2.0 / 3.0},
    "solver": {"dt": 0.02, "cfl": 0.5, "enforce_horizon": False, "horizon_constant": 0.1},
    "profile": {"kind": "constant", "value": "delta_1"},
    "scenario": {"kind": "zero", "level": 0, "field": {"kind": "zero"}},
    "mikado": {"quadrature_n": 64, "k_max": 16, "samples": 100, "seed": 0},
    "perturbation": {"k_max": 3, "eta": {}},
    "run": {"q_max": 0, "horizon": 0.25, "samples_per_tau": 8, "out": "runs/default", "seed": 0, "test_fields": 20},
    "concurrency": {},
    "tolerances": {},
    "stages": {},
}

_DELTA_VALUE = re.compile(r"^delta_(\d+)$")


def _profile_value(value: Any, params: IterationParams) -> float:  # type: ignore[ANN401]
    """Numbers pass through; ``"delta_<q>"`` becomes δ_q."""
    if isinstance(value, str):
        match = _DELTA_VALUE.match(value.strip())
        if not match:
            raise ParameterError(f"profile value must be a number or 'delta_<q>', got '{value}'")
        return delta(params, int(match.group(1)))
    return float(value)


@dataclass
class RunConfig:
    """Everything a run needs, validated."""

    params: IterationParams
    grid: Grid
    solver: SolverConfig
    profile_spec: Dict[str, Any]
    scenario: Dict[str, Any]
    mikado: Dict[str, Any]
    perturbation: Dict[str, Any]
    q_max: int
    horizon: float
    samples_per_tau: int
    out: Path
    seed: int = 0
    test_fields: int = 20
    explicit_M: bool = False
    concurrency: Dict[str, Any] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def start_level(self) -> int:
        return int(self.scenario.get("level", 0)) if self.scenario["kind"] == "euler_seed" else 0

    @property
    def levels(self) -> range:
        return range(self.start_level, self.start_level + self.q_max + 1)

    def times(self) -> np.ndarray:
        """Shared torus time grid resolving τ of the finest level."""
        finest = level_values(self.params, self.levels[-1]).tau_torus
        span = TWO_PI * self.horizon
        count = max(2, int(math.ceil(span * self.samples_per_tau / finest - 1e-9)))
        return np.linspace(0.0, span, count + 1)

    def build_profile(self) -> Tuple[EnergyProfile, Optional[Ledger]]:
        """The energy profile e on [0, horizon] (source time), with its normalization ledger if normalized."""
        spec = dict(self.profile_spec)
        spec.setdefault("horizon", self.horizon)
        normalize = bool(spec.pop("normalize", False))
        if "value" in spec:
            spec["value"] = _profile_value(spec["value"], self.params)
        profile = build_profile(spec)
        ledger = None
        if normalize:
            original_K = profile.K
            profile, _ = normalize_profile(profile, self.params)
            ledger = normalization_ledger(profile, original_K, self.params)
        if profile.end < self.horizon - 1e-12:
            raise ParameterError(f"profile ends at {profile.end:.6g} before the run horizon {self.horizon}")
        return profile, ledger

    def to_dict(self) -> Dict[str, Any]:
        """Effective configuration, for reports and checkpoints."""
        return deep_merge(self.raw, {"run": {"out": str(self.out)}})

    @classmethod
    def from_mapping(
        cls, values: Mapping[str, Any], overrides: Optional[Mapping[str, Any]] = None
    ) -> "RunConfig":
        """Merge over the defaults, apply overrides, validate.

        Raises:
            ParameterError: If any value or schedule predicate is not admissible
        """
        merged = deep_merge(DEFAULTS, values)
        if overrides:
            merged = deep_merge(merged, {k: v for k, v in overrides.items() if v is not None})
        unknown = set(merged) - set(DEFAULTS)
        if unknown:
            raise ParameterError(f"unknown config sections: {sorted(unknown)}")

        raw_params = dict(merged["params"])
        M = raw_params.pop("M", None)
        params = IterationParams(**raw_params, M=float(M) if M is not None else 1.0)
        grid = Grid(int(merged["grid"]["n"]), float(merged["grid"].get("dealias_fraction", 2.0 / 3.0)))
        solver = SolverConfig.from_mapping({**merged["solver"], "alpha": params.alpha})

        scenario = dict(merged["scenario"])
        if scenario.get("kind") not in SCENARIOS:
            raise ParameterError(f"unknown scenario '{scenario.get('kind')}' (known: {SCENARIOS})")
        field_kind = scenario.get("field", {}).get("kind", "zero")
        if field_kind not in FIELD_KINDS:
            raise ParameterError(f"unknown seed field '{field_kind}' (known: {FIELD_KINDS})")

        run = merged["run"]
        q_max = int(run["q_max"])
        if q_max < 0:
            raise ParameterError(f"q_max must be nonnegative, got {q_max}")
        horizon = float(run["horizon"])
        if horizon <= 0.0:
            raise ParameterError(f"run horizon must be positive, got {horizon}")
        samples = int(run["samples_per_tau"])
        if samples < 2:
            raise ParameterError("samples_per_tau must be at least 2")

        config = cls(
            params=params,
            grid=grid,
            solver=solver,
            profile_spec=dict(merged["profile"]),
            scenario=scenario,
            mikado=dict(merged["mikado"]),
            perturbation=dict(merged["perturbation"]),
            q_max=q_max,
            horizon=horizon,
            samples_per_tau=samples,
            out=Path(run["out"]),
            seed=int(run.get("seed", 0)),
            test_fields=int(run.get("test_fields", 20)),
            concurrency=dict(merged["concurrency"]),
            tolerances={k: float(v) for k, v in merged["tolerances"].items()},
            explicit_M=M is not None,
            raw=merged,
        )
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: Optional[Path], overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        values = ConfigLoader.load_config(path) if path is not None else {}
        if path is not None and not values:
            logger.warning(f"config {path} is empty or unreadable; using defaults")
        return cls.from_mapping(values, overrides)

    def validate(self) -> None:
        """Schedule predicates for every level the run touches.

        Raises:
            ParameterError: If b violates 1 < b < min{(1−β)/(2β), 4/3}
            ScheduleOverflowError: If a level of the run overflows a^(b^q)
        """
        ok, margin = check_b_beta(self.params)
        if not ok:
            raise ParameterError(f"b={self.params.b} violates 1 < b < min((1-beta)/(2 beta), 4/3) (margin {margin:.3g})")
        for q in self.levels:
            frequency(self.params, q + 2)
            logger.info(f"level {q}: {level_values(self.params, q).to_dict()}")
        if int(self.perturbation.get("k_max", 3)) < 1:
            raise ParameterError("perturbation k_max must be at least 1")
        if not self.explicit_M:
            logger.debug("M will be computed from the Mikado family")
