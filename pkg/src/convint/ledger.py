#!/usr/bin/env python3
"""Measured inequality ledger.

Every estimate the iteration relies on is evaluated numerically and recorded as
a ``LedgerLine`` carrying both sides, the relation and the margin. Lines with
``relation == "lesssim"`` compare against an unspecified constant: they record
the fitted constant ``lhs / rhs`` and pass when it stays below the configured
cap.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, Optional

from .logger import get_logger
from .tolerances import get_tolerances

logger = get_logger(__name__)

RELATIONS = ("<=", ">=", "lesssim", "info")


@dataclass(frozen=True)
class LedgerLine:
    """One evaluated inequality."""

    identifier: str
    description: str
    lhs: float
    rhs: float
    relation: str
    passed: bool
    margin: float
    hard: bool = False
    constant: Optional[float] = None
    level: Optional[int] = None
    stage: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Plain mapping for reports."""
        return {k: _clean(v) for k, v in asdict(self).items()}


def _clean(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


@dataclass
class Ledger:
    """Ordered collection of ledger lines for one stage or level."""

    level: Optional[int] = None
    stage: Optional[str] = None
    lines: List[LedgerLine] = field(default_factory=list)

    def __iter__(self) -> Iterator[LedgerLine]:
        return iter(self.lines)

    def __len__(self) -> int:
        return len(self.lines)

    def _add(self, line: LedgerLine) -> LedgerLine:
        self.lines.append(line)
        if not line.passed:
            kind = "hard" if line.hard else "soft"
            logger.warning(
                f"{kind} ledger failure {line.identifier}: "
                f"{line.lhs:.4e} {line.relation} {line.rhs:.4e}"
            )
        return line

    def check_le(
        self,
        identifier: str,
        lhs: float,
        rhs: float,
        description: str = "",
        hard: bool = False,
        slack: float = 0.0,
    ) -> LedgerLine:
        """Record ``lhs <= rhs`` (with optional absolute slack)."""
        lhs, rhs = float(lhs), float(rhs)
        passed = bool(lhs <= rhs + slack)
        return self._add(
            LedgerLine(
                identifier, description, lhs, rhs, "<=", passed, rhs - lhs, hard,
                level=self.level, stage=self.stage,
            )
        )

    def check_ge(
        self,
        identifier: str,
        lhs: float,
        rhs: float,
        description: str = "",
        hard: bool = False,
    ) -> LedgerLine:
        """Record ``lhs >= rhs``."""
        lhs, rhs = float(lhs), float(rhs)
        return self._add(
            LedgerLine(
                identifier, description, lhs, rhs, ">=", bool(lhs >= rhs), lhs - rhs,
                hard, level=self.level, stage=self.stage,
            )
        )

    def check_range(
        self,
        identifier: str,
        value: float,
        lower: float,
        upper: float,
        description: str = "",
    ) -> None:
        """Record ``lower <= value <= upper`` as two lines."""
        self.check_ge(f"{identifier}.lower", value, lower, description)
        self.check_le(f"{identifier}.upper", value, upper, description)

    def check_lesssim(
        self,
        identifier: str,
        lhs: float,
        rhs: float,
        description: str = "",
        cap: Optional[float] = None,
    ) -> LedgerLine:
        """Record ``lhs ≲ rhs`` with the fitted constant ``lhs / rhs``."""
        lhs, rhs = float(lhs), float(rhs)
        cap = get_tolerances().for_implicit_constant() if cap is None else cap
        if rhs > 0:
            constant = lhs / rhs
        else:
            constant = 0.0 if lhs == 0 else math.inf
        passed = bool(constant <= cap)
        return self._add(
            LedgerLine(
                identifier, description, lhs, rhs, "lesssim", passed, cap - constant,
                constant=constant, level=self.level, stage=self.stage,
            )
        )

    def record(self, identifier: str, value: float, description: str = "") -> LedgerLine:
        """Record a measured value with no inequality attached."""
        value = float(value)
        return self._add(
            LedgerLine(
                identifier, description, value, value, "info", True, 0.0,
                level=self.level, stage=self.stage,
            )
        )

    def extend(self, other: Iterable[LedgerLine]) -> None:
        """Append lines from another ledger."""
        self.lines.extend(other)

    def failures(self, hard_only: bool = False) -> List[LedgerLine]:
        """Lines that did not pass."""
        return [
            line for line in self.lines if not line.passed and (line.hard or not hard_only)
        ]

    def find(self, identifier: str) -> LedgerLine:
        """Get the most recent line with an identifier.

        Raises:
            KeyError: If no line carries the identifier
        """
        for line in reversed(self.lines):
            if line.identifier == identifier:
                return line
        raise KeyError(f"No ledger line '{identifier}'")

    def summary(self) -> Dict[str, int]:
        """Counts of total, passed, soft and hard failures."""
        soft = sum(1 for line in self.lines if not line.passed and not line.hard)
        hard = sum(1 for line in self.lines if not line.passed and line.hard)
        return {
            "total": len(self.lines),
            "passed": len(self.lines) - soft - hard,
            "soft_failures": soft,
            "hard_failures": hard,
        }

    def to_list(self) -> List[Dict[str, Any]]:
        """Serializable list of lines."""
        return [line.to_dict() for line in self.lines]


def ledger_indices(count: int, limit: int = 9) -> List[int]:
    """At most ``limit`` evenly spread sample indices, always including both ends."""
    if count <= limit:
        return list(range(count))
    return sorted({int(round(x)) for x in [j * (count - 1) / (limit - 1) for j in range(limit)]})
