#!/usr/bin/env python3
"""PeriodicField: the carrier for every velocity, pressure and stress on T³.

Values are stored at the collocation nodes with the component axes first,
``component_shape + (n, n, n)``. Fourier modes are computed on demand with the
forward-normalized FFT, so the k = 0 mode is the mean.
"""

import os
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Callable, Dict, Mapping, Sequence, Tuple, Union

import numpy as np
import scipy.fft
from numpy.typing import NDArray

from ..errors import FieldShapeError
from .grid import Grid

SPATIAL_AXES = (-3, -2, -1)
FFT_WORKERS = int(os.environ.get("CONVINT_FFT_WORKERS", "-1"))

Array = NDArray[Any]


class Rank(Enum):
    """Tensor rank of a field."""

    SCALAR = "scalar"
    VECTOR = "vector3"
    SYMTENSOR = "symtensor3"
    TENSOR = "tensor3"

    @property
    def component_shape(self) -> Tuple[int, ...]:
        return {
            Rank.SCALAR: (),
            Rank.VECTOR: (3,),
            Rank.SYMTENSOR: (3, 3),
            Rank.TENSOR: (3, 3),
        }[self]

    @property
    def code(self) -> int:
        return list(Rank).index(self)

    @classmethod
    def from_code(cls, code: int) -> "Rank":
        return list(cls)[code]


def forward(values: Array) -> Array:
    """Forward-normalized FFT over the spatial axes."""
    return scipy.fft.fftn(values, axes=SPATIAL_AXES, norm="forward", workers=FFT_WORKERS)


def inverse(modes: Array) -> Array:
    """Inverse of ``forward``."""
    return scipy.fft.ifftn(modes, axes=SPATIAL_AXES, norm="forward", workers=FFT_WORKERS)


@dataclass(frozen=True, eq=False)
class PeriodicField:
    """Immutable field on the grid."""

    grid: Grid
    rank: Rank
    values: Array
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        expected = self.rank.component_shape + self.grid.shape
        if self.values.shape != expected:
            raise FieldShapeError(
                f"{self.rank.value} field on {self.grid.n}³ grid needs shape "
                f"{expected}, got {self.values.shape}"
            )
        if self.rank is Rank.SYMTENSOR:
            scale = float(np.max(np.abs(self.values))) if self.values.size else 0.0
            asym = float(np.max(np.abs(self.values - np.swapaxes(self.values, 0, 1))))
            if asym > 1e-10 * max(scale, 1.0):
                raise FieldShapeError(f"symtensor3 field is not symmetric ({asym:.2e})")
        self.values.setflags(write=False)

    # construction ---------------------------------------------------------

    @classmethod
    def zeros(cls, grid: Grid, rank: Rank = Rank.SCALAR) -> "PeriodicField":
        return cls(grid, rank, np.zeros(rank.component_shape + grid.shape))

    @classmethod
    def constant(
        cls, grid: Grid, value: Union[float, Sequence[float], Array]
    ) -> "PeriodicField":
        arr = np.asarray(value, dtype=np.float64)
        rank = {0: Rank.SCALAR, 1: Rank.VECTOR, 2: Rank.TENSOR}[arr.ndim]
        if rank is Rank.TENSOR and np.allclose(arr, arr.T):
            rank = Rank.SYMTENSOR
        values = np.broadcast_to(
            arr.reshape(arr.shape + (1, 1, 1)), arr.shape + grid.shape
        ).copy()
        return cls(grid, rank, values)

    @classmethod
    def from_function(
        cls,
        grid: Grid,
        rank: Rank,
        fn: Callable[[Array, Array, Array], Any],
    ) -> "PeriodicField":
        """Sample ``fn(x1, x2, x3)`` at the nodes.

        For vector and tensor ranks ``fn`` returns nested sequences of
        components; each entry may be a scalar or a broadcastable array.
        """
        x1, x2, x3 = grid.mesh()
        values = _materialize(fn(x1, x2, x3), len(rank.component_shape), grid.shape)
        return cls(grid, rank, values.astype(np.result_type(values, np.float64)))

    @classmethod
    def from_modes(
        cls,
        grid: Grid,
        rank: Rank,
        modes: Array,
        real: bool = True,
        metadata: Mapping[str, Any] | None = None,
    ) -> "PeriodicField":
        """Build a field from Fourier coefficients (inverse transform)."""
        values = inverse(modes)
        if real:
            values = np.ascontiguousarray(values.real)
        return cls(grid, rank, values, dict(metadata or {}))

    @classmethod
    def stack(cls, components: Sequence["PeriodicField"]) -> "PeriodicField":
        """Stack three scalar fields into a vector field."""
        if len(components) != 3 or any(c.rank is not Rank.SCALAR for c in components):
            raise FieldShapeError("stack needs three scalar fields")
        return cls(components[0].grid, Rank.VECTOR, np.stack([c.values for c in components]))

    # spectral view --------------------------------------------------------

    @cached_property
    def modes(self) -> Array:
        """Forward-normalized Fourier coefficients."""
        modes = forward(self.values)
        modes.setflags(write=False)
        return modes

    @property
    def reality_flag(self) -> bool:
        return not np.iscomplexobj(self.values)

    # algebra --------------------------------------------------------------

    def _coerce(self, other: Any) -> Any:
        if isinstance(other, PeriodicField):
            if other.grid != self.grid:
                raise FieldShapeError("fields live on different grids")
            if other.values.shape != self.values.shape:
                raise FieldShapeError(f"rank mismatch {self.rank.value} vs {other.rank.value}")
            return other.values
        return other

    def _result_rank(self, other: Any) -> Rank:
        if (
            isinstance(other, PeriodicField)
            and {self.rank, other.rank} == {Rank.SYMTENSOR, Rank.TENSOR}
        ):
            return Rank.TENSOR
        return self.rank

    def with_values(self, values: Array, rank: Rank | None = None) -> "PeriodicField":
        return PeriodicField(self.grid, rank or self.rank, values)

    def with_metadata(self, **entries: Any) -> "PeriodicField":
        merged: Dict[str, Any] = dict(self.metadata)
        merged.update(entries)
        return PeriodicField(self.grid, self.rank, self.values, merged)

    def __add__(self, other: Any) -> "PeriodicField":
        return self.with_values(self.values + self._coerce(other), self._result_rank(other))

    def __radd__(self, other: Any) -> "PeriodicField":
        return self.__add__(other)

    def __sub__(self, other: Any) -> "PeriodicField":
        return self.with_values(self.values - self._coerce(other), self._result_rank(other))

    def __neg__(self) -> "PeriodicField":
        return self.with_values(-self.values)

    def __mul__(self, other: Any) -> "PeriodicField":
        if isinstance(other, PeriodicField):
            if other.rank is not Rank.SCALAR:
                raise FieldShapeError("only scalar fields multiply pointwise")
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    def __rmul__(self, other: Any) -> "PeriodicField":
        return self.__mul__(other)

    def __truediv__(self, other: float) -> "PeriodicField":
        return self.with_values(self.values / other)

    # reductions -----------------------------------------------------------

    def component(self, *index: int) -> "PeriodicField":
        return PeriodicField(self.grid, Rank.SCALAR, np.ascontiguousarray(self.values[index]))

    def transpose(self) -> "PeriodicField":
        if self.rank not in (Rank.TENSOR, Rank.SYMTENSOR):
            raise FieldShapeError("transpose needs a tensor field")
        return self.with_values(np.ascontiguousarray(np.swapaxes(self.values, 0, 1)))

    def trace(self) -> "PeriodicField":
        if self.rank not in (Rank.TENSOR, Rank.SYMTENSOR):
            raise FieldShapeError("trace needs a tensor field")
        return PeriodicField(self.grid, Rank.SCALAR, np.trace(self.values, axis1=0, axis2=1))

    def mean(self) -> Array:
        """Spatial average of each component."""
        return np.mean(self.values, axis=SPATIAL_AXES)

    def pointwise_norm(self) -> Array:
        """Euclidean (Frobenius) norm over components at each node."""
        if self.rank is Rank.SCALAR:
            return np.abs(self.values)
        flat = self.values.reshape((-1,) + self.grid.shape)
        return np.sqrt(np.sum(np.abs(flat) ** 2, axis=0))

    def sup_norm(self) -> float:
        return float(np.max(self.pointwise_norm()))

    def mean_square(self) -> float:
        """⨍ |f|² over the torus."""
        return float(np.mean(self.pointwise_norm() ** 2))

    def l2_norm(self) -> float:
        """Root mean square, equal to the ℓ² norm of the modes."""
        return float(np.sqrt(self.mean_square()))

    def mode_l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.modes) ** 2)))


def _materialize(raw: Any, depth: int, shape: Tuple[int, ...]) -> Array:
    if depth == 0:
        return np.array(np.broadcast_to(np.asarray(raw), shape))
    return np.stack([_materialize(c, depth - 1, shape) for c in raw])
