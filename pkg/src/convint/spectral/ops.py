#!/usr/bin/env python3
"""Spectral differentiation, dealiasing and pointwise products.

Derivatives multiply mode k by (ik)^θ. For odd total order the Nyquist modes
are zeroed, since ik is not conjugate-compatible there and the result would
stop being real.
"""

from typing import Any, Iterator, Sequence, Tuple

import numpy as np

from ..errors import FieldShapeError
from .field import Array, PeriodicField, Rank, inverse
from .grid import Grid

MultiIndex = Tuple[int, int, int]


def to_modes(field: PeriodicField) -> Array:
    """Forward transform (values → forward-normalized modes)."""
    return field.modes


def to_values(
    grid: Grid, rank: Rank, modes: Array, real: bool = True
) -> PeriodicField:
    """Inverse transform (modes → collocation values)."""
    return PeriodicField.from_modes(grid, rank, modes, real=real)


def roundtrip_error(field: PeriodicField) -> float:
    """Relative sup error of values → modes → values."""
    back = inverse(field.modes)
    if field.reality_flag:
        back = back.real
    scale = max(float(np.max(np.abs(field.values))), 1e-300)
    return float(np.max(np.abs(back - field.values))) / scale


def parseval_defect(field: PeriodicField) -> float:
    """Relative gap between collocation and mode-space L² norms."""
    physical = field.l2_norm()
    spectral = field.mode_l2_norm()
    return abs(physical - spectral) / max(physical, 1e-300)


def multi_indices(order: int) -> Iterator[MultiIndex]:
    """All θ ∈ N³ with |θ| = order."""
    for a in range(order, -1, -1):
        for b in range(order - a, -1, -1):
            yield (a, b, order - a - b)


def derivative_symbol(grid: Grid, multi_index: MultiIndex) -> Array:
    """(ik)^θ on the grid, with Nyquist zeroed for odd |θ|."""
    k1, k2, k3 = grid.k_vectors()
    symbol = (
        (1j * k1) ** multi_index[0] * (1j * k2) ** multi_index[1] * (1j * k3) ** multi_index[2]
    )
    symbol = np.broadcast_to(symbol, grid.shape)
    if sum(multi_index) % 2:
        symbol = np.where(grid.nyquist_mask(), 0.0, symbol)
    return symbol


def derivative(field: PeriodicField, multi_index: Sequence[int]) -> PeriodicField:
    """D^θ applied to every component."""
    theta = (int(multi_index[0]), int(multi_index[1]), int(multi_index[2]))
    if sum(theta) == 0:
        return field
    modes = field.modes * derivative_symbol(field.grid, theta)
    return PeriodicField.from_modes(field.grid, field.rank, modes, real=field.reality_flag)


def partial(field: PeriodicField, axis: int, order: int = 1) -> PeriodicField:
    theta = [0, 0, 0]
    theta[axis] = order
    return derivative(field, theta)


def odd_symbols(grid: Grid) -> Tuple[Array, Array, Array]:
    """ik_j with Nyquist zeroed, broadcast to the full grid."""
    nyq = grid.nyquist_mask()
    return tuple(  # type: ignore[return-value]
        np.where(nyq, 0.0, 1j * np.broadcast_to(k, grid.shape)) for k in grid.k_vectors()
    )


def gradient(field: PeriodicField) -> PeriodicField:
    """Gradient: scalar → vector, vector v → tensor T[i, j] = ∂_j v_i."""
    ik = odd_symbols(field.grid)
    if field.rank is Rank.SCALAR:
        modes = np.stack([field.modes * s for s in ik])
        return PeriodicField.from_modes(field.grid, Rank.VECTOR, modes)
    if field.rank is Rank.VECTOR:
        modes = np.stack([field.modes * s for s in ik], axis=1)
        return PeriodicField.from_modes(field.grid, Rank.TENSOR, modes)
    raise FieldShapeError(f"gradient of {field.rank.value} field not supported")


def divergence(field: PeriodicField) -> PeriodicField:
    """Divergence: vector → scalar, tensor T → vector (div T)_i = ∂_j T_ij."""
    ik = odd_symbols(field.grid)
    m = field.modes
    if field.rank is Rank.VECTOR:
        modes = m[0] * ik[0] + m[1] * ik[1] + m[2] * ik[2]
        return PeriodicField.from_modes(field.grid, Rank.SCALAR, modes)
    if field.rank in (Rank.TENSOR, Rank.SYMTENSOR):
        modes = m[:, 0] * ik[0] + m[:, 1] * ik[1] + m[:, 2] * ik[2]
        return PeriodicField.from_modes(field.grid, Rank.VECTOR, modes)
    raise FieldShapeError(f"divergence of {field.rank.value} field not supported")


def curl_modes(grid: Grid, modes: Array) -> Array:
    ik = odd_symbols(grid)
    return np.stack(
        [
            ik[1] * modes[2] - ik[2] * modes[1],
            ik[2] * modes[0] - ik[0] * modes[2],
            ik[0] * modes[1] - ik[1] * modes[0],
        ]
    )


def curl(field: PeriodicField) -> PeriodicField:
    if field.rank is not Rank.VECTOR:
        raise FieldShapeError("curl needs a vector field")
    return PeriodicField.from_modes(field.grid, Rank.VECTOR, curl_modes(field.grid, field.modes))


def laplacian(field: PeriodicField) -> PeriodicField:
    modes = -field.modes * field.grid.k_squared()
    return PeriodicField.from_modes(field.grid, field.rank, modes, real=field.reality_flag)


def dealias(field: PeriodicField) -> PeriodicField:
    """Zero every mode outside the dealiasing mask."""
    modes = np.where(field.grid.dealias_mask(), field.modes, 0.0)
    return PeriodicField.from_modes(field.grid, field.rank, modes, real=field.reality_flag)


def strip_nyquist(field: PeriodicField) -> PeriodicField:
    modes = np.where(field.grid.nyquist_mask(), 0.0, field.modes)
    return PeriodicField.from_modes(field.grid, field.rank, modes, real=field.reality_flag)


def outer(u: PeriodicField, v: PeriodicField, dealiased: bool = True) -> PeriodicField:
    """Pointwise u_i v_j, dealiased after the product."""
    if u.rank is not Rank.VECTOR or v.rank is not Rank.VECTOR:
        raise FieldShapeError("outer product needs two vector fields")
    values = u.values[:, None] * v.values[None, :]
    rank = Rank.SYMTENSOR if u is v else Rank.TENSOR
    product = PeriodicField(u.grid, rank, values)
    return dealias(product) if dealiased else product


def symmetric_outer(u: PeriodicField, v: PeriodicField, dealiased: bool = True) -> PeriodicField:
    """u ⊗ v + v ⊗ u."""
    values = u.values[:, None] * v.values[None, :]
    values = values + np.swapaxes(values, 0, 1)
    product = PeriodicField(u.grid, Rank.SYMTENSOR, values)
    return dealias(product) if dealiased else product


def traceless_part(tensor: PeriodicField) -> PeriodicField:
    """T − (tr T / 3) Id."""
    values = tensor.values - (np.trace(tensor.values, axis1=0, axis2=1) / 3.0)[None, None] * np.eye(3)[
        :, :, None, None, None
    ]
    return tensor.with_values(values)


def traceless_outer(u: PeriodicField, dealiased: bool = True) -> PeriodicField:
    """u ⊗̊ u."""
    return traceless_part(outer(u, u, dealiased=dealiased))


def identity_tensor(grid: Grid, scalar: PeriodicField | None = None) -> PeriodicField:
    """Id, or s·Id for a scalar field s."""
    eye = np.eye(3)[:, :, None, None, None]
    s = scalar.values if scalar is not None else np.ones(grid.shape)
    return PeriodicField(grid, Rank.SYMTENSOR, eye * s[None, None])


def dot(u: PeriodicField, v: PeriodicField) -> PeriodicField:
    """Pointwise u·v (not dealiased)."""
    return PeriodicField(u.grid, Rank.SCALAR, np.einsum("i...,i...->...", u.values, v.values))


def advect(velocity: PeriodicField, field: PeriodicField) -> PeriodicField:
    """(v·∇) f for scalar or vector f, dealiased."""
    ik = odd_symbols(field.grid)
    if field.rank is Rank.SCALAR:
        grads = [inverse(field.modes * s).real for s in ik]
        values = sum(velocity.values[j] * grads[j] for j in range(3))
    elif field.rank is Rank.VECTOR:
        values = np.zeros(field.values.shape)
        for j in range(3):
            values += velocity.values[j][None] * inverse(field.modes * ik[j]).real
    else:
        raise FieldShapeError("advect needs a scalar or vector field")
    return dealias(PeriodicField(field.grid, field.rank, np.asarray(values)))


def apply_matrix(matrix: Array, vector: Array) -> Array:
    """Pointwise A v for A of shape (3, 3, ...) and v of shape (3, ...)."""
    return np.einsum("ij...,j...->i...", matrix, vector)


def matrix_field_inverse(matrix: Array) -> Array:
    """Pointwise inverse of a (3, 3, ...) matrix field."""
    moved = np.moveaxis(matrix, (0, 1), (-2, -1))
    inv = np.linalg.inv(moved)
    return np.moveaxis(inv, (-2, -1), (0, 1))


def matrix_field_det(matrix: Array) -> Array:
    return np.linalg.det(np.moveaxis(matrix, (0, 1), (-2, -1)))


def relative(residual: float, *scales: Any) -> float:
    """Residual divided by the largest scale (at least 1e-300)."""
    return residual / max(max((float(s) for s in scales), default=0.0), 1e-300)
