"""Limits of ε-sweeps: polynomial (Richardson) extrapolation and convergence order."""

from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import ParameterError


def extrapolate_to_zero(steps: Sequence[float], values: ArrayLike) -> NDArray[np.float64]:
    """
    Neville evaluation at ε = 0 of the polynomial through (steps[i], values[i]).
    values may carry trailing axes (e.g. multivector coefficients); each is extrapolated.
    """
    steps = np.asarray(steps, dtype=np.float64)
    table = np.array(values, dtype=np.float64)
    if steps.ndim != 1 or steps.size == 0 or table.shape[0] != steps.size:
        raise ParameterError("Extrapolation needs one value per step")
    if np.unique(steps).size != steps.size:
        raise ParameterError("Extrapolation steps must be distinct")
    extra = (slice(None),) + (None,) * (table.ndim - 1)
    for level in range(1, steps.size):
        near = steps[: steps.size - level][extra]
        far = steps[level:][extra]
        table = (far * table[:-1] - near * table[1:]) / (far - near)
    return table[0]


def convergence_order(steps: Sequence[float], errors: Sequence[float], floor: float = 1e-14) -> float:
    """Least-squares slope of log(error) against log(step); errors below floor are dropped."""
    steps = np.asarray(steps, dtype=np.float64)
    errors = np.abs(np.asarray(errors, dtype=np.float64))
    usable = errors > floor
    if usable.sum() < 2:
        raise ParameterError("Convergence order needs at least two errors above the floor")
    slope, _ = np.polyfit(np.log(steps[usable]), np.log(errors[usable]), 1)
    return float(slope)
