"""Cost functions c(x, y) used by the transport problems."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._common import POSITION_TOL


def _abs_diff_neg(x, y):
    return -np.abs(x - y)


def _abs_diff(x, y):
    return np.abs(x - y)


def _sm_neg(x, y):
    return -x * y * y


def _sm_pos(x, y):
    return x * y * y


def _cubic(x, y):
    return (y - x) ** 3


def _numeraire_abs(x, y):
    return -np.abs(y / x - 1.0)


def _mirrored_abs(x, y):
    return -np.abs(x + y)


BUILTIN = {
    "abs_diff_neg": _abs_diff_neg,
    "abs_diff": _abs_diff,
    "sm_neg": _sm_neg,
    "sm_pos": _sm_pos,
    "cubic": _cubic,
    "numeraire_abs": _numeraire_abs,
    "mirrored_abs": _mirrored_abs,
}


class CostDomainError(ValueError):
    pass


@dataclass(frozen=True)
class CostFunction:
    """An evaluable cost.

    ``family`` is one of the built-in tags, ``"tabulated"`` or ``"custom"``.
    Evaluation broadcasts over numpy arrays.
    """

    family: str
    fn: Callable = field(repr=False, compare=False)
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, x, y):
        return self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def to_json(self) -> dict:
        if self.family == "custom":
            raise ValueError("custom costs are not serialisable")
        return {"family": self.family, "params": dict(self.params)}


def cost(family: str, **params) -> CostFunction:
    """Built-in cost by tag, or a tabulated grid with ``x``, ``y``, ``values``."""
    if family in BUILTIN:
        return CostFunction(family, BUILTIN[family], params)
    if family == "tabulated":
        return tabulated(params["x"], params["y"], params["values"])
    raise ValueError(f"unknown cost family {family!r}")


def custom(fn: Callable, name: str = "custom") -> CostFunction:
    return CostFunction("custom", fn, {"name": name})


def tabulated(x_grid, y_grid, values) -> CostFunction:
    xg = np.asarray(x_grid, dtype=float)
    yg = np.asarray(y_grid, dtype=float)
    table = np.asarray(values, dtype=float)
    if table.shape != (xg.size, yg.size):
        raise ValueError(f"table shape {table.shape} does not match grid {(xg.size, yg.size)}")
    if np.any(np.diff(xg) <= 0) or np.any(np.diff(yg) <= 0):
        raise ValueError("tabulated grids must be strictly increasing")

    def lookup(grid, v):
        i = np.clip(np.searchsorted(grid, v), 0, grid.size - 1)
        j = np.clip(i - 1, 0, grid.size - 1)
        pick = np.where(np.abs(grid[j] - v) < np.abs(grid[i] - v), j, i)
        if np.any(np.abs(grid[pick] - v) > POSITION_TOL):
            raise CostDomainError("tabulated cost evaluated off its grid")
        return pick

    def fn(x, y):
        x, y = np.broadcast_arrays(x, y)
        return table[lookup(xg, x), lookup(yg, y)]

    return CostFunction("tabulated", fn,
                        {"x": xg.tolist(), "y": yg.tolist(), "values": table.tolist()})


def from_json(obj: dict) -> CostFunction:
    return cost(obj["family"], **obj.get("params", {}))
