"""Discrete path space: time grids, piecewise-linear paths, metrics, events.

Paths live on a uniform grid over [0, T] and take values in R^d.  All
metrics are evaluated at grid points only; the piecewise-linear
interpolant between grid points is implied but never sampled.  Events
are described by a small algebra of set specifications, each of which
reports a signed margin: positive means the path is inside the set,
negative means outside, and the magnitude is a (conservative) distance
to the boundary.  Shrunk and fattened versions of a set are obtained by
thresholding the margin, which is how the locally uniform definitions
consume events.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ShapeMismatchError",
    "TimeGrid",
    "DiscretePath",
    "PathSet",
    "EventSpec",
    "Ball",
    "UnionOfBalls",
    "DistanceAtLeast",
    "TerminalAtLeast",
    "InitialEquals",
    "Complement",
    "Union",
    "Intersection",
    "sup_metric",
    "dist_to_set",
    "hausdorff",
    "event_margin",
    "membership",
    "line_path",
    "constant_path",
]

FLOAT_FMT = ".17g"


class ShapeMismatchError(ValueError):
    """Grids or dimensions of two objects do not agree."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_n = horizon."""

    horizon: float
    steps: int

    def __post_init__(self) -> None:
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        # i * dt rather than linspace so that dyadic horizons give exact
        # increments (t_{i+1} - t_i == dt bit-for-bit when dt is a power of 2)
        return np.arange(self.steps + 1) * self.dt


def _check_same_grid(a: TimeGrid, b: TimeGrid) -> None:
    if a != b:
        raise ShapeMismatchError(f"grids differ: {a} vs {b}")


@dataclass(frozen=True)
class DiscretePath:
    """Values of a path at the grid points, shape (steps + 1, dim)."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.steps + 1:
            raise ShapeMismatchError(
                f"values shape {v.shape} does not match grid with {self.grid.steps} steps"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def translate(self, offset) -> "DiscretePath":
        off = np.asarray(offset, dtype=float).reshape(-1)
        if off.size == 1 and self.dim != 1:
            off = np.full(self.dim, off[0])
        if off.size != self.dim:
            raise ShapeMismatchError(f"offset size {off.size} != dim {self.dim}")
        return DiscretePath(self.grid, self.values + off)

    def initial(self) -> np.ndarray:
        return self.values[0]

    def terminal(self) -> np.ndarray:
        return self.values[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t"] + [f"x{j}" for j in range(self.dim)])
        times = self.grid.times
        for i in range(self.grid.steps + 1):
            writer.writerow(
                [format(times[i], FLOAT_FMT)]
                + [format(self.values[i, j], FLOAT_FMT) for j in range(self.dim)]
            )
        return buf.getvalue()

    def save_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @staticmethod
    def from_csv(text_or_path: str) -> "DiscretePath":
        if "\n" not in text_or_path:
            with open(text_or_path, "r", newline="") as fh:
                text = fh.read()
        else:
            text = text_or_path
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if not header or header[0] != "t":
            raise ValueError("first CSV column must be t")
        dim = len(header) - 1
        times = np.array([float(r[0]) for r in body])
        values = np.array([[float(c) for c in r[1:]] for r in body])
        if len(times) < 2:
            raise ValueError("need at least two grid points")
        horizon = float(times[-1])
        grid = TimeGrid(horizon, len(times) - 1)
        if not np.allclose(times, grid.times, rtol=0.0, atol=1e-9 * max(1.0, horizon)):
            raise ValueError("CSV times are not a uniform grid starting at 0")
        if values.shape[1] != dim:
            raise ShapeMismatchError("ragged CSV rows")
        return DiscretePath(grid, values)


def line_path(grid: TimeGrid, start: float, slope: float) -> DiscretePath:
    """Scalar path start + slope * t."""
    return DiscretePath(grid, start + slope * grid.times)


def constant_path(grid: TimeGrid, value, dim: int | None = None) -> DiscretePath:
    v = np.asarray(value, dtype=float).reshape(-1)
    if dim is not None and v.size == 1:
        v = np.full(dim, v[0])
    return DiscretePath(grid, np.tile(v, (grid.steps + 1, 1)))


class PathSet:
    """Finite nonempty collection of paths on a common grid."""

    def __init__(self, members: list[DiscretePath]):
        if not members:
            raise ValueError("a path set must be nonempty")
        grid = members[0].grid
        dim = members[0].dim
        for p in members[1:]:
            _check_same_grid(grid, p.grid)
            if p.dim != dim:
                raise ShapeMismatchError("path dimensions differ inside a set")
        self.members = list(members)
        self.grid = grid
        self.dim = dim
        # stacked view (count, steps+1, dim) for vectorized distances
        self.stack = np.stack([p.values for p in members])

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def value_set(self) -> set:
        return {p.values.tobytes() for p in self.members}


def _norms_along_dim(diff: np.ndarray) -> np.ndarray:
    # diff: (..., steps+1, dim) -> sup over time of euclidean norm in R^d
    if diff.shape[-1] == 1:
        return np.max(np.abs(diff[..., 0]), axis=-1)
    return np.max(np.sqrt(np.sum(diff * diff, axis=-1)), axis=-1)


def sup_metric(a: DiscretePath, b: DiscretePath) -> float:
    """sup over grid points of |a(t_i) - b(t_i)|_2."""
    _check_same_grid(a.grid, b.grid)
    if a.dim != b.dim:
        raise ShapeMismatchError(f"dims differ: {a.dim} vs {b.dim}")
    return float(_norms_along_dim(a.values - b.values))


def _dist_batch(values: np.ndarray, target: PathSet) -> np.ndarray:
    """values: (B, steps+1, dim) -> distance of each row to the set."""
    best = None
    for member in target.stack:
        d = _norms_along_dim(values - member)
        best = d if best is None else np.minimum(best, d)
    return best


def dist_to_set(path: DiscretePath, target: PathSet) -> float:
    _check_same_grid(path.grid, target.grid)
    if path.dim != target.dim:
        raise ShapeMismatchError("dimension mismatch with path set")
    return float(_dist_batch(path.values[None], target)[0])


def hausdorff(a: PathSet, b: PathSet) -> float:
    """Hausdorff distance, the max of the two one-sided sup-inf distances."""
    _check_same_grid(a.grid, b.grid)
    if a.dim != b.dim:
        raise ShapeMismatchError("dimension mismatch between path sets")
    one = float(np.max(_dist_batch(a.stack, b)))
    two = float(np.max(_dist_batch(b.stack, a)))
    return max(one, two)


# ---------------------------------------------------------------------------
# events


class EventSpec:
    """Base class; subclasses implement a vectorized signed margin."""

    def margins(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def margin(self, path: DiscretePath) -> float:
        return float(self.margins(path.values[None])[0])


@dataclass(frozen=True)
class Ball(EventSpec):
    """Open sup-metric ball around a center path."""

    center: DiscretePath
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def margins(self, values: np.ndarray) -> np.ndarray:
        return self.radius - _norms_along_dim(values - self.center.values)


@dataclass(frozen=True)
class UnionOfBalls(EventSpec):
    """Union of open balls; margin is the best single-ball margin."""

    centers: PathSet
    radii: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.radii) != len(self.centers):
            raise ShapeMismatchError("one radius per center required")
        if any(r <= 0 for r in self.radii):
            raise ValueError("radii must be positive")

    def margins(self, values: np.ndarray) -> np.ndarray:
        best = None
        for member, r in zip(self.centers.stack, self.radii):
            m = r - _norms_along_dim(values - member)
            best = m if best is None else np.maximum(best, m)
        return best


@dataclass(frozen=True)
class DistanceAtLeast(EventSpec):
    """Closed set {phi : dist(phi, targets) >= threshold}."""

    targets: PathSet
    threshold: float

    def __post_init__(self) -> None:
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")

    def margins(self, values: np.ndarray) -> np.ndarray:
        return _dist_batch(values, self.targets) - self.threshold


@dataclass(frozen=True)
class TerminalAtLeast(EventSpec):
    """Closed halfspace {phi : phi(T)[coordinate] >= level}."""

    level: float
    coordinate: int = 0

    def margins(self, values: np.ndarray) -> np.ndarray:
        return values[:, -1, self.coordinate] - self.level


@dataclass(frozen=True)
class InitialEquals(EventSpec):
    """Paths starting at a given point (within tolerance), and-ed with a clause."""

    value: np.ndarray
    tolerance: float
    clause: EventSpec | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float).reshape(-1))
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")

    def margins(self, values: np.ndarray) -> np.ndarray:
        start = values[:, 0, :]
        diff = start - self.value
        m = self.tolerance - np.sqrt(np.sum(diff * diff, axis=-1))
        if self.clause is not None:
            m = np.minimum(m, self.clause.margins(values))
        return m


@dataclass(frozen=True)
class Complement(EventSpec):
    inner: EventSpec

    def margins(self, values: np.ndarray) -> np.ndarray:
        return -self.inner.margins(values)


@dataclass(frozen=True)
class Union(EventSpec):
    parts: tuple[EventSpec, ...]

    def __post_init__(self) -> None:
        if not self.parts:
            raise ValueError("union of nothing")

    def margins(self, values: np.ndarray) -> np.ndarray:
        out = self.parts[0].margins(values)
        for part in self.parts[1:]:
            out = np.maximum(out, part.margins(values))
        return out


@dataclass(frozen=True)
class Intersection(EventSpec):
    parts: tuple[EventSpec, ...]

    def __post_init__(self) -> None:
        if not self.parts:
            raise ValueError("intersection of nothing")

    def margins(self, values: np.ndarray) -> np.ndarray:
        out = self.parts[0].margins(values)
        for part in self.parts[1:]:
            out = np.minimum(out, part.margins(values))
        return out


def event_margin(path: DiscretePath, event: EventSpec) -> float:
    return event.margin(path)


def membership(path: DiscretePath, event: EventSpec, eta: float = 0.0) -> bool:
    """Margin-thresholded membership.

    eta = 0 is plain membership, eta > 0 the eta-shrunk set, eta < 0 the
    |eta|-fattened set.
    """
    return event.margin(path) > eta
