"""Discretized fields on uniform grids with axis metadata."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Axis:
    """One uniform grid axis.

    endpoint=True means the closing node is stored (inclusive grid,
    step = span/(n-1)); endpoint=False is the periodic convention where the
    closing node is identified with the first (step = span/n).
    """

    lo: float
    hi: float
    n: int
    endpoint: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("axis needs at least two nodes")
        if not self.hi > self.lo:
            raise ValueError("axis extent must be increasing")

    @property
    def step(self):
        span = self.hi - self.lo
        return span / (self.n - 1) if self.endpoint else span / self.n

    def coords(self):
        if self.endpoint:
            return np.linspace(self.lo, self.hi, self.n)
        return self.lo + self.step * np.arange(self.n)


@dataclass
class SpaceTimeField:
    """Scalar field values indexed (time, space...) or (space...) if steady."""

    values: np.ndarray
    space: tuple
    time: Axis | None = None
    channels: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        expected = tuple(ax.n for ax in self.space)
        if self.time is not None:
            expected = (self.time.n,) + expected
        if self.channels != 1:
            expected = (self.channels,) + expected
        if self.values.shape != expected:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @property
    def h_t(self):
        return None if self.time is None else self.time.step

    def h_x(self, axis=0):
        return self.space[axis].step

    def with_values(self, values):
        return SpaceTimeField(values, self.space, self.time, self.channels,
                              dict(self.meta))
