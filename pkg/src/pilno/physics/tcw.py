"""Temporal-causality weighting of per-time-slice PDE residuals.

A positive, monotonically non-increasing schedule w(t) is evaluated on the
snapshot times and normalized so the weights average to one, which keeps the
overall loss scale stable. Three schedule forms plus "none":

    exp:       w(t) = exp(-gamma t),          gamma > 0
    inv:       w(t) = 1 / (1 + alpha t),      alpha > 0
    piecewise: w(t) = w_max for t <= t0 else w_min,  w_max > w_min > 0
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TcwSchedule:
    form: str = "none"
    gamma: float | None = None
    alpha: float | None = None
    w_max: float | None = None
    w_min: float | None = None
    t0: float | None = None

    def __post_init__(self):
        if self.form == "none":
            return
        if self.form == "exp":
            if self.gamma is None or self.gamma <= 0:
                raise ValueError("exp schedule needs gamma > 0")
        elif self.form == "inv":
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("inv schedule needs alpha > 0")
        elif self.form == "piecewise":
            ok = (self.w_max is not None and self.w_min is not None
                  and self.t0 is not None and self.w_max >= self.w_min > 0
                  and self.t0 > 0)
            if not ok:
                raise ValueError("piecewise schedule needs w_max >= w_min > 0, t0 > 0")
        else:
            raise ValueError(f"unknown schedule form {self.form!r}")


def tcw_weights(schedule, times):
    """Normalized weights w~ on the snapshot times; mean(w~) = 1."""
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 1 or t.size < 1:
        raise ValueError("times must be a non-empty 1D array")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValueError("times must be strictly increasing")
    if schedule.form == "none":
        return np.ones_like(t)
    if schedule.form == "exp":
        w = np.exp(-schedule.gamma * t)
    elif schedule.form == "inv":
        w = 1.0 / (1.0 + schedule.alpha * t)
    else:
        w = np.where(t <= schedule.t0, schedule.w_max, schedule.w_min)
    return w / np.mean(w)
