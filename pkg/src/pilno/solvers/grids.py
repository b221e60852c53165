"""Grid restriction by node selection (no filtering)."""

import numpy as np

from ..fields import Axis, SpaceTimeField


def _stride(ax, m):
    if m == ax.n:
        return 1
    if m < 2:
        raise ValueError("target axis needs at least two nodes")
    if ax.endpoint:
        if (ax.n - 1) % (m - 1):
            raise ValueError(f"{ax.n} inclusive nodes do not restrict to {m}")
        return (ax.n - 1) // (m - 1)
    if ax.n % m:
        raise ValueError(f"{ax.n} periodic nodes do not restrict to {m}")
    return ax.n // m


def downsample(f, n_time=None, n_space=None):
    """Restrict a field to a coarser aligned grid, endpoints preserved.

    n_space: int or tuple of per-axis targets; None keeps an axis unchanged.
    """
    values = f.values
    time = f.time
    if n_time is not None and time is not None and n_time != time.n:
        s = _stride(time, n_time)
        values = values[::s]
        time = Axis(time.lo, time.hi, n_time, endpoint=time.endpoint)
    if n_space is not None:
        targets = (n_space,) * len(f.space) if np.isscalar(n_space) else tuple(n_space)
        if len(targets) != len(f.space):
            raise ValueError("one target per spatial axis")
        axes = []
        offset = 0 if time is None else 1
        for k, (ax, m) in enumerate(zip(f.space, targets)):
            m = ax.n if m is None else m
            s = _stride(ax, m)
            sl = [slice(None)] * values.ndim
            sl[offset + k] = slice(None, None, s)
            values = values[tuple(sl)]
            axes.append(Axis(ax.lo, ax.hi, m, endpoint=ax.endpoint))
        space = tuple(axes)
    else:
        space = f.space
    return SpaceTimeField(np.ascontiguousarray(values), space, time,
                          f.channels, dict(f.meta))
