"""Binned approximation of a lower-triangular matrix and its streaming evaluator.

The approximation replaces the entries over each interval [a, b] of a row's
partition by the average of the two endpoint entries of the base row, so one
row value costs two base lookups.  A full product (Lhat z) then runs on a
buffer holding one interval sum per partition cell, merged in place as the
partitions coarsen from row to row; peak memory is the binning size.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .binning import Binning, Interval, Partition

__all__ = [
    "BinnedMatrixView",
    "StreamState",
    "approx_entry",
    "interval_value",
    "materialize",
    "space_complexity",
    "stream_matvec",
    "stream_step",
    "toeplitz_row_source",
]


def toeplitz_row_source(coeffs: Sequence[float] | np.ndarray) -> Callable[[int, int], float]:
    """Constant-time row accessor (i, j) -> coeffs[i - j] over 1-based indices."""
    arr = np.asarray(coeffs, dtype=np.float64)

    def source(i: int, j: int) -> float:
        return float(arr[i - j])

    return source


@dataclass(frozen=True)
class BinnedMatrixView:
    """A base matrix, given as a row accessor, flattened over a binning.

    The diagonal survives exactly: [i, i] is always its own interval, so the
    endpoint average there is the base entry itself.
    """

    base: Callable[[int, int], float]
    binning: Binning
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.binning.n != self.n:
            raise ValueError(
                f"binning covers {self.binning.n} rows but n = {self.n}"
            )


def interval_value(view: BinnedMatrixView, i: int, interval: Interval) -> float:
    """Value used across ``interval`` in row i: the endpoint average."""
    return 0.5 * (view.base(i, interval.a) + view.base(i, interval.b))


def approx_entry(view: BinnedMatrixView, i: int, j: int) -> float:
    """Approximated entry at 1-based (i, j); zero above the diagonal."""
    if not 1 <= i <= view.n:
        raise ValueError(f"row index must be in [1, {view.n}], got {i}")
    if j > i:
        return 0.0
    if j < 1:
        raise ValueError(f"column index must be >= 1, got {j}")
    part = view.binning.partitions[i - 1]
    idx = bisect_right(part, j, key=lambda iv: iv.a) - 1
    return interval_value(view, i, part[idx])


def materialize(view: BinnedMatrixView) -> np.ndarray:
    """Dense n x n array of the approximated matrix (offline analysis/oracle)."""
    out = np.zeros((view.n, view.n))
    for i in range(1, view.n + 1):
        row = out[i - 1]
        for iv in view.binning.partitions[i - 1]:
            row[iv.a - 1 : iv.b] = interval_value(view, i, iv)
    return out


def space_complexity(view: BinnedMatrixView) -> int:
    """Peak streaming buffer length: the binning size."""
    return view.binning.size


@dataclass
class StreamState:
    """Entire live memory of the streaming evaluator.

    buffer[k] is the sum of the noise entries z_j over the k-th interval of
    the current partition; peak records the largest buffer ever held so the
    space claim can be audited after a run.
    """

    buffer: list[float] = field(default_factory=list)
    partition: Partition = ()
    step: int = 0
    peak: int = 0


def stream_step(
    state: StreamState,
    new_partition: Partition,
    z_i: float,
    row: Callable[[int], float],
) -> tuple[StreamState, float]:
    """Advance one row: fold z_i in, merge the buffer, return (state, output).

    ``new_partition`` must tile [1, i] for i = state.step + 1 and coarsen the
    current partition plus the fresh singleton [i, i].  The buffer is merged
    in place with one read and one write pointer; reads stay ahead of writes
    because every non-final new interval consumes at least one old cell.
    ``row`` maps a column index to the base entry at (i, <column>); output is
    the dot product of interval endpoint-averages with interval sums.  All of
    this is O(len(new_partition)) time and O(1) extra space.
    """
    i = state.step + 1
    old = state.partition
    buf = state.buffer
    read = 0
    expect = 1
    output = 0.0
    for write, iv in enumerate(new_partition):
        if iv.a != expect or iv.b < iv.a or iv.b > i:
            raise ValueError(f"partition does not tile [1, {i}]")
        total = 0.0
        while read < len(old) and old[read].b <= iv.b:
            if old[read].a != expect:
                raise ValueError("new partition does not coarsen the previous one")
            total += buf[read]
            expect = old[read].b + 1
            read += 1
        if iv.b == i:
            if expect != i:
                raise ValueError("new partition does not coarsen the previous one")
            total += z_i
            expect = i + 1
        if expect != iv.b + 1:
            raise ValueError("new partition does not coarsen the previous one")
        output += 0.5 * (row(iv.a) + row(iv.b)) * total
        if write < len(buf):
            buf[write] = total
        else:
            buf.append(total)
    if read != len(old):
        raise ValueError("new partition does not coarsen the previous one")
    del buf[len(new_partition) :]
    state.partition = new_partition
    state.step = i
    state.peak = max(state.peak, len(buf))
    return state, output


def stream_matvec(
    view: BinnedMatrixView,
    z: Sequence[float] | np.ndarray,
    state: StreamState | None = None,
) -> np.ndarray:
    """Stream the full product of the approximated matrix with z.

    Convenience wrapper over stream_step; pass your own fresh ``state`` to
    inspect the peak buffer length afterwards.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (view.n,):
        raise ValueError(f"z must have shape ({view.n},), got {z.shape}")
    if state is None:
        state = StreamState()
    out = np.empty(view.n)
    for i in range(1, view.n + 1):
        _, out[i - 1] = stream_step(
            state, view.binning.partitions[i - 1], float(z[i - 1]), partial(view.base, i)
        )
    return out
