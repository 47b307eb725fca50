"""Per-row interval partitions and the greedy merge scan that coarsens them.

A partition of [1, i] is a tuple of (a, b) intervals sorted by left endpoint;
a binning is the whole sequence for rows 1..n, constrained so that each row's
partition coarsens the previous one plus the fresh singleton [i, i].  The
maximum partition cardinality is the buffer length a streaming evaluator of
the binned matrix needs, so coarser is cheaper and flatter rows bin better.

The merge scan walks the previous partition from the diagonal outward.  An
interval [a, b] starts a merged run when the row is flat across it relative
to the column just right of it (entry(a)/entry(b+1) strictly above c); the
run then extends left while entry(a')/entry(b+1) stays at or above c**2.  An
interval whose right entry has decayed to tau or below absorbs everything to
its left into a single [1, b].  On a base matrix with monotone column ratios
this keeps the binned approximation within a (1/c**2 - 1, tau) entrywise
perturbation; on arbitrary positive rows it still yields a valid binning,
just without that guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable, Iterator, NamedTuple

import numpy as np

__all__ = [
    "Binning",
    "BinningParams",
    "Interval",
    "Partition",
    "build_binning",
    "collect_binning",
    "has_monotone_ratios",
    "next_partition",
    "partition_text",
    "verify_binning",
]


class Interval(NamedTuple):
    a: int
    b: int


Partition = tuple[Interval, ...]


@dataclass(frozen=True)
class BinningParams:
    """Merge-flatness threshold c and small-entry cutoff tau, both in (0, 1).

    c close to 1 merges only very flat runs (fine binning, small error);
    small c merges aggressively (coarse binning, large error).
    """

    c: float
    tau: float

    def __post_init__(self) -> None:
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must be in (0, 1), got {self.c}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must be in (0, 1), got {self.tau}")


@dataclass(frozen=True)
class Binning:
    """The full partition sequence for rows 1..n of one matrix."""

    partitions: tuple[Partition, ...]

    @property
    def n(self) -> int:
        return len(self.partitions)

    @property
    def size(self) -> int:
        """Max partition cardinality: the streaming buffer length this binning costs."""
        return max((len(p) for p in self.partitions), default=0)


def partition_text(partition: Partition) -> str:
    """Serialize as "a1-b1,a2-b2,..." for debugging dumps."""
    return ",".join(f"{iv.a}-{iv.b}" for iv in partition)


def _strictly_flatter(numerator: float, denominator: float, c: float) -> bool:
    # Merge trigger is strict: a run at exactly c flatness is left alone.
    return numerator / denominator > c


def _check_prev(prev: Partition, i: int) -> None:
    if i < 1:
        raise ValueError(f"row index must be >= 1, got {i}")
    if i == 1:
        if prev:
            raise ValueError("prev must be empty for the first row")
        return
    ok = bool(prev) and prev[0].a == 1 and prev[-1].b == i - 1
    if ok:
        for left, right in zip(prev, prev[1:]):
            if right.a != left.b + 1 or left.a > left.b:
                ok = False
                break
        if ok and prev[-1].a > prev[-1].b:
            ok = False
    if not ok:
        raise ValueError(f"prev does not partition [1, {i - 1}]")


def next_partition(
    prev: Partition,
    i: int,
    row: Callable[[int], float],
    params: BinningParams,
) -> Partition:
    """Partition of [1, i] obtained by the greedy merge scan over ``prev``.

    ``prev`` must partition [1, i-1] (empty for i = 1); ``row`` maps a column
    index j in [1, i] to the base entry at (i, j).  Each interval of prev,
    scanned right to left, either starts a merged run, is kept unchanged, or
    (when its right entry is at or below tau) absorbs everything left of it.
    The singleton [i, i] is appended last.  Work is O(len of output) plus the
    validation pass over prev.
    """
    _check_prev(prev, i)
    c = params.c
    c_sq = c * c
    tau = params.tau
    out: list[Interval] = []
    k = len(prev)
    while k > 0:
        a, b = prev[k - 1]
        k_stop = k
        if k > 1:
            right = row(b + 1)
            if right > 0.0 and _strictly_flatter(row(a), right, c):
                ahead = prev[k_stop - 2].a
                while k_stop > 1 and row(ahead) / right >= c_sq:
                    a = ahead
                    k_stop -= 1
                    if k_stop > 1:
                        ahead = prev[k_stop - 2].a
                # The scan can exhaust prev with the leftmost interval just
                # absorbed; the retained candidate makes this re-check a
                # no-op then, and a skip when the loop never ran.
                if k_stop == 1 and row(ahead) / right >= c_sq:
                    a = ahead
        if row(b) <= tau:
            out.append(Interval(1, b))
            k = 0
        else:
            out.append(Interval(a, b))
            k = k_stop - 1
    out.reverse()
    out.append(Interval(i, i))
    return tuple(out)


def build_binning(
    row_source: Callable[[int, int], float],
    n: int,
    params: BinningParams,
) -> Iterator[Partition]:
    """Yield the partitions for rows 1..n, one at a time.

    ``row_source(i, j)`` must return the base entry at row i, column j for
    1 <= j <= i.  Only the previous partition is retained between rows, so a
    consumer can interleave this with a streaming evaluation.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    prev: Partition = ()
    for i in range(1, n + 1):
        prev = next_partition(prev, i, partial(row_source, i), params)
        yield prev


def collect_binning(
    row_source: Callable[[int, int], float],
    n: int,
    params: BinningParams,
) -> Binning:
    """Materialize build_binning into a Binning."""
    return Binning(tuple(build_binning(row_source, n, params)))


def verify_binning(binning: Binning) -> bool:
    """True iff every partition tiles [1, i] and coarsens its predecessor."""
    prev: Partition | None = None
    for i, part in enumerate(binning.partitions, start=1):
        if not part or part[0].a != 1 or part[-1].b != i:
            return False
        last_b = 0
        for iv in part:
            if iv.a != last_b + 1 or iv.b < iv.a:
                return False
            last_b = iv.b
        if prev is not None:
            w = 0
            for iv in prev:
                while w < len(part) and part[w].b < iv.b:
                    w += 1
                if w == len(part) or part[w].a > iv.a:
                    return False
        prev = part
    return True


def has_monotone_ratios(m: np.ndarray, tol: float = 1e-10) -> bool:
    """Check the structure the merge-scan guarantees assume.

    True iff, up to slack tol on each comparison: (1) every on-or-below-
    diagonal entry lies in (0, 1]; (2) each row is nondecreasing toward the
    diagonal; (3) for every column pair j <= j2, the ratio M[x, j]/M[x, j2]
    is nondecreasing in x from row j2 down.  Consecutive-difference checks
    suffice for (2) and (3) since monotonicity is transitive.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    n = m.shape[0]
    for i in range(n):
        lower = m[i, : i + 1]
        if not ((lower > 0.0).all() and (lower <= 1.0 + tol).all()):
            return False
        if i and (np.diff(lower) < -tol).any():
            return False
    for j2 in range(n):
        block = m[j2:, : j2 + 1]
        ratios = block / block[:, -1:]
        if (np.diff(ratios, axis=0) < -tol).any():
            return False
    return True
