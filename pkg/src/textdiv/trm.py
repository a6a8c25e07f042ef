"""Triangle-rank divergence over a joint distance matrix.

Every triangle with two points on one side (both candidates or both
references) and one on the other is classified by where its same-side edge
ranks among the triangle's three edges.  If candidates and references come
from the same distribution the three ranks are equally likely; the
statistic is the L1 gap between the observed rank fractions and uniform
1/3, which is 0 at perfect balance and 4/3 when one rank takes everything.

Rank masses are integers in units of 1/6 (a tie never splits a unit into
anything finer than thirds or halves), so accumulation is exact and the
statistic is identical across backends and thread counts.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ._kernels import backend
from .distances import DistanceMatrix
from .errors import InsufficientSamplesError

TIE_POLICIES = ("fractional", "inclusive")
SYMMETRIZATIONS = ("average", "directed-both")

_THIRD = 1.0 / 3.0

Triangle = namedtuple("Triangle", ["side", "i", "j", "k"])


def triangle_count(n: int, m: int) -> int:
    """Number of two-one triangles for side sizes n and m."""
    return n * (n - 1) // 2 * m + m * (m - 1) // 2 * n


def enumerate_triangles(n: int, m: int) -> Iterator[Triangle]:
    """Yield every two-one triangle in a fixed order.

    ``side`` names the set contributing the pair; ``i < j`` are side-local
    indices of the pair and ``k`` is a side-local index into the other set.
    Candidate-pair triangles come first, then reference-pair, each with
    (i, j, k) ascending.
    """
    if triangle_count(n, m) == 0:
        raise InsufficientSamplesError(
            f"no two-one triangles exist for n={n}, m={m}; "
            "need at least two points on one side and one on the other"
        )
    for i in range(n - 1):
        for j in range(i + 1, n):
            for k in range(m):
                yield Triangle("candidates", i, j, k)
    for i in range(m - 1):
        for j in range(i + 1, m):
            for k in range(n):
                yield Triangle("references", i, j, k)


def _classify_sixths(
    d_in: float, e0: float, e1: float, inclusive: bool
) -> tuple[int, int, int]:
    # Integer twin of the kernel classifier; masses are in units of 1/6.
    if inclusive:
        return (
            6 if (d_in <= e0 and d_in <= e1) else 0,
            6 if (e0 <= d_in <= e1 or e1 <= d_in <= e0) else 0,
            6 if (e0 <= d_in and e1 <= d_in) else 0,
        )
    lo = int(e0 < d_in) + int(e1 < d_in)
    hi = int(e0 <= d_in) + int(e1 <= d_in)
    unit = 6 // (hi - lo + 1)
    out = [0, 0, 0]
    for slot in range(lo, hi + 1):
        out[slot] = unit
    return out[0], out[1], out[2]


def classify_triangle(
    d_in: float, d_cross1: float, d_cross2: float, tie_policy: str = "fractional"
) -> tuple[float, float, float]:
    """Mass each rank slot receives from one triangle.

    Under ``fractional`` the triangle carries one unit of mass, split evenly
    across the rank span its same-side edge ties over, so the slots always
    sum to 1.  Under ``inclusive`` every rank whose defining comparisons
    hold gets full mass, so a tied triangle can feed several slots at once.
    """
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"tie_policy must be one of {TIE_POLICIES}, got {tie_policy!r}")
    m0, m1, m2 = _classify_sixths(d_in, d_cross1, d_cross2, tie_policy == "inclusive")
    return (m0 / 6.0, m1 / 6.0, m2 / 6.0)


@dataclass(frozen=True)
class Partition:
    """Assignment of the joint indices into candidate and reference roles."""

    candidate_indices: tuple[int, ...]
    size: int

    def __post_init__(self):
        idx = self.candidate_indices
        if not idx:
            raise ValueError("a partition needs at least one candidate index")
        if len(idx) >= self.size:
            raise ValueError("a partition needs at least one reference index")
        if list(idx) != sorted(set(idx)):
            raise ValueError("candidate indices must be strictly ascending")
        if idx[0] < 0 or idx[-1] >= self.size:
            raise ValueError(f"candidate indices must lie in [0, {self.size})")

    @classmethod
    def observed(cls, n: int, m: int) -> "Partition":
        """The file-order assignment: the first n joint indices are candidates."""
        return cls(candidate_indices=tuple(range(n)), size=n + m)

    @property
    def n(self) -> int:
        return len(self.candidate_indices)

    @property
    def m(self) -> int:
        return self.size - self.n

    def reference_indices(self) -> tuple[int, ...]:
        inside = set(self.candidate_indices)
        return tuple(i for i in range(self.size) if i not in inside)


@dataclass(frozen=True)
class TrmResult:
    """Rank masses and the divergence statistic for one partition.

    ``i0 + i1 + i2 == total`` under the fractional tie policy; under the
    inclusive policy the masses can overcount (``q`` may then exceed 4/3).
    """

    i0: float
    i1: float
    i2: float
    total: float
    q: float


def masses_for_combos(
    values: np.ndarray,
    combos: np.ndarray,
    tie_policy: str = "fractional",
    symmetrization: str = "average",
) -> np.ndarray:
    """(P, 3) int64 rank masses (units of 1/6) for a batch of partitions.

    ``average`` classifies triangles on the symmetrized matrix (D + D.T)/2;
    ``directed-both`` classifies each triangle twice, once per direction
    convention, and both contribute.
    """
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"tie_policy must be one of {TIE_POLICIES}, got {tie_policy!r}")
    if symmetrization not in SYMMETRIZATIONS:
        raise ValueError(
            f"symmetrization must be one of {SYMMETRIZATIONS}, got {symmetrization!r}"
        )
    combos = np.ascontiguousarray(combos, dtype=np.int32)
    inclusive = tie_policy == "inclusive"
    if symmetrization == "average":
        edge = np.ascontiguousarray((values + values.T) * 0.5)
        return backend.trm_masses_batch(edge, combos, inclusive)
    forward = np.ascontiguousarray(values)
    reverse = np.ascontiguousarray(values.T)
    return backend.trm_masses_batch(forward, combos, inclusive) + backend.trm_masses_batch(
        reverse, combos, inclusive
    )


def q_from_masses(
    masses: np.ndarray, n: int, m: int, symmetrization: str = "average"
) -> np.ndarray:
    """Divergence values from integer rank masses for partitions of (n, m)."""
    t = triangle_count(n, m)
    if symmetrization == "directed-both":
        t *= 2
    s = 6.0 * t
    return (
        np.abs(masses[:, 0] / s - _THIRD)
        + np.abs(masses[:, 1] / s - _THIRD)
        + np.abs(masses[:, 2] / s - _THIRD)
    )


def trm_statistic(
    matrix: DistanceMatrix,
    partition: Partition | None = None,
    tie_policy: str = "fractional",
    symmetrization: str = "average",
) -> TrmResult:
    """Triangle-rank divergence for one partition of a distance matrix.

    Args:
        matrix: Joint distance matrix (directed; symmetrization applies here).
        partition: Role assignment; defaults to the observed one.
        tie_policy: See :func:`classify_triangle`.
        symmetrization: See :func:`masses_for_combos`.

    Returns:
        A :class:`TrmResult`; ``total`` counts classified triangles
        (doubled under directed-both).
    """
    if partition is None:
        partition = Partition.observed(matrix.n, matrix.m)
    if partition.size != matrix.size:
        raise ValueError(
            f"partition covers {partition.size} indices, matrix has {matrix.size}"
        )
    n, m = partition.n, partition.m
    if triangle_count(n, m) == 0:
        raise InsufficientSamplesError(
            f"no two-one triangles exist for n={n}, m={m}; "
            "need at least two points on one side and one on the other"
        )
    combos = np.asarray([partition.candidate_indices], dtype=np.int32)
    masses = masses_for_combos(matrix.values, combos, tie_policy, symmetrization)
    total = triangle_count(n, m) * (2 if symmetrization == "directed-both" else 1)
    m0, m1, m2 = (int(v) for v in masses[0])
    # scalar form of q_from_masses, same operations in the same order
    s = 6.0 * total
    q = abs(m0 / s - _THIRD) + abs(m1 / s - _THIRD) + abs(m2 / s - _THIRD)
    return TrmResult(
        i0=m0 / 6.0, i1=m1 / 6.0, i2=m2 / 6.0, total=float(total), q=q
    )
