"""Two-dimensional database partition over (vertex count, edge count).

Graphs are points (n_v, n_e). The plane is cut into diamond-shaped cells
of side ``length`` along the rotated axes u = n_v + n_e and w = n_e - n_v,
anchored at an origin (x0, y0): cell (i, j) holds the points with
i = floor((u - (x0+y0)) / length) and j = floor((w - (y0-x0)) / length).

A query with threshold tau only needs cells intersecting the diamond
|n_v - n_vh| + |n_e - n_eh| <= tau, and that diamond maps to a plain
rectangle in (i, j) space.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["PartitionParams", "subregion_of", "query_region"]

RegionId = tuple[int, int]


@dataclass(frozen=True)
class PartitionParams:
    """Partition anchor and cell side length.

    The origin is typically (min n_v, min n_e) over the database, which
    keeps cell indices small but is not required for correctness; indices
    may be negative.
    """

    x0: int
    y0: int
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("cell side length must be >= 1")


def subregion_of(n_v: int, n_e: int, params: PartitionParams) -> RegionId:
    """Cell index of the point (n_v, n_e).

    Floor division keeps the mapping total for points below the origin.
    """
    i = (n_v + n_e - (params.x0 + params.y0)) // params.length
    j = (n_e - n_v - (params.y0 - params.x0)) // params.length
    return i, j


def query_region(
    n_v: int, n_e: int, tau: int, params: PartitionParams
) -> tuple[int, int, int, int]:
    """Inclusive cell rectangle (i1, i2, j1, j2) covering a query diamond.

    Any graph g with |n_v(g) - n_v| + |n_e(g) - n_e| <= tau satisfies
    both |u(g) - u| <= tau and |w(g) - w| <= tau in rotated coordinates,
    and floor is monotone, so g's cell lands inside the rectangle.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    base_u = params.x0 + params.y0
    base_w = params.y0 - params.x0
    i1 = (n_e - tau + n_v - base_u) // params.length
    i2 = (n_e + tau + n_v - base_u) // params.length
    j1 = (n_e - tau - n_v - base_w) // params.length
    j2 = (n_e + tau - n_v - base_w) // params.length
    return i1, i2, j1, j2
