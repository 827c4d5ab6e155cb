"""Similarity network of units sharing an identical territorial profile.

Units with the same five-attribute profile form a clique with unit coupling
weight; the graph is therefore a disjoint union of cliques and is stored as
a partition, never as a dense matrix. Per-group running sums give O(1)
neighbor sums during sampling, and the coupling spectrum follows in closed
form from the group sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError


@dataclass
class InteractionGraph:
    """Partition of unit indices into identical-profile groups.

    Implied coupling: J_ij = 1 iff i != j and group_of[i] == group_of[j],
    else 0 (symmetric, zero diagonal).
    """

    group_of: np.ndarray                 # unit index -> group id
    group_sizes: np.ndarray              # group id -> member count
    members: tuple[np.ndarray, ...]      # group id -> member indices
    profile_keys: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return int(self.group_of.shape[0])

    @property
    def n_groups(self) -> int:
        return int(self.group_sizes.shape[0])

    def degree(self, i: int) -> int:
        return int(self.group_sizes[self.group_of[i]]) - 1

    def degrees(self) -> np.ndarray:
        return self.group_sizes[self.group_of] - 1


def build_graph(dataset: Dataset) -> InteractionGraph:
    """Group units by exact equality of all five profile attributes."""
    ids: dict[tuple[int, ...], int] = {}
    group_of = np.empty(dataset.n, dtype=np.int64)
    for i, rec in enumerate(dataset.records):
        gid = ids.setdefault(rec.profile, len(ids))
        group_of[i] = gid
    n_groups = len(ids)
    sizes = np.bincount(group_of, minlength=n_groups)
    members = tuple(np.nonzero(group_of == g)[0] for g in range(n_groups))
    keys = tuple(ids)  # insertion order matches group ids
    return InteractionGraph(group_of, sizes, members, keys)


class GroupSums:
    """Chain-local cache of per-group spin sums.

    The cache is refreshed incrementally on every accepted single-site
    update; call :meth:`recompute` periodically to cancel floating-point
    accumulation drift.
    """

    __slots__ = ("graph", "sums")

    def __init__(self, graph: InteractionGraph, s):
        self.graph = graph
        self.recompute(s)

    def recompute(self, s) -> None:
        self.sums = np.bincount(
            self.graph.group_of, weights=np.asarray(s, dtype=float),
            minlength=self.graph.n_groups,
        )

    def neighbor_sum(self, i: int, s_i: float) -> float:
        return float(self.sums[self.graph.group_of[i]]) - s_i

    def update(self, i: int, old: float, new: float) -> None:
        self.sums[self.graph.group_of[i]] += new - old


def neighbor_sum(graph: InteractionGraph, s, i: int, sums: GroupSums | None = None) -> float:
    """Coupling-weighted sum of the neighbors of unit ``i``.

    With a ``GroupSums`` cache this is O(1); otherwise the group members are
    summed directly.
    """
    s = np.asarray(s, dtype=float)
    if sums is not None:
        return sums.neighbor_sum(i, float(s[i]))
    group = graph.members[graph.group_of[i]]
    return float(s[group].sum()) - float(s[i])


def spectrum_extremes(graph: InteractionGraph) -> tuple[float, float]:
    """Extreme eigenvalues of the implied coupling matrix.

    A clique of size m contributes eigenvalues {m-1, -1 x (m-1)}, so for a
    disjoint union of cliques the extremes follow from the group sizes alone.
    Both extremes are nonzero as soon as any group has two members, which is
    what makes the energy non-convex.
    """
    if graph.n < 2:
        raise DataError("spectrum needs at least two units")
    largest = int(graph.group_sizes.max())
    lam_max = float(largest - 1)
    lam_min = -1.0 if largest >= 2 else 0.0
    return lam_max, lam_min
