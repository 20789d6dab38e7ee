"""Coarse per-step observables of group motion and the metric they induce.

Three scaled quantities are combined: normalized mean group speed,
polarization of the reconstructed velocities, and the normalized number of
connected components of the interaction graph. Their convex combination
``X(t)`` lives in [0, 1], and the absolute difference ``|X(t1) - X(t2)|``
is a pseudometric on time steps that separates phases of group behavior.
"""

from __future__ import annotations

import warnings

import numpy as np
from dataclasses import dataclass
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist


class DegenerateSeriesWarning(UserWarning):
    """Raised when an observable hits a degenerate all-zero case."""


@dataclass
class ObservableSeries:
    """Per-step group observables; one entry per consecutive frame pair."""

    speed: np.ndarray
    polarization: np.ndarray
    components: np.ndarray
    coarse: np.ndarray
    weight_speed: float
    weight_polarization: float
    epsilon: float
    n_agents: int

    @property
    def n_steps(self) -> int:
        return self.coarse.shape[0]


def group_speed_series(maps, normalization: float | None = None) -> np.ndarray:
    """Norm of the group mean velocity per step, normalized by its maximum.

    The default normalization needs the whole series (two passes); passing an
    explicit ``normalization`` constant instead supports streaming use. An
    all-zero series is returned as all zeros (with a warning) instead of 0/0.
    """
    norms = np.array([float(np.linalg.norm(m.mean_velocity)) for m in maps])
    if norms.size == 0:
        raise ValueError("need at least one correspondence step")
    if normalization is not None:
        if normalization <= 0:
            raise ValueError("normalization constant must be positive")
        return norms / normalization
    peak = norms.max()
    if peak == 0.0:
        warnings.warn("group mean velocity is zero at every step", DegenerateSeriesWarning, stacklevel=2)
        return norms
    return norms / peak


def polarization(velocities: np.ndarray) -> float:
    """Normalized magnitude of the summed unit velocity directions.

    Agents with exactly zero velocity have no direction and are excluded;
    the normalization uses the count of included agents. Returns 0 (with a
    warning) when every velocity is zero.
    """
    v = np.asarray(velocities, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise ValueError("velocities must have shape (N, 2)")
    norms = np.linalg.norm(v, axis=1)
    keep = norms > 0.0
    if not keep.any():
        warnings.warn("all velocities are zero; polarization undefined", DegenerateSeriesWarning, stacklevel=2)
        return 0.0
    units = v[keep] / norms[keep, None]
    return min(float(np.linalg.norm(units.sum(axis=0)) / keep.sum()), 1.0)


def polarization_series(maps) -> np.ndarray:
    return np.array([polarization(m.velocities) for m in maps])


def interaction_epsilon(positions: np.ndarray, mode: str = "all_pairs") -> float:
    """Interaction radius derived from the whole dataset.

    ``all_pairs``: mean distance over every unordered agent pair and every
    frame. ``nearest_neighbor``: mean over agents and frames of each agent's
    nearest-neighbor distance.
    """
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 2:
        pos = pos[None, :, :]
    if pos.ndim != 3 or pos.shape[2] != 2:
        raise ValueError("positions must have shape (T, N, 2)")
    if pos.shape[1] < 2:
        raise ValueError("interaction radius needs at least 2 agents")
    if mode == "all_pairs":
        total = 0.0
        count = 0
        for frame in pos:
            d = pdist(frame)
            total += d.sum()
            count += d.size
        return total / count
    if mode == "nearest_neighbor":
        total = 0.0
        for frame in pos:
            dist, _ = cKDTree(frame).query(frame, k=2)
            total += dist[:, 1].sum()
        return total / (pos.shape[0] * pos.shape[1])
    raise ValueError(f"unknown epsilon mode {mode!r} (use 'all_pairs' or 'nearest_neighbor')")


class _DisjointSet:
    """Union-find with path halving and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, i: int) -> int:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return
        if self.rank[ri] < self.rank[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        if self.rank[ri] == self.rank[rj]:
            self.rank[ri] += 1

    def count(self) -> int:
        return sum(1 for i, p in enumerate(self.parent) if self.find(i) == i and p == i)


def connected_component_count(positions: np.ndarray, radius: float) -> int:
    """Number of connected components of the distance-``radius`` graph.

    Agents at distance exactly ``radius`` are linked (range search is
    inclusive).
    """
    pos = np.asarray(positions, dtype=float)
    if radius <= 0:
        raise ValueError("radius must be positive")
    n = pos.shape[0]
    dsu = _DisjointSet(n)
    pairs = cKDTree(pos).query_pairs(radius, output_type="ndarray")
    for i, j in pairs:
        dsu.union(int(i), int(j))
    return dsu.count()


def component_series(positions: np.ndarray, radius: float) -> np.ndarray:
    """Component count per frame."""
    pos = np.asarray(positions, dtype=float)
    return np.array([connected_component_count(frame, radius) for frame in pos], dtype=int)


def coarse_observable(
    speed: np.ndarray,
    polarization: np.ndarray,
    components: np.ndarray,
    n_agents: int,
    weight_speed: float = 1.0 / 3.0,
    weight_polarization: float = 1.0 / 3.0,
) -> np.ndarray:
    """Convex combination of speed, polarization, and component fraction."""
    if weight_speed < 0 or weight_polarization < 0:
        raise ValueError("observable weights must be non-negative")
    if weight_speed + weight_polarization > 1.0:
        raise ValueError("observable weights must sum to at most 1")
    speed = np.asarray(speed, dtype=float)
    pol = np.asarray(polarization, dtype=float)
    comp = np.asarray(components, dtype=float)
    structure = 1.0 - weight_speed - weight_polarization
    x = weight_speed * speed + weight_polarization * pol + structure * comp / n_agents
    return np.clip(x, 0.0, 1.0)


def distance_matrix(series: np.ndarray) -> np.ndarray:
    """Pairwise absolute differences of a scalar series."""
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("series must be nonempty")
    return np.abs(x[:, None] - x[None, :])


def compute_observables(
    dataset,
    maps,
    weight_speed: float = 1.0 / 3.0,
    weight_polarization: float = 1.0 / 3.0,
    epsilon_mode: str = "all_pairs",
    prefer_unwrapped: bool = True,
) -> ObservableSeries:
    """Full observable series for a dataset and its correspondence maps.

    The interaction radius aggregates over all frames; component counts and
    polarization are evaluated at the source frame of each step.
    """
    track = dataset.analysis_track(prefer_unwrapped)
    epsilon = interaction_epsilon(track, mode=epsilon_mode)
    components = component_series(track[:-1], epsilon)
    speed = group_speed_series(maps)
    pol = polarization_series(maps)
    coarse = coarse_observable(
        speed, pol, components, dataset.n_agents, weight_speed, weight_polarization
    )
    return ObservableSeries(
        speed=speed,
        polarization=pol,
        components=components,
        coarse=coarse,
        weight_speed=weight_speed,
        weight_polarization=weight_polarization,
        epsilon=epsilon,
        n_agents=dataset.n_agents,
    )
