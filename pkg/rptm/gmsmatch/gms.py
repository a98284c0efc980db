"""
RPTM Grid-Based Motion Statistics
Coherence verification of nearest-neighbour matches.

A true match is supported by many matches between the neighbouring cells of
its cell pair; a false one is not. Each populated cell pair is scored by the
matches between paired 3x3 neighbourhoods and accepted when the score beats
alpha * sqrt(mean points per neighbouring cell).
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np

from ..config import GMSConfig
from ..errors import ConfigError, DimensionError
from ..features import FeatureSet
from .matcher import Match, match_brute_force

# Neighbourhood order (row-major 3x3, as (dx, dy)).
NEIGHBOR_OFFSETS = (
    (-1, -1), (0, -1), (1, -1),
    (-1, 0), (0, 0), (1, 0),
    (-1, 1), (0, 1), (1, 1),
)

# For each of the 8 rotated pairings, which B neighbour pairs with A neighbour k.
ROTATION_PATTERNS = np.array([
    [1, 2, 3, 4, 5, 6, 7, 8, 9],
    [4, 1, 2, 7, 5, 3, 8, 9, 6],
    [7, 4, 1, 8, 5, 2, 9, 6, 3],
    [8, 7, 4, 9, 5, 1, 6, 3, 2],
    [9, 8, 7, 6, 5, 4, 3, 2, 1],
    [6, 9, 8, 3, 5, 7, 2, 1, 4],
    [3, 6, 9, 2, 5, 8, 1, 4, 7],
    [2, 3, 6, 1, 5, 9, 4, 7, 8],
], dtype=np.intp) - 1

# Half-cell shifts of A's grid, in cells.
GRID_SHIFTS = ((0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5))


@dataclass(frozen=True)
class MatchSet:
    """Candidate matches with their GMS verdicts"""
    matches: List[Match]
    accepted: np.ndarray
    grid_size: int

    def __post_init__(self):
        accepted = np.asarray(self.accepted, dtype=bool).reshape(-1)
        accepted.setflags(write=False)
        object.__setattr__(self, "accepted", accepted)
        if len(accepted) != len(self.matches):
            raise DimensionError("accepted flags must parallel the matches")

    @property
    def accepted_count(self) -> int:
        return int(self.accepted.sum())

    def inliers(self) -> List[Match]:
        return [m for m, ok in zip(self.matches, self.accepted) if ok]


@lru_cache(maxsize=16)
def _neighbor_table(grid_size: int) -> np.ndarray:
    """(G*G + 1, 9) neighbour cell ids; G*G marks 'outside the grid'"""
    pad = grid_size * grid_size
    table = np.full((pad + 1, 9), pad, dtype=np.intp)
    for cy in range(grid_size):
        for cx in range(grid_size):
            for k, (dx, dy) in enumerate(NEIGHBOR_OFFSETS):
                nx, ny = cx + dx, cy + dy
                if 0 <= nx < grid_size and 0 <= ny < grid_size:
                    table[cy * grid_size + cx, k] = ny * grid_size + nx
    table.setflags(write=False)
    return table


def _cells(points: np.ndarray, dims, grid_size: int, shift=(0.0, 0.0)) -> np.ndarray:
    """Cell id per point, or G*G when a shifted grid leaves the point outside"""
    width, height = dims
    gx = np.floor(points[:, 0] / width * grid_size + shift[0]).astype(np.intp)
    gy = np.floor(points[:, 1] / height * grid_size + shift[1]).astype(np.intp)
    inside = (gx >= 0) & (gx < grid_size) & (gy >= 0) & (gy < grid_size)
    return np.where(inside, gy * grid_size + gx, grid_size * grid_size)


def _verify_pass(left: np.ndarray, right: np.ndarray, grid_size: int,
                 alpha: float, with_rotation: bool) -> np.ndarray:
    pad = grid_size * grid_size
    valid = left != pad
    accepted = np.zeros(len(left), dtype=bool)
    if not valid.any():
        return accepted

    neighbors = _neighbor_table(grid_size)
    motion = np.zeros((pad + 1, pad + 1), dtype=np.int64)
    np.add.at(motion, (left[valid], right[valid]), 1)
    points_left = np.bincount(left[valid], minlength=pad + 1)

    codes = left[valid] * (pad + 1) + right[valid]
    pair_codes = np.unique(codes)
    cell_a = pair_codes // (pad + 1)
    cell_b = pair_codes % (pad + 1)

    hood_a = neighbors[cell_a]
    hood_b = neighbors[cell_b]
    patterns = ROTATION_PATTERNS if with_rotation else ROTATION_PATTERNS[:1]
    score = np.zeros(len(pair_codes), dtype=np.int64)
    for pattern in patterns:
        score = np.maximum(score, motion[hood_a, hood_b[:, pattern]].sum(axis=1))

    n_avg = points_left[hood_a].sum(axis=1) / 9.0
    pair_ok = score > alpha * np.sqrt(n_avg)

    accepted[valid] = pair_ok[np.searchsorted(pair_codes, codes)]
    return accepted


def gms_verify(
    matches: Sequence[Match],
    a: FeatureSet,
    b: FeatureSet,
    grid_size: int = 20,
    alpha: float = 6.0,
    with_rotation: bool = True,
    with_shifts: bool = True,
) -> MatchSet:
    """Accept matches whose cell pair is supported by its neighbourhood"""
    if grid_size < 1:
        raise ConfigError(f"grid_size must be >= 1, got {grid_size}")
    if not alpha > 0:
        raise ConfigError(f"alpha must be > 0, got {alpha}")

    matches = list(matches)
    if not matches:
        return MatchSet([], np.zeros(0, dtype=bool), grid_size)

    query = np.array([m.query_idx for m in matches], dtype=np.intp)
    train = np.array([m.train_idx for m in matches], dtype=np.intp)
    pts_a = a.points[query]
    pts_b = b.points[train]

    right = _cells(pts_b, b.image_dims, grid_size)
    accepted = np.zeros(len(matches), dtype=bool)
    shifts = GRID_SHIFTS if with_shifts else GRID_SHIFTS[:1]
    for shift in shifts:
        left = _cells(pts_a, a.image_dims, grid_size, shift)
        accepted |= _verify_pass(left, right, grid_size, alpha, with_rotation)
    return MatchSet(matches, accepted, grid_size)


def match_count(a: FeatureSet, b: FeatureSet, cfg: Optional[GMSConfig] = None) -> int:
    """Verified match count from A to B"""
    if len(a) == 0 or len(b) == 0:
        return 0
    cfg = cfg or GMSConfig()
    verdict = gms_verify(
        match_brute_force(a, b), a, b,
        grid_size=cfg.grid_size,
        alpha=cfg.alpha,
        with_rotation=cfg.with_rotation,
        with_shifts=cfg.with_shifts,
    )
    return verdict.accepted_count
