"""Mass-conserving local scaling limiter for cell masses c_j = h_j rho_j.

For a negative anchor the smallest admissible neighbourhood S with positive
mean is searched (1D: alternate left/right at growing distance; 2D: growing
clipped square rings, y outer and x inner), and on S

    c~_j = theta c_j + (1 - theta) mean,   theta = min(1, mean / (mean - c_min)),

which maps the minimum to zero and leaves the sum over S unchanged.
Cells equal to zero never join S. Anchors are processed in ascending index
order on the already-updated masses, so ordering is part of the result.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import LimiterError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Neighborhood:
    anchor: int | tuple
    members: tuple
    mean: float
    c_min: float

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def theta(self) -> float:
        return min(1.0, self.mean / (self.mean - self.c_min))


class LimiterEvent(NamedTuple):
    step: int
    anchor: int | tuple
    size: int
    theta: float
    mass_before: float
    mass_after: float


def _neighborhood(c, anchor, members) -> Neighborhood:
    vals = [float(c[m]) for m in members]
    return Neighborhood(anchor, tuple(members), math.fsum(vals) / len(vals), min(vals))


def _check_anchor(c, anchor):
    if not c[anchor] < 0:
        raise LimiterError(f"anchor {anchor} is not negative (c = {c[anchor]!r})")
    if not math.fsum(np.ravel(c)) > 0:
        raise LimiterError("total mass must be positive for the limiter to apply")


def find_neighborhood_1d(c, k: int) -> Neighborhood:
    c = np.asarray(c, dtype=float)
    _check_anchor(c, k)
    n = c.size
    members = [k]
    vals = [float(c[k])]
    m = 1
    while k - m >= 0 or k + m < n:
        for j in (k - m, k + m):
            if 0 <= j < n and c[j] != 0:
                members.append(j)
                vals.append(float(c[j]))
            if math.fsum(vals) > 0:
                return _neighborhood(c, k, members)
        m += 1
    raise LimiterError(f"no admissible neighbourhood around index {k}")


def find_neighborhood_2d(c, k: int, l: int) -> Neighborhood:
    c = np.asarray(c, dtype=float)
    _check_anchor(c, (k, l))
    nx, ny = c.shape
    members = [(k, l)]
    seen = {(k, l)}
    vals = [float(c[k, l])]
    m = 1
    while True:
        for dy in range(max(0, l - m), min(l + m, ny - 1) + 1):
            for dx in range(max(0, k - m), min(k + m, nx - 1) + 1):
                if (dx, dy) in seen or c[dx, dy] == 0:
                    continue
                seen.add((dx, dy))
                members.append((dx, dy))
                vals.append(float(c[dx, dy]))
                if math.fsum(vals) > 0:
                    return _neighborhood(c, (k, l), members)
        if k - m <= 0 and l - m <= 0 and k + m >= nx - 1 and l + m >= ny - 1:
            raise LimiterError(f"no admissible neighbourhood around {(k, l)}")
        m += 1


def _scaled(c, nbhd: Neighborhood):
    theta = nbhd.theta
    idx = tuple(np.array(nbhd.members).T) if isinstance(nbhd.anchor, tuple) else list(nbhd.members)
    out = np.array(c, dtype=float, copy=True)
    new = theta * out[idx] + (1.0 - theta) * nbhd.mean
    # the formula sends c_min to zero; only rounding can leave it below
    out[idx] = np.maximum(new, 0.0)
    return out, idx


def apply_scaling_1d(c, nbhd: Neighborhood) -> np.ndarray:
    return _scaled(c, nbhd)[0]


def apply_scaling_2d(c, nbhd: Neighborhood) -> np.ndarray:
    return _scaled(c, nbhd)[0]


def _limit(rho, weights, anchors, find, cap):
    rho = np.asarray(rho, dtype=float)
    c = weights * rho
    if not math.fsum(c.ravel()) > 0:
        raise LimiterError("total mass must be positive for the limiter to apply")
    out = rho.copy()
    events = []
    for anchor in anchors:
        if not c[anchor] < 0:
            continue
        nbhd = find(c, *np.atleast_1d(anchor))
        before = math.fsum(float(c[m]) for m in nbhd.members)
        c, idx = _scaled(c, nbhd)
        out[idx] = c[idx] / weights[idx]
        after = math.fsum(float(c[m]) for m in nbhd.members)
        events.append(LimiterEvent(0, anchor, nbhd.size, nbhd.theta, before, after))
        if cap is not None and nbhd.size > cap:
            log.warning("limiter neighbourhood of size %d around %s exceeds cap %d", nbhd.size, anchor, cap)
    return out, events


def limit_field_1d(rho, grid, cap: int | None = None):
    """Returns (limited density, list of LimiterEvent); events carry step=0."""
    return _limit(rho, grid.widths, range(np.size(rho)), find_neighborhood_1d, cap)


def limit_field_2d(rho, grid2, cap: int | None = None):
    nx, ny = grid2.shape
    # ascending flattened index with x fastest
    anchors = [(i, j) for j in range(ny) for i in range(nx)]
    return _limit(rho, grid2.areas, anchors, find_neighborhood_2d, cap)
