"""AP/UE deployments on a square area with optional wrap-around."""
from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from .config import ConfigError

MAX_GRID_ASPECT = 4


@dataclass(frozen=True)
class Deployment:
    mode: str
    ap_positions: np.ndarray  # (n_aps, 2)
    ue_positions: np.ndarray  # (K, 2)
    L: int
    M: int
    K: int

    @property
    def antennas_per_ap(self):
        return self.L * self.M if self.mode == "cellular" else self.M


@dataclass(frozen=True)
class GeometryTable:
    d: np.ndarray  # (K, n_aps) 3-D distances in meters
    phi: np.ndarray  # (K, n_aps) azimuths in (-pi, pi]


def grid_shape(L):
    """``(rows, cols)`` with ``rows`` the largest divisor of ``L`` not above ``sqrt(L)``."""
    r = max(k for k in range(1, math.isqrt(L) + 1) if L % k == 0)
    c = L // r
    if c / r > MAX_GRID_ASPECT:
        raise ConfigError(
            f"L={L} gives a {r}x{c} AP grid (aspect {c / r:.1f} > {MAX_GRID_ASPECT}); "
            "pick an L with a divisor closer to sqrt(L)"
        )
    return r, c


def ap_grid(L, side):
    """AP positions at the centres of the cells of an ``r x c`` grid."""
    r, c = grid_shape(L)
    xs = (np.arange(c) + 0.5) * side / c
    ys = (np.arange(r) + 0.5) * side / r
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack([X.ravel(), Y.ravel()])


def build_deployment(config, rng):
    """Place APs deterministically and draw ``K`` UEs uniformly on the square."""
    if min(config.L, config.M, config.K) < 1:
        raise ConfigError("L, M and K must be >= 1")
    side = config.area.side_length
    if config.mode == "cellular":
        aps = np.array([[side / 2.0, side / 2.0]])
    else:
        aps = ap_grid(config.L, side)
    ues = rng.uniform(0.0, side, size=(config.K, 2))
    return Deployment(config.mode, aps, ues, config.L, config.M, config.K)


_SHIFTS = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)], dtype=float)


def pairwise_geometry(deployment, area):
    """Distances and azimuths (AP to UE) for all pairs.

    Under wrap-around the displacement is the shortest one among the nine
    images of each AP; the azimuth is taken from that same displacement.
    """
    ue = np.asarray(deployment.ue_positions, dtype=float)
    ap = np.asarray(deployment.ap_positions, dtype=float)
    disp = ue[:, None, :] - ap[None, :, :]  # (K, n_aps, 2)
    if area.wrap_around:
        cand = disp[:, :, None, :] - area.side_length * _SHIFTS[None, None, :, :]
        k = np.argmin(np.sum(cand**2, axis=-1), axis=-1)
        disp = np.take_along_axis(cand, k[..., None, None], axis=2)[:, :, 0, :]
    d2 = np.hypot(disp[..., 0], disp[..., 1])
    phi = np.arctan2(disp[..., 1], disp[..., 0])
    phi = np.where(phi <= -np.pi, np.pi, phi)
    return GeometryTable(d=np.sqrt(d2**2 + area.ap_height**2), phi=phi)

