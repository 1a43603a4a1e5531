# coding=utf-8
"""
Purpose:   [1] fixed-step ray marching through occupied cells of the occupancy grid
           [2] flattened SampleBatch: samples of one ray contiguous and ordered by t

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  batch = march_rays(origins, directions, t_near, t_far, occ_grid, max_samples=1024)

"""

from dataclasses import dataclass

import numpy as np

from pytdnerf.pyrender.occupancy import MARCH_STEP, is_occupied

MAX_SAMPLES = 1024


@dataclass
class SampleBatch:
    positions: np.ndarray
    directions: np.ndarray
    dt: np.ndarray
    ray_id: np.ndarray
    ray_count: int
    t: np.ndarray

    def __len__(self):
        return int(self.ray_id.shape[0])

    def samples_per_ray(self):
        return np.bincount(self.ray_id, minlength=self.ray_count)

    def select_rays(self, rays):
        """
        keep the samples of the given (sorted, distinct) rays, renumbered 0..len(rays)-1
        """
        rays = np.asarray(rays, dtype=np.int64)
        remap = np.full(self.ray_count, -1, dtype=np.int64)
        remap[rays] = np.arange(len(rays))
        keep = remap[self.ray_id] >= 0
        return SampleBatch(positions=self.positions[keep], directions=self.directions[keep], dt=self.dt[keep],
                           ray_id=remap[self.ray_id[keep]], ray_count=len(rays), t=self.t[keep])

    @classmethod
    def concatenate(cls, batches):
        offsets = np.cumsum([0] + [b.ray_count for b in batches])
        return cls(positions=np.concatenate([b.positions for b in batches]).reshape(-1, 3),
                   directions=np.concatenate([b.directions for b in batches]).reshape(-1, 3),
                   dt=np.concatenate([b.dt for b in batches]),
                   ray_id=np.concatenate([b.ray_id + o for b, o in zip(batches, offsets)]).astype(np.int64),
                   ray_count=int(offsets[-1]),
                   t=np.concatenate([b.t for b in batches]))


def empty_batch(ray_count=0):
    return SampleBatch(positions=np.zeros((0, 3)), directions=np.zeros((0, 3)), dt=np.zeros(0),
                       ray_id=np.zeros(0, dtype=np.int64), ray_count=int(ray_count), t=np.zeros(0))


def march_rays(origins, directions, t_near, t_far, grid, max_samples=MAX_SAMPLES, step=MARCH_STEP):
    """
    step midpoints t_near + (k + 0.5) * step for k < floor((t_far - t_near) / step);
    keep the occupied ones, at most max_samples per ray
    :param origins: (n, 3)
    :param directions: (n, 3) unit
    :param t_near: (n,)
    :param t_far: (n,)
    :param grid: OccupancyGrid
    :return: SampleBatch with ray_count n
    """
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    directions = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    t_near = np.asarray(t_near, dtype=np.float64).reshape(-1)
    t_far = np.asarray(t_far, dtype=np.float64).reshape(-1)
    n = origins.shape[0]
    n_steps = np.maximum(np.floor((t_far - t_near) / step), 0).astype(np.int64)
    total = int(n_steps.sum())
    if total == 0:
        return empty_batch(n)
    ray = np.repeat(np.arange(n), n_steps)
    first = np.cumsum(n_steps) - n_steps
    k = np.arange(total) - first[ray]
    t = t_near[ray] + (k + 0.5) * step
    pos = np.clip(origins[ray] + t[:, None] * directions[ray], 0.0, 1.0)
    occupied = is_occupied(grid, pos)
    # running count of emitted samples per ray
    emitted = np.cumsum(occupied)
    before = np.concatenate([[0], emitted])[first]
    keep = occupied & (emitted - before[ray] <= max_samples)
    ray = ray[keep]
    return SampleBatch(positions=pos[keep], directions=directions[ray], dt=np.full(ray.shape[0], step),
                       ray_id=ray, ray_count=n, t=t[keep])


def march_ray(ray, grid, max_samples=MAX_SAMPLES, step=MARCH_STEP):
    """
    :param ray: Ray
    :param grid: OccupancyGrid
    :return: positions (k, 3), dt (k,)
    """
    batch = march_rays(ray.origin[None, :], ray.direction[None, :], [ray.t_near], [ray.t_far], grid,
                       max_samples=max_samples, step=step)
    return batch.positions, batch.dt
