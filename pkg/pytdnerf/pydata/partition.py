# coding=utf-8
"""
Purpose:   [1] split the training frames of a scene across federated clients
           [2] IID: seeded shuffle dealt round-robin; non-IID: contiguous azimuth sectors
           [3] write / read the plan as "frame_id client_id" text lines

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  plan = partition(scene, n_clients=4, mode="non_iid", seed=42)
           plan.write("runs/lego/partition.txt")

"""

import logging
import os
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from pytdnerf.errors import ConfigError

logger = logging.getLogger(__name__)

IID = "iid"
NON_IID = "non_iid"
PARTITION_MODES = (IID, NON_IID)


def normalize_mode(mode):
    """
    accept iid / IID / non-iid / non_IID / noniid spellings
    """
    key = str(mode).strip().lower().replace("-", "_")
    if key == "noniid":
        key = NON_IID
    if key not in PARTITION_MODES:
        raise ConfigError("unknown partition mode {!r}, expected one of {}".format(mode, PARTITION_MODES))
    return key


@dataclass
class PartitionPlan:
    """
    assignments[k] is the client of frame_ids[k]; frame ids index Scene.cameras
    """
    mode: str
    n_clients: int
    frame_ids: List[int]
    assignments: List[int]

    def client_frames(self, client_id):
        return [f for f, c in zip(self.frame_ids, self.assignments) if c == client_id]

    def groups(self) -> Dict[int, List[int]]:
        return {c: self.client_frames(c) for c in range(self.n_clients)}

    def sizes(self):
        return [len(self.client_frames(c)) for c in range(self.n_clients)]

    def write(self, path):
        """
        one "frame_id client_id" line per training frame, preceded by a comment header
        """
        folder = os.path.dirname(path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(path, "w") as f:
            f.write("# mode={} n_clients={}\n".format(self.mode, self.n_clients))
            for frame_id, client_id in zip(self.frame_ids, self.assignments):
                f.write("{} {}\n".format(frame_id, client_id))
        return path

    @classmethod
    def read(cls, path):
        mode, n_clients = IID, 0
        frame_ids, assignments = [], []
        with open(path, "r") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for item in line[1:].split():
                        key, _, value = item.partition("=")
                        if key == "mode":
                            mode = normalize_mode(value)
                        elif key == "n_clients":
                            n_clients = int(value)
                    continue
                frame_id, client_id = line.split()
                frame_ids.append(int(frame_id))
                assignments.append(int(client_id))
        n_clients = max(n_clients, max(assignments) + 1 if assignments else 0)
        return cls(mode=mode, n_clients=n_clients, frame_ids=frame_ids, assignments=assignments)


def camera_azimuth(scene, frame_ids):
    """
    azimuth atan2(y, x) of each camera position around the z-up axis through the bounds center
    """
    center = scene.center
    pos = np.array([scene.cameras[i].position for i in frame_ids]).reshape(-1, 3) - center[None, :]
    return np.arctan2(pos[:, 1], pos[:, 0])


def partition(scene, n_clients, mode=IID, seed=42):
    """
    deal training frames to clients
    :param scene: Scene
    :param n_clients: int >= 1
    :param mode: iid or non_iid
    :param seed: int, only the iid shuffle uses it
    :return: PartitionPlan, client sizes differ by at most one
    """
    mode = normalize_mode(mode)
    train_ids = np.array(scene.train_ids, dtype=np.int64)
    if n_clients < 1:
        raise ConfigError("n_clients must be >= 1, got {}".format(n_clients))
    if n_clients > len(train_ids):
        raise ConfigError("cannot split {} training frames across {} clients".format(len(train_ids), n_clients))

    if mode == IID:
        rng = np.random.default_rng(seed)
        order = train_ids[rng.permutation(len(train_ids))]
        clients = np.arange(len(order)) % n_clients
    else:
        azimuth = camera_azimuth(scene, train_ids)
        # lexsort keys are applied last-first: azimuth, then frame index
        order = train_ids[np.lexsort((train_ids, azimuth))]
        clients = np.empty(len(order), dtype=np.int64)
        for c, chunk in enumerate(np.array_split(np.arange(len(order)), n_clients)):
            clients[chunk] = c

    plan = PartitionPlan(mode=mode, n_clients=int(n_clients),
                         frame_ids=[int(f) for f in order], assignments=[int(c) for c in clients])
    logger.info("partition %s into %d clients, sizes %s", mode, n_clients, plan.sizes())
    return plan
