# coding=utf-8
import json
import os

import matplotlib

matplotlib.use("Agg")

import numpy as np
import pytest
from PIL import Image

from pytdnerf.pydata.scene import load_scene
from pytdnerf.pyencode.hashgrid import HashGridConfig
from pytdnerf.pyfield import precision
from pytdnerf.pyfield.field import FieldModel

NATIVE = 40
TARGET = 20
ANGLE_X = 0.6911112070083618


def look_at(position, target=(0.0, 0.0, 0.0), up=(0.0, 0.0, 1.0)):
    """
    camera-to-world matrix of a camera at position looking at target (OpenGL, looks along -z)
    """
    position = np.asarray(position, dtype=np.float64)
    back = position - np.asarray(target, dtype=np.float64)
    back /= np.linalg.norm(back)
    right = np.cross(up, back)
    right /= np.linalg.norm(right)
    true_up = np.cross(back, right)
    pose = np.eye(4)
    pose[:3, 0], pose[:3, 1], pose[:3, 2], pose[:3, 3] = right, true_up, back, position
    return pose


def ring_poses(count, radius=4.0, height=1.5, phase=0.0):
    angles = phase + 2 * np.pi * np.arange(count) / count
    return [look_at((radius * np.cos(a), radius * np.sin(a), height)) for a in angles]


def frame_pixels(k):
    """
    RGBA: transparent border, a colored opaque square in the middle
    """
    rgba = np.zeros((NATIVE, NATIVE, 4), dtype=np.uint8)
    rgba[10:30, 10:30, 0] = 40 + 20 * k
    rgba[10:30, 10:30, 1] = 120
    rgba[10:30, 10:30, 2] = 200 - 10 * k
    rgba[10:30, 10:30, 3] = 255
    return rgba


def write_scene(root, n_train=6, n_test=2):
    os.makedirs(root, exist_ok=True)
    for split, count, phase in (("train", n_train, 0.0), ("test", n_test, 0.3)):
        os.makedirs(os.path.join(root, split), exist_ok=True)
        frames = []
        for k, pose in enumerate(ring_poses(count, phase=phase)):
            name = "{}/r_{}".format(split, k)
            Image.fromarray(frame_pixels(k)).save(os.path.join(root, name + ".png"))
            frames.append({"file_path": "./" + name, "transform_matrix": pose.tolist()})
        with open(os.path.join(root, "transforms_{}.json".format(split)), "w") as f:
            json.dump({"camera_angle_x": ANGLE_X, "frames": frames}, f)
    return root


@pytest.fixture(scope="session")
def scene_dir(tmp_path_factory):
    return write_scene(str(tmp_path_factory.mktemp("tiny_scene")))


@pytest.fixture(scope="session")
def scene(scene_dir):
    return load_scene(scene_dir, target_resolution=TARGET)


@pytest.fixture
def tiny_grid_config():
    # level 0 dense (5^3 <= 128), level 1 hashed
    return HashGridConfig(levels=2, table_size=128, features=2, base_resolution=4, finest_resolution=16)


@pytest.fixture
def model64(tiny_grid_config):
    model = FieldModel(tiny_grid_config, channels=3, precision_mode=precision.FULL64, seed=0, hidden=8)
    rng = np.random.default_rng(5)
    # larger tables than the 1e-4 init so finite differences see real signal
    for level, table in enumerate(model.grid.tables):
        model.grid.tables[level] = rng.uniform(-0.5, 0.5, size=table.shape)
    return model

