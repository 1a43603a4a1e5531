# coding=utf-8
"""
Purpose:   [1] load NeRF-synthetic scenes (transforms_{train,test}.json + png frames)
           [2] downscale by box averaging, composite alpha on white, optional grayscale
           [3] generate camera rays and clip them against the scene bounds

Usage:     This code depends on the numpy pillow
           numpy is in the standard Anaconda distribution, pillow can be installed from conda or pip
           This code is compatible with python 3.8.x.

Examples:  scene = load_scene("data/lego", target_resolution=160, channels=3)
           ray = generate_ray(scene.cameras[0], 80, 80, scene.bounds)

"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from pytdnerf.errors import ContractError, SceneFormatError, SceneLoadError

logger = logging.getLogger(__name__)

# world x' = s * x + o puts the synthetic object's orbit around the unit cube
SCENE_SCALE = 1.0 / 3.0
SCENE_OFFSET = np.array([0.5, 0.5, 0.5])
UNIT_BOUNDS = (np.zeros(3), np.ones(3))

LUMA_BT601 = np.array([0.299, 0.587, 0.114])
SPLITS = ("train", "test")


@dataclass
class Camera:
    """
    pinhole camera, pose is camera-to-world (OpenGL convention, looks along -z)
    """
    width: int
    height: int
    focal: float
    pose: np.ndarray

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=np.float64)
        if self.pose.shape != (4, 4):
            raise SceneFormatError("camera pose must be 4x4, got {}".format(self.pose.shape))
        if self.width <= 0 or self.height <= 0:
            raise ContractError("camera size must be positive, got {}x{}".format(self.width, self.height))
        if not self.focal > 0:
            raise ContractError("focal must be positive, got {}".format(self.focal))
        rot = self.pose[:3, :3]
        if np.abs(rot.T @ rot - np.eye(3)).max() > 1e-4:
            raise ContractError("pose rotation is not orthonormal")

    @property
    def rotation(self):
        return self.pose[:3, :3]

    @property
    def position(self):
        return self.pose[:3, 3]


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    t_near: float
    t_far: float


@dataclass
class Scene:
    """
    calibrated frames of one scene, immutable after loading
    images[i] has shape (height, width, channels), values in [0,1]
    """
    cameras: List[Camera]
    images: List[np.ndarray]
    channels: int
    split: List[str]
    bounds: Tuple[np.ndarray, np.ndarray] = field(default_factory=lambda: UNIT_BOUNDS)
    name: str = ""
    background: float = 1.0

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ContractError("channels must be 1 or 3, got {}".format(self.channels))
        if not (len(self.cameras) == len(self.images) == len(self.split)):
            raise ContractError("cameras, images and split labels differ in length")
        for cam, img in zip(self.cameras, self.images):
            if img.shape != (cam.height, cam.width, self.channels):
                raise ContractError("image shape {} does not match camera {}x{}x{}".format(
                    img.shape, cam.height, cam.width, self.channels))

    def frame_ids(self, split):
        return [i for i, s in enumerate(self.split) if s == split]

    @property
    def train_ids(self):
        return self.frame_ids("train")

    @property
    def test_ids(self):
        return self.frame_ids("test")

    @property
    def center(self):
        lo, hi = self.bounds
        return 0.5 * (np.asarray(lo) + np.asarray(hi))

    def subset(self, frame_ids):
        """
        view of the scene restricted to given frames, split labels kept
        :param frame_ids: iterable of frame indices
        :return: Scene
        """
        ids = list(frame_ids)
        return Scene(cameras=[self.cameras[i] for i in ids],
                     images=[self.images[i] for i in ids],
                     channels=self.channels,
                     split=[self.split[i] for i in ids],
                     bounds=self.bounds,
                     name=self.name,
                     background=self.background)


def normalize_pose(pose):
    """
    map a world camera-to-world matrix into the unit-cube frame
    :param pose: 4x4 array
    :return: 4x4 array, rotation untouched, translation scaled and offset
    """
    out = np.array(pose, dtype=np.float64)
    out[:3, 3] = SCENE_SCALE * out[:3, 3] + SCENE_OFFSET
    return out


def box_downscale(image, target_width, target_height):
    """
    average pooling by an integer factor, like rebinning a magnetogram by halves
    :param image: (H, W, C) float array
    :param target_width: int
    :param target_height: int
    :return: (target_height, target_width, C)
    """
    h, w, c = image.shape
    if (h, w) == (target_height, target_width):
        return image
    if w % target_width != 0 or h % target_height != 0 or w // target_width != h // target_height:
        raise SceneFormatError("cannot box-downscale {}x{} to {}x{}: ratio is not an integer".format(
            w, h, target_width, target_height))
    f = w // target_width
    return image.reshape(target_height, f, target_width, f, c).mean(axis=(1, 3))


def to_grayscale(image):
    return (image[..., :3] @ LUMA_BT601)[..., None]


def _resolve_frame_path(root_path, file_path):
    path = os.path.normpath(os.path.join(root_path, file_path))
    if os.path.splitext(path)[1] == "":
        path = path + ".png"
    return path


def read_frame(path, background=1.0):
    """
    decode one 8-bit png, alpha composited on a constant background
    :param path: image file
    :param background: float in [0,1]
    :return: (H, W, 3) float32 in [0,1]
    """
    if not os.path.exists(path):
        raise SceneLoadError(path, "missing image")
    try:
        with Image.open(path) as im:
            im.load()
            has_alpha = im.mode in ("RGBA", "LA") or (im.mode == "P" and "transparency" in im.info)
            im = im.convert("RGBA" if has_alpha else "RGB")
            pixels = np.asarray(im, dtype=np.float32) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise SceneLoadError(path, "corrupt image ({})".format(e))
    if has_alpha:
        rgb, alpha = pixels[..., :3], pixels[..., 3:4]
        pixels = rgb * alpha + background * (1.0 - alpha)
    return pixels


def read_transforms(json_path):
    """
    read one transforms_{split}.json
    :return: (camera_angle_x, list of (file_path, 4x4 matrix))
    """
    if not os.path.exists(json_path):
        raise SceneLoadError(json_path, "missing transforms file")
    try:
        with open(json_path, "r", encoding="utf-8") as f:
            meta = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise SceneLoadError(json_path, "corrupt transforms file ({})".format(e))
    try:
        angle = float(meta["camera_angle_x"])
        frames = meta["frames"]
    except (KeyError, TypeError, ValueError):
        raise SceneFormatError("{} lacks camera_angle_x or frames".format(json_path))
    result = []
    for i, frame in enumerate(frames):
        try:
            matrix = np.array(frame["transform_matrix"], dtype=np.float64)
        except (KeyError, ValueError):
            raise SceneFormatError("{} frame {} has no usable transform_matrix".format(json_path, i))
        if matrix.shape != (4, 4):
            raise SceneFormatError("{} frame {}: transform_matrix must be 4x4, got {}".format(
                json_path, i, matrix.shape))
        result.append((frame["file_path"], matrix))
    return angle, result


def default_background(channels):
    """white behind rgb scenes, black behind grayscale ones"""
    return 1.0 if channels == 3 else 0.0


def load_scene(root_path, target_resolution=160, channels=3, splits=SPLITS, background=None):
    """
    load a NeRF-synthetic scene directory
    :param root_path: directory holding transforms_train.json / transforms_test.json
    :param target_resolution: int (square) or (width, height); None keeps native size
    :param channels: 3 for rgb, 1 for BT.601 grayscale
    :param splits: which transforms files to read
    :param background: constant transparent pixels are composited onto, None for default_background(channels)
    :return: Scene; nothing partial is returned on error
    """
    if channels not in (1, 3):
        raise ContractError("channels must be 1 or 3, got {}".format(channels))
    if background is None:
        background = default_background(channels)
    cameras, images, labels = [], [], []
    for split in splits:
        json_path = os.path.join(root_path, "transforms_{}.json".format(split))
        angle, frames = read_transforms(json_path)
        for file_path, matrix in frames:
            pixels = read_frame(_resolve_frame_path(root_path, file_path), background)
            h, w = pixels.shape[:2]
            if target_resolution is None:
                tw, th = w, h
            elif isinstance(target_resolution, (tuple, list)):
                tw, th = int(target_resolution[0]), int(target_resolution[1])
            else:
                tw = th = int(target_resolution)
            pixels = box_downscale(pixels, tw, th)
            if channels == 1:
                pixels = to_grayscale(pixels)
            focal = 0.5 * tw / np.tan(0.5 * angle)
            cameras.append(Camera(width=tw, height=th, focal=focal, pose=normalize_pose(matrix)))
            images.append(np.clip(pixels, 0.0, 1.0).astype(np.float32))
            labels.append(split)
    scene = Scene(cameras=cameras, images=images, channels=channels, split=labels,
                  name=os.path.basename(os.path.normpath(root_path)), background=float(background))
    logger.info("loaded scene %s: %d train / %d test frames, %dx%d, %d channel(s)",
                scene.name, len(scene.train_ids), len(scene.test_ids),
                cameras[0].width if cameras else 0, cameras[0].height if cameras else 0, channels)
    return scene


def intersect_box(origins, directions, lo, hi):
    """
    slab test of rays against an axis-aligned box
    :param origins: (N, 3)
    :param directions: (N, 3)
    :return: (t_near, t_far), t_near clamped to 0, misses give t_near == t_far
    """
    d = np.where(np.abs(directions) < 1e-12, np.where(directions < 0, -1e-12, 1e-12), directions)
    t0 = (np.asarray(lo)[None, :] - origins) / d
    t1 = (np.asarray(hi)[None, :] - origins) / d
    t_near = np.maximum(np.minimum(t0, t1).max(axis=1), 0.0)
    t_far = np.maximum(t0, t1).min(axis=1)
    miss = t_far <= t_near
    t_far = np.where(miss, t_near, t_far)
    return t_near, t_far


def camera_directions(camera, us, vs):
    """
    unit world directions through pixel coordinates (continuous, pixel centers at +0.5)
    """
    us = np.asarray(us, dtype=np.float64)
    vs = np.asarray(vs, dtype=np.float64)
    local = np.stack([(us + 0.5 - 0.5 * camera.width) / camera.focal,
                      -(vs + 0.5 - 0.5 * camera.height) / camera.focal,
                      -np.ones_like(us)], axis=-1)
    world = local @ camera.rotation.T
    return world / np.linalg.norm(world, axis=-1, keepdims=True)


def generate_rays(camera, us, vs, bounds=UNIT_BOUNDS):
    """
    vectorized generate_ray
    :return: origins (N,3), directions (N,3), t_near (N,), t_far (N,)
    """
    us = np.atleast_1d(np.asarray(us, dtype=np.float64))
    vs = np.atleast_1d(np.asarray(vs, dtype=np.float64))
    if us.shape != vs.shape:
        raise ContractError("pixel coordinate arrays differ in shape")
    if us.size and (us.min() < 0 or us.max() >= camera.width or vs.min() < 0 or vs.max() >= camera.height):
        raise ContractError("pixel outside {}x{} image".format(camera.width, camera.height))
    directions = camera_directions(camera, us, vs)
    origins = np.broadcast_to(camera.position, directions.shape).copy()
    t_near, t_far = intersect_box(origins, directions, *bounds)
    return origins, directions, t_near, t_far


def generate_ray(camera, u, v, bounds=UNIT_BOUNDS):
    """
    one camera ray through pixel (u, v)
    :param camera: Camera
    :param u: pixel column, 0 <= u < width
    :param v: pixel row, 0 <= v < height
    :return: Ray
    """
    origins, directions, t_near, t_far = generate_rays(camera, [u], [v], bounds)
    return Ray(origin=origins[0], direction=directions[0], t_near=float(t_near[0]), t_far=float(t_far[0]))


def pixel_grid(camera):
    """
    row-major integer pixel coordinates of a whole image
    :return: us, vs flat arrays of length width*height
    """
    vs, us = np.meshgrid(np.arange(camera.height), np.arange(camera.width), indexing="ij")
    return us.ravel(), vs.ravel()
