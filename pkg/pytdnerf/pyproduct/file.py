# coding=utf-8
"""
Purpose:   [1] read / write .tdnf checkpoints: "TDNF", version, then a table of named tensors
               (name, dtype code, rank, dims, little-endian payload)
           [2] save / load a whole training state (field, occupancy grid, optimizer, metadata)
           [3] export a checkpoint to hdf5, one dataset per named tensor

Usage:     This code depends on the numpy h5py
           h5py can be installed from conda or pip
           This code is compatible with python 3.8.x.

Examples:  TdnfFile().write("final.tdnf", tensors)
           ckpt = load_checkpoint("final.tdnf")
           TdnfFile().tran_tdnf2hdf5("final.tdnf", "final.h5")

"""

import logging
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Optional

import h5py
import numpy as np

from pytdnerf.errors import CheckpointError, ContractError
from pytdnerf.pyencode.hashgrid import HashGridConfig
from pytdnerf.pyfield import precision
from pytdnerf.pyfield.field import FieldModel
from pytdnerf.pyrender.occupancy import OccupancyGrid

logger = logging.getLogger(__name__)

MAGIC = b"TDNF"
VERSION = 1
CODE_F32 = 0
CODE_F16 = 1
CODE_BITS = 2
CODE_F64 = 3
_FORMATS = {CODE_F32: "f", CODE_F16: "e", CODE_F64: "d"}
META_KEYS = ("levels", "table_size", "features", "base_resolution", "growth", "channels", "precision",
             "occ_resolution", "occ_decay", "occ_threshold", "background")


def dtype_code(array):
    kind = np.asarray(array).dtype
    if kind == np.bool_:
        return CODE_BITS
    if kind == np.float16:
        return CODE_F16
    if kind == np.float64:
        return CODE_F64
    return CODE_F32


class TdnfFile():
    def __init__(self, endian="little"):
        """
        :param endian: byte order of payloads and header integers, little by default
        """
        if endian == "little":
            self.endian = "<"
        elif endian == "big":
            self.endian = ">"
        else:
            raise CheckpointError("endian must be little or big, got {}".format(endian))

    def _dtype(self, fmt):
        return np.dtype("{}{}".format(self.endian, fmt))  # like '<f'

    def _u32(self, value):
        return np.array([value], dtype=self._dtype("u4")).tobytes()

    def encode_tensor(self, name, array):
        array = np.asarray(array)
        code = dtype_code(array)
        name_bytes = name.encode("utf-8")
        parts = [self._u32(len(name_bytes)), name_bytes, bytes([code, array.ndim])]
        parts += [self._u32(d) for d in array.shape]
        if code == CODE_BITS:
            parts.append(np.packbits(array.ravel(), bitorder="little").tobytes())
        else:
            parts.append(np.ascontiguousarray(array, dtype=self._dtype(_FORMATS[code])).tobytes(order="C"))
        return b"".join(parts)

    def write(self, path, tensors):
        """
        :param path: .tdnf target, parent folders created
        :param tensors: ordered name -> array (bool arrays are stored as bitfields)
        :return: bytes written
        """
        folder = os.path.dirname(path)
        if folder and not os.path.exists(folder):
            os.makedirs(folder)
        blob = b"".join([MAGIC, self._u32(VERSION), self._u32(len(tensors))] +
                        [self.encode_tensor(k, v) for k, v in tensors.items()])
        with open(path, "wb") as f:
            f.write(blob)
        return len(blob)

    def read(self, path):
        """
        :param path: .tdnf file
        :return: OrderedDict name -> array, float payloads keep their stored precision
        """
        if not os.path.exists(path):
            raise CheckpointError("checkpoint not found: {}".format(path))
        with open(path, "rb") as f:
            blob = f.read()
        return self.decode(blob, path)

    def decode(self, blob, source="<bytes>"):
        cursor = [0]

        def take(n):
            start = cursor[0]
            if start + n > len(blob):
                raise CheckpointError("{} is truncated at byte {}".format(source, start))
            cursor[0] = start + n
            return blob[start:start + n]

        def u32():
            return int(np.frombuffer(take(4), dtype=self._dtype("u4"))[0])

        if take(4) != MAGIC:
            raise CheckpointError("{} is not a TDNF checkpoint".format(source))
        version = u32()
        if version != VERSION:
            raise CheckpointError("{} has version {}, expected {}".format(source, version, VERSION))
        result = OrderedDict()
        for _ in range(u32()):
            name = take(u32()).decode("utf-8")
            code, rank = take(2)
            dims = tuple(u32() for _ in range(rank))
            count = int(np.prod(dims)) if dims else 1
            if code == CODE_BITS:
                packed = np.frombuffer(take((count + 7) // 8), dtype=np.uint8)
                value = np.unpackbits(packed, count=count, bitorder="little").astype(bool).reshape(dims)
            elif code in _FORMATS:
                dt = self._dtype(_FORMATS[code])
                value = np.frombuffer(take(count * dt.itemsize), dtype=dt).reshape(dims)
                value = value.astype(dt.newbyteorder("="))
            else:
                raise CheckpointError("{}: tensor {} has unknown dtype code {}".format(source, name, code))
            result[name] = value
        if cursor[0] != len(blob):
            raise CheckpointError("{} has {} trailing bytes".format(source, len(blob) - cursor[0]))
        return result

    def write_hdf5(self, tensors, hdf5_path, overwrite=True):
        """
        one dataset per named tensor
        :param hdf5_path: with .h5 or .hdf5 suffix
        :return: True when written
        """
        result = False
        if not (hdf5_path.endswith(".h5") or hdf5_path.endswith(".hdf5")):
            raise CheckpointError("hdf5_path need end with .h5 or .hdf5")
        folder = os.path.dirname(hdf5_path)
        if folder and not os.path.exists(folder):
            os.makedirs(folder)
        if not os.path.exists(hdf5_path) or overwrite:
            with h5py.File(hdf5_path, "w") as hf:
                for name, value in tensors.items():
                    hf.create_dataset(name, data=value)
            result = True
        return result

    def read_hdf5(self, hdf5_path):
        """
        :return: OrderedDict name -> array, names in h5py (alphabetical) order
        """
        if not os.path.exists(hdf5_path):
            raise CheckpointError("hdf5 file not exists: {}".format(hdf5_path))
        result = OrderedDict()
        with h5py.File(hdf5_path, "r") as hf:
            for name in hf.keys():
                result[name] = hf[name][()]
        return result

    def tran_tdnf2hdf5(self, tdnf_path, hdf5_path, overwrite=True):
        """
        convert a checkpoint to hdf5
        :return: True when written
        """
        return self.write_hdf5(self.read(tdnf_path), hdf5_path, overwrite)


@dataclass
class Checkpoint:
    model: FieldModel
    occupancy: Optional[OccupancyGrid]
    adam_tensors: Dict[str, np.ndarray] = field(default_factory=dict)
    meta: Dict[str, float] = field(default_factory=dict)


def meta_vector(model, occupancy=None, background=1.0):
    cfg = model.grid_config
    occ = [0, 0.0, 0.0] if occupancy is None else [occupancy.resolution, occupancy.decay, occupancy.threshold]
    values = [cfg.levels, cfg.table_size, cfg.features, cfg.base_resolution, cfg.growth, model.channels,
              precision.mode_code(model.precision_mode)] + occ + [float(np.mean(background))]
    return np.array(values, dtype=np.float64)


def checkpoint_tensors(model, occupancy=None, adam=None, background=1.0):
    """
    named tensors of a training state, in checkpoint order
    """
    tensors = OrderedDict()
    tensors["meta.config"] = meta_vector(model, occupancy, background)
    tensors.update(model.named_tensors())
    if occupancy is not None:
        tensors["occ.density_ema"] = occupancy.density_ema
        tensors["occ.bits"] = occupancy.bits
    if adam is not None:
        tensors.update(adam.named_tensors())
    return tensors


def save_checkpoint(path, model, occupancy=None, adam=None, background=1.0):
    size = TdnfFile().write(path, checkpoint_tensors(model, occupancy, adam, background))
    logger.info("checkpoint written: %s (%d bytes)", path, size)
    return path


def model_from_meta(meta, density_w0=None):
    cfg = HashGridConfig(levels=int(meta["levels"]), table_size=int(meta["table_size"]),
                         features=int(meta["features"]), base_resolution=int(meta["base_resolution"]),
                         growth=float(meta["growth"]))
    hidden = density_w0.shape[0] if density_w0 is not None else 64
    return FieldModel(cfg, channels=int(meta["channels"]),
                      precision_mode=precision.mode_from_code(meta["precision"]), seed=0, hidden=hidden)


def load_checkpoint(path):
    """
    rebuild model, occupancy grid and optimizer tensors from a .tdnf file
    :return: Checkpoint
    """
    tensors = TdnfFile().read(path)
    if "meta.config" not in tensors:
        raise CheckpointError("{} lacks meta.config".format(path))
    values = tensors.pop("meta.config")
    if len(values) != len(META_KEYS):
        raise CheckpointError("{}: meta.config has {} entries, expected {}".format(path, len(values), len(META_KEYS)))
    meta = dict(zip(META_KEYS, (float(v) for v in values)))
    model = model_from_meta(meta, tensors.get("mlp.density.w0"))
    occupancy = None
    if "occ.density_ema" in tensors:
        ema = tensors.pop("occ.density_ema")
        bits = tensors.pop("occ.bits", None)
        occupancy = OccupancyGrid(resolution=ema.shape[0], decay=meta["occ_decay"],
                                  threshold=meta["occ_threshold"], density_ema=ema, bits=bits)
    adam_tensors = OrderedDict((k, tensors.pop(k)) for k in list(tensors) if k.startswith("adam."))
    try:
        model.load_named(tensors)
    except ContractError as e:
        raise CheckpointError("{}: {}".format(path, e))
    return Checkpoint(model=model, occupancy=occupancy, adam_tensors=adam_tensors, meta=meta)
