# coding=utf-8
"""
Purpose:   [1] swarm protocol simulation: coordinator pre-training on its own partition, broadcast,
               rounds of local training, FedAvg aggregation, global broadcast
           [2] two payload variants (params_only keeps local occupancy grids, with_grid averages the density EMA)
           [3] communication ledger at 16-bit tensor encoding over a fixed uplink bandwidth
           [4] per-round global test PSNR, plus independent-client and centralized baselines at the same marks

Usage:     This code depends on the numpy pandas tqdm
           This code is compatible with python 3.8.x.

Examples:  result = run_federation(scene, TrainConfig(), FederationConfig(n_clients=4, partition_mode="non_iid"),
                                   out_dir="runs/fed")
           print(result.ledger.total_seconds)

"""

import copy
import logging
import os
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from tqdm import tqdm

from pytdnerf.errors import ConfigError, FederationError
from pytdnerf.pycomputer.pool import run_jobs
from pytdnerf.pydata.partition import IID, normalize_mode, partition
from pytdnerf.pyfed.fedavg import fedavg
from pytdnerf.pyfield import precision
from pytdnerf.pyproduct.file import save_checkpoint
from pytdnerf.pyproduct.report import write_csv
from pytdnerf.pyrender.occupancy import RESOLUTION
from pytdnerf.pytrain.adam import AdamState
from pytdnerf.pytrain.evaluate import evaluate_split
from pytdnerf.pytrain.trainer import TrainState, run_steps

logger = logging.getLogger(__name__)

WITH_GRID = "with_grid"
PARAMS_ONLY = "params_only"
PAYLOAD_MODES = (WITH_GRID, PARAMS_ONLY)
WIRE_BYTES = 2
OCC_TENSOR = "occ.density"
GLOBAL = "global"
CENTRALIZED = "centralized"
CURVE_COLUMNS = ["round", "client_id", "psnr", "payload_bytes", "cumulative_comm_seconds"]
LEDGER_COLUMNS = ["round", "uplinks", "downlinks", "bytes", "seconds", "cumulative_bytes", "cumulative_seconds"]


def normalize_payload_mode(mode):
    key = str(mode).strip().lower().replace("-", "_")
    if key not in PAYLOAD_MODES:
        raise ConfigError("payload mode must be one of {}, got {!r}".format(PAYLOAD_MODES, mode))
    return key


@dataclass
class FederationConfig:
    n_clients: int = 4
    pretrain_steps: int = 10000
    local_steps: int = 1000
    rounds: int = 20
    payload_mode: str = PARAMS_ONLY
    partition_mode: str = IID
    bandwidth: float = 15e6
    seed: int = 42
    baselines: bool = False
    eval_frames: Optional[int] = None
    threads: int = 1
    verbose: bool = True

    def __post_init__(self):
        if self.n_clients < 1:
            raise ConfigError("n_clients must be >= 1, got {}".format(self.n_clients))
        if self.pretrain_steps < 0 or self.local_steps < 0 or self.rounds < 0:
            raise ConfigError("pretrain_steps, local_steps and rounds must be >= 0")
        if not self.bandwidth > 0:
            raise ConfigError("bandwidth must be > 0 bits/s, got {}".format(self.bandwidth))
        self.payload_mode = normalize_payload_mode(self.payload_mode)
        self.partition_mode = normalize_mode(self.partition_mode)


@dataclass
class Payload:
    """
    named tensors one client uplinks after local training; weight is its number of training frames
    """
    client_id: int
    tensors: OrderedDict
    weight: float

    @property
    def nbytes(self):
        return int(sum(t.size for t in self.tensors.values()) * WIRE_BYTES)


def payload_bytes(model, mode, occ_resolution=RESOLUTION):
    """
    :param model: FieldModel
    :param mode: with_grid | params_only
    :param occ_resolution: cells per axis of the transmitted density grid
    :return: bytes at 16-bit encoding, hash tables + both MLPs (+ res^3 density EMA)
    """
    mode = normalize_payload_mode(mode)
    total = model.parameter_count() * WIRE_BYTES
    if mode == WITH_GRID:
        total += int(occ_resolution) ** 3 * WIRE_BYTES
    return int(total)


def make_payload(client, mode):
    state = client.state
    tensors = OrderedDict((k, v.copy()) for k, v in state.model.named_tensors().items())
    if mode == WITH_GRID:
        tensors[OCC_TENSOR] = state.occupancy.density_ema.copy()
    return Payload(client_id=client.client_id, tensors=tensors, weight=float(len(client.frame_ids)))


class CommLedger():
    def __init__(self, bandwidth):
        """
        :param bandwidth: link rate in bits per second
        """
        self.bandwidth = float(bandwidth)
        self.entries = []

    def record(self, round_index, payload_size, uplinks, downlinks):
        size = int(payload_size) * (int(uplinks) + int(downlinks))
        seconds = size * 8 / self.bandwidth
        entry = {"round": int(round_index), "uplinks": int(uplinks), "downlinks": int(downlinks),
                 "bytes": size, "seconds": seconds,
                 "cumulative_bytes": self.total_bytes + size, "cumulative_seconds": self.total_seconds + seconds}
        self.entries.append(entry)
        return entry

    @property
    def total_bytes(self):
        return int(sum(e["bytes"] for e in self.entries))

    @property
    def total_seconds(self):
        return float(sum(e["seconds"] for e in self.entries))

    def write_csv(self, path):
        return write_csv(self.entries, path, columns=LEDGER_COLUMNS)


@dataclass
class ClientState:
    client_id: int
    frame_ids: List[int]
    state: TrainState


def _train_client(client, scene, config, n_steps, verbose):
    run_steps(client.state, scene, config, n_steps, frame_ids=client.frame_ids, verbose=verbose,
              desc="client {}".format(client.client_id))
    return client


def broadcast(clients, tensors, mode):
    """
    overwrite every client's model with the aggregate; optimizer moments stay local
    """
    params = OrderedDict((k, v) for k, v in tensors.items() if k != OCC_TENSOR)
    for client in clients:
        client.state.model.load_named(params)
        client.state.adam.reset_masters(client.state.model)
        if mode == WITH_GRID and OCC_TENSOR in tensors:
            grid = client.state.occupancy
            grid.density_ema = np.asarray(tensors[OCC_TENSOR], dtype=np.float16).reshape(grid.density_ema.shape)
            grid.recompute_bits()


def run_round(clients, coordinator, fed_config, train_config, scene, round_index=1, ledger=None):
    """
    one synchronous round: local training on copies, FedAvg, broadcast; clients are replaced only
    when every client finished
    :param clients: list of ClientState holding the current global parameters, updated in place
    :param coordinator: index of the aggregating client
    :param fed_config: FederationConfig
    :param train_config: TrainConfig
    :param scene: Scene
    :param ledger: CommLedger to append to, a fresh one when None
    :return: (global FieldModel, ledger entry)
    """
    if not 0 <= coordinator < len(clients):
        raise ConfigError("coordinator {} out of range for {} clients".format(coordinator, len(clients)))
    mode = fed_config.payload_mode
    ledger = CommLedger(fed_config.bandwidth) if ledger is None else ledger
    jobs = [(copy.deepcopy(c), scene, train_config, fed_config.local_steps, False) for c in clients]
    try:
        trained = run_jobs(_train_client, jobs, fed_config.threads)
    except Exception as e:
        logger.warning("round %d aborted: %s", round_index, e)
        raise FederationError("round {} aborted: {}".format(round_index, e)) from e

    payloads = [make_payload(c, mode) for c in trained]
    averaged = fedavg([p.tensors for p in payloads], [p.weight for p in payloads])
    broadcast(trained, averaged, mode)
    clients[:] = trained
    entry = ledger.record(round_index, payloads[0].nbytes, uplinks=len(clients), downlinks=len(clients))
    logger.info("round %d: %d clients, payload %d bytes, %.2f s on the link", round_index, len(clients),
                payloads[0].nbytes, entry["seconds"])
    return clients[coordinator].state.model.copy(), entry


def _baseline_curve(scene, train_config, frame_ids, marks, seed, grid_config, precision_mode, label, eval_ids):
    """
    plain training on frame_ids, scored on eval_ids after each cumulative step mark
    """
    config = replace(train_config, seed=int(seed))
    state = TrainState.fresh(scene, config, grid_config, precision_mode)
    rows = []
    for round_index, mark in enumerate(marks):
        run_steps(state, scene, config, mark - state.step, frame_ids=frame_ids, verbose=False, desc=label)
        ev = evaluate_split(state.model, state.occupancy, scene, frame_ids=eval_ids,
                            background=config.resolve_background(scene))
        rows.append({"round": round_index, "client_id": label, "psnr": ev.mean_psnr})
    return rows


@dataclass
class FederationResult:
    model: object
    occupancy: object
    ledger: CommLedger
    rows: List[dict]
    plan: object
    clients: List[ClientState] = field(default_factory=list)
    checkpoint: Optional[str] = None

    def curve(self, client_id=GLOBAL):
        return [r["psnr"] for r in self.rows if r["client_id"] == client_id]


def run_federation(scene, train_config, fed_config, out_dir=None, grid_config=None,
                   precision_mode=precision.FULL32):
    """
    :param scene: Scene
    :param train_config: TrainConfig shared by every party
    :param fed_config: FederationConfig
    :param out_dir: federation.csv, ledger.csv, partition.txt and final.tdnf go here; None keeps results in memory
    :return: FederationResult
    """
    plan = partition(scene, fed_config.n_clients, fed_config.partition_mode, fed_config.seed)
    eval_ids = scene.test_ids or scene.train_ids
    if fed_config.eval_frames:
        step = max(1, len(eval_ids) // int(fed_config.eval_frames))
        eval_ids = eval_ids[::step][:int(fed_config.eval_frames)]
    background = train_config.resolve_background(scene)
    ledger = CommLedger(fed_config.bandwidth)
    coordinator = 0
    owned = [sorted(plan.client_frames(c)) for c in range(fed_config.n_clients)]

    lead = TrainState.fresh(scene, train_config, grid_config, precision_mode)
    logger.info("coordinator pre-training %d steps on %d frames", fed_config.pretrain_steps,
                len(owned[coordinator]))
    run_steps(lead, scene, train_config, fed_config.pretrain_steps, frame_ids=owned[coordinator],
              verbose=fed_config.verbose, desc="pretrain")

    clients = [ClientState(client_id=coordinator, frame_ids=owned[coordinator], state=lead)]
    for c in range(1, fed_config.n_clients):
        model = lead.model.copy()
        state = TrainState(model, lead.occupancy.copy(), adam=AdamState(model),
                           rng=np.random.default_rng(train_config.seed + c), sbar=lead.sbar)
        state.step = lead.step
        clients.append(ClientState(client_id=c, frame_ids=owned[c], state=state))
    size = payload_bytes(lead.model, fed_config.payload_mode, lead.occupancy.resolution)
    ledger.record(0, size, uplinks=0, downlinks=fed_config.n_clients - 1)

    def score(round_index, model, occupancy):
        ev = evaluate_split(model, occupancy, scene, frame_ids=eval_ids, background=background)
        rows.append({"round": round_index, "client_id": GLOBAL, "psnr": ev.mean_psnr, "payload_bytes": size,
                     "cumulative_comm_seconds": ledger.total_seconds})

    rows = []
    score(0, lead.model, lead.occupancy)
    model = lead.model
    for r in tqdm(range(1, fed_config.rounds + 1), desc="rounds", disable=not fed_config.verbose):
        model, _ = run_round(clients, coordinator, fed_config, train_config, scene, r, ledger)
        score(r, model, clients[coordinator].state.occupancy)

    if fed_config.baselines:
        marks = [fed_config.pretrain_steps + r * fed_config.local_steps for r in range(fed_config.rounds + 1)]
        jobs = [(scene, train_config, owned[c], marks, train_config.seed + c, grid_config,
                 precision_mode, "client{}".format(c), eval_ids) for c in range(fed_config.n_clients)]
        jobs.append((scene, train_config, scene.train_ids, marks, train_config.seed, grid_config, precision_mode,
                     CENTRALIZED, eval_ids))
        for curve in run_jobs(_baseline_curve, jobs, fed_config.threads):
            rows.extend(curve)

    occupancy = clients[coordinator].state.occupancy
    result = FederationResult(model=model, occupancy=occupancy, ledger=ledger, rows=rows, plan=plan,
                              clients=clients)
    if out_dir is not None:
        plan.write(os.path.join(out_dir, "partition.txt"))
        write_csv(rows, os.path.join(out_dir, "federation.csv"), columns=CURVE_COLUMNS)
        ledger.write_csv(os.path.join(out_dir, "ledger.csv"))
        result.checkpoint = save_checkpoint(os.path.join(out_dir, "final.tdnf"), model, occupancy,
                                            background=background)
    final = result.curve()[-1]
    logger.info("federation done: %d rounds, global psnr %.2f dB, %d bytes / %.2f s on the link",
                fed_config.rounds, final, ledger.total_bytes, ledger.total_seconds)
    return result
