# coding=utf-8
import numpy as np
import pytest

from pytdnerf.errors import ConfigError
from pytdnerf.pydata.partition import IID, NON_IID, PartitionPlan, camera_azimuth, normalize_mode, partition


@pytest.mark.parametrize("n_clients", [1, 2, 4, 6])
def test_iid_covers_every_training_frame_once(scene, n_clients):
    plan = partition(scene, n_clients, IID, seed=3)
    sizes = plan.sizes()
    assert max(sizes) - min(sizes) <= 1
    assert sorted(plan.frame_ids) == scene.train_ids
    groups = plan.groups()
    seen = [f for c in range(n_clients) for f in groups[c]]
    assert sorted(seen) == scene.train_ids


def test_iid_is_seeded(scene):
    assert partition(scene, 3, IID, seed=7) == partition(scene, 3, IID, seed=7)


def test_non_iid_gives_contiguous_azimuth_sectors(scene):
    plan = partition(scene, 3, NON_IID)
    assert plan.sizes() == [2, 2, 2]
    azimuth = camera_azimuth(scene, plan.frame_ids)
    assert np.all(np.diff(azimuth) >= 0)
    # neighbouring sectors do not interleave
    for c in range(2):
        hi = camera_azimuth(scene, plan.client_frames(c)).max()
        lo = camera_azimuth(scene, plan.client_frames(c + 1)).min()
        assert hi <= lo


def test_plan_round_trips_through_text(scene, tmp_path):
    plan = partition(scene, 4, NON_IID)
    path = plan.write(str(tmp_path / "sub" / "partition.txt"))
    back = PartitionPlan.read(path)
    assert back == plan


def test_too_many_or_too_few_clients(scene):
    with pytest.raises(ConfigError):
        partition(scene, 0)
    with pytest.raises(ConfigError):
        partition(scene, len(scene.train_ids) + 1)


@pytest.mark.parametrize("spelling,expected", [("iid", IID), ("IID", IID), ("non-iid", NON_IID),
                                               ("non_IID", NON_IID), ("noniid", NON_IID)])
def test_normalize_mode(spelling, expected):
    assert normalize_mode(spelling) == expected


def test_unknown_mode():
    with pytest.raises(ConfigError):
        normalize_mode("random")
