# coding=utf-8
import os

from pytdnerf.pyplot.plot_curves import CurvePlotter, pareto_front
from pytdnerf.pyproduct.report import write_csv


def test_train_log_plot(tmp_path):
    csv = write_csv([{"step": 1, "loss": 0.2, "psnr": None}, {"step": 2, "loss": 0.1, "psnr": 12.5}],
                    str(tmp_path / "train_log.csv"))
    fname = str(tmp_path / "plots" / "train_log.png")
    assert CurvePlotter().plot_train_log(csv, save_dict=dict(fname=fname)) == fname
    assert os.path.getsize(fname) > 0


def test_federation_plot(tmp_path):
    rows = [{"round": r, "client_id": c, "psnr": 10 + r} for r in range(3) for c in ("global", "client0")]
    csv = write_csv(rows, str(tmp_path / "federation.csv"))
    fname = str(tmp_path / "fed.png")
    assert CurvePlotter(fig_dict=dict(figsize=(4, 3))).plot_federation(csv, save_dict=dict(fname=fname)) == fname
    assert os.path.exists(fname)


def test_pareto_plot(tmp_path):
    rows = [{"B": b, "T_log2": t, "mem_bytes_total": b * 1000 + 2 ** t, "psnr": 20 + t - 10 + b / 4096,
             "selected": int(b == 8192 and t == 13)} for b in (4096, 8192) for t in (12, 13)]
    csv = write_csv(rows, str(tmp_path / "sweep.csv"))
    fname = str(tmp_path / "pareto.png")
    assert CurvePlotter().plot_pareto(csv, save_dict=dict(fname=fname)) == fname
    assert CurvePlotter().plot_pareto(csv, is_save=False) is None


def test_pareto_front():
    memory = [1.0, 2.0, 3.0, 2.5]
    quality = [20.0, 25.0, 24.0, 26.0]
    assert pareto_front(memory, quality) == [0, 1, 3]
