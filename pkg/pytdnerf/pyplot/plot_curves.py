# coding=utf-8
"""
Purpose:   [1] plot the csv products of pytdnerf to pictures
               train_log.csv  -> loss / test psnr against step
               federation.csv -> psnr against round, one line per client id (global, baselines)
               sweep.csv      -> memory against psnr, marker per B, selected point highlighted

Usage:     This code depends on the numpy pandas matplotlib
           This code is compatible with python 3.8.x.

Examples:  drawer = CurvePlotter()
           drawer.plot_federation("runs/fed/federation.csv", is_save=True, save_dict=dict(fname="fed.png"))

"""

import logging
import os

import matplotlib.pyplot as plt
import numpy as np

from pytdnerf.pyproduct.report import read_csv

logger = logging.getLogger(__name__)

MARKERS = ["o", "s", "^", "v", "D", "P", "X", "*"]


class CurvePlotter():
    """
    one figure per call; the figure stays reachable as drawer.fig / drawer.ax
    """

    def __init__(self, fig_dict=None):
        """
        :param fig_dict: kwargs of matplotlib.pyplot.figure, eg dict(figsize=(6, 4))
        """
        self.fig_dict = dict(figsize=[6, 4], dpi=150.0) if fig_dict is None else fig_dict
        self.fig = None
        self.ax = None

    def _new_figure(self):
        self.fig = plt.figure(**self.fig_dict)
        self.ax = self.fig.add_subplot()
        return self.ax

    def _finish(self, is_show, show_dict, is_save, save_dict):
        self.fig.tight_layout()
        result = None
        if is_save:
            save_dict = dict(save_dict or {})
            fname = save_dict.get("fname", "./curve.png")
            folder = os.path.dirname(fname)
            if folder:
                os.makedirs(folder, exist_ok=True)
            self.fig.savefig(**save_dict)
            logger.info("saved figure %s", fname)
            result = fname
        if is_show:
            plt.show(**(show_dict or dict(block=True)))
        plt.close(self.fig)
        return result

    def plot_train_log(self, csv_path, is_show=False, show_dict=None, is_save=True,
                       save_dict=dict(fname="./train_log.png")):
        """
        loss on a log axis, test psnr on the twin axis where it was evaluated
        :return: saved file name or None
        """
        frame = read_csv(csv_path)
        ax = self._new_figure()
        ax.semilogy(frame["step"], frame["loss"], color="0.5", linewidth=0.8, label="loss")
        ax.set(xlabel="step", ylabel="Huber loss")
        scored = frame.dropna(subset=["psnr"]) if "psnr" in frame else frame.iloc[0:0]
        if len(scored):
            twin = ax.twinx()
            twin.plot(scored["step"], scored["psnr"], "o-", color="C3", label="test psnr")
            twin.set_ylabel("PSNR [dB]")
        return self._finish(is_show, show_dict, is_save, save_dict)

    def plot_federation(self, csv_path, is_show=False, show_dict=None, is_save=True,
                        save_dict=dict(fname="./federation.png")):
        frame = read_csv(csv_path)
        ax = self._new_figure()
        for client_id, part in frame.groupby(frame["client_id"].astype(str), sort=True):
            style = dict(linewidth=2.0, color="k") if client_id == "global" else dict(linewidth=1.0, linestyle="--")
            ax.plot(part["round"], part["psnr"], label=client_id, **style)
        ax.set(xlabel="round", ylabel="test PSNR [dB]")
        ax.legend(fontsize="small")
        return self._finish(is_show, show_dict, is_save, save_dict)

    def plot_pareto(self, csv_path, is_show=False, show_dict=None, is_save=True,
                    save_dict=dict(fname="./pareto.png")):
        """
        memory (MB) against psnr; marker per batch size, T_log2 written next to each point
        """
        frame = read_csv(csv_path)
        ax = self._new_figure()
        for k, (batch, part) in enumerate(frame.groupby("B", sort=True)):
            ax.scatter(part["mem_bytes_total"] / 1e6, part["psnr"], marker=MARKERS[k % len(MARKERS)],
                       label="B={}".format(batch))
            for _, row in part.iterrows():
                ax.annotate(str(int(row["T_log2"])), (row["mem_bytes_total"] / 1e6, row["psnr"]), fontsize=6)
        chosen = frame[frame["selected"].astype(bool)] if "selected" in frame else frame.iloc[0:0]
        if len(chosen):
            ax.scatter(chosen["mem_bytes_total"] / 1e6, chosen["psnr"], s=120, facecolors="none",
                       edgecolors="r", label="selected")
        ax.set_xscale("log")
        ax.set(xlabel="memory [MB]", ylabel="PSNR [dB]")
        ax.legend(fontsize="small")
        return self._finish(is_show, show_dict, is_save, save_dict)


def pareto_front(memory, quality):
    """
    indices of points not dominated by a cheaper point with at least the same quality
    """
    memory = np.asarray(memory, dtype=np.float64)
    quality = np.asarray(quality, dtype=np.float64)
    order = np.lexsort((-quality, memory))
    front, best = [], -np.inf
    for i in order:
        if quality[i] > best:
            front.append(int(i))
            best = quality[i]
    return front
