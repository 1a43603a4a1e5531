# coding=utf-8
"""
Purpose:   [1] run independent jobs (sweep rows, federated clients) sequentially or in worker processes

Usage:     This code depends on the psutil
           psutil can be installed from conda or pip
           This code is compatible with python 3.8.x.

Examples:  results = run_jobs(train_one, [args1, args2], threads=4)

"""

import logging
from concurrent.futures import ProcessPoolExecutor

import psutil

from pytdnerf.errors import ConfigError

logger = logging.getLogger(__name__)


def resolve_workers(threads, jobs):
    """
    :param threads: 1 sequential, 0 one worker per physical core, n at most n workers
    :param jobs: number of jobs
    """
    if threads is None or threads < 0:
        raise ConfigError("threads must be >= 0, got {}".format(threads))
    if threads == 0:
        threads = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    return max(1, min(int(threads), int(jobs)))


def run_jobs(fn, jobs, threads=1):
    """
    fn(*job) for every job, results in job order
    :param fn: picklable top-level callable when threads != 1
    :param jobs: list of argument tuples
    :param threads: see resolve_workers
    :return: list of results; the first failing job re-raises its exception
    """
    jobs = list(jobs)
    if not jobs:
        return []
    workers = resolve_workers(threads, len(jobs))
    if workers == 1:
        return [fn(*job) for job in jobs]
    logger.info("running %d jobs on %d worker processes", len(jobs), workers)
    executor = ProcessPoolExecutor(max_workers=workers)
    try:
        futures = [executor.submit(fn, *job) for job in jobs]
        return [future.result() for future in futures]
    finally:
        executor.shutdown(True)
