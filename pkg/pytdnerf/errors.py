# coding=utf-8
"""
Purpose:   [1] error types raised across pytdnerf

Usage:     This code depends on None
           This code is compatible with python 3.8.x.

"""


class TdnError(Exception):
    """base of every error raised on purpose by pytdnerf"""


class SceneLoadError(TdnError, FileNotFoundError):
    """a scene file is missing or cannot be decoded; the message names the file"""

    def __init__(self, path, reason="missing"):
        self.path = str(path)
        self.reason = reason
        super().__init__("cannot load {}: {}".format(self.path, reason))


class SceneFormatError(TdnError):
    """a scene file decodes but breaks the NeRF-synthetic conventions"""


class ContractError(TdnError, ValueError):
    """a caller broke a precondition (shape, range, ordering, cache)"""


class ConfigError(TdnError, ValueError):
    """invalid or unknown configuration"""


class AggregationError(TdnError):
    """parameter sets handed to FedAvg do not share names or shapes"""


class FederationError(TdnError):
    """a federated round was aborted, nothing was aggregated"""


class CheckpointError(TdnError):
    """a .tdnf file is malformed"""
