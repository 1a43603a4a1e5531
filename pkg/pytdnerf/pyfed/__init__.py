# coding=utf-8

__all__ = ["fedavg", "federation"]
