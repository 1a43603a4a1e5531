# coding=utf-8

__all__ = ["hashgrid", "sh"]
