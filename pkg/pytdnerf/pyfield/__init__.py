# coding=utf-8

__all__ = ["precision", "mlp", "field"]
