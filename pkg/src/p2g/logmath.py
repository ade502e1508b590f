"""Log-space arithmetic with a safe log-zero sentinel.

``LOG_ZERO`` stands for probability zero. Both helpers accept it on any
input and never produce NaN from it, so zero-probability branches can flow
through sums unguarded.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

LOG_ZERO = float("-inf")


def log_add(a: float, b: float) -> float:
    """log(exp(a) + exp(b)) without leaving log space."""
    if a == LOG_ZERO:
        return b
    if b == LOG_ZERO:
        return a
    hi = a if a > b else b
    return hi + math.log1p(math.exp(-abs(a - b)))


def log_sum(values: Iterable[float]) -> float:
    """log(sum(exp(v) for v in values)); LOG_ZERO for an empty iterable."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        return LOG_ZERO
    hi = float(arr.max())
    if hi == LOG_ZERO:
        return LOG_ZERO
    return hi + float(np.log(np.exp(arr - hi).sum()))
