"""Streaming univariate statistics used by the flow accumulators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class RunningStats:
    """Single-pass mean/std/min/max accumulator (Welford update).

    ``std`` is the sample standard deviation (n-1 divisor) and is 0 for
    fewer than two observations.  All statistics over an empty accumulator
    are 0.
    """

    count: int = 0
    total: float = 0.0
    minimum: float = field(default=math.inf)
    maximum: float = field(default=-math.inf)
    _mean: float = 0.0
    _m2: float = 0.0

    def add(self, value: float) -> None:
        self.count += 1
        self.total += value
        if value < self.minimum:
            self.minimum = value
        if value > self.maximum:
            self.maximum = value
        delta = value - self._mean
        self._mean += delta / self.count
        self._m2 += delta * (value - self._mean)

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else 0.0

    @property
    def std(self) -> float:
        if self.count <= 1:
            return 0.0
        return math.sqrt(max(self._m2, 0.0) / (self.count - 1))

    @property
    def min(self) -> float:
        return self.minimum if self.count else 0.0

    @property
    def max(self) -> float:
        return self.maximum if self.count else 0.0
