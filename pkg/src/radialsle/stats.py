"""Small statistics helpers shared by the Monte Carlo front ends."""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class McEstimate:
    """Mean, standard error and bookkeeping for one Monte Carlo quantity."""

    mean: float
    stderr: float
    n: int
    n_truncated: int = 0

    def within(self, target: float, k_sigma: float = 3.0) -> bool:
        return abs(self.mean - target) <= k_sigma * self.stderr


def mc_estimate(values: np.ndarray, n_truncated: int = 0) -> McEstimate:
    """Sample mean and stderr of a replica-indexed value array.

    The array must be ordered by replica id; numpy's pairwise reduction then
    gives results independent of how replicas were chunked during simulation.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two replicas")
    mean = float(np.mean(x))
    var = float(np.sum((x - mean) ** 2)) / (n - 1)
    return McEstimate(mean=mean, stderr=math.sqrt(var / n), n=n,
                      n_truncated=int(n_truncated))


def ratio_estimate(num: McEstimate, den: McEstimate) -> tuple[float, float]:
    """Delta-method mean and stderr for num.mean / den.mean.

    Assumes the two estimates come from disjoint replica sets or that the
    covariance is negligible; callers who reuse replicas should split them.
    """
    if den.mean == 0:
        raise ZeroDivisionError("ratio denominator estimate is zero")
    r = num.mean / den.mean
    rel = (num.stderr / num.mean) ** 2 + (den.stderr / den.mean) ** 2
    return r, abs(r) * math.sqrt(rel)
