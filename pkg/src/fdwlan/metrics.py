"""Throughput, STR gain, empirical CDFs and opportunity statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateResultError


@dataclass(frozen=True)
class GainSample:
    theta: float
    chi_str: float  # bits/s
    chi_l: float  # bits/s
    drop: int = 0


def throughput(result) -> float:
    """Delivered MAC payload bits per virtual second (headers and ACKs excluded)."""
    if result.elapsed_ns <= 0:
        raise DegenerateResultError("throughput is undefined for zero elapsed time")
    return result.total_bits / result.elapsed


def str_gain(legacy, strr, drop_id: int = 0) -> GainSample:
    chi_l = throughput(legacy)
    chi_s = throughput(strr)
    if chi_l <= 0:
        raise DegenerateResultError("legacy throughput is zero; gain undefined")
    return GainSample(chi_s / chi_l, chi_s, chi_l, drop_id)


def empirical_cdf(samples) -> list[tuple[float, float]]:
    """(value, fraction of samples <= value) at each distinct value, ascending."""
    x = np.sort(np.asarray(list(samples), dtype=float))
    if x.size == 0:
        raise ValueError("empirical_cdf needs at least one sample")
    vals, counts = np.unique(x, return_counts=True)
    frac = np.cumsum(counts) / x.size
    frac[-1] = 1.0
    return [(float(v), float(f)) for v, f in zip(vals, frac)]


def quantile(samples, q: float) -> float:
    """Lower empirical quantile: the smallest sample whose CDF value reaches ``q``."""
    x = np.sort(np.asarray(list(samples), dtype=float))
    if x.size == 0:
        raise ValueError("quantile of an empty sample")
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    k = max(math.ceil(q * x.size - 1e-12), 1)
    return float(x[k - 1])


def ufd_opportunity_fraction(result) -> float:
    """Share of predicted primaries for which a created UFD target existed."""
    pred = result.counters.get("predicted", 0)
    if pred <= 0:
        return 0.0
    return result.counters.get("predicted_with_created", 0) / pred
