"""Input validation helpers shared by optimizers, environments and the protocol."""

from __future__ import annotations

import numbers

import numpy as np


def check_rng(seed) -> np.random.Generator:
    """Turn ``None``, an int, a SeedSequence or a Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise TypeError(f"cannot build a random generator from {seed!r}")


def check_vector(x, n=None, name="vector") -> np.ndarray:
    x = np.array(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {x.shape}")
    if n is not None and x.size != n:
        raise ValueError(f"{name} must have length {n}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_fitnesses(fitnesses, n) -> np.ndarray:
    f = np.asarray(fitnesses, dtype=float)
    if f.shape != (n,):
        raise ValueError(f"expected {n} fitness values, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("fitness values must be finite")
    return f


def check_ranges(ranges) -> np.ndarray:
    """Validate an ``(NP, 2)`` array of ``(min, max)`` bounds."""
    r = np.array(ranges, dtype=float)
    if r.ndim != 2 or r.shape[1] != 2 or r.shape[0] < 1:
        raise ValueError(f"ranges must have shape (NP, 2) with NP >= 1, got {r.shape}")
    if not np.all(np.isfinite(r)):
        raise ValueError("ranges must be finite")
    if np.any(r[:, 0] > r[:, 1]):
        raise ValueError("every range needs min <= max")
    return r


def check_conditions(rows, ranges=None, tol=1e-12) -> np.ndarray:
    """Validate condition rows, optionally against per-column ranges."""
    rows = np.array(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.ndim != 2 or not np.all(np.isfinite(rows)):
        raise ValueError("condition rows must be a finite 2-d array")
    if ranges is not None:
        ranges = np.asarray(ranges, dtype=float)
        if rows.shape[1] != ranges.shape[0]:
            raise ValueError(
                f"conditions have {rows.shape[1]} columns, expected {ranges.shape[0]}"
            )
        lo, hi = ranges[:, 0] - tol, ranges[:, 1] + tol
        if np.any(rows < lo) or np.any(rows > hi):
            raise ValueError("condition values fall outside their ranges")
    return rows


def check_fraction(value, name) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value
