"""Input validation helpers and the observed-counts container."""

from dataclasses import dataclass, field
import math
import numbers

import numpy as np


def check_probability_vector(probs, atol=1e-10):
    """Validate a finite probability vector and return it as a float array.

    Raises ``ValueError`` for empty input, negative or non-finite entries, or a
    total that differs from one by more than ``atol``.
    """
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability vector must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("probabilities must be finite and nonnegative")
    total = math.fsum(p)
    if abs(total - 1.0) > atol:
        raise ValueError(f"probabilities sum to {total!r}, not 1")
    return p


def check_counts(counts):
    """Validate a vector of nonnegative integer counts; return an int64 array."""
    c = np.asarray(counts)
    if c.ndim != 1:
        raise ValueError("counts must be a 1-D sequence")
    if c.size and c.dtype.kind == "f":
        if not np.all(np.isfinite(c)) or np.any(c != np.round(c)):
            raise ValueError("counts must be integers")
    elif c.size and c.dtype.kind not in "iub":
        raise ValueError(f"counts must be integers, got dtype {c.dtype}")
    c = c.astype(np.int64)
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    return c


def check_level(level):
    if not isinstance(level, numbers.Real) or not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level!r}")
    return float(level)


@dataclass(frozen=True)
class SampleCounts:
    """Observed letter counts from a sample of size ``n``.

    Zero counts are dropped on construction, so every stored count is >= 1.
    ``symbols`` may hold integer letter indices or arbitrary labels.
    """

    symbols: np.ndarray
    counts: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        symbols = np.asarray(self.symbols)
        counts = check_counts(self.counts)
        if symbols.shape != counts.shape:
            raise ValueError("symbols and counts must have the same length")
        keep = counts > 0
        symbols, counts = symbols[keep], counts[keep]
        if counts.size == 0:
            raise ValueError("a sample must contain at least one observation")
        if np.unique(symbols).size != symbols.size:
            raise ValueError("symbols must be distinct")
        symbols.flags.writeable = False
        counts.flags.writeable = False
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "n", int(counts.sum()))

    @classmethod
    def from_mapping(cls, mapping):
        keys = list(mapping)
        return cls(np.array(keys), np.array([mapping[k] for k in keys], dtype=np.int64))

    @classmethod
    def from_observations(cls, observations, weights=None):
        """Tally a sequence of observed symbols, optionally with integer weights."""
        obs = np.asarray(observations)
        if obs.ndim != 1 or obs.size == 0:
            raise ValueError("observations must be a non-empty 1-D sequence")
        if weights is None:
            symbols, counts = np.unique(obs, return_counts=True)
            return cls(symbols, counts)
        w = check_counts(weights)
        if w.shape != obs.shape:
            raise ValueError("weights must match observations in length")
        symbols, inverse = np.unique(obs, return_inverse=True)
        counts = np.bincount(inverse.ravel(), weights=w, minlength=symbols.size)
        return cls(symbols, counts.astype(np.int64))

    def as_dict(self):
        return {s.item() if hasattr(s, "item") else s: int(c)
                for s, c in zip(self.symbols, self.counts)}

    @property
    def n_distinct(self):
        return int(self.counts.size)

    def __eq__(self, other):
        if not isinstance(other, SampleCounts):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    __hash__ = None
