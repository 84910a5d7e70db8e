"""Reproducible Wiener increments from counter-based random streams.

Each increment is a pure function of (master_seed, path_index, step_index):
a Philox generator is keyed on the seed with the path and step placed in the
counter, so draws are identical across runs, thread counts, and meshes.
"""
from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

_U64 = np.uint64
_local = threading.local()


def _fresh_keyed_normal(master_seed: int, path_index: int, step: int) -> float:
    """Reference implementation: build the keyed generator from scratch."""
    key = np.array([master_seed, 0], dtype=_U64)
    counter = np.array([0, 0, step, path_index], dtype=_U64)
    return float(Generator(Philox(counter=counter, key=key)).standard_normal())


def _keyed_normal(master_seed: int, path_index: int, step: int) -> float:
    """Same value as _fresh_keyed_normal, reusing a thread-local Philox.

    Resetting counter/key through the state dict skips the costly seed
    processing of the constructor; buffer_pos=4 discards any buffered words
    so the draw matches a freshly constructed generator bit for bit.
    """
    bg = getattr(_local, "philox", None)
    if bg is None:
        bg = Philox(key=np.zeros(2, dtype=_U64))
        _local.philox = bg
    state = bg.state
    state["state"] = {"counter": np.array([0, 0, step, path_index], dtype=_U64),
                      "key": np.array([master_seed, 0], dtype=_U64)}
    state["buffer_pos"] = 4
    state["has_uint32"] = 0
    state["uinteger"] = 0
    bg.state = state
    return float(Generator(bg).standard_normal())


@dataclass(frozen=True)
class NoiseStream:
    """One path's increment source, addressable by step index."""

    master_seed: int
    path_index: int = 0

    def __post_init__(self):
        if not (0 <= self.master_seed < 2**64):
            raise ValueError(f"master_seed must fit in uint64, got {self.master_seed}")
        if not (0 <= self.path_index < 2**64):
            raise ValueError(f"path_index must be a nonnegative integer, got {self.path_index}")

    def standard_normal(self, step: int) -> float:
        """Unit-variance Gaussian for this (seed, path, step) key."""
        if step < 1:
            raise ValueError(f"step index must be >= 1, got {step}")
        return _keyed_normal(self.master_seed, self.path_index, step)


def draw_increment(stream: NoiseStream, step: int, params) -> float:
    """Wiener increment for one step.

    Variance is tau (the default, consistent with Euler-Maruyama over a step
    of length tau) or 1 when params.increment_variance_mode == "unit".
    """
    z = stream.standard_normal(step)
    if params.increment_variance_mode == "unit":
        return z
    return z * math.sqrt(params.tau)


def increment_array(stream: NoiseStream, n_steps: int, params) -> np.ndarray:
    """Increments for steps 1..n_steps as a float64 array."""
    return np.array([draw_increment(stream, n, params) for n in range(1, n_steps + 1)])


def increments_digest(increments: np.ndarray) -> str:
    """SHA-256 of the raw float64 bytes; used in run manifests."""
    return hashlib.sha256(np.ascontiguousarray(increments, dtype=np.float64).tobytes()).hexdigest()
