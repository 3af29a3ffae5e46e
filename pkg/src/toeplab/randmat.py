"""Reproducible complex Gaussian matrices.

Entries are iid standard complex Gaussians, ``E q = 0`` and ``E |q|^2 = 1``
(real and imaginary parts each of variance 1/2).  Getting this factor wrong
silently rescales ``delta`` by ``sqrt(2)``.

Each trial owns a :class:`SeededStream`: a Philox counter-based generator
keyed by ``(master_seed, trial_index)`` through ``numpy``'s ``SeedSequence``
spawn keys, so trials can be sampled in any order or in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch


@dataclass(frozen=True)
class SeededStream:
    master_seed: int
    trial_index: int = 0

    def generator(self, substream: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.trial_index), int(substream)))
        return np.random.Generator(np.random.Philox(seq))

    def child(self, trial_index: int) -> "SeededStream":
        return SeededStream(self.master_seed, trial_index)


def complex_gaussians(shape, rng: np.random.Generator) -> np.ndarray:
    """Complex Box-Muller: ``sqrt(-log U1) * exp(2 pi i U2)``."""
    u1 = 1.0 - rng.random(shape)  # in (0, 1]
    u2 = rng.random(shape)
    return np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)


def sample_gaussian_matrix(n: int, stream: SeededStream, substream: int = 0) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    return complex_gaussians((n, n), stream.generator(substream))


def perturb(P: np.ndarray, delta: float, Q: np.ndarray) -> np.ndarray:
    P = np.asarray(P)
    Q = np.asarray(Q)
    if P.shape != Q.shape:
        raise ShapeMismatch(f"P has shape {P.shape}, Q has shape {Q.shape}")
    if delta == 0:
        return P.astype(complex, copy=True)
    return P + delta * Q


def hs_norm_event(Q: np.ndarray, C1: float) -> bool:
    """Whether ``||Q||_HS <= C1 * N``."""
    return bool(np.linalg.norm(Q) <= C1 * Q.shape[0])
