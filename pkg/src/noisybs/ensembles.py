"""Reproducible random-matrix ensembles: Haar unitaries and complex Ginibre
blocks.

Haar sampling follows the QR-of-Ginibre recipe with the R-diagonal phase
correction (column j of Q multiplied by R_jj / |R_jj|); plain QR output is
not Haar distributed. Complex Gaussians use the isotropic convention: real
and imaginary parts independent with variance sigma^2 / 2, so E|z|^2 = sigma^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "RngSeed",
    "as_generator",
    "sample_gaussian_matrix",
    "sample_haar_unitary",
    "unitarity_residual",
]

UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class RngSeed:
    """A (seed, stream) pair identifying one reproducible random stream.

    Distinct streams derived from the same seed are statistically independent
    (numpy SeedSequence spawn keys), which is how parallel workers get
    non-overlapping randomness: worker i uses stream base.stream + i.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if not 0 <= self.stream < 2**64:
            raise ValidationError("stream must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def with_stream(self, stream: int) -> "RngSeed":
        return RngSeed(self.seed, stream)


def as_generator(rng) -> np.random.Generator:
    """Accept an RngSeed, a Generator, or anything default_rng understands."""
    if isinstance(rng, RngSeed):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_haar_unitary(n: int, rng) -> np.ndarray:
    """One n x n unitary drawn from the Haar measure."""
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    gen = as_generator(rng)
    z = (gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def unitarity_residual(u: np.ndarray) -> float:
    """max |U^dag U - I|, the unitarity certificate."""
    u = np.asarray(u)
    n = u.shape[0]
    return float(np.max(np.abs(u.conj().T @ u - np.eye(n))))


def sample_gaussian_matrix(rows: int, cols: int, variance: float, rng) -> np.ndarray:
    """rows x cols i.i.d. complex Gaussian entries with E|z|^2 = variance.

    With variance = 1/N this is the large-N approximation of an n x m block
    of a Haar unitary on N modes.
    """
    if rows < 1 or cols < 1:
        raise ValidationError("rows and cols must be positive")
    if not variance > 0:
        raise ValidationError(f"variance must be positive, got {variance}")
    gen = as_generator(rng)
    scale = np.sqrt(variance / 2.0)
    return scale * (gen.standard_normal((rows, cols)) + 1j * gen.standard_normal((rows, cols)))
