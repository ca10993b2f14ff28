"""Slow Rayleigh fading, AWGN, the block-diagonal equivalent channel of the
cooperative second phase, and instantaneous capacity.

Conventions: every link coefficient is CN(0, 1) (unit-mean |.|^2), noise is
unit-variance circularly symmetric, and senders scale by sqrt(rho), so that
SNR(dB) = 10 log10(rho). The 1/sqrt(2) power split of the relaying phase
lives inside the channel blocks, not inside the code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelRealization",
    "EquivalentChannel",
    "sample_channel",
    "awgn",
    "equivalent_channel",
    "instantaneous_capacity",
]


@dataclass(frozen=True)
class ChannelRealization:
    """One slow-fading draw: direct link g0, relay downlinks g[n], relay
    uplinks h[n] (arrays indexed 0-based for relay labels 1..N), SNR rho."""

    g0: complex
    g: tuple[complex, ...]
    h: tuple[complex, ...]
    rho: float

    def __post_init__(self):
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise ValueError(f"rho must be finite and positive, got {self.rho}")
        for c in (self.g0, *self.g, *self.h):
            if not np.isfinite(c):
                raise ValueError("non-finite channel coefficient")
        if len(self.g) != len(self.h):
            raise ValueError("g and h must list the same relays")

    @property
    def n_relays(self) -> int:
        return len(self.h)

    def subset(self, labels) -> "ChannelRealization":
        """Reduced realization keeping relays with the given 1-based labels."""
        return ChannelRealization(
            g0=self.g0,
            g=tuple(self.g[n - 1] for n in labels),
            h=tuple(self.h[n - 1] for n in labels),
            rho=self.rho,
        )


def _cn01(rng: np.random.Generator, size=None) -> np.ndarray | complex:
    z = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return z / np.sqrt(2)


def sample_channel(
    n_relays: int, snr_db: float, rng: np.random.Generator
) -> ChannelRealization:
    """Draw one i.i.d. CN(0,1) realization of all links at the given SNR."""
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    g0 = complex(_cn01(rng))
    g = tuple(complex(_cn01(rng)) for _ in range(n_relays))
    h = tuple(complex(_cn01(rng)) for _ in range(n_relays))
    return ChannelRealization(g0=g0, g=g, h=h, rho=10.0 ** (snr_db / 10.0))


def awgn(signal, rng: np.random.Generator) -> np.ndarray:
    """Add unit-variance circularly symmetric complex Gaussian noise."""
    s = np.asarray(signal, dtype=complex)
    return s + _cn01(rng, s.shape)


@dataclass(frozen=True)
class EquivalentChannel:
    """Block-diagonal channel of the Incomplete DF second-phase pairing."""

    blocks: tuple[np.ndarray, ...]
    matrix: np.ndarray


def equivalent_channel(ch: ChannelRealization) -> EquivalentChannel:
    """Assemble H_n = [[g0, 0], [g_n/sqrt2, g0/sqrt2]] into block-diag form."""
    if ch.n_relays < 1:
        raise ValueError("equivalent channel needs at least one relay")
    s = 1 / np.sqrt(2)
    blocks = []
    for gn in ch.g:
        blocks.append(np.array([[ch.g0, 0.0], [gn * s, ch.g0 * s]], dtype=complex))
    n = ch.n_relays
    mat = np.zeros((2 * n, 2 * n), dtype=complex)
    for i, b in enumerate(blocks):
        mat[2 * i:2 * i + 2, 2 * i:2 * i + 2] = b
    return EquivalentChannel(blocks=tuple(blocks), matrix=mat)


def instantaneous_capacity(H, rho: float, T: int) -> float:
    """(1/T) log2 det(I + rho H H^dagger) in bits per channel use."""
    if T < 1:
        raise ValueError("T must be >= 1")
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    if not np.all(np.isfinite(H)):
        raise ValueError("non-finite channel matrix")
    m = H.shape[0]
    gram = np.eye(m) + rho * (H @ H.conj().T)
    _, logdet = np.linalg.slogdet(gram)
    return float(logdet / np.log(2.0) / T)
