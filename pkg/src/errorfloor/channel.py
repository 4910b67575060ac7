"""Binary-input AWGN channel in the log-likelihood-ratio domain."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc


def qfunc(x):
    """Gaussian tail probability Q(x) = P{N(0,1) > x}.

    Accepts scalars or arrays; relies on erfc so it stays accurate far
    into the tail (down to ~1e-300).
    """
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


@dataclass(frozen=True)
class ChannelConfig:
    """One SNR point of a rate-R BPSK/AWGN link.

    The all-zero codeword is transmitted as all +1 symbols, so the LLR of
    every bit is Gaussian with mean `mean_llr` and variance 2*`mean_llr`.
    """

    ebn0_db: float
    rate: float

    def __post_init__(self):
        if not math.isfinite(self.ebn0_db):
            raise ValueError("ebn0_db must be finite")
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate {self.rate:g} outside (0, 1]")

    @property
    def ebn0(self) -> float:
        return 10.0 ** (self.ebn0_db / 10.0)

    @property
    def sigma2(self) -> float:
        # unit-energy BPSK: 1/sigma^2 = 2 R Eb/N0
        return 1.0 / (2.0 * self.rate * self.ebn0)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def llr_scale(self) -> float:
        return 2.0 / self.sigma2

    @property
    def mean_llr(self) -> float:
        return 4.0 * self.rate * self.ebn0


def llr_from_symbol(cfg: ChannelConfig, received):
    """Map received symbols r to channel LLRs (2/sigma^2) * r."""
    return cfg.llr_scale * np.asarray(received, dtype=float)


def frame_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for a (seed, stream) pair.

    Streams are independent and reproducible regardless of how many
    worker processes consume them.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=(seed, stream))))


def sample_noise_frame(cfg: ChannelConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one frame of AWGN samples with the config's sigma."""
    return rng.normal(0.0, cfg.sigma, size=n)


def uncoded_error_prob(cfg: ChannelConfig) -> float:
    """Bit error probability of the raw channel, Q(sqrt(2 R Eb/N0))."""
    return float(qfunc(math.sqrt(2.0 * cfg.rate * cfg.ebn0)))
