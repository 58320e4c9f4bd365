"""Noise parameters and shot-based expectation estimates shared by both
benchmarks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TAU_S = 1.0 / math.e
TAU_D = 1.0 / (2.0 * math.e)

READOUT_MODES = ("qubit", "observable")


@dataclass(frozen=True)
class NoiseParams:
    """Two-qubit depolarizing probability and readout flip probability.

    ``readout="qubit"`` flips every measured qubit independently;
    ``"observable"`` flips the recorded parity once per shot instead.
    """

    p2q: float = 0.0
    pm: float = 0.0
    readout: str = "qubit"

    def __post_init__(self):
        if not 0.0 <= self.p2q <= 1.0:
            raise ValueError(f"p2q must lie in [0, 1], got {self.p2q}")
        if not 0.0 <= self.pm <= 0.5:
            raise ValueError(f"pm must lie in [0, 1/2], got {self.pm}")
        if self.readout not in READOUT_MODES:
            raise ValueError(f"readout must be one of {READOUT_MODES}, got {self.readout!r}")


def shot_sigma(mean: float, shots: int) -> float:
    return math.sqrt(max(0.0, 1.0 - mean * mean) / shots)


@dataclass(frozen=True)
class ExpectationEstimate:
    mean: float
    shots: int
    operator: str = ""
    kind: str = ""

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be positive")
        if not -1.0 <= self.mean <= 1.0:
            raise ValueError(f"mean {self.mean} outside [-1, 1]")

    @property
    def sigma(self) -> float:
        return shot_sigma(self.mean, self.shots)

    @classmethod
    def from_plus_count(cls, plus: int, shots: int, operator: str = "", kind: str = ""):
        return cls((2 * int(plus) - shots) / shots, shots, operator, kind)


def sample_shots(
    value: float, shots: int, rng: np.random.Generator, operator: str = "", kind: str = ""
) -> ExpectationEstimate:
    """Empirical mean of ``shots`` independent +-1 outcomes with mean ``value``."""
    if not -1.0 - 1e-12 <= value <= 1.0 + 1e-12:
        raise ValueError(f"expectation {value} outside [-1, 1]")
    p_plus = min(1.0, max(0.0, 0.5 * (1.0 + value)))
    plus = rng.binomial(shots, p_plus)
    return ExpectationEstimate.from_plus_count(plus, shots, operator, kind)
