"""Noise schedule for the toy sampler and the forward diffusion process."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary labeled parts (order matters)."""
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass(frozen=True)
class DiffusionSchedule:
    """T-step schedule; index 0 is clean, index T-1 the noisiest state.

    signal_at(t) is the cumulative product of (1 - beta) up to step t, so
    signal_at(0) == 1 exactly: the step-0 guidance frame carries no noise.
    """

    betas: tuple[float, ...]
    sampler: str = "ddim-like"
    _signal: tuple[float, ...] = field(init=False, repr=False, compare=False, default=())

    def __post_init__(self):
        if len(self.betas) < 2:
            raise ValueError("schedule needs at least 2 steps")
        if any(not 0.0 < b < 1.0 for b in self.betas):
            raise ValueError("betas must lie strictly in (0, 1)")
        if any(b2 < b1 for b1, b2 in zip(self.betas, self.betas[1:])):
            raise ValueError("betas must be nondecreasing")
        signal = [1.0]
        for b in self.betas[:-1]:
            signal.append(signal[-1] * (1.0 - b))
        object.__setattr__(self, "_signal", tuple(signal))

    @classmethod
    def linear(cls, steps: int, beta_min: float = 1e-4, beta_max: float = 0.02) -> "DiffusionSchedule":
        return cls(betas=tuple(np.linspace(beta_min, beta_max, steps).tolist()))

    @property
    def steps(self) -> int:
        return len(self.betas)

    def signal_at(self, t: int) -> float:
        return self._signal[t]

    def noise_at(self, t: int) -> float:
        return 1.0 - self._signal[t]

    def subject_steps(self) -> int:
        """Partial-denoise budget for per-subject generation: a tenth of T."""
        return -(-self.steps // 10)

    def injection_steps(self, r: float) -> list[int]:
        """Reverse-step indices at which guidance is injected: all t >= r*T.

        t counts down from T-1 to 0, so larger r means fewer, earlier
        (noisier) steps. r=0 reads literally: every step injects.
        """
        threshold = r * self.steps
        return [t for t in range(self.steps - 1, -1, -1) if t >= threshold]
