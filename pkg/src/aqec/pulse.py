"""Fourier-sine coupling pulses and pulse-reset cycle schedules.

A pulse is a pair of quadrature envelopes built from a sine basis that
vanishes at both ends of the coupling window by construction:

    Omega_{x,y}(t) = sum_n c_n^{x,y} sin(n pi t / t_p),   0 <= t <= t_p.

A schedule alternates a coupling phase of length t_p (pulse on, low loss)
with a reset phase of length t_r (coupling off, lossy channel pumped hard),
with piecewise-constant per-channel rates in each phase.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np


@dataclass(frozen=True)
class PulseShape:
    """Sine-basis coefficients (rad/ns) for both quadratures over t_p ns."""

    cx: tuple[float, ...]
    cy: tuple[float, ...]
    t_p: float

    def __init__(self, cx, cy, t_p: float):
        cx = tuple(float(c) for c in cx)
        cy = tuple(float(c) for c in cy)
        if len(cx) < 1 or len(cx) != len(cy):
            raise ValueError("cx and cy must have equal length >= 1")
        if not t_p > 0:
            raise ValueError(f"t_p must be positive, got {t_p}")
        object.__setattr__(self, "cx", cx)
        object.__setattr__(self, "cy", cy)
        object.__setattr__(self, "t_p", float(t_p))

    @property
    def n_modes(self) -> int:
        return len(self.cx)

    def peak_coupling(self, n_samples: int = 1024) -> float:
        """max over t of sqrt(Ox^2 + Oy^2), sampled on a uniform grid."""
        t = np.linspace(0.0, self.t_p, n_samples)
        ox, oy = evaluate_many(self, t)
        return float(np.max(np.hypot(ox, oy)))


def seed_pulse(n_modes: int, t_p: float, c1x: float) -> PulseShape:
    """First-x-mode-only initialization; all other coefficients zero."""
    cx = [0.0] * n_modes
    cx[0] = float(c1x)
    return PulseShape(cx, [0.0] * n_modes, t_p)


def evaluate(pulse: PulseShape, t: float) -> tuple[float, float]:
    """(Omega_x, Omega_y) in rad/ns at a single time within [0, t_p]."""
    if t < 0.0 or t > pulse.t_p:
        raise ValueError(f"t={t} outside pulse window [0, {pulse.t_p}]")
    n = np.arange(1, pulse.n_modes + 1)
    s = np.sin(n * (np.pi * t / pulse.t_p))
    return float(np.dot(pulse.cx, s)), float(np.dot(pulse.cy, s))


def evaluate_many(pulse: PulseShape, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized evaluate over an array of times inside [0, t_p]."""
    t = np.asarray(t, dtype=float)
    if t.size and (t.min() < 0.0 or t.max() > pulse.t_p):
        raise ValueError("times outside pulse window")
    n = np.arange(1, pulse.n_modes + 1)
    s = np.sin(np.outer(t, n) * (np.pi / pulse.t_p))
    return s @ np.asarray(pulse.cx), s @ np.asarray(pulse.cy)


@dataclass(frozen=True)
class CycleSchedule:
    """Alternating pulse/reset phases with per-channel piecewise rates.

    ``rate_pulse`` and ``rate_reset`` map channel labels to rates in 1/ns.
    Phase membership convention: within one period of length t_p + t_r,
    [0, t_p) is the pulse phase and [t_p, t_p + t_r) the reset phase.
    """

    t_p: float
    t_r: float
    rate_pulse: Mapping[str, float]
    rate_reset: Mapping[str, float]
    n_cycles: int

    def __init__(self, t_p, t_r, rate_pulse, rate_reset, n_cycles):
        if not t_p > 0:
            raise ValueError("t_p must be positive")
        if t_r < 0:
            raise ValueError("t_r must be nonnegative")
        if n_cycles < 0:
            raise ValueError("n_cycles must be nonnegative")
        if set(rate_pulse) != set(rate_reset):
            raise ValueError("pulse and reset phases must list the same channels")
        object.__setattr__(self, "t_p", float(t_p))
        object.__setattr__(self, "t_r", float(t_r))
        object.__setattr__(self, "rate_pulse", dict(rate_pulse))
        object.__setattr__(self, "rate_reset", dict(rate_reset))
        object.__setattr__(self, "n_cycles", int(n_cycles))

    @property
    def cycle_time(self) -> float:
        return self.t_p + self.t_r

    def phase_at(self, t: float) -> tuple[str, float]:
        """("pulse"|"reset", time since phase start) at absolute time t."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        local = t % self.cycle_time if self.cycle_time > 0 else 0.0
        if local < self.t_p:
            return "pulse", local
        return "reset", local - self.t_p


def schedule_rate(schedule: CycleSchedule, channel: str, t: float) -> float:
    """Piecewise-constant rate of one channel at absolute time t (1/ns)."""
    if channel not in schedule.rate_pulse:
        raise KeyError(f"unknown channel {channel!r}")
    phase, _ = schedule.phase_at(t)
    table = schedule.rate_pulse if phase == "pulse" else schedule.rate_reset
    return float(table[channel])


def schedule_coupling(schedule: CycleSchedule, pulse: PulseShape, t: float
                      ) -> tuple[float, float]:
    """Coupling quadratures at absolute time t: pulse envelope or (0, 0)."""
    phase, local = schedule.phase_at(t)
    if phase == "reset":
        return 0.0, 0.0
    return evaluate(pulse, min(local, pulse.t_p))


# --- serialization ----------------------------------------------------------

def pulse_record(pulse: PulseShape) -> dict:
    return {
        "n_modes": pulse.n_modes,
        "cx": list(pulse.cx),
        "cy": list(pulse.cy),
        "t_p_ns": pulse.t_p,
    }


def save_pulse(pulse: PulseShape, path) -> None:
    """Write the pulse record as JSON; floats round-trip exactly."""
    with open(path, "w") as f:
        json.dump(pulse_record(pulse), f, indent=1)
        f.write("\n")


def load_pulse(path) -> PulseShape:
    with open(path) as f:
        rec = json.load(f)
    pulse = PulseShape(rec["cx"], rec["cy"], rec["t_p_ns"])
    if pulse.n_modes != int(rec["n_modes"]):
        raise ValueError("pulse record inconsistent: n_modes != len(cx)")
    return pulse
