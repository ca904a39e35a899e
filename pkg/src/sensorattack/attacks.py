"""Sparse sensor-attack models, schedules and ground-truth interval bookkeeping."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Literal, Sequence, Union

import numpy as np

from .datamatrix import SensorSet
from .errors import ConfigError

if TYPE_CHECKING:
    from .sysmodel import LtiSystem

__all__ = [
    "Sinusoid",
    "TableSignal",
    "Zero",
    "AdditiveSignal",
    "StateFeedback",
    "AttackSegment",
    "AttackModel",
    "CleanIntervalTruth",
    "eval_attack",
    "attack_sequence",
    "clean_intervals",
    "classify_interval",
    "scenario_library",
]


@dataclass(frozen=True)
class Sinusoid:
    """``amplitude * sin(omega * k)`` with ``omega`` in rad/sample."""

    amplitude: float
    omega: float

    def __call__(self, k: int) -> float:
        return self.amplitude * np.sin(self.omega * k)


@dataclass(frozen=True, eq=False)
class TableSignal:
    """Pre-computed waveform; row ``k`` holds the values for the attacked sensors."""

    values: np.ndarray

    def __call__(self, k: int):
        return self.values[k]


@dataclass(frozen=True)
class Zero:
    def value(self, k, cx_now, cx_frozen):
        return np.zeros_like(cx_now)


@dataclass(frozen=True)
class AdditiveSignal:
    """``a_i(k) = waveform(k)``, independent of the state."""

    waveform: Callable[[int], Union[float, np.ndarray]]

    def value(self, k, cx_now, cx_frozen):
        return np.broadcast_to(np.asarray(self.waveform(k), dtype=float), cx_now.shape).copy()


@dataclass(frozen=True)
class StateFeedback:
    """``a_i(k) = (gain + ramp*k) C_i x(k) + frozen_gain C_i x(frozen_at) + offset(k)``.

    An omniscient attacker: it reads the true state of the plant.
    """

    gain: float = 0.0
    ramp: float = 0.0
    frozen_gain: float = 0.0
    frozen_at: int | None = None
    offset: Callable[[int], Union[float, np.ndarray]] | None = None

    def __post_init__(self):
        if self.frozen_gain != 0.0 and self.frozen_at is None:
            raise ConfigError("frozen_gain needs a frozen_at time index")

    def value(self, k, cx_now, cx_frozen):
        a = (self.gain + self.ramp * k) * cx_now
        if self.frozen_gain != 0.0:
            a = a + self.frozen_gain * cx_frozen
        if self.offset is not None:
            a = a + np.asarray(self.offset(k), dtype=float)
        return a


Generator = Union[Zero, AdditiveSignal, StateFeedback]


@dataclass(frozen=True)
class AttackSegment:
    """Generator active on ``start <= k <= stop`` (``stop=None`` means to the end of the data)."""

    start: int
    stop: int | None
    generator: Generator
    sensors: SensorSet | None = None

    def active(self, k: int) -> bool:
        return self.start <= k and (self.stop is None or k <= self.stop)


@dataclass(frozen=True)
class AttackModel:
    """Fixed-support attack ``a(k)`` assembled from scheduled generator segments."""

    support: SensorSet
    schedule: tuple[AttackSegment, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "schedule", tuple(sorted(self.schedule, key=lambda s: s.start)))
        for seg in self.schedule:
            if seg.start < 0 or (seg.stop is not None and seg.stop < seg.start):
                raise ConfigError(f"invalid segment interval [{seg.start}, {seg.stop}]")
            if seg.sensors is not None and not seg.sensors.issubset(self.support):
                raise ConfigError(f"segment sensors {seg.sensors} outside attack support {self.support}")
        for a, b in zip(self.schedule, self.schedule[1:]):
            if a.stop is None or a.stop >= b.start:
                raise ConfigError(f"overlapping attack segments starting at {a.start} and {b.start}")

    @property
    def p(self) -> int:
        return self.support.p

    def segment_at(self, k: int) -> AttackSegment | None:
        for seg in self.schedule:
            if seg.active(k):
                return seg
        return None


@dataclass(frozen=True)
class CleanIntervalTruth:
    """Attack-free interval ``[k0, k0 + tau - 1]``."""

    k0: int
    tau: int

    @property
    def last(self) -> int:
        return self.k0 + self.tau - 1


def _frozen_state(gen, k: int, history) -> np.ndarray | None:
    if not isinstance(gen, StateFeedback) or gen.frozen_gain == 0.0:
        return None
    if history is None:
        raise ConfigError("attack uses a frozen state but no state history was given")
    if gen.frozen_at > k or gen.frozen_at >= len(history):
        raise ConfigError(f"frozen state x({gen.frozen_at}) not yet available at k={k}")
    return np.asarray(history[gen.frozen_at], dtype=float)


def eval_attack(model: AttackModel, state, k: int, sys: "LtiSystem", history: Sequence | None = None) -> np.ndarray:
    """Attack vector ``a(k)``; zero outside the support and outside every segment.

    ``history`` supplies past states for generators that reference a frozen state.
    """
    if model.p != sys.p:
        raise ConfigError(f"attack defined for p={model.p}, system has p={sys.p}")
    a = np.zeros(sys.p)
    seg = model.segment_at(k)
    if seg is None:
        return a
    cols = (seg.sensors or model.support).zero_based
    x = np.asarray(state, dtype=float)
    xf = _frozen_state(seg.generator, k, history)
    cx_frozen = None if xf is None else sys.C[cols] @ xf
    a[cols] = seg.generator.value(k, sys.C[cols] @ x, cx_frozen)
    return a


def attack_sequence(model: AttackModel, states: np.ndarray, sys: "LtiSystem") -> np.ndarray:
    """``a(0..N-1)`` for a whole state trajectory, shape ``(N, p)``."""
    return np.array([eval_attack(model, states[k], k, sys, states) for k in range(states.shape[0])])


def clean_intervals(model: AttackModel, N: int) -> list[CleanIntervalTruth]:
    """Maximal runs of ``[0, N-1]`` on which no attack segment is scheduled."""
    active = np.zeros(N, dtype=bool)
    for seg in model.schedule:
        stop = N - 1 if seg.stop is None else min(seg.stop, N - 1)
        if seg.start <= stop:
            active[seg.start:stop + 1] = True
    out, k = [], 0
    while k < N:
        if active[k]:
            k += 1
            continue
        start = k
        while k < N and not active[k]:
            k += 1
        out.append(CleanIntervalTruth(start, k - start))
    return out


def classify_interval(
    truth: CleanIntervalTruth, k: int, depth: int, width: int | None = None
) -> Literal["clean", "transition", "attack"]:
    """Position of the window starting at ``k`` relative to a clean interval.

    Without ``width`` the window is the vector ``z^[k, k+q-1]``; with ``width=T``
    it is the Hankel slice covering ``[k, k+T+q-2]``.
    """
    k0, tau, q = truth.k0, truth.tau, depth
    span = q if width is None else width + q - 1
    if k0 <= k <= k0 + tau - span:
        return "clean"
    if k0 - span + 1 <= k <= k0 - 1 or k0 + tau - span + 1 <= k <= k0 + tau - 1:
        return "transition"
    return "attack"


def scenario_library(sample_period: float = 0.1) -> dict[str, AttackModel]:
    """Attack presets for the five-sensor three-inertia benchmark."""
    p = 5
    s1 = AttackModel(
        SensorSet((4, 5), p),
        (AttackSegment(0, None, StateFeedback(gain=-1.0, offset=Sinusoid(0.5, 0.5 * sample_period))),),
        name="s1_stealth_45",
    )
    ramp = AttackModel(
        SensorSet((1, 2, 3), p),
        (AttackSegment(100, None, StateFeedback(gain=-1.0, ramp=0.01)),),
        name="eq22_ramp_123",
    )
    s2 = AttackModel(
        SensorSet((1, 2, 3, 4), p),
        (
            AttackSegment(140, 265, StateFeedback(gain=-2.0, frozen_gain=-2.0, frozen_at=139)),
            AttackSegment(392, None, StateFeedback(gain=-2.0, frozen_gain=-2.0, frozen_at=391)),
        ),
        name="s2_piecewise_1234",
    )
    none = AttackModel(SensorSet.empty(p), (), name="none")
    return {m.name: m for m in (none, s1, ramp, s2)}
