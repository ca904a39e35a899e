"""Block-Hankel data matrices and input-excitation diagnostics."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Literal

import numpy as np

from .errors import DataQualityError, ExcitationError, WindowError
from .linalg import DEFAULT_RANK_TOL, RankTolerance, numerical_rank

__all__ = [
    "SensorSet",
    "IoDataset",
    "HankelView",
    "hankel",
    "windowed_hankel",
    "stack_z",
    "is_persistently_exciting",
    "min_excitability_horizon",
]


@dataclass(frozen=True, order=False)
class SensorSet:
    """A set of sensor indices, 1-based as in ``{1, ..., p}``."""

    indices: tuple[int, ...]
    p: int

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate sensor index in {self.indices}")
        if idx and (idx[0] < 1 or idx[-1] > self.p):
            raise ValueError(f"sensor indices {idx} outside 1..{self.p}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices: Iterable[int], p: int) -> "SensorSet":
        return cls(tuple(indices), p)

    @classmethod
    def full(cls, p: int) -> "SensorSet":
        return cls(tuple(range(1, p + 1)), p)

    @classmethod
    def empty(cls, p: int) -> "SensorSet":
        return cls((), p)

    def complement(self) -> "SensorSet":
        return SensorSet(tuple(i for i in range(1, self.p + 1) if i not in self.indices), self.p)

    @property
    def zero_based(self) -> list[int]:
        return [i - 1 for i in self.indices]

    def issubset(self, other: "SensorSet") -> bool:
        return set(self.indices) <= set(other.indices)

    def sort_key(self) -> tuple:
        """Cardinality first, then lexicographic; used for deterministic tie-breaks."""
        return (len(self.indices), self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, i) -> bool:
        return i in self.indices

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.indices)) + "}"

    @staticmethod
    def enumerate(p: int, max_size: int, proper: bool = False) -> Iterator["SensorSet"]:
        """All subsets of ``{1..p}`` with at most ``max_size`` elements, by size then lexicographically.

        ``proper=True`` drops the full set.
        """
        for r in range(0, min(max_size, p) + 1):
            if proper and r == p:
                break
            for c in combinations(range(1, p + 1), r):
                yield SensorSet(c, p)


def _as_signal(x, name: str) -> np.ndarray:
    a = np.array(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DataQualityError(f"{name} must be 1-D or 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        row, col = (int(i) for i in np.argwhere(~np.isfinite(a))[0])
        raise DataQualityError(f"non-finite {name} value at k={row}, channel {col + 1}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class IoDataset:
    """Input/output records ``u(0..N-1)`` (shape ``(N, m)``) and ``y(0..N-1)`` (shape ``(N, p)``)."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        u = _as_signal(self.inputs, "input")
        y = _as_signal(self.outputs, "output")
        if u.shape[0] != y.shape[0]:
            raise DataQualityError(f"input length {u.shape[0]} != output length {y.shape[0]}")
        if u.shape[0] < 1:
            raise DataQualityError("dataset must contain at least one sample")
        object.__setattr__(self, "inputs", u)
        object.__setattr__(self, "outputs", y)

    @property
    def N(self) -> int:
        return self.inputs.shape[0]

    @property
    def m(self) -> int:
        return self.inputs.shape[1]

    @property
    def p(self) -> int:
        return self.outputs.shape[1]

    def scaled(self, factor: float) -> "IoDataset":
        return IoDataset(self.inputs * factor, self.outputs * factor)


Selector = Literal["u", "y"]


@dataclass(frozen=True)
class HankelView:
    """A realised depth-``q`` block-Hankel matrix over columns ``start .. start+width-1``."""

    source: str
    depth: int
    start: int
    width: int
    matrix: np.ndarray


def _block_hankel(signal: np.ndarray, q: int, start: int, width: int) -> np.ndarray:
    # column j stacks signal[start+j : start+j+q] time-major
    seg = signal[start:start + width + q - 1]
    win = np.lib.stride_tricks.sliding_window_view(seg, q, axis=0)  # (width, d, q)
    return np.ascontiguousarray(win.transpose(0, 2, 1).reshape(width, -1).T)


def _select(data: IoDataset, which: Selector, sensors: SensorSet | None) -> tuple[np.ndarray, str]:
    if which == "u":
        if sensors is not None:
            raise ValueError("sensor selection only applies to outputs")
        return data.inputs, "inputs"
    if which != "y":
        raise ValueError(f"unknown signal selector {which!r}")
    if sensors is None:
        return data.outputs, "outputs"
    if sensors.p != data.p:
        raise ValueError(f"sensor set defined for p={sensors.p}, data has p={data.p}")
    return data.outputs[:, sensors.zero_based], f"outputs{sensors}"


def _check_depth(q: int, N: int):
    if q < 1:
        raise WindowError(f"depth must be >= 1, got {q}")
    if q > N:
        raise WindowError(f"depth {q} exceeds data length {N}")


def hankel(data: IoDataset, which: Selector, depth: int, sensors: SensorSet | None = None) -> HankelView:
    """Full depth-``q`` Hankel matrix of the inputs, outputs, or outputs restricted to ``sensors``.

    The result has ``N - q + 1`` columns.
    """
    _check_depth(depth, data.N)
    return windowed_hankel(data, which, depth, 0, data.N - depth + 1, sensors)


def windowed_hankel(
    data: IoDataset,
    which: Selector,
    depth: int,
    start: int,
    width: int,
    sensors: SensorSet | None = None,
) -> HankelView:
    """Width-``T`` slice of the Hankel matrix starting at column ``k``."""
    _check_depth(depth, data.N)
    if start < 0 or width < 1 or start + width + depth - 1 > data.N:
        raise WindowError(
            f"window k={start}, T={width}, q={depth} needs {start + width + depth - 1} samples, have {data.N}"
        )
    signal, label = _select(data, which, sensors)
    return HankelView(label, depth, start, width, _block_hankel(signal, depth, start, width))


def stack_z(
    data: IoDataset,
    depth: int,
    keep: SensorSet | None = None,
    window: tuple[int, int] | None = None,
) -> np.ndarray:
    """Input Hankel stacked over the output Hankel of the sensors in ``keep``.

    ``keep=None`` keeps every sensor. ``window=(k, T)`` restricts to a width-``T``
    slice; otherwise the full-length matrices are used. An empty ``keep`` yields
    the input Hankel alone.
    """
    _check_depth(depth, data.N)
    k, T = window if window is not None else (0, data.N - depth + 1)
    U = windowed_hankel(data, "u", depth, k, T).matrix
    if keep is not None and len(keep) == 0:
        return U
    Y = windowed_hankel(data, "y", depth, k, T, keep).matrix
    return np.vstack([U, Y])


def is_persistently_exciting(data: IoDataset, order: int, tol: RankTolerance = DEFAULT_RANK_TOL) -> bool:
    """True when the depth-``order`` input Hankel matrix has full row rank ``m * order``."""
    if order < 1 or order > data.N:
        return False
    U = hankel(data, "u", order).matrix
    if U.shape[1] < U.shape[0]:
        return False
    return numerical_rank(U, tol) == data.m * order


def min_excitability_horizon(data: IoDataset, order: int, tol: RankTolerance = DEFAULT_RANK_TOL) -> int:
    """Smallest width ``T >= m*q`` for which every width-``T`` input Hankel slice has full row rank.

    The scan over ``T`` is linear and ascending: the property "every slice is
    full rank" need not be monotone in ``T``, so bisection is not safe.
    """
    q, m, N = order, data.m, data.N
    if not is_persistently_exciting(data, q, tol):
        raise ExcitationError(f"input is not persistently exciting of order {q}")
    U = hankel(data, "u", q).matrix
    target = m * q
    for T in range(target, N - q + 2):
        if all(
            numerical_rank(U[:, k:k + T], tol) == target for k in range(0, N - T - q + 2)
        ):
            return T
    raise ExcitationError(f"no excitability horizon exists for order {q}")  # pragma: no cover
