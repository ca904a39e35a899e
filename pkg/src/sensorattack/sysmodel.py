"""Ground-truth LTI models, simulation and model-based observability oracles.

Nothing in here is used by the detectors; these objects generate data and
cross-check detector results in tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .datamatrix import IoDataset, SensorSet
from .errors import ConfigError
from .linalg import DEFAULT_RANK_TOL, RankTolerance, numerical_rank

__all__ = [
    "LtiSystem",
    "ContinuousLti",
    "Trajectory",
    "discretize_zoh",
    "simulate",
    "extended_observability",
    "toeplitz_io",
    "is_observable",
    "sparse_observability_degree",
    "three_inertia",
    "benchmark_input",
]


def _mat(x, name: str) -> np.ndarray:
    a = np.array(x, dtype=float)
    if a.ndim != 2:
        raise ConfigError(f"{name} must be a 2-D matrix, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LtiSystem:
    """Discrete-time model ``x(k+1) = A x(k) + B u(k)``, ``y(k) = C x(k)``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A, B, C = _mat(self.A, "A"), _mat(self.B, "B"), _mat(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ConfigError(f"A must be square, got {A.shape}")
        if B.shape[0] != n or C.shape[1] != n:
            raise ConfigError(f"inconsistent shapes A{A.shape} B{B.shape} C{C.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def restrict(self, keep: SensorSet) -> "LtiSystem":
        """Same dynamics, outputs limited to the sensors in ``keep``."""
        return LtiSystem(self.A, self.B, self.C[keep.zero_based, :])


@dataclass(frozen=True)
class ContinuousLti:
    Ac: np.ndarray
    Bc: np.ndarray
    Cc: np.ndarray
    sample_period: float

    def __post_init__(self):
        if not self.sample_period > 0:
            raise ConfigError("sample_period must be positive")
        for name in ("Ac", "Bc", "Cc"):
            object.__setattr__(self, name, _mat(getattr(self, name), name))


@dataclass(frozen=True)
class Trajectory:
    """Simulated run. All arrays are indexed by time along axis 0."""

    states: np.ndarray
    inputs: np.ndarray
    outputs_clean: np.ndarray
    outputs_observed: np.ndarray
    attack: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.states.shape[0]

    def dataset(self) -> IoDataset:
        return IoDataset(self.inputs, self.outputs_observed)


def discretize_zoh(cs: ContinuousLti) -> LtiSystem:
    """Zero-order-hold discretisation via the exponential of the augmented matrix.

    ``exp([[Ac, Bc], [0, 0]] * Ts) = [[A, B], [0, I]]``
    """
    n, m = cs.Ac.shape[0], cs.Bc.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = cs.Ac
    aug[:n, n:] = cs.Bc
    E = expm(aug * cs.sample_period)
    if not np.all(np.isfinite(E)):  # pragma: no cover
        raise ArithmeticError("matrix exponential did not converge")
    return LtiSystem(E[:n, :n], E[:n, n:], cs.Cc)


def simulate(sys: LtiSystem, x0, inputs, attack=None) -> Trajectory:
    """Run the model over ``len(inputs)`` steps and inject ``attack`` on the outputs.

    The state never depends on the attack (attacks hit sensors only), so the
    whole state trajectory is computed first and the attack is then evaluated
    with access to the state history.
    """
    from .attacks import attack_sequence

    u = np.array(inputs, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    N = u.shape[0]
    if N < 1:
        raise ConfigError("need at least one input sample")
    if u.shape[1] != sys.m:
        raise ConfigError(f"inputs have {u.shape[1]} channels, system has m={sys.m}")
    x = np.zeros(sys.n) if x0 is None else np.array(x0, dtype=float).reshape(-1)
    if x.shape != (sys.n,):
        raise ConfigError(f"x0 has length {x.size}, system has n={sys.n}")

    X = np.empty((N, sys.n))
    for k in range(N):
        X[k] = x
        x = sys.A @ x + sys.B @ u[k]
    y_clean = X @ sys.C.T
    a = np.zeros_like(y_clean) if attack is None else attack_sequence(attack, X, sys)
    for arr in (X, u, y_clean, a):
        arr.setflags(write=False)
    y = y_clean + a
    y.setflags(write=False)
    return Trajectory(X, u, y_clean, y, a)


def extended_observability(sys: LtiSystem, keep: SensorSet | None, depth: int) -> np.ndarray:
    """``[C; CA; ...; CA^(q-1)]`` for the rows of ``C`` in ``keep`` (all sensors if ``None``)."""
    if depth < 1:
        raise ConfigError("depth must be >= 1")
    C = sys.C if keep is None else sys.C[keep.zero_based, :]
    blocks, M = [], C
    for _ in range(depth):
        blocks.append(M)
        M = M @ sys.A
    return np.vstack(blocks)


def toeplitz_io(sys: LtiSystem, keep: SensorSet | None, depth: int) -> np.ndarray:
    """Lower block-triangular input-to-output map with blocks ``0, CB, CAB, ...``."""
    if depth < 1:
        raise ConfigError("depth must be >= 1")
    C = sys.C if keep is None else sys.C[keep.zero_based, :]
    r, m = C.shape[0], sys.m
    markov = [np.zeros((r, m))]
    M = sys.B
    for _ in range(depth - 1):
        markov.append(C @ M)
        M = sys.A @ M
    H = np.zeros((r * depth, m * depth))
    for i in range(depth):
        for j in range(i):
            H[i * r:(i + 1) * r, j * m:(j + 1) * m] = markov[i - j]
    return H


def is_observable(sys: LtiSystem, keep: SensorSet | None = None, tol: RankTolerance = DEFAULT_RANK_TOL) -> bool:
    if keep is not None and len(keep) == 0:
        return False
    return numerical_rank(extended_observability(sys, keep, sys.n), tol) == sys.n


def sparse_observability_degree(sys: LtiSystem, tol: RankTolerance = DEFAULT_RANK_TOL) -> int:
    """Largest ``s`` such that removing any ``s`` sensors leaves ``(A, C)`` observable.

    Returns ``-1`` when the full sensor set is already unobservable.
    """
    degree = -1
    for s in range(sys.p):
        for removed in SensorSet.enumerate(sys.p, s):
            if len(removed) != s:
                continue
            if not is_observable(sys, removed.complement(), tol):
                return degree
        degree = s
    return degree


def three_inertia(
    J1: float = 0.01,
    J2: float = 0.01,
    J3: float = 0.01,
    b1: float = 0.007,
    b2: float = 0.007,
    b3: float = 0.007,
    k1: float = 1.37,
    k2: float = 1.37,
    sample_period: float = 0.1,
) -> ContinuousLti:
    """Three inertias on two torsional shafts driven by a motor torque.

    State ``[theta1, omega1, theta2, omega2, theta3, omega3]``; the five sensors
    measure the three angles and the two shaft twists.
    """
    Ac = np.array([
        [0, 1, 0, 0, 0, 0],
        [-k1 / J1, -b1 / J1, k1 / J1, 0, 0, 0],
        [0, 0, 0, 1, 0, 0],
        [k1 / J2, 0, -(k1 + k2) / J2, -b2 / J2, k2 / J2, 0],
        [0, 0, 0, 0, 0, 1],
        [0, 0, k2 / J3, 0, -k2 / J3, -b3 / J3],
    ])
    Bc = np.array([[0], [1 / J1], [0], [0], [0], [0]])
    Cc = np.array([
        [1, 0, 0, 0, 0, 0],
        [0, 0, 1, 0, 0, 0],
        [0, 0, 0, 0, 1, 0],
        [1, 0, -1, 0, 0, 0],
        [0, 0, 1, 0, -1, 0],
    ], dtype=float)
    return ContinuousLti(Ac, Bc, Cc, sample_period)


def benchmark_input(
    N: int,
    sample_period: float = 0.1,
    seed: int = 0,
    amplitude: float = 0.01,
    frequency: float = 0.5,
    noise_var: float = 1e-8,
) -> np.ndarray:
    """``u(k) = amplitude * sin(frequency * Ts * k) + v(k)`` with Gaussian ``v``; shape ``(N, 1)``."""
    rng = np.random.default_rng(seed)
    k = np.arange(N)
    v = rng.normal(0.0, np.sqrt(noise_var), N)
    return (amplitude * np.sin(frequency * sample_period * k) + v)[:, None]
