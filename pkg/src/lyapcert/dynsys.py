"""Discrete-time system containers, simulation, and envelope fitting.

Systems are maps ``x(t+1) = f(t, x(t))``; autonomous systems simply ignore
``t``.  Every analysis in the library works in coordinates where the
equilibrium of interest sits at the origin, so the containers validate the
declared equilibrium at construction and expose a shifted view.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DivergenceError,
    EquilibriumNotFoundError,
    NotExponentiallyStableError,
)

__all__ = [
    "DynSystem",
    "LinearTV",
    "Trajectory",
    "ExponentialEnvelope",
    "SlowFastSystem",
    "simulate",
    "transition_matrix",
    "find_equilibrium",
    "fit_exponential_envelope",
    "trajectory_to_csv",
]

DIVERGENCE_LIMIT = 1e12
EQUILIBRIUM_TOL = 1e-9
DEFAULT_LAMBDA_MAX = 50.0

MapFn = Callable[[int, np.ndarray], np.ndarray]


def _as_vector(x, dim: int) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape != (dim,):
        raise ValueError(f"expected vector of length {dim}, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class DynSystem:
    """A discrete-time map with a declared equilibrium.

    ``map_fn(t, x)`` must return the next state.  The declared equilibrium
    is checked to ``EQUILIBRIUM_TOL`` on a handful of times at construction.
    """

    dim: int
    map_fn: MapFn
    autonomous: bool = True
    equilibrium: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        eq = self.equilibrium
        eq = np.zeros(self.dim) if eq is None else _as_vector(eq, self.dim)
        object.__setattr__(self, "equilibrium", eq)
        times = (0,) if self.autonomous else (0, 1, 2, 5)
        for t in times:
            image = _as_vector(self.map_fn(t, eq), self.dim)
            if not np.all(np.isfinite(image)) or np.linalg.norm(image - eq) > EQUILIBRIUM_TOL:
                raise ValueError(
                    f"declared equilibrium is not fixed by the map at t={t} "
                    f"(moved by {np.linalg.norm(image - eq):.3e})"
                )

    def step(self, t: int, x: np.ndarray) -> np.ndarray:
        return _as_vector(self.map_fn(t, x), self.dim)

    def shifted(self) -> "DynSystem":
        """Same dynamics in coordinates where the equilibrium is the origin."""
        if not np.any(self.equilibrium):
            return self
        eq = self.equilibrium

        def shifted_map(t: int, u: np.ndarray) -> np.ndarray:
            return np.asarray(self.map_fn(t, u + eq), dtype=float) - eq

        return DynSystem(self.dim, shifted_map, self.autonomous, np.zeros(self.dim))


@dataclass(frozen=True)
class LinearTV:
    """Time-varying linear system ``x(t+1) = A(t) x(t)``."""

    dim: int
    matrix_fn: Callable[[int], np.ndarray]

    def matrix(self, t: int) -> np.ndarray:
        A = np.asarray(self.matrix_fn(t), dtype=float)
        if A.shape != (self.dim, self.dim):
            raise ValueError(f"A({t}) has shape {A.shape}, expected {(self.dim, self.dim)}")
        return A

    def system(self) -> DynSystem:
        return DynSystem(
            self.dim,
            lambda t, x: self.matrix(t) @ x,
            autonomous=False,
            equilibrium=np.zeros(self.dim),
        )


@dataclass(frozen=True)
class Trajectory:
    """States ``x(t0), x(t0+1), ..., x(t0+horizon)`` as rows."""

    t0: int
    states: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", np.atleast_2d(np.asarray(self.states, dtype=float)))

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    def state(self, t: int) -> np.ndarray:
        return self.states[t - self.t0]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


@dataclass(frozen=True)
class ExponentialEnvelope:
    """Decay bound ``|x(t)| <= gain * |x(t0)| * exp(-rate * (t - t0))``.

    ``gain`` is also written C and ``exp(-rate)`` is the per-step ratio rho.
    ``validity_radius`` is the radius of initial conditions the fit covered
    (None for globally valid, e.g. linear dynamics).
    """

    gain: float
    rate: float
    validity_radius: Optional[float] = None
    uniform_bound: Optional[float] = None

    def __post_init__(self):
        if not (self.gain >= 1.0):
            raise ValueError(f"envelope gain must be >= 1, got {self.gain}")
        if not (self.rate > 0.0):
            raise ValueError(f"envelope rate must be positive, got {self.rate}")
        if self.validity_radius is not None and not (self.validity_radius > 0.0):
            raise ValueError("validity radius must be positive when given")

    @property
    def ratio(self) -> float:
        """Per-step contraction factor rho = exp(-rate)."""
        return float(np.exp(-self.rate))

    @classmethod
    def from_gain_ratio(cls, gain: float, ratio: float, **kw) -> "ExponentialEnvelope":
        if not (0.0 < ratio < 1.0):
            raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
        return cls(gain=gain, rate=float(-np.log(ratio)), **kw)

    def bound(self, dt, initial_norm: float = 1.0) -> np.ndarray:
        return self.gain * initial_norm * np.exp(-self.rate * np.asarray(dt, dtype=float))


@dataclass(frozen=True)
class SlowFastSystem:
    """Coupled pair  x(k+1) = x(k) + eps*phi(k, x, y),  y(k+1) = varphi(k, y, x).

    ``ystar`` maps each frozen slow state to the fast equilibrium branch;
    it must satisfy ystar(x) = varphi(k, ystar(x), x), which is sampled at
    construction on a deterministic probe set.
    """

    dim_x: int
    dim_y: int
    phi: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    varphi: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    ystar: Callable[[np.ndarray], np.ndarray]
    epsilon: float = 1e-2
    probe_points: Sequence[np.ndarray] = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        probes = self.probe_points
        if probes is None:
            probes = [np.zeros(self.dim_x)]
            for i in range(self.dim_x):
                e = np.zeros(self.dim_x)
                e[i] = 1.0
                probes.extend([0.3 * e, -0.7 * e])
        probes = tuple(_as_vector(p, self.dim_x) for p in probes)
        object.__setattr__(self, "probe_points", probes)
        for k in (0, 1, 3):
            for x in probes:
                ys = _as_vector(self.ystar(x), self.dim_y)
                image = _as_vector(self.varphi(k, ys, x), self.dim_y)
                if np.linalg.norm(image - ys) > EQUILIBRIUM_TOL:
                    raise ValueError(
                        f"ystar is not an equilibrium branch of the fast map at "
                        f"k={k} (residual {np.linalg.norm(image - ys):.3e})"
                    )

    def shifted_fast(self, x: np.ndarray) -> Callable[[int, np.ndarray], np.ndarray]:
        """Fast map in error coordinates y' = y - ystar(x), slow state frozen."""
        x = _as_vector(x, self.dim_x)
        ys = _as_vector(self.ystar(x), self.dim_y)

        def fast(k: int, yerr: np.ndarray) -> np.ndarray:
            return _as_vector(self.varphi(k, yerr + ys, x), self.dim_y) - ys

        return fast


def simulate(sys: DynSystem, t0: int, x0, horizon: int) -> Trajectory:
    """Iterate the map for ``horizon`` steps.

    Raises :class:`DivergenceError` (with the first offending step index)
    as soon as a state exceeds ``DIVERGENCE_LIMIT`` in norm or goes
    non-finite.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    x = _as_vector(x0, sys.dim)
    states = np.empty((horizon + 1, sys.dim))
    states[0] = x
    for j in range(horizon):
        x = sys.step(t0 + j, x)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"trajectory diverged at step {j + 1} (t={t0 + j + 1})", step=j + 1
            )
        states[j + 1] = x
    return Trajectory(t0=t0, states=states)


def transition_matrix(ltv: LinearTV, t: int, t0: int) -> np.ndarray:
    """State-transition matrix Phi(t, t0) = A(t-1) ... A(t0), Phi(t0, t0) = I."""
    if t < t0:
        raise ValueError(f"need t >= t0, got t={t} < t0={t0}")
    phi = np.eye(ltv.dim)
    for tau in range(t0, t):
        phi = ltv.matrix(tau) @ phi
    return phi


def find_equilibrium(sys: DynSystem, guess, tol: float = 1e-10, max_iter: int = 100) -> np.ndarray:
    """Damped Newton search for a fixed point near ``guess``.

    The residual is g(x) = f(0, x) - x with a finite-difference Jacobian;
    the result is re-checked on several times for nonautonomous maps.
    """
    x = _as_vector(guess, sys.dim)

    def residual(p: np.ndarray) -> np.ndarray:
        return sys.step(0, p) - p

    g = residual(x)
    for _ in range(max_iter):
        if np.linalg.norm(g) <= tol:
            break
        J = _fd_jacobian(lambda p: residual(p), x)
        try:
            dx = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError:
            dx = -0.5 * g  # singular Jacobian: fall back to damped fixed-point step
        step = 1.0
        for _ in range(30):
            cand = x + step * dx
            gc = residual(cand)
            if np.all(np.isfinite(gc)) and np.linalg.norm(gc) < np.linalg.norm(g):
                x, g = cand, gc
                break
            step *= 0.5
        else:
            raise EquilibriumNotFoundError(
                f"no descent direction found near {x} (|g|={np.linalg.norm(g):.3e})"
            )
    if np.linalg.norm(g) > tol:
        raise EquilibriumNotFoundError(
            f"Newton iteration exhausted with residual {np.linalg.norm(g):.3e} > {tol:.1e}"
        )
    times = (0,) if sys.autonomous else (0, 1, 2, 5, 11)
    for t in times:
        if np.linalg.norm(sys.step(t, x) - x) > max(tol, 10 * tol):
            raise EquilibriumNotFoundError(
                f"candidate fixed point is not time-uniform (fails at t={t})"
            )
    return x


def _fd_jacobian(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float = 1e-7) -> np.ndarray:
    n = x.size
    f0 = np.asarray(fn(x), dtype=float)
    J = np.empty((f0.size, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        J[:, i] = (np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h)
    return J


def fit_exponential_envelope(
    trajectories: Sequence[Trajectory],
    lambda_max: float = DEFAULT_LAMBDA_MAX,
) -> ExponentialEnvelope:
    """Fit a single dominating envelope over a family of decaying trajectories.

    Per-trajectory decay rates come from least squares on log-norms; the
    envelope rate is the slowest of these and the gain is then inflated by
    the worst pointwise ratio, so the returned bound is a true majorant of
    every sample.  Identically-zero trajectories are admissible and fall
    back to ``lambda_max``.
    """
    if not trajectories:
        raise ValueError("need at least one trajectory")
    rates = []
    for traj in trajectories:
        norms = traj.norms()
        if norms[0] == 0.0:
            if np.any(norms > 0.0):
                raise NotExponentiallyStableError("trajectory leaves the origin")
            continue
        if norms[-1] >= norms[0]:
            raise NotExponentiallyStableError(
                f"trajectory does not decay (|x({traj.horizon})| >= |x(0)|)"
            )
        mask = norms > 0.0
        mask[0] = False  # the anchor's log-ratio is 0 by construction; it only biases the fit
        ts = np.flatnonzero(mask).astype(float)
        logs = np.log(norms[mask] / norms[0])
        if ts.size >= 2:
            slope = np.polyfit(ts, logs, 1)[0]
            if slope < 0.0:
                rates.append(-slope)
            else:
                # non-monotone fit; endpoint rate is still strictly positive here
                last = int(ts[-1])
                rates.append(-logs[-1] / last / 2.0)
        elif ts.size == 1 and logs[0] < 0.0:
            rates.append(-float(logs[0]) / float(ts[0]))
    rate = min(min(rates) if rates else lambda_max, lambda_max)
    # inflate the gain in log space so the bound dominates every sample
    log_k = 0.0
    radius = 0.0
    for traj in trajectories:
        norms = traj.norms()
        if norms[0] == 0.0:
            continue
        radius = max(radius, norms[0])
        dts = np.arange(norms.size, dtype=float)
        positive = norms > 0.0
        ratios = np.log(norms[positive] / norms[0]) + rate * dts[positive]
        if ratios.size:
            log_k = max(log_k, float(ratios.max()))
    gain = float(np.exp(log_k))
    return ExponentialEnvelope(
        gain=max(gain, 1.0), rate=rate, validity_radius=radius if radius > 0 else None
    )


def trajectory_to_csv(traj: Trajectory) -> str:
    """CSV with header ``t,x0,...,x{n-1}``, one row per step, full precision."""
    n = traj.states.shape[1]
    buf = io.StringIO()
    buf.write("t," + ",".join(f"x{i}" for i in range(n)) + "\n")
    for j, row in enumerate(traj.states):
        buf.write(str(traj.t0 + j) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()
