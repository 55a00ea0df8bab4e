"""First-order certificates: linearize at an equilibrium, then bound the rest.

For a map with a Schur linear part the quadratic form from the matrix
equation keeps decreasing under the full nonlinear dynamics inside a ball
whose radius is computed from the decrement margin and a sampled
Lipschitz constant of the Jacobian.  An expanding linear part yields an
instability witness instead; a spectral radius within margin of 1 is
reported as inconclusive rather than guessed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .certcheck import ConditionReport
from .converse import estimate_lipschitz
from .dynsys import DynSystem, ExponentialEnvelope, LinearTV
from .errors import InapplicableError
from .rng import Rng
from .stein import (
    SpectrumReport,
    TOL_MARGIN,
    TvLyapunov,
    classify_linear,
    instability_certificate,
    solve_stein_kron,
    solve_tv_lyapunov,
    verify_transition_decay,
)

__all__ = [
    "JacobianEstimate",
    "LocalCertificate",
    "numerical_jacobian",
    "certify_local_autonomous",
    "certify_local_nonautonomous",
    "validate_basin",
    "STABLE",
    "UNSTABLE",
    "BASIN_CONVERGENCE",
]

STABLE = "exponentially_stable"
UNSTABLE = "unstable"
BASIN_CONVERGENCE = "basin_convergence"

FD_BASE = 1e-6
LINEAR_TOL = 1e-12

MapFn = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class JacobianEstimate:
    """Central-difference Jacobian with a step-halving error estimate.

    ``A`` comes from the finer step; ``error_estimate`` is the largest
    entrywise gap between the two passes, an upper proxy for the
    truncation error actually committed.
    """

    A: np.ndarray
    fd_step: float
    error_estimate: float


@dataclass(frozen=True)
class LocalCertificate:
    """Outcome of linearization-based certification around an equilibrium.

    For the stable verdict, V(x) = (x-eq)' P (x-eq) decreases under the
    full dynamics for ``|x - eq| <= delta_bar``; ``gamma_star`` is the
    admissible relative remainder size and ``remainder_gain`` converts it
    into the radius (``delta_bar = gamma_star / remainder_gain`` before
    clipping to the declared domain).  For the unstable verdict,
    ``instability_P`` and ``instability_gamma`` witness growth of
    -x' P1 x near the origin and the ball-valid fields are None.
    """

    verdict: str
    equilibrium: np.ndarray
    jacobian: JacobianEstimate
    spectrum: Optional[SpectrumReport]
    Q: Union[np.ndarray, Callable[[int], np.ndarray], None] = None
    P: Union[np.ndarray, TvLyapunov, None] = None
    q1: Optional[float] = None
    p2: Optional[float] = None
    gamma_star: Optional[float] = None
    jacobian_lipschitz: Optional[float] = None
    remainder_gain: Optional[float] = None
    delta_bar: Optional[float] = None
    envelope: Optional[ExponentialEnvelope] = None
    instability_P: Optional[np.ndarray] = None
    instability_gamma: Optional[float] = None
    notes: Tuple[str, ...] = ()


def numerical_jacobian(
    sys_or_fn: Union[DynSystem, MapFn],
    t: int = 0,
    x: Optional[np.ndarray] = None,
    base_step: float = FD_BASE,
) -> JacobianEstimate:
    """Jacobian of the map at (t, x) by two-pass central differences.

    The step is ``base_step * max(1, |x|)``; a second pass at half the
    step supplies both the returned matrix and the error estimate.
    """
    if isinstance(sys_or_fn, DynSystem):
        fn: MapFn = sys_or_fn.map_fn
        x = sys_or_fn.equilibrium if x is None else np.asarray(x, dtype=float)
    else:
        fn = sys_or_fn
        if x is None:
            raise ValueError("x is required when passing a bare map")
        x = np.asarray(x, dtype=float)
    h = base_step * max(1.0, float(np.linalg.norm(x)))

    def one_pass(step: float) -> np.ndarray:
        cols = []
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = step
            hi = np.asarray(fn(t, x + e), dtype=float)
            lo = np.asarray(fn(t, x - e), dtype=float)
            cols.append((hi - lo) / (2.0 * step))
        return np.column_stack(cols)

    coarse = one_pass(h)
    fine = one_pass(h / 2.0)
    return JacobianEstimate(
        A=fine,
        fd_step=h / 2.0,
        error_estimate=float(np.max(np.abs(fine - coarse))),
    )


def _ball_points(rng: Rng, dim: int, radius: float, count: int) -> list:
    pts = [np.zeros(dim)]
    pts.extend(rng.ball(dim, radius) for _ in range(count))
    return pts


def _jacobian_lipschitz(
    fn: MapFn,
    dim: int,
    radius: float,
    rng: Rng,
    count: int,
    times: Sequence[int] = (0,),
) -> float:
    """Sampled Lipschitz constant of x -> J(t, x) over a ball (Frobenius)."""

    def vec_jac(t: int, x: np.ndarray) -> np.ndarray:
        return numerical_jacobian(fn, t, x).A.ravel()

    return estimate_lipschitz(vec_jac, _ball_points(rng, dim, radius, count), times=times)


def _default_q(dim: int) -> np.ndarray:
    return np.eye(dim)


def certify_local_autonomous(
    sys: DynSystem,
    Q: Optional[np.ndarray] = None,
    domain_radius: float = 1.0,
    n_lipschitz: int = 64,
    seed: int = 0x10CA1,
) -> LocalCertificate:
    """Certify the equilibrium of an autonomous map by its linearization.

    Schur linear part: solve for P, take gamma_star as the positive root
    of  p2*g^2 + 2*p2*B*g - q1 = 0  with B = max(1, |A|), and shrink the
    ball until the sampled remainder gain sqrt(n)*L1*|x| stays below
    gamma_star.  The Lipschitz constant is estimated twice (over the
    domain, then over the candidate ball) and the larger value kept.
    Expanding linear part: return an instability witness.  Spectral
    radius within margin of 1: raise InapplicableError.
    """
    if domain_radius <= 0.0:
        raise ValueError("domain_radius must be positive")
    shifted = sys.shifted()
    est = numerical_jacobian(shifted, 0)
    spectrum = classify_linear(est.A)
    eq = sys.equilibrium

    if spectrum.spectral_radius > 1.0 + TOL_MARGIN:
        P1, gamma = instability_certificate(est.A)
        return LocalCertificate(
            verdict=UNSTABLE,
            equilibrium=eq,
            jacobian=est,
            spectrum=spectrum,
            instability_P=P1,
            instability_gamma=gamma,
            notes=("linear part has an expanding eigenvalue",),
        )
    if not spectrum.schur:
        raise InapplicableError(
            "first-order test inconclusive: spectral radius "
            f"{spectrum.spectral_radius:.12f} is within margin of 1"
        )

    Q = _default_q(sys.dim) if Q is None else np.asarray(Q, dtype=float)
    sol = solve_stein_kron(est.A, Q)
    q1 = float(np.linalg.eigvalsh(Q)[0])
    p2 = float(np.linalg.eigvalsh(sol.P)[-1])
    if q1 <= 0.0:
        raise ValueError("Q must be positive definite")
    # the gain clamp covers maps with |A| > 1; for |A| <= 1 this is the
    # unit-gain root  -1 + sqrt(1 + q1/p2)
    B = max(1.0, float(np.linalg.norm(est.A, 2)))
    gamma_star = -B + math.sqrt(B * B + q1 / p2)

    rng = Rng(seed)
    notes = tuple(sol.notes)
    L1 = _jacobian_lipschitz(shifted.map_fn, sys.dim, domain_radius, rng.spawn(1), n_lipschitz)
    if L1 <= LINEAR_TOL:
        delta_bar = domain_radius
        remainder_gain = 0.0
        L1 = 0.0
        notes += ("jacobian constant within sampling tolerance; domain radius used",)
    else:
        root_n = math.sqrt(sys.dim)
        delta_1 = min(gamma_star / (root_n * L1), domain_radius)
        L1 = max(L1, _jacobian_lipschitz(shifted.map_fn, sys.dim, delta_1, rng.spawn(2), n_lipschitz))
        remainder_gain = root_n * L1
        delta_bar = min(gamma_star / remainder_gain, domain_radius)

    return LocalCertificate(
        verdict=STABLE,
        equilibrium=eq,
        jacobian=est,
        spectrum=spectrum,
        Q=Q,
        P=sol.P,
        q1=q1,
        p2=p2,
        gamma_star=gamma_star,
        jacobian_lipschitz=L1,
        remainder_gain=remainder_gain,
        delta_bar=delta_bar,
        notes=notes,
    )


def certify_local_nonautonomous(
    sys: DynSystem,
    Q_fn: Optional[Callable[[int], np.ndarray]] = None,
    t_samples: Sequence[int] = (0, 1, 2, 3, 5, 8),
    domain_radius: float = 1.0,
    n_lipschitz: int = 48,
    seed: int = 0x10CA2,
) -> LocalCertificate:
    """Certify a time-varying equilibrium via per-time linearizations.

    The Jacobian family A(t) must admit a uniform decay envelope (checked
    by transition-matrix fitting); P(t) then comes from the tail sum.
    The ball radius solves  p2*(L*d)^2 + 2*p2*B_A*(L*d) - q1 = 0  with
    B_A the sampled bound on |A(t)| and L = sqrt(n)*L1 the remainder
    gain, so delta_bar = (-B_A + sqrt(B_A^2 + q1/p2)) / L.
    """
    if domain_radius <= 0.0:
        raise ValueError("domain_radius must be positive")
    shifted = sys.shifted()
    jacobians: dict = {}

    def matrix_fn(t: int) -> np.ndarray:
        if t not in jacobians:
            jacobians[t] = numerical_jacobian(shifted, t)
        return jacobians[t].A

    ltv = LinearTV(sys.dim, matrix_fn)
    envelope = verify_transition_decay(ltv, t0_samples=tuple(t_samples))
    Q_fn = (lambda t: _default_q(sys.dim)) if Q_fn is None else Q_fn
    tvP = solve_tv_lyapunov(ltv, Q_fn, envelope)

    q1 = math.inf
    p2 = 0.0
    B_A = 0.0
    for t in t_samples:
        q1 = min(q1, float(np.linalg.eigvalsh(np.asarray(Q_fn(t), dtype=float))[0]))
        p2 = max(p2, float(np.linalg.eigvalsh(tvP(t))[-1]))
        B_A = max(B_A, float(np.linalg.norm(matrix_fn(t), 2)))
    if q1 <= 0.0:
        raise ValueError("Q(t) must be positive definite at every sampled time")
    gamma_star = -B_A + math.sqrt(B_A * B_A + q1 / p2)

    rng = Rng(seed)
    notes: Tuple[str, ...] = ()
    L1 = _jacobian_lipschitz(
        shifted.map_fn, sys.dim, domain_radius, rng.spawn(1), n_lipschitz, times=tuple(t_samples)
    )
    if L1 <= LINEAR_TOL:
        delta_bar = domain_radius
        remainder_gain = 0.0
        L1 = 0.0
        notes += ("jacobian constant within sampling tolerance; domain radius used",)
    else:
        root_n = math.sqrt(sys.dim)
        delta_1 = min(gamma_star / (root_n * L1), domain_radius)
        L1 = max(
            L1,
            _jacobian_lipschitz(
                shifted.map_fn, sys.dim, delta_1, rng.spawn(2), n_lipschitz, times=tuple(t_samples)
            ),
        )
        remainder_gain = root_n * L1
        delta_bar = min(gamma_star / remainder_gain, domain_radius)

    return LocalCertificate(
        verdict=STABLE,
        equilibrium=sys.equilibrium,
        jacobian=jacobians[t_samples[0]],
        spectrum=None,
        Q=Q_fn,
        P=tvP,
        q1=q1,
        p2=p2,
        gamma_star=gamma_star,
        jacobian_lipschitz=L1,
        remainder_gain=remainder_gain,
        delta_bar=delta_bar,
        envelope=envelope,
        notes=notes,
    )


def validate_basin(
    sys: DynSystem,
    cert: LocalCertificate,
    trials: int = 100,
    seed: int = 0xBA51,
    max_steps: int = 10_000,
    convergence_tol: float = 1e-10,
) -> ConditionReport:
    """Empirically drive random starts in the certified ball to the equilibrium.

    Each trial starts uniformly inside the delta_bar ball and must come
    within ``convergence_tol * delta_bar`` of the equilibrium inside the
    step budget.  Divergence or an exhausted budget fails the report with
    the offending start recorded.
    """
    if cert.delta_bar is None:
        raise ValueError("certificate carries no ball radius (unstable verdict?)")
    delta = cert.delta_bar
    eq = np.asarray(cert.equilibrium, dtype=float)
    threshold = convergence_tol * delta
    rng = Rng(seed)
    worst = math.inf
    worst_point: Optional[Tuple[int, np.ndarray]] = None
    passed = True
    failures = 0
    longest = 0
    details: dict = {"threshold": threshold, "max_steps": max_steps}
    for _ in range(max(0, trials)):
        x0 = eq + rng.ball(sys.dim, delta)
        x = x0.copy()
        converged = False
        diverged = False
        err = float(np.linalg.norm(x - eq))
        for step in range(1, max_steps + 1):
            x = sys.step(step - 1, x)
            if not np.all(np.isfinite(x)):
                diverged = True
                details["divergence_step"] = step
                break
            err = float(np.linalg.norm(x - eq))
            if err <= threshold:
                converged = True
                longest = max(longest, step)
                break
        if diverged:
            margin = -math.inf
        else:
            margin = (threshold - err) / delta
        if not converged:
            passed = False
            failures += 1
        if margin < worst:
            worst, worst_point = margin, (0, x0)
    details["failures"] = failures
    details["longest_run"] = longest
    return ConditionReport(
        condition=BASIN_CONVERGENCE,
        passed=passed,
        worst_margin=worst if trials > 0 else math.inf,
        worst_point=worst_point,
        samples_checked=max(0, trials),
        details=details,
    )
