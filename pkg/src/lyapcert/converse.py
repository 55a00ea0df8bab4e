"""Certificate constructions from decay data (converse route).

Given an exponential envelope certified from trajectories, these builders
assemble sum-along-trajectory candidate functions whose sandwich and
decrement constants come out in closed form, then re-verify the claimed
inequalities on fresh samples.  The fast-subsystem variants keep the slow
state frozen and work in shifted coordinates y' = y - ystar(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .certcheck import ConditionReport, TOL_ABS, TOL_REL
from .dynsys import DynSystem, ExponentialEnvelope, SlowFastSystem, simulate
from .errors import FiniteTimeHypothesisError, HypothesisViolationError
from .rng import Rng

__all__ = [
    "ConverseCertificate",
    "estimate_lipschitz",
    "build_autonomous_converse",
    "build_nonautonomous_converse",
    "build_finite_time_converse",
    "build_exponential_converse",
    "exponential_horizon",
    "verify_converse",
    "BOUNDS",
    "DECREMENT",
    "STATE_LIPSCHITZ",
    "PARAMETER_LIPSCHITZ",
]

LIPSCHITZ_SAFETY = 1.1
REACH_TOL = 1e-9

BOUNDS = "uniform_bounds"
DECREMENT = "decrement"
STATE_LIPSCHITZ = "state_lipschitz"
PARAMETER_LIPSCHITZ = "parameter_lipschitz"


@dataclass(frozen=True)
class ConverseCertificate:
    """Sum-along-trajectory certificate with its sandwich constants.

    The evaluator signature is ``(k, state, frozen_x)``; autonomous and
    nonautonomous certificates ignore ``frozen_x``.  Constants satisfy

        a1*|s|^2 <= W(k, s) <= a2*|s|^2
        W(k+1, next(s)) - W(k, s) <= -a3*|s|^2

    with optional state-Lipschitz (a4) and frozen-parameter-Lipschitz (a5)
    moduli.
    """

    kind: str  # autonomous | nonautonomous | finite_time | exponential
    horizon: int
    a1: float
    a2: float
    a3: float
    a4: Optional[float] = None
    a5: Optional[float] = None
    evaluator: Callable[[int, np.ndarray, Optional[np.ndarray]], float] = None  # type: ignore
    step_fn: Callable[[int, np.ndarray, Optional[np.ndarray]], np.ndarray] = None  # type: ignore
    lipschitz_L1: Optional[float] = None
    lipschitz_L2: Optional[float] = None

    def constants(self) -> dict:
        out = {"a1": self.a1, "a2": self.a2, "a3": self.a3}
        if self.a4 is not None:
            out["a4"] = self.a4
        if self.a5 is not None:
            out["a5"] = self.a5
        return out


def estimate_lipschitz(
    fn: Callable[[int, np.ndarray], np.ndarray],
    points: Sequence[np.ndarray],
    times: Sequence[int] = (0,),
    mode: str = "difference",
    safety: float = LIPSCHITZ_SAFETY,
) -> float:
    """Sampled Lipschitz (or growth) constant with a safety factor.

    ``difference`` mode maximizes |f(t,x)-f(t,y)| / |x-y| over all point
    pairs; ``growth`` mode maximizes |f(t,x)| / |x|.  The result is
    inflated by ``safety`` because sampling can only underestimate.
    """
    points = [np.asarray(p, dtype=float) for p in points]
    best = 0.0
    found = False
    if mode == "growth":
        for t in times:
            for p in points:
                denom = float(np.linalg.norm(p))
                if denom < 1e-14:
                    continue
                found = True
                best = max(best, float(np.linalg.norm(np.asarray(fn(t, p)))) / denom)
    elif mode == "difference":
        for t in times:
            values = [np.asarray(fn(t, p), dtype=float) for p in points]
            for i in range(len(points)):
                for j in range(i + 1, len(points)):
                    denom = float(np.linalg.norm(points[i] - points[j]))
                    if denom < 1e-14:
                        continue
                    found = True
                    best = max(best, float(np.linalg.norm(values[i] - values[j])) / denom)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not found:
        raise ValueError("no sample pair with nonzero separation")
    return best * safety


def _ball_samples(dim: int, radius: float, count: int, seed: int = 0x5EED) -> list:
    rng = Rng(seed)
    return [rng.ball(dim, radius) for _ in range(count)]


def _sum_horizon(env: ExponentialEnvelope) -> int:
    # smallest N with gain^2 * exp(-2*rate*N) <= 1/2
    return max(1, math.ceil(math.log(2.0 * env.gain**2) / (2.0 * env.rate)))


def _envelope_constants(env: ExponentialEnvelope, N: int) -> Tuple[float, float, float]:
    decay = math.exp(-2.0 * env.rate)
    a1 = 1.0
    a2 = env.gain**2 * (1.0 - decay**N) / (1.0 - decay)
    a3 = 1.0 - env.gain**2 * decay**N
    return a1, a2, a3


def build_autonomous_converse(
    sys: DynSystem,
    env: ExponentialEnvelope,
    lipschitz_samples: Optional[Sequence[np.ndarray]] = None,
) -> ConverseCertificate:
    """V(x) = sum of squared norms along the trajectory from x.

    The horizon is the smallest N making the tail loss at most 1/2, which
    pins a3 >= 1/2; a1 = 1 is immediate from the first summand.
    """
    sys = sys.shifted()
    N = _sum_horizon(env)
    a1, a2, a3 = _envelope_constants(env, N)
    radius = env.validity_radius if env.validity_radius else 1.0
    samples = lipschitz_samples
    if samples is None:
        samples = _ball_samples(sys.dim, radius, 48)
    L1 = estimate_lipschitz(lambda t, x: sys.step(t, x), samples)
    a4 = sum(env.gain * math.exp(-env.rate * t) * L1**t for t in range(N))

    def evaluator(k: int, x: np.ndarray, frozen_x=None) -> float:
        traj = simulate(sys, 0, x, N - 1)
        return float(np.sum(traj.states * traj.states))

    return ConverseCertificate(
        kind="autonomous",
        horizon=N,
        a1=a1,
        a2=a2,
        a3=a3,
        a4=a4,
        evaluator=evaluator,
        step_fn=lambda k, x, fx=None: sys.step(k, x),
        lipschitz_L1=L1,
    )


def build_nonautonomous_converse(
    sys: DynSystem,
    env: ExponentialEnvelope,
    lipschitz_samples: Optional[Sequence[np.ndarray]] = None,
    lipschitz_times: Sequence[int] = (0, 1, 2, 3),
) -> ConverseCertificate:
    """Time-indexed variant: V(t, x) sums the forward trajectory from (t, x)."""
    sys = sys.shifted()
    N = _sum_horizon(env)
    a1, a2, a3 = _envelope_constants(env, N)
    radius = env.validity_radius if env.validity_radius else 1.0
    samples = lipschitz_samples
    if samples is None:
        samples = _ball_samples(sys.dim, radius, 48)
    L1 = estimate_lipschitz(lambda t, x: sys.step(t, x), samples, times=lipschitz_times)
    a4 = sum(env.gain * math.exp(-env.rate * t) * L1**t for t in range(N))

    def evaluator(k: int, x: np.ndarray, frozen_x=None) -> float:
        traj = simulate(sys, k, x, N - 1)
        return float(np.sum(traj.states * traj.states))

    return ConverseCertificate(
        kind="nonautonomous",
        horizon=N,
        a1=a1,
        a2=a2,
        a3=a3,
        a4=a4,
        evaluator=evaluator,
        step_fn=lambda k, x, fx=None: sys.step(k, x),
        lipschitz_L1=L1,
    )


def _fast_sample_set(
    sysf: SlowFastSystem, radius: float, count: int, seed: int
) -> list:
    rng = Rng(seed)
    out = []
    for _ in range(count):
        k = rng.integer(0, 3)
        yerr = rng.ball(sysf.dim_y, radius)
        x = rng.ball(sysf.dim_x, radius)
        out.append((k, yerr, x))
    return out


def _fast_lipschitz(
    sysf: SlowFastSystem, samples: Sequence[tuple]
) -> Tuple[float, float]:
    """State modulus L1 and parameter modulus L2 of the shifted fast map."""
    l1 = 0.0
    l2 = 0.0
    found_l1 = False
    found_l2 = False
    xs = []
    for k, yerr, x in samples:
        xs.append((k, np.asarray(x, dtype=float)))
    ys = [np.asarray(s[1], dtype=float) for s in samples]
    for k, x in xs:
        fast = sysf.shifted_fast(x)
        values = [fast(k, y) for y in ys]
        for i in range(len(ys)):
            for j in range(i + 1, len(ys)):
                denom = float(np.linalg.norm(ys[i] - ys[j]))
                if denom < 1e-14:
                    continue
                found_l1 = True
                l1 = max(l1, float(np.linalg.norm(values[i] - values[j])) / denom)
    for i, (k, x1) in enumerate(xs):
        for j in range(i + 1, len(xs)):
            x2 = xs[j][1]
            dx = float(np.linalg.norm(x1 - x2))
            if dx < 1e-14:
                continue
            fast1 = sysf.shifted_fast(x1)
            fast2 = sysf.shifted_fast(x2)
            for y in ys:
                ny = float(np.linalg.norm(y))
                if ny < 1e-14:
                    continue
                gap = float(np.linalg.norm(fast1(k, y) - fast2(k, y)))
                l2 = max(l2, gap / (ny * dx))
                found_l2 = True
    if not found_l1:
        raise ValueError("no fast-state sample pair with nonzero separation")
    if not found_l2:
        l2 = 0.0  # single frozen slow state: parameter modulus unobservable
    return l1 * LIPSCHITZ_SAFETY, l2 * LIPSCHITZ_SAFETY


def _fast_certificate(
    sysf: SlowFastSystem, T: int, a3: float, kind: str, L1: float, L2: float
) -> ConverseCertificate:
    a2 = float(sum(L1 ** (2 * t) for t in range(T)))
    a5 = float(
        sum(
            2.0 * L2 * L1**tp * sum(L1**kp for kp in range(1, tp + 1))
            for tp in range(1, T)
        )
    )

    def evaluator(k: int, yerr: np.ndarray, frozen_x: Optional[np.ndarray]) -> float:
        x = np.zeros(sysf.dim_x) if frozen_x is None else np.asarray(frozen_x, dtype=float)
        fast = sysf.shifted_fast(x)
        y = np.asarray(yerr, dtype=float)
        total = 0.0
        for t in range(T):
            total += float(y @ y)
            if t + 1 < T:
                y = fast(k + t, y)
        return total

    def step_fn(k: int, yerr: np.ndarray, frozen_x: Optional[np.ndarray]) -> np.ndarray:
        x = np.zeros(sysf.dim_x) if frozen_x is None else np.asarray(frozen_x, dtype=float)
        return sysf.shifted_fast(x)(k, np.asarray(yerr, dtype=float))

    return ConverseCertificate(
        kind=kind,
        horizon=T,
        a1=1.0,
        a2=a2,
        a3=a3,
        a4=a2,
        a5=a5,
        evaluator=evaluator,
        step_fn=step_fn,
        lipschitz_L1=L1,
        lipschitz_L2=L2,
    )


def build_finite_time_converse(
    sysf: SlowFastSystem,
    T: int,
    samples: Optional[Sequence[tuple]] = None,
    radius: float = 1.0,
    seed: int = 0xFA57,
) -> ConverseCertificate:
    """Dead-beat fast subsystem: W sums T squared norms of the frozen-x flow.

    The construction presumes the shifted fast state reaches zero in T
    steps from anywhere sampled, which is checked explicitly here and
    rejected with a hypothesis error otherwise.
    """
    if T < 1:
        raise ValueError("finite-time horizon must be >= 1")
    if samples is None:
        samples = _fast_sample_set(sysf, radius, 32, seed)
    for k, yerr, x in samples:
        fast = sysf.shifted_fast(x)
        y = np.asarray(yerr, dtype=float)
        for t in range(T):
            y = fast(k + t, y)
        if float(np.linalg.norm(y)) > REACH_TOL * max(1.0, float(np.linalg.norm(yerr))):
            raise FiniteTimeHypothesisError(
                f"shifted fast state fails to reach zero in {T} steps "
                f"(residual {np.linalg.norm(y):.3e})"
            )
    L1, L2 = _fast_lipschitz(sysf, samples)
    return _fast_certificate(sysf, T, a3=1.0, kind="finite_time", L1=L1, L2=L2)


def exponential_horizon(gain: float, ratio: float) -> int:
    """Horizon making the squared envelope loss at least one half.

    Degenerate gains (2*gain <= 1) clamp to a single step.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError("ratio must lie in (0, 1)")
    raw = math.ceil(-math.log(2.0 * gain) / math.log(ratio))
    return max(1, raw)


def build_exponential_converse(
    sysf: SlowFastSystem,
    env: ExponentialEnvelope,
    samples: Optional[Sequence[tuple]] = None,
    radius: float = 1.0,
    seed: int = 0xFA57,
) -> ConverseCertificate:
    """Exponentially contracting fast subsystem, horizon from the envelope.

    With T chosen so gain*ratio^T <= 1/2 the decrement constant is a3=1/2.
    """
    T = exponential_horizon(env.gain, env.ratio)
    if samples is None:
        samples = _fast_sample_set(sysf, radius, 32, seed)
    L1, L2 = _fast_lipschitz(sysf, samples)
    return _fast_certificate(sysf, T, a3=0.5, kind="exponential", L1=L1, L2=L2)


def _norm2(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    return float(v @ v)


def verify_converse(
    cert: ConverseCertificate,
    samples: Sequence[tuple],
) -> list:
    """Re-check the certificate inequalities on fresh samples.

    ``samples`` holds ``(k, state, frozen_x)`` triples (``frozen_x`` None
    for the slow-system kinds).  Produces bounds, decrement and
    state-Lipschitz reports, plus the frozen-parameter report when a5 is
    available; consecutive samples are paired for the Lipschitz checks.
    """
    samples = [
        (int(k), np.asarray(s, dtype=float), None if fx is None else np.asarray(fx, dtype=float))
        for k, s, fx in samples
    ]
    reports = []

    worst = math.inf
    worst_point = None
    passed = True
    for k, s, fx in samples:
        w = cert.evaluator(k, s, fx)
        n2 = _norm2(s)
        tol = TOL_ABS + TOL_REL * abs(w)
        low = w - cert.a1 * n2
        high = cert.a2 * n2 - w
        margin = min(low, high)
        passed = passed and (margin >= -tol)
        if margin < worst:
            worst, worst_point = margin, (k, s)
    reports.append(ConditionReport(BOUNDS, passed, worst, worst_point, len(samples)))

    worst = -math.inf
    worst_point = None
    passed = True
    for k, s, fx in samples:
        w = cert.evaluator(k, s, fx)
        nxt = cert.step_fn(k, s, fx)
        delta = cert.evaluator(k + 1, nxt, fx) - w
        slack = delta + cert.a3 * _norm2(s)
        tol = TOL_ABS + TOL_REL * abs(w)
        passed = passed and (slack <= tol)
        if slack > worst:
            worst, worst_point = slack, (k, s)
    reports.append(ConditionReport(DECREMENT, passed, worst, worst_point, len(samples)))

    if cert.a4 is not None:
        worst = -math.inf
        worst_point = None
        passed = True
        count = 0
        for (k1, s1, fx1), (_, s2, _) in zip(samples, samples[1:]):
            gap = abs(cert.evaluator(k1, s1, fx1) - cert.evaluator(k1, s2, fx1))
            bound = (
                cert.a4
                * float(np.linalg.norm(s1 - s2))
                * (float(np.linalg.norm(s1)) + float(np.linalg.norm(s2)))
            )
            slack = gap - bound
            tol = TOL_ABS + TOL_REL * max(abs(gap), abs(bound))
            passed = passed and (slack <= tol)
            count += 1
            if slack > worst:
                worst, worst_point = slack, (k1, s1)
        reports.append(ConditionReport(STATE_LIPSCHITZ, passed, worst, worst_point, count))

    if cert.a5 is not None and any(fx is not None for _, _, fx in samples):
        worst = -math.inf
        worst_point = None
        passed = True
        count = 0
        pool = [(k, s, fx) for k, s, fx in samples if fx is not None]
        for (k1, s1, fx1), (_, _, fx2) in zip(pool, pool[1:]):
            gap = abs(cert.evaluator(k1, s1, fx1) - cert.evaluator(k1, s1, fx2))
            bound = cert.a5 * _norm2(s1) * float(np.linalg.norm(fx1 - fx2))
            slack = gap - bound
            tol = TOL_ABS + TOL_REL * max(abs(gap), abs(bound))
            passed = passed and (slack <= tol)
            count += 1
            if slack > worst:
                worst, worst_point = slack, (k1, s1)
        reports.append(ConditionReport(PARAMETER_LIPSCHITZ, passed, worst, worst_point, count))

    return reports


def with_constants(cert: ConverseCertificate, **overrides) -> ConverseCertificate:
    """Certificate with selected constants replaced (for what-if testing)."""
    return replace(cert, **overrides)


def check_envelope_hypothesis(
    sysf: SlowFastSystem,
    env: ExponentialEnvelope,
    samples: Sequence[tuple],
    horizon: int = 12,
) -> None:
    """Raise unless the envelope dominates sampled shifted-fast trajectories."""
    for k, yerr, x in samples:
        fast = sysf.shifted_fast(np.asarray(x, dtype=float))
        y = np.asarray(yerr, dtype=float)
        base = float(np.linalg.norm(y))
        for t in range(horizon):
            bound = env.gain * base * math.exp(-env.rate * t) + TOL_ABS
            if float(np.linalg.norm(y)) > bound:
                raise HypothesisViolationError(
                    f"envelope violated at offset {t} from k={k}"
                )
            y = fast(k + t, y)
