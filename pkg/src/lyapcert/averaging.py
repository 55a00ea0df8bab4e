"""Averaging analysis for weakly driven slow dynamics x+ = x + eps*phi(k, x).

The pipeline is: estimate the time-average of the field, tabulate the
deviation coefficient sigma(T) between windowed sums and the averaged
field, convert (sigma, L) into the one-pass drift bounds nu and mu, and
search the tabulated horizons for a budget (T_delta, eps_delta) meeting a
requested deviation delta.  A Lyapunov function for the averaged field is
then lifted to a window-summed certificate for the true dynamics.

Window sums run over T+1 integers (k through k+T inclusive) and are
compared against T times the averaged field; the one-term mismatch this
convention creates is deliberately absorbed into sigma(T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .certcheck import CandidateFunction, ConditionReport, TOL_ABS
from .errors import BudgetInfeasibleError, HypothesisViolationError

__all__ = [
    "AveragedField",
    "SigmaTable",
    "AveragingBudget",
    "AveragedCertificate",
    "estimate_average",
    "estimate_sigma",
    "nu",
    "mu",
    "budget_for_delta",
    "check_drift_remainder",
    "fit_slow_constants",
    "build_averaged_lyapunov",
    "DRIFT_REMAINDER",
]

DRIFT_REMAINDER = "drift_remainder"
GRAD_STEP = 1e-6
HYPOTHESIS_RTOL = 1e-4
EPS1_FLOOR = 1e-300
MU_PROBES = 20

PhiFn = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AveragedField:
    """Memoized time-average of a driving field.

    ``phibar(x)`` is the window mean ``(1/T_max) * sum_{k=0..T_max}
    phi(k, x)``; the reported convergence gap compares it against the
    half-window mean on the probe set.
    """

    phibar: Callable[[np.ndarray], np.ndarray]
    T_used: int
    convergence_gap: float
    warning: Optional[str] = None


@dataclass(frozen=True)
class SigmaTable:
    """Deviation coefficients sigma(T) with monotonicity enforced.

    ``entries`` maps each tabulated horizon to the running minimum of the
    sampled coefficients (the raw maxima are kept alongside); ``L`` is the
    growth bound |phi(k,x)| <= L |x| the table was normalized with.
    """

    L: float
    T_list: Tuple[int, ...]
    entries: dict
    raw_entries: dict = field(default_factory=dict)

    def sigma(self, T: int) -> float:
        if T not in self.entries:
            raise KeyError(f"horizon {T} is not tabulated (have {sorted(self.entries)})")
        return self.entries[T]


@dataclass(frozen=True)
class AveragingBudget:
    delta: float
    T_delta: int
    eps1: float
    eps2: float
    eps_delta: float
    nu_at_budget: float
    mu_at_budget: float


@dataclass(frozen=True)
class AveragedCertificate:
    """Window-summed Lyapunov data for the slowly driven system.

    The evaluator signature is ``(k, x, eps)``: the candidate depends on
    the drive amplitude through the simulated window.  Constants satisfy
    a1|x|^2 <= V'(k,x) <= a2|x|^2 and a decrement of -eps*a3*|x|^2 per
    step for eps in (0, eps_c).
    """

    base_constants: Tuple[float, float, float, float]
    T_star: int
    eps_c: float
    a1: float
    a2: float
    a3: float
    a4: float
    growth_bound: float
    delta: float
    budget: AveragingBudget
    evaluator: Callable[[int, np.ndarray, float], float] = None  # type: ignore


def estimate_average(
    phi: PhiFn,
    probes: Sequence[np.ndarray],
    T_max: int = 512,
    gap_tol: float = 1e-2,
) -> AveragedField:
    """Window-mean estimate of the averaged field with a convergence probe.

    ``T_max`` is rounded up to an even horizon so that period-2 drives
    cancel exactly.  Values are memoized per state; recomputation is
    idempotent so concurrent readers are safe.
    """
    if T_max < 4:
        raise ValueError("T_max too short to average")
    if T_max % 2:
        T_max += 1
    cache: dict = {}

    def window_mean(x: np.ndarray, T: int) -> np.ndarray:
        total = np.zeros_like(x)
        for k in range(T + 1):
            total = total + np.asarray(phi(k, x), dtype=float)
        return total / T

    def phibar(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        key = x.tobytes()
        hit = cache.get(key)
        if hit is None:
            hit = window_mean(x, T_max)
            cache[key] = hit
        return hit

    gap = 0.0
    scale = 0.0
    for p in probes:
        p = np.asarray(p, dtype=float)
        full = phibar(p)
        half = window_mean(p, T_max // 2)
        gap = max(gap, float(np.linalg.norm(full - half)))
        scale = max(scale, float(np.linalg.norm(full)))
    warning = None
    if gap > gap_tol * (1.0 + scale):
        warning = (
            f"window means at T={T_max} and T={T_max // 2} differ by {gap:.3e}; "
            "the field may not be averageable"
        )
    return AveragedField(phibar=phibar, T_used=T_max, convergence_gap=gap, warning=warning)


def estimate_sigma(
    phi: PhiFn,
    avg: AveragedField,
    probes: Sequence[Tuple[int, np.ndarray]],
    T_list: Sequence[int],
    L: float,
) -> SigmaTable:
    """Tabulate the worst normalized deviation between window sums and T*phibar.

    Raw entries are per-horizon maxima over the probes; the stored table
    applies a running minimum over increasing T so downstream formulas see
    a nonincreasing coefficient.
    """
    if L <= 0.0:
        raise ValueError("growth bound L must be positive")
    T_list = tuple(sorted(set(int(T) for T in T_list)))
    if not T_list or T_list[0] < 1:
        raise ValueError("horizons must be >= 1")
    raw: dict = {}
    for T in T_list:
        worst = 0.0
        used = 0
        for k, x in probes:
            x = np.asarray(x, dtype=float)
            nx = float(np.linalg.norm(x))
            if nx < 1e-14:
                continue
            used += 1
            total = np.zeros_like(x)
            for kp in range(k, k + T + 1):
                total = total + np.asarray(phi(kp, x), dtype=float)
            deviation = float(np.linalg.norm(total - T * avg.phibar(x)))
            worst = max(worst, deviation / (T * L * nx))
        if used == 0:
            raise ValueError("all probes have zero state norm")
        raw[T] = worst
    entries: dict = {}
    running = math.inf
    for T in T_list:
        running = min(running, raw[T])
        entries[T] = running
    return SigmaTable(L=L, T_list=T_list, entries=entries, raw_entries=raw)


def nu(T: int, eps: float, L: float, sigma_T: float) -> float:
    """Per-window drift coefficient L*sigma + eps*L^2*T*(1+L)^T.

    The growth factor is formed in log space; horizons long enough to
    overflow saturate to inf rather than raising.
    """
    if T < 1:
        raise ValueError("window length must be >= 1")
    # summed term by term so subnormal amplitudes cannot underflow the log
    log_growth = (
        math.log(eps) + 2.0 * math.log(L) + math.log(T) + T * math.log1p(L)
        if eps > 0.0
        else -math.inf
    )
    if log_growth > 700.0:
        return math.inf
    growth = math.exp(log_growth) if eps > 0.0 else 0.0
    return L * sigma_T + growth


def mu(T: int, eps: float, L: float, sigma_T: float) -> float:
    """Second-order window deviation nu + eps*T*(L+nu)^2."""
    base = nu(T, eps, L, sigma_T)
    if not math.isfinite(base):
        return math.inf
    return base + eps * T * (L + base) ** 2


def budget_for_delta(
    delta: float,
    table: SigmaTable,
    eps2_convention: str = "sum-squared",
) -> AveragingBudget:
    """Pick the shortest tabulated horizon and amplitude meeting mu <= delta.

    T_delta is the first horizon with sigma(T) <= delta/4; eps1 caps the
    nu growth term at delta/4 and eps2 caps the second-order term at
    delta/2.  ``eps2_convention`` selects how the squared drift gain is
    grouped: "sum-squared" uses (L + nu)^2, "square-summed" uses
    L + nu^2.  The budget is post-verified on a grid of amplitudes.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if eps2_convention not in ("sum-squared", "square-summed"):
        raise ValueError(f"unknown eps2 convention {eps2_convention!r}")
    L = table.L
    T_delta = None
    for T in table.T_list:
        if table.entries[T] <= delta / 4.0:
            T_delta = T
            break
    if T_delta is None:
        best = min(table.entries.values())
        raise BudgetInfeasibleError(
            f"no tabulated horizon reaches sigma <= {delta / 4.0:.3e} "
            f"(best sigma = {best:.3e}); extend the horizon table"
        )
    sigma_T = table.entries[T_delta]
    log_eps1 = math.log(delta / (4.0 * L * L * T_delta)) - T_delta * math.log1p(L)
    if log_eps1 < math.log(EPS1_FLOOR):
        raise BudgetInfeasibleError(
            f"first-order amplitude cap underflows at horizon {T_delta}"
        )
    eps1 = math.exp(log_eps1)
    nu1 = nu(T_delta, eps1, L, sigma_T)
    if eps2_convention == "sum-squared":
        gain = (L + nu1) ** 2
    else:
        gain = L + nu1 ** 2
    eps2 = delta / (2.0 * T_delta * gain)
    eps_delta = min(eps1, eps2, 1.0)
    for eps in np.linspace(eps_delta / MU_PROBES, eps_delta, MU_PROBES):
        achieved = mu(T_delta, float(eps), L, sigma_T)
        if achieved > delta * (1.0 + 1e-12):
            raise HypothesisViolationError(
                f"budget post-check failed: mu({T_delta}, {eps:.3e}) = "
                f"{achieved:.3e} exceeds delta = {delta:.3e}"
            )
    return AveragingBudget(
        delta=delta,
        T_delta=T_delta,
        eps1=eps1,
        eps2=eps2,
        eps_delta=eps_delta,
        nu_at_budget=nu(T_delta, eps_delta, L, sigma_T),
        mu_at_budget=mu(T_delta, eps_delta, L, sigma_T),
    )


def _window_states(phi: PhiFn, k: int, x: np.ndarray, eps: float, T: int) -> list:
    """States x(k..k+T+1) of x+ = x + eps*phi along one window."""
    states = [np.asarray(x, dtype=float)]
    for kp in range(k, k + T + 1):
        states.append(states[-1] + eps * np.asarray(phi(kp, states[-1]), dtype=float))
    return states


def check_drift_remainder(
    phi: PhiFn,
    avg: AveragedField,
    table: SigmaTable,
    samples: Sequence[Tuple[int, np.ndarray, int, float]],
) -> ConditionReport:
    """Check |x(k+T+1) - x - eps*T*phibar(x)| <= eps*T*nu*|x| on samples.

    Each sample is a (start time, state, window length, amplitude) tuple;
    window lengths must be tabulated in the sigma table.
    """
    worst = math.inf
    worst_point = None
    worst_params = None
    n = 0
    passed = True
    for k, x, T, eps in samples:
        x = np.asarray(x, dtype=float)
        T = int(T)
        nx = float(np.linalg.norm(x))
        if nx < 1e-14:
            continue
        n += 1
        sigma_T = table.sigma(T)
        end = _window_states(phi, int(k), x, float(eps), T)[-1]
        drift = float(np.linalg.norm(end - x - eps * T * avg.phibar(x)))
        allowance = eps * T * nu(T, float(eps), table.L, sigma_T) * nx
        margin = allowance - drift
        if margin < worst:
            worst = margin
            worst_point = (int(k), x.copy())
            worst_params = {"T": T, "eps": float(eps)}
        if margin < -TOL_ABS:
            passed = False
    return ConditionReport(
        condition=DRIFT_REMAINDER,
        passed=passed,
        worst_margin=worst if n else math.inf,
        worst_point=worst_point,
        samples_checked=n,
        details={"L": table.L, "worst_sample": worst_params},
    )


def _gradient(V: CandidateFunction, x: np.ndarray, h: float = GRAD_STEP) -> np.ndarray:
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (V.eval_fn(0, x + e) - V.eval_fn(0, x - e)) / (2.0 * h)
    return g


def fit_slow_constants(
    V: CandidateFunction,
    avg: AveragedField,
    probes: Sequence[np.ndarray],
) -> Tuple[float, float, float, float]:
    """Sample (c1, c2, c3, c4) for V against the averaged field.

    c1, c2 sandwich V between quadratics, c3 is the directional decrement
    of V along phibar, and c4 bounds the gradient norm relative to |x|.
    Quadratic candidates get exact c1, c2, c4 from the eigenvalues.
    """
    c3 = math.inf
    used = 0
    if V.quadratic_P is not None:
        eigs = np.linalg.eigvalsh(V.quadratic_P)
        c1, c2 = float(eigs[0]), float(eigs[-1])
        c4 = 2.0 * float(eigs[-1])
    else:
        c1, c2, c4 = math.inf, 0.0, 0.0
    for p in probes:
        x = np.asarray(p, dtype=float)
        nx = float(np.linalg.norm(x))
        if nx < 1e-14:
            continue
        used += 1
        grad = _gradient(V, x)
        c3 = min(c3, -float(grad @ avg.phibar(x)) / nx ** 2)
        if V.quadratic_P is None:
            value = float(V.eval_fn(0, x))
            c1 = min(c1, value / nx ** 2)
            c2 = max(c2, value / nx ** 2)
            c4 = max(c4, float(np.linalg.norm(grad)) / nx)
    if used == 0:
        raise ValueError("no probe with nonzero norm")
    if c1 <= 0.0 or not math.isfinite(c2):
        raise HypothesisViolationError(
            f"candidate is not sandwiched by positive quadratics (c1={c1:.3e})"
        )
    if c3 <= 0.0:
        raise HypothesisViolationError(
            f"averaged field does not descend along the candidate (c3={c3:.3e})"
        )
    return c1, c2, c3, c4


def build_averaged_lyapunov(
    V: CandidateFunction,
    constants: Tuple[float, float, float, float],
    phi: PhiFn,
    table: SigmaTable,
    probes: Sequence[np.ndarray],
    eps2_convention: str = "sum-squared",
) -> AveragedCertificate:
    """Lift a Lyapunov function for the averaged field to the true dynamics.

    The certificate candidate is the window sum V'(k, x, eps) =
    sum_{k'=k..k+T*} V(x(k')) along the exact trajectory.  The deviation
    target is delta = c3/(2*c4) and T*, eps_c come from the sigma-table
    budget; the (a1..a4) constants bound and decrement the window sum for
    every eps in (0, eps_c).
    """
    c1, c2, c3, c4 = constants
    if min(c1, c2, c3, c4) <= 0.0:
        raise ValueError("slow constants must be positive")
    for p in probes:
        x = np.asarray(p, dtype=float)
        nx2 = float(x @ x)
        if nx2 < 1e-28:
            continue
        value = float(V.eval_fn(0, x))
        if not (c1 * nx2 * (1.0 - HYPOTHESIS_RTOL) <= value <= c2 * nx2 * (1.0 + HYPOTHESIS_RTOL)):
            raise HypothesisViolationError(
                f"candidate leaves the declared sandwich at |x|={math.sqrt(nx2):.3e}: "
                f"V={value:.6e} vs [{c1 * nx2:.6e}, {c2 * nx2:.6e}]"
            )
    L = table.L
    delta = c3 / (2.0 * c4)
    budget = budget_for_delta(delta, table, eps2_convention)
    T_star = budget.T_delta
    eps_c = budget.eps_delta
    factor = 1.0 + eps_c * L
    a1 = c1
    a2 = c2 * sum(factor ** k for k in range(T_star + 1))
    a3 = T_star * c3 / 2.0
    a4 = (T_star + 1) * c4 * factor ** (2 * T_star)

    def evaluator(k: int, x: np.ndarray, eps: float) -> float:
        states = _window_states(phi, int(k), np.asarray(x, dtype=float), float(eps), T_star)
        return float(sum(V.eval_fn(int(k) + i, s) for i, s in enumerate(states[:-1])))

    return AveragedCertificate(
        base_constants=(c1, c2, c3, c4),
        T_star=T_star,
        eps_c=eps_c,
        a1=a1,
        a2=a2,
        a3=a3,
        a4=a4,
        growth_bound=L,
        delta=delta,
        budget=budget,
        evaluator=evaluator,
    )
