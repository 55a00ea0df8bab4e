"""Sampled verification of candidate certificate functions.

Every check here produces *sampled evidence* on an explicit grid, never a
proof: the grid covers concentric shells (geometrically spaced radii) times
low-discrepancy directions, and quadratic candidates additionally get their
eigendirections injected so sign defects cannot hide between samples.
Margins are compared with a small absolute-plus-relative tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .dynsys import DynSystem
from .errors import HypothesisViolationError, InapplicableError
from .rng import low_discrepancy_directions

__all__ = [
    "CandidateFunction",
    "ConditionReport",
    "ClassKEnvelope",
    "shell_grid",
    "inject_eigendirections",
    "check_positive_definite",
    "check_decrease",
    "check_sublevel_invariance",
    "check_exponential_conditions",
    "fit_classk_envelopes",
    "check_instability_region",
    "sample_lasalle_zero_set",
    "POS_DEF",
    "DECREASE",
    "STRICT_DECREASE",
    "UNIFORM_BOUNDS",
    "EXPONENTIAL_BOUNDS",
    "RADIAL_UNBOUNDED",
    "INSTABILITY_REGION",
    "SUBLEVEL_INVARIANCE",
]

TOL_ABS = 1e-9
TOL_REL = 1e-9

POS_DEF = "pos_def"
DECREASE = "decrease"
STRICT_DECREASE = "strict_decrease"
UNIFORM_BOUNDS = "uniform_bounds"
EXPONENTIAL_BOUNDS = "exponential_bounds"
RADIAL_UNBOUNDED = "radial_unbounded"
INSTABILITY_REGION = "instability_region"
SUBLEVEL_INVARIANCE = "sublevel_invariance"


def _margin_tol(reference: float) -> float:
    return TOL_ABS + TOL_REL * abs(reference)


@dataclass(frozen=True)
class CandidateFunction:
    """Scalar candidate V(t, x); autonomous candidates ignore t.

    ``quadratic_P`` marks candidates of the form x' P x, unlocking exact
    eigenvalue information in several checks.  V(t, 0) = 0 is sampled at
    construction.
    """

    eval_fn: Callable[[int, np.ndarray], float]
    dim: int
    quadratic_P: Optional[np.ndarray] = None
    time_dependent: bool = False

    def __post_init__(self):
        times = (0, 1, 3) if self.time_dependent else (0,)
        origin = np.zeros(self.dim)
        for t in times:
            v0 = float(self.eval_fn(t, origin))
            if abs(v0) > TOL_ABS:
                raise ValueError(f"candidate does not vanish at the origin: V({t},0)={v0!r}")

    def __call__(self, t: int, x: np.ndarray) -> float:
        return float(self.eval_fn(t, np.asarray(x, dtype=float)))

    @classmethod
    def quadratic(cls, P: np.ndarray) -> "CandidateFunction":
        P = 0.5 * (np.asarray(P, dtype=float) + np.asarray(P, dtype=float).T)
        return cls(eval_fn=lambda t, x: float(x @ P @ x), dim=P.shape[0], quadratic_P=P)


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    passed: bool
    worst_margin: float
    worst_point: Optional[Tuple[int, np.ndarray]]
    samples_checked: int
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        point = None
        if self.worst_point is not None:
            t, x = self.worst_point
            point = {"t": int(t), "x": [float(v) for v in np.atleast_1d(x)]}
        out = {
            "condition": self.condition,
            "passed": bool(self.passed),
            "worst_margin": float(self.worst_margin),
            "worst_point": point,
            "samples_checked": int(self.samples_checked),
        }
        if self.details:
            out["details"] = _plain(self.details)
        return out


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


@dataclass(frozen=True)
class ClassKEnvelope:
    """Power-law comparison function  r -> coeff * r**exponent."""

    coeff: float
    exponent: float

    def __post_init__(self):
        if not (self.coeff > 0.0 and self.exponent > 0.0):
            raise ValueError("class-K envelope needs positive coefficient and exponent")

    def __call__(self, r) -> np.ndarray:
        return self.coeff * np.asarray(r, dtype=float) ** self.exponent


def shell_grid(
    dim: int,
    radius: float,
    n_shells: int = 12,
    n_directions: int = 32,
    inner_scale: float = 1e-3,
) -> np.ndarray:
    """Concentric-shell sample set: geometric radii times quasi-uniform directions."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    radii = np.geomspace(radius * inner_scale, radius, n_shells)
    dirs = low_discrepancy_directions(dim, n_directions)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)


def inject_eigendirections(grid: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Append +-eigenvector rays of a quadratic form at several grid radii."""
    norms = np.linalg.norm(grid, axis=1)
    norms = norms[norms > 0.0]
    if norms.size == 0:
        raise ValueError("grid has no nonzero points")
    radii = np.geomspace(norms.min(), norms.max(), 5)
    _, vecs = np.linalg.eigh(np.asarray(P, dtype=float))
    extra = [s * r * vecs[:, i] for i in range(vecs.shape[1]) for r in radii for s in (1.0, -1.0)]
    return np.vstack([grid, np.array(extra)])


def _candidate_grid(V: CandidateFunction, grid: np.ndarray) -> np.ndarray:
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if V.quadratic_P is not None:
        grid = inject_eigendirections(grid, V.quadratic_P)
    return grid


def _times(V: CandidateFunction, sys: Optional[DynSystem]) -> Tuple[int, ...]:
    if V.time_dependent or (sys is not None and not sys.autonomous):
        return (0, 1, 2, 3)
    return (0,)


def check_positive_definite(
    V: CandidateFunction, grid: np.ndarray, times: Optional[Sequence[int]] = None
) -> ConditionReport:
    """Sampled positivity of V away from the origin."""
    grid = _candidate_grid(V, grid)
    times = _times(V, None) if times is None else tuple(times)
    worst = np.inf
    worst_point = None
    count = 0
    for t in times:
        for x in grid:
            if not np.any(x):
                continue
            value = V(t, x)
            count += 1
            if value < worst:
                worst, worst_point = value, (t, x.copy())
    details = {}
    if V.quadratic_P is not None:
        details["min_eig_P"] = float(np.linalg.eigvalsh(V.quadratic_P)[0])
    return ConditionReport(POS_DEF, bool(worst > 0.0), worst, worst_point, count, details)


def check_decrease(
    V: CandidateFunction,
    sys: DynSystem,
    grid: np.ndarray,
    strict: bool = False,
    times: Optional[Sequence[int]] = None,
) -> ConditionReport:
    """Sampled one-step decrease of V along the map.

    Non-strict accepts increments up to the margin tolerance; strict
    requires the increment to clear the tolerance on the negative side.
    """
    grid = _candidate_grid(V, grid)
    times = _times(V, sys) if times is None else tuple(times)
    worst = -np.inf
    worst_point = None
    passed = True
    count = 0
    for t in times:
        for x in grid:
            if not np.any(x):
                continue
            value = V(t, x)
            delta = V(t + 1, sys.step(t, x)) - value
            tol = _margin_tol(value)
            ok = (delta < -tol) if strict else (delta <= tol)
            passed = passed and ok
            count += 1
            if delta > worst:
                worst, worst_point = delta, (t, x.copy())
    condition = STRICT_DECREASE if strict else DECREASE
    return ConditionReport(condition, passed, worst, worst_point, count)


def check_sublevel_invariance(
    V: CandidateFunction,
    sys: DynSystem,
    level: float,
    grid: np.ndarray,
    times: Optional[Sequence[int]] = None,
) -> ConditionReport:
    """One-step invariance of the sublevel set {V <= level} on sampled points."""
    if level <= 0.0:
        raise ValueError("sublevel threshold must be positive")
    grid = _candidate_grid(V, grid)
    times = _times(V, sys) if times is None else tuple(times)
    worst = -np.inf
    worst_point = None
    passed = True
    count = 0
    for t in times:
        for x in grid:
            if V(t, x) > level:
                continue
            margin = V(t + 1, sys.step(t, x)) - level
            passed = passed and (margin <= _margin_tol(level))
            count += 1
            if margin > worst:
                worst, worst_point = margin, (t, x.copy())
    return ConditionReport(SUBLEVEL_INVARIANCE, passed, worst, worst_point, count)


def check_exponential_conditions(
    V: CandidateFunction,
    sys: DynSystem,
    grid: np.ndarray,
    times: Optional[Sequence[int]] = None,
) -> Tuple[ConditionReport, float, float]:
    """Quadratic sandwich and decrement coefficients from samples.

    Returns ``(report, a, b)`` where a bounds V above by a * |x|^2 and b is
    the sampled decrement coefficient (Delta V <= -b * |x|^2).  The implied
    one-step contraction factor 1 - b/a is reported in the details.
    """
    grid = _candidate_grid(V, grid)
    times = _times(V, sys) if times is None else tuple(times)
    upper = 0.0
    lower = np.inf
    worst_delta_ratio = -np.inf
    worst_point = None
    count = 0
    for t in times:
        for x in grid:
            n2 = float(x @ x)
            if n2 == 0.0:
                continue
            value = V(t, x)
            delta = V(t + 1, sys.step(t, x)) - value
            upper = max(upper, value / n2)
            lower = min(lower, value / n2)
            ratio = delta / n2
            count += 1
            if ratio > worst_delta_ratio:
                worst_delta_ratio, worst_point = ratio, (t, x.copy())
    a = upper
    b = -worst_delta_ratio
    passed = bool(b > 0.0 and np.isfinite(a) and lower > 0.0)
    details = {"a_lower": lower, "a_upper": a, "decrement_coeff": b}
    if passed:
        details["contraction_factor"] = 1.0 - b / a
    report = ConditionReport(EXPONENTIAL_BOUNDS, passed, worst_delta_ratio, worst_point, count, details)
    return report, a, b


def fit_classk_envelopes(
    V: CandidateFunction, grid: np.ndarray, times: Optional[Sequence[int]] = None
) -> Tuple[ClassKEnvelope, ClassKEnvelope]:
    """Power-law minorant/majorant of V versus the state norm.

    Quadratic candidates get the exact eigenvalue envelopes; otherwise a
    pooled log-log fit picks the exponent and the coefficients are pushed
    to the extreme sampled ratios, so the envelopes are valid at every
    sample by construction.
    """
    if V.quadratic_P is not None:
        eigs = np.linalg.eigvalsh(V.quadratic_P)
        if eigs[0] <= 0.0:
            raise HypothesisViolationError(
                f"quadratic candidate is not positive definite (min eig {eigs[0]:.3e})"
            )
        return ClassKEnvelope(float(eigs[0]), 2.0), ClassKEnvelope(float(eigs[-1]), 2.0)
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    times = _times(V, None) if times is None else tuple(times)
    rs, vs = [], []
    for t in times:
        for x in grid:
            r = float(np.linalg.norm(x))
            if r == 0.0:
                continue
            value = V(t, x)
            if value <= 0.0:
                raise HypothesisViolationError(
                    f"candidate is not positive at sampled point with |x|={r:.3e}"
                )
            rs.append(r)
            vs.append(value)
    log_r = np.log(np.array(rs))
    log_v = np.log(np.array(vs))
    exponent = float(np.polyfit(log_r, log_v, 1)[0])
    if exponent <= 0.0:
        raise HypothesisViolationError("fitted growth exponent is not positive")
    ratios = log_v - exponent * log_r
    return (
        ClassKEnvelope(float(np.exp(ratios.min())), exponent),
        ClassKEnvelope(float(np.exp(ratios.max())), exponent),
    )


def check_instability_region(
    V: CandidateFunction,
    sys: DynSystem,
    grid: np.ndarray,
    times: Optional[Sequence[int]] = None,
) -> ConditionReport:
    """Sampled check of the unstable-region condition.

    On the sampled set U = {V > 0} the increment must be strictly positive,
    and U must reach the innermost shell (so the region touches the origin).
    An empty U means the candidate cannot witness instability at all.
    """
    grid = _candidate_grid(V, grid)
    times = _times(V, sys) if times is None else tuple(times)
    norms = np.linalg.norm(grid, axis=1)
    positive = norms > 0.0
    if not np.any(positive):
        raise InapplicableError("grid has no nonzero points")
    inner_radius = norms[positive].min()
    witness = None
    worst = np.inf
    worst_point = None
    passed = True
    count = 0
    for t in times:
        for x in grid:
            if not np.any(x):
                continue
            value = V(t, x)
            if value <= _margin_tol(value):
                continue
            delta = V(t + 1, sys.step(t, x)) - value
            count += 1
            if witness is None and np.linalg.norm(x) <= inner_radius * (1 + 1e-12):
                witness = (t, x.copy())
            passed = passed and (delta > _margin_tol(value))
            if delta < worst:
                worst, worst_point = delta, (t, x.copy())
    if count == 0:
        raise InapplicableError("V is nowhere positive on the grid")
    if witness is None:
        raise InapplicableError("no positive-V point on the innermost shell")
    details = {"origin_witness": {"t": witness[0], "x": witness[1]}}
    return ConditionReport(INSTABILITY_REGION, passed, worst, worst_point, count, details)


def sample_lasalle_zero_set(
    V: CandidateFunction,
    sys: DynSystem,
    grid: np.ndarray,
    times: Optional[Sequence[int]] = None,
) -> list:
    """Grid points where the increment of V vanishes (within tolerance).

    Requires the non-strict decrease check to pass on the same grid; only
    the sampled zero set is returned — identifying the largest invariant
    subset is left to the caller.
    """
    report = check_decrease(V, sys, grid, strict=False, times=times)
    if not report.passed:
        raise HypothesisViolationError(
            f"V increases on the grid (worst margin {report.worst_margin:.3e})"
        )
    grid = _candidate_grid(V, grid)
    times = _times(V, sys) if times is None else tuple(times)
    zero_set = []
    for t in times:
        for x in grid:
            if not np.any(x):
                continue
            value = V(t, x)
            delta = V(t + 1, sys.step(t, x)) - value
            if abs(delta) <= _margin_tol(value):
                zero_set.append((t, x.copy()))
    return zero_set
