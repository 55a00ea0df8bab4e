"""Command-line entry point.

    lyapcert <command> --config FILE [--out FILE] [--seed N] [--no-timestamp]

Commands: simulate, linear, certify-local, converse, averaging,
timescales.  Each reads a config document, dispatches to the analysis
modules, and emits a JSON report; exit status is 0 when every requested
check passed, 2 when a check failed, 1 on error.  Options for a command
are taken from the config's matching ``analyses`` block.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from typing import Optional, Tuple

import numpy as np

from ..averaging import (
    budget_for_delta,
    check_drift_remainder,
    estimate_average,
    estimate_sigma,
)
from ..certcheck import CandidateFunction
from ..converse import (
    build_autonomous_converse,
    build_exponential_converse,
    build_nonautonomous_converse,
    estimate_lipschitz,
    verify_converse,
)
from ..dynsys import (
    DynSystem,
    LinearTV,
    SlowFastSystem,
    fit_exponential_envelope,
    simulate,
    trajectory_to_csv,
)
from ..errors import LyapcertError, StageError
from ..linearize import (
    STABLE,
    certify_local_autonomous,
    certify_local_nonautonomous,
    validate_basin,
)
from ..rng import Rng
from ..stein import (
    classify_linear,
    instability_certificate,
    solve_stein_kron,
    solve_tv_lyapunov,
    verify_transition_decay,
)
from ..timescales import (
    _fast_trajectories,
    certify_semiglobal,
    validate_rate,
    verify_composite,
)
from .config import COMMANDS, SystemConfig, build_system, load_config
from .report import build_report, checks_from_reports, jsonable, write_report

__all__ = ["main", "run_command"]


def _options(cfg: SystemConfig, command: str) -> dict:
    for block in cfg.analyses:
        if block.get("command") == command:
            return {k: v for k, v in block.items() if k != "command"}
    return {}


def _subseed(seed: int, tag: int) -> int:
    return Rng(seed).at(tag)


def _linear_matrix(sys: DynSystem, t: int = 0) -> np.ndarray:
    """Extract A from a map assumed homogeneous linear in the state."""
    base = np.asarray(sys.map_fn(t, np.zeros(sys.dim)), dtype=float)
    cols = [np.asarray(sys.map_fn(t, e), dtype=float) - base for e in np.eye(sys.dim)]
    return np.column_stack(cols)


def _stacked_system(sysf: SlowFastSystem) -> DynSystem:
    """Original-coordinate pair as one map over (x, y)."""
    nx = sysf.dim_x

    def map_fn(k: int, z: np.ndarray) -> np.ndarray:
        x, y = z[:nx], z[nx:]
        x_next = x + sysf.epsilon * np.asarray(sysf.phi(k, x, y), dtype=float)
        y_next = np.asarray(sysf.varphi(k, y, x), dtype=float)
        return np.concatenate([x_next, y_next])

    eq = np.concatenate([np.zeros(nx), np.asarray(sysf.ystar(np.zeros(nx)), dtype=float)])
    return DynSystem(dim=nx + sysf.dim_y, map_fn=map_fn, autonomous=False, equilibrium=eq)


def _cmd_simulate(cfg: SystemConfig, system, opts: dict, seed: int):
    if "x0" not in opts:
        raise ValueError("simulate requires an 'x0' option in the analyses block")
    t0 = int(opts.get("t0", 0))
    horizon = int(opts.get("horizon", 50))
    if isinstance(system, LinearTV):
        system = system.system()
    elif isinstance(system, SlowFastSystem):
        system = _stacked_system(system)
    traj = simulate(system, t0, np.asarray(opts["x0"], dtype=float), horizon)
    csv = trajectory_to_csv(traj)
    results = [
        {
            "type": "trajectory",
            "t0": t0,
            "horizon": horizon,
            "states": jsonable(traj.states),
            "csv": csv,
        }
    ]
    return results, []


def _cmd_linear(cfg: SystemConfig, system, opts: dict, seed: int):
    if isinstance(system, LinearTV):
        envelope = verify_transition_decay(system)
        tvp = solve_tv_lyapunov(system, lambda t: np.eye(system.dim), envelope)
        results = [
            {"type": "transition_decay", "envelope": jsonable(envelope)},
            {
                "type": "time_varying_certificate",
                "P_samples": {str(t): jsonable(tvp(t)) for t in range(4)},
            },
        ]
        return results, []
    if isinstance(system, SlowFastSystem):
        raise ValueError("the linear analysis applies to autonomous or linear_tv systems")
    A = _linear_matrix(system)
    spectrum = classify_linear(A)
    results = [{"type": "spectrum", "A": jsonable(A), "spectrum": jsonable(spectrum)}]
    if spectrum.solvable:
        sol = solve_stein_kron(A, np.eye(system.dim))
        results.append({"type": "quadratic_certificate", "solution": jsonable(sol)})
    if spectrum.spectral_radius > 1.0:
        P1, gamma = instability_certificate(A)
        results.append(
            {"type": "instability_witness", "P1": jsonable(P1), "gamma": gamma}
        )
    return results, []


def _cmd_certify_local(cfg: SystemConfig, system, opts: dict, seed: int):
    if not isinstance(system, DynSystem):
        raise ValueError("certify-local applies to autonomous or nonautonomous systems")
    radius = float(opts.get("domain_radius", 1.0))
    trials = int(opts.get("trials", 100))
    if system.autonomous:
        cert = certify_local_autonomous(system, domain_radius=radius, seed=_subseed(seed, 1))
    else:
        cert = certify_local_nonautonomous(system, domain_radius=radius, seed=_subseed(seed, 1))
    results = [{"type": "local_certificate", "certificate": jsonable(cert)}]
    checks = []
    if cert.verdict == STABLE and trials > 0:
        checks.append(validate_basin(system, cert, trials=trials, seed=_subseed(seed, 2)))
    return results, checks


def _decay_trajectories(system: DynSystem, radius: float, count: int, horizon: int, seed: int):
    rng = Rng(seed)
    shifted = system.shifted()
    trajs = []
    for i in range(count):
        t0 = 0 if system.autonomous else i % 3
        x0 = rng.ball(system.dim, radius)
        trajs.append(simulate(shifted, t0, x0, horizon))
    return trajs


def _cmd_converse(cfg: SystemConfig, system, opts: dict, seed: int):
    radius = float(opts.get("radius", 1.0))
    horizon = int(opts.get("horizon", 24))
    n_traj = int(opts.get("n_trajectories", 8))
    n_check = int(opts.get("n_check", 200))
    if isinstance(system, LinearTV):
        system = system.system()
    if isinstance(system, SlowFastSystem):
        trajs = _fast_trajectories(system, radius, Rng(_subseed(seed, 1)), 4, 4, horizon)
        env = fit_exponential_envelope(trajs)
        cert = build_exponential_converse(system, env, radius=radius, seed=_subseed(seed, 2))
        rng = Rng(_subseed(seed, 3))
        samples = [
            (rng.integer(0, 3), rng.ball(system.dim_y, radius), rng.ball(system.dim_x, radius))
            for _ in range(n_check)
        ]
    else:
        trajs = _decay_trajectories(system, radius, n_traj, horizon, _subseed(seed, 1))
        env = fit_exponential_envelope(trajs)
        shifted = system.shifted()
        if system.autonomous:
            cert = build_autonomous_converse(shifted, env)
        else:
            cert = build_nonautonomous_converse(shifted, env)
        rng = Rng(_subseed(seed, 3))
        samples = [
            (rng.integer(0, 3), rng.ball(system.dim, radius), None) for _ in range(n_check)
        ]
    reports = verify_converse(cert, samples)
    results = [
        {"type": "envelope", "envelope": jsonable(env)},
        {"type": "converse_certificate", "certificate": jsonable(cert)},
    ]
    return results, reports


def _cmd_averaging(cfg: SystemConfig, system, opts: dict, seed: int):
    if not isinstance(system, DynSystem):
        raise ValueError("averaging applies to autonomous or nonautonomous field definitions")
    phi = system.map_fn  # the map expressions define the increment field
    radius = float(opts.get("radius", 1.0))
    n_probes = int(opts.get("n_probes", 8))
    rng = Rng(_subseed(seed, 1))
    probes = [rng.ball(system.dim, radius) for _ in range(n_probes)]
    probes += [radius * e for e in np.eye(system.dim)]
    avg = estimate_average(phi, probes, T_max=int(opts.get("T_max", 512)))
    L = estimate_lipschitz(phi, probes, times=(0, 1, 2, 3), mode="growth")
    T_list = [int(T) for T in opts.get("T_list", (1, 2, 4, 8, 16, 32, 64))]
    table = estimate_sigma(
        phi, avg, [(k, p) for k in range(4) for p in probes], T_list, L
    )
    delta = float(opts.get("delta", 0.5))
    budget = budget_for_delta(delta, table)
    drift_rng = Rng(_subseed(seed, 2))
    samples = []
    for _ in range(int(opts.get("drift_samples", 100))):
        T = T_list[drift_rng.integer(0, len(T_list) - 1)]
        samples.append(
            (
                drift_rng.integer(0, 3),
                drift_rng.ball(system.dim, radius),
                T,
                drift_rng.uniform(0.0, budget.eps_delta),
            )
        )
    drift = check_drift_remainder(phi, avg, table, samples)
    results = [
        {
            "type": "averaged_field",
            "T_used": avg.T_used,
            "convergence_gap": avg.convergence_gap,
            "warning": avg.warning,
        },
        {"type": "sigma_table", "L": table.L, "entries": {str(k): v for k, v in table.entries.items()}},
        {"type": "budget", "budget": jsonable(budget)},
    ]
    return results, [drift]


def _cmd_timescales(cfg: SystemConfig, system, opts: dict, seed: int):
    if not isinstance(system, SlowFastSystem):
        raise ValueError("timescales applies to slow_fast systems")
    r = float(opts.get("r", 1.0))
    V = CandidateFunction.quadratic(np.eye(system.dim_x))
    cert = certify_semiglobal(system, r, V, seed=_subseed(seed, 1))
    reports = verify_composite(
        system, cert, n_samples=int(opts.get("n_samples", 300)), seed=_subseed(seed, 2)
    )
    reports.append(
        validate_rate(
            system,
            cert,
            trials=int(opts.get("trials", 20)),
            horizon=int(opts.get("horizon", 200)),
            seed=_subseed(seed, 3),
        )
    )
    results = [{"type": "composite_certificate", "certificate": jsonable(cert)}]
    return results, reports


_HANDLERS = {
    "simulate": _cmd_simulate,
    "linear": _cmd_linear,
    "certify-local": _cmd_certify_local,
    "converse": _cmd_converse,
    "averaging": _cmd_averaging,
    "timescales": _cmd_timescales,
}


def run_command(
    doc: dict,
    command: str,
    seed: Optional[int] = None,
    timestamp: bool = True,
) -> Tuple[dict, int]:
    """Dispatch one command against a config document.

    Returns (report, exit_code); never raises for analysis failures —
    they are folded into an error report with exit code 1.
    """
    try:
        cfg = load_config(doc)
        effective_seed = cfg.seed if seed is None else int(seed)
        system = build_system(cfg)
        results, reports = _HANDLERS[command](cfg, system, _options(cfg, command), effective_seed)
        checks = checks_from_reports(reports)
        all_passed = all(c["passed"] for c in checks)
        status = "passed" if all_passed else "check_failed"
        report = build_report(command, doc, results, checks, status, timestamp)
        return report, 0 if all_passed else 2
    except Exception as exc:  # noqa: BLE001 - folded into the report
        error = {"type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, StageError):
            error["stage"] = exc.stage
        report = build_report(command, doc, [], [], "error", timestamp, error=error)
        return report, 1


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="lyapcert",
        description="certify stability and convergence rates of discrete-time systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", default=None, help="write the report here instead of stdout")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--no-timestamp",
            action="store_true",
            help="omit the generation time for byte-stable output",
        )
        if name == "simulate":
            p.add_argument("--csv", default=None, help="also write the trajectory CSV here")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
        doc = json.loads(text)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        digest = hashlib.sha256(open(args.config, "rb").read()).hexdigest()
        report = {
            "tool_version": "0.1.0",
            "config_digest": digest,
            "command": args.command,
            "results": [],
            "checks": [],
            "status": "error",
            "error": {"type": "JSONDecodeError", "message": str(exc)},
        }
        write_report(report, args.out)
        return 1

    report, code = run_command(doc, args.command, args.seed, not args.no_timestamp)
    write_report(report, args.out)
    if args.command == "simulate" and getattr(args, "csv", None) and report["results"]:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report["results"][0]["csv"])
    return code


if __name__ == "__main__":
    sys.exit(main())
