"""Optimal-parameter solvers and the parameter-sweep engine.

Root finding proceeds by physical continuation: the target phase is tracked
from zero drive upward on an adaptively refined ladder until it is
bracketed, then polished with a bracketed root solver. Phases are not
globally monotone in the drive strength, so continuation (not blind
bracketing) selects the physically connected root.

Sweep cells are independent pure computations; the engine evaluates them
through an order-preserving map (optionally across worker processes), so
results are bit-identical regardless of execution order or worker count.
Failed cells are recorded as NaN with a reason string instead of aborting.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, CriticalPointError, ValidationError
from .model import HamiltonianKind, system
from .propagator import phase_of

__all__ = [
    "DesignPoint",
    "SweepGrid",
    "solve_omega0_for_alpha",
    "solve_v_for_beta",
    "analytic_optimum",
    "sweep_phase_maps",
    "sweep_gate_metrics",
    "sweep_fidelity_vs_v_omega",
]


@dataclass(frozen=True)
class DesignPoint:
    """A solved operating point of the gate."""

    omega_e: float
    omega0: float
    v: float


# ---------------------------------------------------------------------------
# closed-form optimum
# ---------------------------------------------------------------------------


def analytic_optimum(omega_e: float, t_p: float = 1.0):
    """Fast-modulation predictions for the controlled-Z operating point.

    Returns ``((128 pi)^(1/4) sqrt(omega_e / t_p), 2 omega_e + 16 sqrt(pi)/t_p)``,
    the peak Rabi frequency giving a -2 pi single-qubit phase and the
    interaction giving a -3 pi pair phase, both in the eliminated-state limit.
    """
    if omega_e <= 0:
        raise ValidationError("analytic_optimum requires omega_e > 0")
    omega0 = (128.0 * math.pi) ** 0.25 * math.sqrt(omega_e / t_p)
    v = 2.0 * omega_e + 16.0 * math.sqrt(math.pi) / t_p
    return omega0, v


# ---------------------------------------------------------------------------
# continuation root solving
# ---------------------------------------------------------------------------


def _scan_bracket(f, lo: float, hi: float, step0: float, max_evals: int = 400):
    """Walk f from lo toward hi until it changes sign between two reliable
    evaluations, adapting the step so the function moves by O(0.1..1) per
    point. NaN evaluations (unreliable phase tracking near amplitude
    pinches) break the continuation chain without aborting the scan.
    Returns ((a, fa), (b, fb))."""
    scan = []
    prev = None  # last reliable (x, fx)
    step = step0
    x = lo
    while True:
        fx = f(x)
        scan.append((x, fx))
        if not math.isnan(fx):
            if fx == 0.0:
                return (x, fx), (x, fx)
            if prev is not None:
                if abs(fx - prev[1]) > 1.2 and (x - prev[0]) > 1e-6 * step0:
                    # too coarse to trust the continuation: halve and retry
                    step = 0.5 * (x - prev[0])
                    x = prev[0] + step
                    if len(scan) >= max_evals:
                        break
                    continue
                if fx * prev[1] < 0:
                    return prev, (x, fx)
                if abs(fx - prev[1]) < 0.15:
                    step = min(step * 1.7, max(0.25 * (hi - lo), step0))
            prev = (x, fx)
        else:
            prev = None  # cannot bracket across an unreliable stretch
        if x >= hi or len(scan) >= max_evals:
            break
        x = min(x + step, hi)
    good = [(a, b) for a, b in scan if not math.isnan(b)]
    raise BracketError(
        f"no sign change while scanning [{lo:g}, {hi:g}]"
        + (f": values {good[0][1]:+.6g} .. {good[-1][1]:+.6g}" if good else
           ": no reliable evaluations"),
        scan=scan,
    )


def _polish(f, a, fa, b, fb, phase_tol: float) -> float:
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    try:
        root = brentq(f, a, b, xtol=1e-11, rtol=8.9e-16, maxiter=200)
    except ValueError as err:
        raise BracketError(f"bracket ({a:g}, {b:g}) could not be polished: {err}")
    resid = f(root)
    if math.isnan(resid) or abs(resid) > phase_tol:
        raise BracketError(
            f"root polish left residual {resid:.3e} above {phase_tol:g}"
        )
    return float(root)


def solve_omega0_for_alpha(
    omega_e: float,
    alpha_target: float,
    bracket: tuple[float, float] | None = None,
    phase_tol: float = 1e-6,
    tol: float = 1e-10,
    window_halfwidth: float = 4.5,
) -> float:
    """Peak Rabi frequency whose exact single-qubit phase hits the target.

    The unwrapped phase alpha(omega0) is continued from omega0 = 0; the
    first segment where it crosses ``alpha_target`` is bracketed and solved
    to ``|alpha - alpha_target| <= phase_tol`` (radians).
    """
    if omega_e == 0:
        raise CriticalPointError(
            "alpha jumps discontinuously at omega_e = 0; no solvable target"
        )
    if alpha_target == 0:
        return 0.0

    def f(om0: float) -> float:
        if om0 == 0:
            return -alpha_target
        s = system(omega0=om0, omega_e=omega_e, window_halfwidth=window_halfwidth)
        res = phase_of(s, HamiltonianKind.SINGLE_ROTATING, tol=tol)
        return res.phase - alpha_target if res.unwrap_reliable else math.nan

    if bracket is None:
        # generous cap from inverting the fast-modulation scaling
        cap = 3.0 * math.sqrt(
            4.0 * abs(alpha_target * omega_e) / math.sqrt(math.pi / 2.0)
        ) + 10.0
        lo, hi = 0.0, cap
    else:
        lo, hi = bracket
    step0 = 0.2 * (1.0 + math.sqrt(abs(omega_e)))
    (a, fa), (b, fb) = _scan_bracket(f, lo, hi, step0)
    return _polish(f, a, fa, b, fb, phase_tol)


def solve_v_for_beta(
    omega_e: float,
    omega0: float,
    beta_target: float,
    bracket: tuple[float, float] | None = None,
    phase_tol: float = 1e-6,
    tol: float = 1e-10,
    window_halfwidth: float = 4.5,
) -> float:
    """Interaction strength whose exact pair phase hits the target.

    Scans beta(v) at fixed (omega_e, omega0) by continuation from the low
    end of the bracket; a bracket crossing the two-photon resonance
    ``v = 2 omega_e`` is split there, and the first crossing segment wins.
    """

    def f(v: float) -> float:
        s = system(omega0=omega0, omega_e=omega_e, v=v,
                   window_halfwidth=window_halfwidth)
        res = phase_of(s, HamiltonianKind.TRIPLE_ROTATING, tol=tol)
        return res.phase - beta_target if res.unwrap_reliable else math.nan

    if bracket is None:
        lo, hi = 0.0, 4.0 * abs(omega_e) + 64.0 * math.sqrt(math.pi) + 2.0 * omega0
    else:
        lo, hi = bracket
    if not hi > lo:
        raise ValidationError(f"empty bracket ({lo}, {hi})")

    f_lo = f(lo)
    if not math.isnan(f_lo) and abs(f_lo) <= phase_tol:
        return float(lo)

    critical = 2.0 * omega_e
    if lo < critical < hi:
        pad = 1e-9 * max(1.0, abs(critical))
        segments = [(lo, critical - pad), (critical + pad, hi)]
    else:
        segments = [(lo, hi)]

    step0 = max(0.5, abs(omega_e) / 4.0)
    scans = []
    for seg_lo, seg_hi in segments:
        try:
            (a, fa), (b, fb) = _scan_bracket(f, seg_lo, seg_hi, step0)
            return _polish(f, a, fa, b, fb, phase_tol)
        except BracketError as err:
            scans.extend(err.scan)
            continue
    raise BracketError(
        f"beta never crosses {beta_target:g} on ({lo:g}, {hi:g})",
        scan=scans,
    )


# ---------------------------------------------------------------------------
# sweep engine
# ---------------------------------------------------------------------------


@dataclass
class SweepGrid:
    """A scalar metric tabulated on a rectangular parameter grid.

    ``values[iy, ix]`` corresponds to ``(y_values[iy], x_values[ix])``
    (row-major, y-outer). Failed cells hold NaN and carry a reason string
    in ``failures``.
    """

    metric: str
    x_name: str
    x_values: np.ndarray
    y_name: str
    y_values: np.ndarray
    values: np.ndarray
    failures: list = field(default_factory=list)  # (iy, ix, reason)

    def to_csv(self, path) -> None:
        """Header row (metric, x-name, y-name); data rows (y, x, cell)."""
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([self.metric, self.x_name, self.y_name])
            for iy, y in enumerate(self.y_values):
                for ix, x in enumerate(self.x_values):
                    writer.writerow(
                        [f"{y:.17g}", f"{x:.17g}", f"{self.values[iy, ix]:.17g}"]
                    )

    def to_json_dict(self) -> dict:
        vals = [
            [None if not math.isfinite(v) else v for v in row]
            for row in self.values.tolist()
        ]
        return {
            "metric": self.metric,
            "x": {"name": self.x_name, "values": list(map(float, self.x_values))},
            "y": {"name": self.y_name, "values": list(map(float, self.y_values))},
            "values": vals,
            "failures": [
                {"iy": iy, "ix": ix, "reason": reason}
                for iy, ix, reason in self.failures
            ],
        }


_CELL_FIELDS = (
    "alpha",
    "beta",
    "fidelity_cz",
    "entangling_power",
    "leakage",
    "population_single",
    "population_11",
)


def _eval_cell(args):
    """One sweep cell: unwrapped phases plus derived metrics, or NaNs."""
    omega_e, omega0, v, tol, window = args
    from .gate import cz_fidelity, entangling_power  # deferred for worker import

    try:
        s = system(omega0=omega0, omega_e=omega_e, v=v,
                   window_halfwidth=window)
        single = phase_of(s, HamiltonianKind.SINGLE_ROTATING, tol=tol)
        triple = phase_of(s, HamiltonianKind.TRIPLE_ROTATING, tol=tol)
        alpha, beta = single.phase, triple.phase
        leakage = max(
            0.0,
            1.0 - min(single.return_population, triple.return_population),
        )
        return (
            alpha,
            beta,
            cz_fidelity(alpha, beta),
            entangling_power(alpha, beta),
            leakage,
            single.return_population,
            triple.return_population,
            "",
        )
    except Exception as exc:  # cell failures must not abort the sweep
        return (math.nan,) * 7 + (f"{type(exc).__name__}: {exc}",)


def _map_ordered(func, tasks, threads: int):
    if threads <= 1:
        return [func(t) for t in tasks]
    chunk = max(1, len(tasks) // (8 * threads))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, tasks, chunksize=chunk))


def _run_grid(x_values, y_values, cell_params, metrics, names, tol, window,
              threads):
    x_values = np.asarray(x_values, dtype=float)
    y_values = np.asarray(y_values, dtype=float)
    tasks = [
        cell_params(x, y) + (tol, window)
        for y in y_values
        for x in x_values
    ]
    raw = _map_ordered(_eval_cell, tasks, threads)
    nx, ny = len(x_values), len(y_values)
    grids = []
    failures = []
    for flat_index, result in enumerate(raw):
        if result[-1]:
            failures.append((flat_index // nx, flat_index % nx, result[-1]))
    for metric in metrics:
        col = _CELL_FIELDS.index(metric)
        vals = np.array([r[col] for r in raw], dtype=float).reshape(ny, nx)
        grids.append(
            SweepGrid(
                metric=metric,
                x_name=names[0],
                x_values=x_values,
                y_name=names[1],
                y_values=y_values,
                values=vals,
                failures=list(failures),
            )
        )
    return grids


def sweep_phase_maps(omega_e_values, omega0_values, v: float, tol: float = 1e-9,
                     window_halfwidth: float = 4.5, threads: int = 1):
    """Unwrapped alpha and beta on an (omega_e, omega0) grid at fixed v.

    Every cell is evaluated by exact propagation, including the critical
    columns at omega_e = 0 and 2 omega_e = v where the adiabatic formulas
    do not apply.
    """
    return tuple(
        _run_grid(
            omega_e_values,
            omega0_values,
            lambda x, y: (x, y, v),
            ("alpha", "beta"),
            ("omega_e_tp", "omega0_tp"),
            tol,
            window_halfwidth,
            threads,
        )
    )


def sweep_gate_metrics(omega_e_values, ratio_values, v: float, tol: float = 1e-9,
                       window_halfwidth: float = 4.5, threads: int = 1):
    """Fidelity and entangling power on an (omega_e, omega0/v) grid."""
    return tuple(
        _run_grid(
            omega_e_values,
            ratio_values,
            lambda x, y: (x, y * v, v),
            ("fidelity_cz", "entangling_power"),
            ("omega_e_tp", "omega0_over_v"),
            tol,
            window_halfwidth,
            threads,
        )
    )


def sweep_fidelity_vs_v_omega(
    omega_e_values,
    v_values,
    alpha_target: float,
    beta_target: float = -3.0 * math.pi,
    tol: float = 1e-9,
    window_halfwidth: float = 4.5,
    threads: int = 1,
):
    """Fidelity and pair return population over (omega_e, v).

    For each modulation frequency the peak Rabi frequency is solved to
    reach ``alpha_target`` first; columns whose solve fails are NaN-flagged.
    Also returns the ``beta = beta_target`` locus from the interaction
    solver, NaN where no crossing exists.
    """
    omega_e_values = np.asarray(omega_e_values, dtype=float)
    v_values = np.asarray(v_values, dtype=float)
    nx, ny = len(omega_e_values), len(v_values)

    omega0_col = []
    col_errors = []
    for we in omega_e_values:
        try:
            omega0_col.append(
                solve_omega0_for_alpha(we, alpha_target, tol=tol,
                                       window_halfwidth=window_halfwidth)
            )
            col_errors.append("")
        except Exception as exc:
            omega0_col.append(math.nan)
            col_errors.append(f"{type(exc).__name__}: {exc}")

    tasks = []
    for v in v_values:
        for we, om0 in zip(omega_e_values, omega0_col):
            tasks.append((we, om0, v, tol, window_halfwidth))
    live = [i for i, t in enumerate(tasks) if not math.isnan(t[1])]
    results = _map_ordered(_eval_cell, [tasks[i] for i in live], threads)
    raw = [
        (math.nan,) * 7 + (col_errors[i % nx],) for i in range(len(tasks))
    ]
    for i, r in zip(live, results):
        raw[i] = r

    failures = [
        (i // nx, i % nx, r[-1]) for i, r in enumerate(raw) if r[-1]
    ]
    grids = []
    for metric in ("fidelity_cz", "population_11"):
        col = _CELL_FIELDS.index(metric)
        vals = np.array([r[col] for r in raw], dtype=float).reshape(ny, nx)
        grids.append(
            SweepGrid(
                metric=metric,
                x_name="omega_e_tp",
                x_values=omega_e_values,
                y_name="v_tp",
                y_values=v_values,
                values=vals,
                failures=list(failures),
            )
        )

    locus = []
    for we, om0 in zip(omega_e_values, omega0_col):
        if math.isnan(om0):
            locus.append((float(we), math.nan))
            continue
        try:
            locus.append(
                (float(we),
                 solve_v_for_beta(we, om0, beta_target, tol=tol,
                                  window_halfwidth=window_halfwidth))
            )
        except Exception:
            locus.append((float(we), math.nan))
    return grids[0], grids[1], locus
