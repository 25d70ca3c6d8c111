"""Command-line frontend.

Every workflow is driven by a single JSON config (optionally seeded from an
in-repo preset) and writes machine-readable outputs plus a manifest echoing
the fully resolved configuration. Identical configs and seeds produce
bytewise-identical files; nothing time-stamped goes into the outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import subprocess
import sys
from importlib import metadata, resources
from pathlib import Path

import numpy as np

from . import analytic, design, gate, model, noise, propagator
from .errors import RydgateError, ValidationError
from .model import HamiltonianKind, system

PRESETS = ("fig2", "fig3", "fig4", "fig5")


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def _load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; available: {PRESETS}")
    text = resources.files("rydgate").joinpath(f"presets/{name}.json").read_text()
    return json.loads(text)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _reject_unknown(block: dict, allowed: set, where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ValidationError(
            f"unknown config key(s) in {where}: {sorted(unknown)}; "
            f"allowed: {sorted(allowed)}"
        )


def _axis(block, where: str) -> np.ndarray:
    if not isinstance(block, dict):
        raise ValidationError(f"{where} must be an object with min/max/n")
    _reject_unknown(block, {"min", "max", "n"}, where)
    try:
        lo, hi, n = float(block["min"]), float(block["max"]), int(block["n"])
    except KeyError as missing:
        raise ValidationError(f"{where} is missing {missing}") from None
    if n < 1:
        raise ValidationError(f"{where}.n must be >= 1")
    return np.linspace(lo, hi, n)


def _build_describe() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=here, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except OSError:
        pass
    try:
        return f"rydgate-{metadata.version('rydgate')}"
    except metadata.PackageNotFoundError:
        return "rydgate-unreleased"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _write_manifest(outdir: Path, command: str, config: dict, outputs: list,
                    results: dict | None = None) -> None:
    payload = {
        "command": command,
        "build": _build_describe(),
        "config": config,
        "outputs": sorted(outputs),
    }
    if results is not None:
        payload["results"] = results
    _write_json(outdir / "manifest.json", payload)


def _write_curve_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{x:.17g}" if isinstance(x, float) else x
                             for x in row])


def _emit_grid(grid: design.SweepGrid, outdir: Path, fmt: str) -> str:
    if fmt == "json":
        name = f"{grid.metric}.json"
        _write_json(outdir / name, grid.to_json_dict())
    else:
        name = f"{grid.metric}.csv"
        grid.to_csv(outdir / name)
    return name


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_dynamics(config: dict, outdir: Path, fmt: str, threads: int) -> int:
    _reject_unknown(
        config,
        {"omega_e", "omega0", "v", "delta", "t_p", "window_halfwidth",
         "tolerance"},
        "dynamics",
    )
    s = system(
        omega0=float(config["omega0"]),
        omega_e=float(config.get("omega_e", 0.0)),
        v=float(config.get("v", 0.0)),
        delta=float(config.get("delta", 0.0)),
        t_p=float(config.get("t_p", 1.0)),
        window_halfwidth=float(config.get("window_halfwidth", 4.5)),
    )
    tol = float(config.get("tolerance", 1e-10))
    single = propagator.phase_of(s, HamiltonianKind.SINGLE_ROTATING, tol=tol,
                                 keep_trace=True)
    triple = propagator.phase_of(s, HamiltonianKind.TRIPLE_ROTATING, tol=tol,
                                 keep_trace=True)
    single.trace.to_csv(outdir / "dynamics_single.csv")
    triple.trace.to_csv(outdir / "dynamics_triple.csv")
    results = {
        "alpha": single.phase,
        "beta": triple.phase,
        "return_population_single": single.return_population,
        "return_population_11": triple.return_population,
    }
    _write_manifest(outdir, "dynamics", config,
                    ["dynamics_single.csv", "dynamics_triple.csv"], results)
    return 0


def _cmd_sweep(config: dict, outdir: Path, fmt: str, threads: int) -> int:
    _reject_unknown(
        config,
        {"kind", "v", "omega_e", "omega0", "ratio", "v_axis", "alpha_target",
         "beta_target", "tolerance", "window_halfwidth"},
        "sweep",
    )
    kind = config.get("kind")
    tol = float(config.get("tolerance", 1e-9))
    window = float(config.get("window_halfwidth", 4.5))
    outputs = []

    if kind in ("phase_maps", "fig2"):
        alpha_grid, beta_grid = design.sweep_phase_maps(
            _axis(config["omega_e"], "sweep.omega_e"),
            _axis(config["omega0"], "sweep.omega0"),
            v=float(config["v"]),
            tol=tol, window_halfwidth=window, threads=threads,
        )
        outputs += [_emit_grid(g, outdir, fmt) for g in (alpha_grid, beta_grid)]
    if kind in ("gate_metrics", "fig2"):
        f_grid, p_grid = design.sweep_gate_metrics(
            _axis(config["omega_e"], "sweep.omega_e"),
            _axis(config["ratio"], "sweep.ratio"),
            v=float(config["v"]),
            tol=tol, window_halfwidth=window, threads=threads,
        )
        outputs += [_emit_grid(g, outdir, fmt) for g in (f_grid, p_grid)]
    if kind == "fidelity_vs_v":
        f_grid, pop_grid, locus = design.sweep_fidelity_vs_v_omega(
            _axis(config["omega_e"], "sweep.omega_e"),
            _axis(config["v_axis"], "sweep.v_axis"),
            alpha_target=float(config["alpha_target"]),
            beta_target=float(config.get("beta_target", -3.0 * math.pi)),
            tol=tol, window_halfwidth=window, threads=threads,
        )
        outputs += [_emit_grid(g, outdir, fmt) for g in (f_grid, pop_grid)]
        _write_curve_csv(outdir / "beta_locus.csv", ["omega_e_tp", "v_tp"],
                         [(float(a), float(b)) for a, b in locus])
        outputs.append("beta_locus.csv")
    if kind not in ("phase_maps", "gate_metrics", "fig2", "fidelity_vs_v"):
        raise ValidationError(
            f"sweep.kind must be phase_maps | gate_metrics | fig2 | "
            f"fidelity_vs_v, got {kind!r}"
        )
    _write_manifest(outdir, "sweep", config, outputs)
    return 0


def _cmd_optimize(config: dict, outdir: Path, fmt: str, threads: int) -> int:
    _reject_unknown(
        config,
        {"omega_e", "alpha_target", "beta_target", "omega0_bracket",
         "v_bracket", "tolerance", "phase_tol", "window_halfwidth"},
        "optimize",
    )
    omega_e = float(config["omega_e"])
    alpha_target = float(config["alpha_target"])
    beta_target = float(config["beta_target"])
    tol = float(config.get("tolerance", 1e-10))
    phase_tol = float(config.get("phase_tol", 1e-6))
    window = float(config.get("window_halfwidth", 4.5))

    omega0_opt = design.solve_omega0_for_alpha(
        omega_e, alpha_target,
        bracket=tuple(config["omega0_bracket"]) if "omega0_bracket" in config
        else None,
        phase_tol=phase_tol, tol=tol, window_halfwidth=window,
    )
    v_opt = design.solve_v_for_beta(
        omega_e, omega0_opt, beta_target,
        bracket=tuple(config["v_bracket"]) if "v_bracket" in config else None,
        phase_tol=phase_tol, tol=tol, window_halfwidth=window,
    )
    report = gate.gate_from_dynamics(
        system(omega0=omega0_opt, omega_e=omega_e, v=v_opt,
               window_halfwidth=window),
        tol=tol,
    )
    payload = {
        "omega_e": omega_e,
        "omega0_opt": omega0_opt,
        "v_opt": v_opt,
        "alpha": report.alpha,
        "beta": report.beta,
        "fidelity_cz": report.fidelity_cz,
        "entangling_power": report.entangling_power,
        "leakage": report.leakage,
    }
    if omega_e > 0:
        ae_omega0, ae_v = design.analytic_optimum(omega_e)
        payload["analytic_omega0"] = ae_omega0
        payload["analytic_v"] = ae_v
    _write_json(outdir / "design_point.json", payload)
    _write_manifest(outdir, "optimize", config, ["design_point.json"], payload)
    return 0


def _resolve_design_point(block: dict, tol: float) -> design.DesignPoint:
    _reject_unknown(
        block, {"omega_e", "omega0", "v", "alpha_target", "beta_target"},
        "noise.design_point",
    )
    omega_e = float(block["omega_e"])
    if "omega0" in block and "v" in block:
        return design.DesignPoint(omega_e=omega_e,
                                  omega0=float(block["omega0"]),
                                  v=float(block["v"]))
    omega0 = design.solve_omega0_for_alpha(
        omega_e, float(block["alpha_target"]), tol=tol)
    v = design.solve_v_for_beta(
        omega_e, omega0, float(block["beta_target"]), tol=tol)
    return design.DesignPoint(omega_e=omega_e, omega0=omega0, v=v)


def _cmd_noise(config: dict, outdir: Path, fmt: str, threads: int) -> int:
    _reject_unknown(
        config, {"design_point", "curves", "detuning", "monte_carlo",
                 "tolerance"},
        "noise",
    )
    tol = float(config.get("tolerance", 1e-9))
    point = _resolve_design_point(config["design_point"], tol)
    outputs = []
    results = {"design_point": {"omega_e": point.omega_e,
                                "omega0": point.omega0, "v": point.v}}

    if "curves" in config:
        block = config["curves"]
        _reject_unknown(block, {"parameters", "epsilon_max", "n"},
                        "noise.curves")
        eps = np.linspace(-float(block["epsilon_max"]),
                          float(block["epsilon_max"]), int(block["n"]))
        curvature = {}
        coeffs = (noise.sensitivity_coeffs(point.omega_e)
                  if point.omega_e > 0 else None)
        for chi in block["parameters"]:
            curve = noise.fidelity_vs_relative_error(point, chi, eps, tol=tol)
            name = f"curve_{chi}.csv"
            _write_curve_csv(outdir / name, ["epsilon", "fidelity_cz"],
                             zip(map(float, curve.epsilons),
                                 map(float, curve.fidelities)))
            outputs.append(name)
            fit_mask = np.abs(eps) <= 0.02
            beta_fit, r2 = noise.fit_quadratic_loss(
                curve.epsilons[fit_mask], curve.fidelities[fit_mask])
            entry = {"fitted": beta_fit, "r_squared": r2}
            if coeffs is not None:
                entry["analytic"] = getattr(coeffs, f"beta_{chi}")
            curvature[chi] = entry
        _write_json(outdir / "curvature.json", curvature)
        outputs.append("curvature.json")
        results["curvature"] = curvature

    if "detuning" in config:
        block = config["detuning"]
        _reject_unknown(block, {"ratio_max", "n"}, "noise.detuning")
        ratios = np.linspace(-float(block["ratio_max"]),
                             float(block["ratio_max"]), int(block["n"]))
        curve = noise.fidelity_vs_detuning(point, ratios, tol=tol)
        _write_curve_csv(outdir / "detuning.csv",
                         ["delta_over_v", "fidelity_cz"],
                         zip(map(float, curve.epsilons),
                             map(float, curve.fidelities)))
        outputs.append("detuning.csv")

    if "monte_carlo" in config:
        block = config["monte_carlo"]
        _reject_unknown(
            block,
            {"sigma_omega0", "sigma_v", "sigma_omega_e", "samples", "seed"},
            "noise.monte_carlo",
        )
        spec = noise.NoiseSpec(
            sigma_omega0=float(block.get("sigma_omega0", 0.01)),
            sigma_v=float(block.get("sigma_v", 0.03)),
            sigma_omega_e=float(block.get("sigma_omega_e", 0.0)),
            samples=int(block.get("samples", 1000)),
            seed=int(block.get("seed", 0)),
        )
        mc = noise.monte_carlo_fidelity(point, spec, tol=tol, threads=threads)
        _write_curve_csv(
            outdir / "mc_histogram.csv", ["bin_left", "bin_right", "count"],
            [(float(mc.bin_edges[i]), float(mc.bin_edges[i + 1]), int(c))
             for i, c in enumerate(mc.counts)],
        )
        _write_json(outdir / "mc_summary.json",
                    {"mean": mc.mean, "std": mc.std, "n": mc.n,
                     "seed": mc.seed})
        outputs += ["mc_histogram.csv", "mc_summary.json"]
        results["monte_carlo"] = {"mean": mc.mean, "std": mc.std}

    _write_manifest(outdir, "noise", config, outputs, results)
    return 0


# ---------------------------------------------------------------------------
# self-test battery
# ---------------------------------------------------------------------------


def _check_battery(config: dict):
    seed = int(config.get("seed", 12345))
    tol = float(config.get("tolerance", 1e-10))
    sabotage = bool(config.get("inject_wrong_branch", False))
    rng = np.random.default_rng(seed)
    checks = []

    # closed-form cubic vs dense eigensolver, branch-indexed
    worst = 0.0
    for _ in range(1000):
        om = rng.uniform(0.0, 40.0)
        we = rng.uniform(-30.0, 30.0)
        v = rng.uniform(0.0, 100.0)
        energies = analytic._cubic_energies(om, we, v)
        if sabotage:
            energies = energies[[1, 2, 0]]
        # peak of the envelope: the closed form sees the same coupling om
        h = model.hamiltonian(0.0, system(omega0=om, omega_e=we, v=v),
                              HamiltonianKind.TRIPLE_ROTATING)
        eig = np.linalg.eigvalsh(h)
        ordered = np.array([energies[1], energies[2], energies[0]])
        resid = float(np.max(np.abs(ordered - eig)) / max(1.0, np.max(np.abs(eig))))
        worst = max(worst, resid)
    checks.append(("cubic_vs_eigensolver", worst <= 1e-9,
                   f"max relative residual {worst:.3e} (limit 1e-9)", worst))

    # full 9-dim propagation vs subspace reductions
    worst = 0.0
    for _ in range(3):
        s = system(
            omega0=rng.uniform(1.0, 20.0),
            omega_e=rng.uniform(-15.0, 15.0),
            v=rng.uniform(0.0, 60.0),
            delta=rng.uniform(-1.0, 1.0),
        )
        worst = max(worst, propagator.subspace_consistency(s, tol=tol).max_residual)
    checks.append(("subspace_vs_full", worst <= 1e-8,
                   f"max amplitude residual {worst:.3e} (limit 1e-8)", worst))

    # adiabatic phases vs exact propagation, well inside the adiabatic region
    worst_a, worst_b = 0.0, 0.0
    for we, om0, v in ((8.0, 1.0, 40.0), (12.0, 2.0, 60.0), (-9.0, 1.2, 45.0)):
        s = system(omega0=om0, omega_e=we, v=v)
        a_err = abs(analytic.alpha_adiabatic(s)
                    - propagator.phase_of(s, HamiltonianKind.SINGLE_ROTATING,
                                          tol=tol).phase)
        b_err = abs(analytic.beta_adiabatic(s)
                    - propagator.phase_of(s, HamiltonianKind.TRIPLE_ROTATING,
                                          tol=tol).phase)
        worst_a, worst_b = max(worst_a, a_err), max(worst_b, b_err)
    checks.append(("adiabatic_vs_exact",
                   worst_a <= 1e-3 and worst_b <= 1e-2,
                   f"alpha residual {worst_a:.3e} (limit 1e-3), "
                   f"beta residual {worst_b:.3e} (limit 1e-2)",
                   max(worst_a, worst_b)))

    # eliminated-state limits converge onto the adiabatic phases
    devs = []
    for ratio in (5.0, 10.0, 20.0, 40.0):
        s = system(omega0=1.0, omega_e=ratio, v=5.0 * ratio)
        dev_a = abs(analytic.alpha_ae_limit(s) / analytic.alpha_adiabatic(s) - 1.0)
        dev_b = abs(analytic.beta_ae_limit(s) / analytic.beta_adiabatic(s) - 1.0)
        devs.append(max(dev_a, dev_b))
    monotone = all(devs[i + 1] < devs[i] for i in range(len(devs) - 1))
    checks.append(("ae_limit_convergence", monotone and devs[-1] < 0.01,
                   f"deviations {['%.2e' % d for d in devs]} "
                   f"(monotone, < 1e-2 at ratio 40)", devs[-1]))

    # resonant-interaction special case with a real oscillation phase
    s = system(omega0=5.0, omega_e=25.0, v=50.0)
    res = analytic.resonant_case(s)
    final = propagator.propagate(
        s, HamiltonianKind.TRIPLE_ROTATING,
        propagator.basis_state(HamiltonianKind.TRIPLE_ROTATING, 0), tol=tol)
    pops = final.populations()
    err = max(abs(abs(res.a11) ** 2 - pops[0]), abs(abs(res.a_rr) ** 2 - pops[2]))
    checks.append(("resonant_real_phase", err <= 1e-3,
                   f"population residual {err:.3e} (limit 1e-3)", err))
    return checks


def _cmd_check(config: dict, outdir: Path, fmt: str, threads: int) -> int:
    _reject_unknown(config, {"seed", "tolerance", "inject_wrong_branch"},
                    "check")
    checks = _check_battery(config)
    report = {}
    failed = False
    for name, ok, detail, residual in checks:
        ok = bool(ok)
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        report[name] = {"passed": ok, "detail": detail,
                        "residual": float(residual)}
        failed = failed or not ok
    _write_json(outdir / "check_report.json", report)
    _write_manifest(outdir, "check", config, ["check_report.json"])
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_HANDLERS = {
    "dynamics": _cmd_dynamics,
    "sweep": _cmd_sweep,
    "optimize": _cmd_optimize,
    "noise": _cmd_noise,
    "check": _cmd_check,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydgate",
        description="Simulate and design amplitude-modulated Rydberg-blockade "
                    "phase gates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("dynamics", "propagate one parameter set and dump state traces"),
        ("sweep", "tabulate phases or gate metrics on a parameter grid"),
        ("optimize", "solve drive parameters for target phases"),
        ("noise", "sensitivity curves and Monte-Carlo robustness"),
        ("check", "run the analytic-vs-numeric cross-validation battery"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--preset", choices=PRESETS,
                       help="start from an in-repo figure preset")
        p.add_argument("--out", type=Path, default=Path("out"),
                       help="output directory (default: ./out)")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="grid/curve output format")
        p.add_argument("--seed", type=int, help="override random seed")
        p.add_argument("--threads", type=int,
                       help="worker processes (default: $RYD_THREADS or 1)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config: dict = {}
        if args.preset:
            config = _load_preset(args.preset)
        if args.config:
            with open(args.config) as fh:
                config = _merge(config, json.load(fh))
        if args.seed is not None:
            if args.command == "noise":
                config.setdefault("monte_carlo", {})["seed"] = args.seed
            elif args.command == "check":
                config["seed"] = args.seed
        threads = args.threads
        if threads is None:
            threads = int(os.environ.get("RYD_THREADS", "1"))
        outdir = args.out
        outdir.mkdir(parents=True, exist_ok=True)
        return _HANDLERS[args.command](config, outdir, args.format, threads)
    except (ValidationError, KeyError, OSError, json.JSONDecodeError) as err:
        print(f"rydgate: config error: {err}", file=sys.stderr)
        return 2
    except RydgateError as err:
        print(f"rydgate: {err}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
