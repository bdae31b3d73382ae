"""Command-line front door: `python -m tc_cli.main <command> [flags]`.

Commands:
    resolvent  pseudospectral scan of L_k, optionally fitted across a B list
    semigroup  Gearhart-Pruess check and space-time norms of one mode
    simulate   nonlinear mode-coupled run with its energy report
    sweep      amplitude thresholds across a B list
    verify     the audit battery ("--quick" for the reduced profile)

Exit status: 0 on success, 1 when an audit or a linear solve fails, 2 on
invalid input (bad flags, config, operator request or grid resolution).
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from tc_lab.core.energy import initial_size, translate_physical
from tc_lab.core.nonlinear import ModeState, SimulationConfig, simulate
from tc_lab.core.resolvent import ScanConfig, pseudospectral_bound, psi_scaling
from tc_lab.core.semigroup import (
    fit_decay,
    fitted_rate_constant,
    gearhart_pruess_check,
    propagate_linear,
    spacetime_norms,
)
from tc_lab.services.audits import AuditBattery
from tc_lab.services.results import ResultWriter, resolve_output_dir
from tc_lab.services.sweep import SweepConfig, ThresholdSweep
from tc_shared.errors import (
    ConfigurationError,
    OperatorError,
    ResolutionError,
    RiccatiCrossingError,
    SolverError,
)
from tc_shared.grid import ring_profile
from tc_shared.operators import assemble_Lk
from tc_shared.physics import FlowParams
from tc_shared.physics.lab_defaults import DT_PER_PSI

from .config import RunConfig

logger = logging.getLogger("tc_cli")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# c' of the space-time weights as a fraction of the fitted rate
SPACETIME_RATE_FRACTION: float = 0.5


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="number of grid cells")
    common.add_argument("--r-max", dest="r_max", type=float, help="outer radius of the domain")
    common.add_argument("--scheme", choices=["uniform", "stretched"])
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--output-dir", dest="output_dir", help="defaults to $TC_LAB_OUTPUT_DIR, then ./results")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument(
        "--log-level", dest="log_level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"]
    )
    return common


def _mode_parser() -> argparse.ArgumentParser:
    mode = argparse.ArgumentParser(add_help=False)
    mode.add_argument("--k", type=int, help="azimuthal mode")
    rotation = mode.add_mutually_exclusive_group()
    rotation.add_argument("--B", type=float, help="rotation ratio A2/nu")
    rotation.add_argument("--B-list", dest="B_list", type=_floats, help="comma-separated rotation ratios")
    return mode


def _run_parser() -> argparse.ArgumentParser:
    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--tau-end", dest="tau_end", type=float)
    run.add_argument("--dt", type=float)
    run.add_argument("--stride", type=int, help="steps between stored samples")
    return run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tc-lab", description="Taylor-Couette stability lab")
    sub = parser.add_subparsers(dest="command", required=True)
    common, mode, run = _common_parser(), _mode_parser(), _run_parser()

    resolvent = sub.add_parser("resolvent", parents=[common, mode], help="pseudospectral scan")
    resolvent.add_argument("--norm-pair", dest="norm_pair", choices=["L2", "X", "Hm1-shifted", "X-Hm1-shifted"])
    resolvent.add_argument("--c2", type=float, help="real shift constant of the H^-1 pairs")
    resolvent.add_argument("--points", type=int, help="coarse scan points")
    resolvent.add_argument("--fit", action="store_true", default=None, help="fit Psi against |kB|")

    semigroup = sub.add_parser("semigroup", parents=[common, mode, run], help="semigroup decay check")
    semigroup.add_argument("--trajectories", type=int)
    semigroup.add_argument("--points", type=int, help="coarse scan points for Psi")

    simulate_cmd = sub.add_parser("simulate", parents=[common, mode, run], help="nonlinear run")
    simulate_cmd.add_argument("--K", type=int, help="mode truncation")
    simulate_cmd.add_argument("--amplitude", type=float, help="L2 size of each initial ring mode")
    simulate_cmd.add_argument("--modes", type=_ints, help="initially populated modes")
    simulate_cmd.add_argument("--c", type=float, help="energy weight constant")

    sweep = sub.add_parser("sweep", parents=[common, mode, run], help="amplitude threshold sweep")
    sweep.add_argument("--K", type=int, help="mode truncation")
    sweep.add_argument("--amplitudes", type=_floats)
    sweep.add_argument("--modes", type=_ints)

    verify = sub.add_parser("verify", parents=[common], help="audit battery")
    verify.add_argument("--quick", action="store_true", default=None, help="reduced audit profile")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "output_dir", "log_level"}
    return {key: value for key, value in vars(args).items() if key not in skip}


def cmd_resolvent(config: RunConfig, writer: ResultWriter) -> int:
    grid = config.grid.build()
    lab = config.lab
    scan_config = ScanConfig(
        points=lab.points,
        norm_pair=lab.norm_pair,
        c2=lab.c2,
        workers=config.workers,
        seed=config.seed,
    )
    B_values = lab.B_values()
    spec = grid.describe()
    result: dict = {}
    if lab.fit:
        if len(B_values) < 2:
            raise ConfigurationError("--fit needs at least two rotation ratios (--B-list)")
        scans, fit = psi_scaling(grid, lab.k, B_values, scan_config)
        result["fit"] = fit
        writer.write_csv(
            "resolvent_fit.csv",
            ["B", "beta", "psi"],
            [(s["B"], abs(lab.k * s["B"]), s["psi"]) for s in scans],
            spec,
        )
        logger.info("Psi ~ |kB|^%.4f (prefactor %.4g)", fit["slope"], fit["prefactor"])
    else:
        scans = [
            pseudospectral_bound(assemble_Lk(grid, lab.k, FlowParams.from_B(B)), scan_config)
            for B in B_values
        ]
    result["scans"] = scans

    for scan in scans:
        if scan["flags"]:
            logger.warning("scan k=%d B=%g flagged: %s", scan["k"], scan["B"], ", ".join(scan["flags"]))
    writer.write_json("resolvent.json", result, spec)
    writer.write_csv(
        "resolvent_scan.csv",
        ["B", "shift", "sigma_min"],
        [
            (scan["B"], s, sigma)
            for scan in scans
            for s, sigma in zip(scan["shifts"], scan["sigma_min"], strict=True)
        ],
        spec,
    )
    return 0


def cmd_semigroup(config: RunConfig, writer: ResultWriter) -> int:
    grid = config.grid.build()
    lab = config.lab
    params = lab.params()
    op = assemble_Lk(grid, lab.k, params)
    scan = pseudospectral_bound(
        op, ScanConfig(points=lab.points, workers=config.workers, seed=config.seed)
    )
    psi = scan["psi"]
    report = gearhart_pruess_check(
        op,
        psi,
        lab.trajectories,
        rng=np.random.default_rng(config.seed),
        tau_end=lab.tau_end,
        dt=lab.dt,
        workers=config.workers,
    )

    tau_end = report["times"][-1]
    dt = lab.dt if lab.dt is not None else DT_PER_PSI / psi
    ring = propagate_linear(op, ring_profile(grid, lab.k, lab.r_c), tau_end, dt, stride=lab.stride)
    ring_fit = fit_decay(ring.times, ring.norms(), (0.25 * tau_end, tau_end))
    c_prime = SPACETIME_RATE_FRACTION * max(fitted_rate_constant(ring_fit["rate"], lab.k, params.B), 0.0)
    spacetime = spacetime_norms(ring, c_prime, rate=ring_fit["rate"])

    spec = grid.describe()
    writer.write_json(
        "semigroup.json",
        {"scan": scan, "gearhart_pruess": report, "ring_fit": ring_fit, "spacetime": spacetime},
        spec,
    )
    writer.write_csv(
        "semigroup_envelope.csv",
        ["tau", "max_ratio", "bound", "passed"],
        zip(report["times"], report["max_ratio"], report["bound"], report["passed"], strict=True),
        spec,
    )
    if not report["all_passed"]:
        logger.warning("sampled semigroup norms exceed e^{-tau psi + pi/2}")
        return 1
    return 0


def cmd_simulate(config: RunConfig, writer: ResultWriter) -> int:
    grid = config.grid.build()
    lab = config.lab
    params = lab.params()
    init = ModeState.ring(grid, params, lab.amplitude, modes=tuple(lab.modes), K=lab.K, r_c=lab.r_c)
    knobs = {"tau_end": lab.tau_end, "dt": lab.dt, "c": lab.c}
    sim_config = SimulationConfig(
        K=lab.K,
        stride=lab.stride,
        workers=config.workers,
        **{name: value for name, value in knobs.items() if value is not None},
    )
    trajectory, energy = simulate(init, sim_config, logger=logger)

    spec = grid.describe()
    writer.write_json(
        "simulate.json",
        {
            "energy": energy,
            "initial_size": initial_size(init),
            "physical": {
                "initial": translate_physical(init),
                "final": translate_physical(trajectory.final),
            },
            "flags": trajectory.flags,
            "reality_defect": trajectory.reality_defect,
            "tau_reached": float(trajectory.times[-1]),
        },
        spec,
    )
    norms = trajectory.mode_norms()
    writer.write_csv(
        "simulate_norms.csv",
        ["tau"] + [f"w{k}_L2" for k in range(trajectory.K + 1)],
        [(t, *row) for t, row in zip(trajectory.times, norms, strict=True)],
        spec,
    )
    return 0


def cmd_sweep(config: RunConfig, writer: ResultWriter) -> int:
    grid = config.grid.build()
    lab = config.lab
    sweep_config = SweepConfig(
        B_values=tuple(lab.B_values()),
        amplitudes=tuple(lab.amplitudes),
        K=lab.K,
        modes=tuple(lab.modes),
        r_c=lab.r_c,
        tau_end=lab.tau_end,
        dt=lab.dt,
        stride=lab.stride,
        workers=config.workers,
    )
    table = ThresholdSweep(grid, sweep_config, logger=logger).run()

    spec = grid.describe()
    writer.write_json("sweep.json", table, spec)
    writer.write_csv(
        "sweep_runs.csv",
        ["B", "amplitude", "verdict", "rate", "final_ratio", "tau_reached"],
        [
            (row["B"], row["amplitude"], row["verdict"], row["rate"], row["final_ratio"], row["tau_reached"])
            for row in table["rows"]
        ],
        spec,
    )
    writer.write_csv(
        "sweep_thresholds.csv",
        ["B", "threshold", "slope"],
        [(B, threshold, table["slope"]) for B, threshold in table["thresholds"].items()],
        spec,
    )
    return 0


def cmd_verify(config: RunConfig, writer: ResultWriter) -> int:
    profile = "quick" if config.lab.quick else "full"
    battery = AuditBattery(profile, seed=config.seed, workers=config.workers, logger=logger)
    outcomes = battery.run()
    passed = all(outcome["passed"] for outcome in outcomes)

    spec = battery.grid.describe()
    writer.write_json(
        "verify_report.json",
        {"profile": profile, "passed": passed, "audits": outcomes},
        spec,
    )
    writer.write_csv(
        "verify_report.csv",
        ["audit", "status"],
        [(o["name"], "PASS" if o["passed"] else "FAIL") for o in outcomes],
        spec,
    )
    for outcome in outcomes:
        if not outcome["passed"]:
            logger.error("audit %s failed: %s", outcome["name"], outcome["details"])
    return 0 if passed else 1


COMMAND_HANDLERS = {
    "resolvent": cmd_resolvent,
    "semigroup": cmd_semigroup,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "verify" and args.config is None and args.B is None and args.B_list is None:
        parser.error(f"{args.command} needs --B or --B-list (or a --config file)")

    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    try:
        config = RunConfig.load(args.command, args.config, _overrides(args))
        writer = ResultWriter(resolve_output_dir(args.output_dir), config.to_dict(), logger=logger)
        return COMMAND_HANDLERS[args.command](config, writer)
    except (ConfigurationError, OperatorError, ResolutionError) as exc:
        print(f"tc-lab {args.command}: {exc}", file=sys.stderr)
        return 2
    except (SolverError, RiccatiCrossingError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
