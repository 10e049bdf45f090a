"""Command-line surface: analyze, sweep, optimize, verify and fig2, plus run,
which dispatches on the configured mode.

Exit codes: 0 success, 1 configuration error, 2 physics-domain or numerical
error, 3 verification failure.
"""

import argparse
import io
import itertools
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from .colddamp import fig2_left_sweep, minimize_over_strength, n_opt, optimal_strength
from .config import (
    OutputFormat,
    RunConfig,
    RunMode,
    build_model,
    config_from_dict,
    config_hash,
    load_config,
    load_settings,
)
from .control import Analysis, analyze
from .exceptions import ConfigError, NumericalError, OutOfRegimeError, PhysicsDomainError
from .optics import fig2_right_sweep, minimize_occupation
from .oracle import brute_force_controller_search
from .testing import CheckRunner, load_fixtures
from .utils import DataProcessor, ReportFormatter

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DOMAIN = 2
EXIT_VERIFY = 3

SWEEP_METRICS = ("n_eff", "u_ctrl", "q_eff", "eta2", "mu", "a_over_b")
SQL_TOLERANCE = 1e-9


def analysis_report(result: Analysis) -> Dict:
    """Structured report of one analyzed model."""
    syn, met = result.synthesis, result.metrics
    cond, ctrl = syn.conditional, syn.controlled
    coeffs = syn.coefficients
    flags: List[str] = []
    if result.model.osc.is_free_mass and met.eta2 >= 1.0 - SQL_TOLERANCE:
        flags.append("free-mass SQL not beaten")
    return {
        "mu": result.mu,
        "A": result.a,
        "B": result.b,
        "conditional": {"v_xx": cond.v_xx, "v_pp": cond.v_pp, "v_xp": cond.v_xp, "U_c": cond.purity},
        "controlled": {"v_xx": ctrl.v_xx, "v_pp": ctrl.v_pp, "v_xp": ctrl.v_xp, "U_ctrl": met.u_ctrl},
        "N_eff": met.n_eff,
        "Q_eff": met.q_eff,
        "eta2": met.eta2,
        "omega_star": met.omega_star,
        "poles": {"Omega_1": coeffs.omega1, "Omega_2": coeffs.omega2, "Omega_3": coeffs.omega3},
        "zero": {"Omega_4": coeffs.omega4},
        "controller": {"C_0": coeffs.c0, "C_1": coeffs.c1, "C_2": coeffs.c2},
        "entropy": met.entropy,
        "squeeze_class": met.squeeze_class,
        "semiclassical_n": met.semiclassical,
        "flags": flags,
    }


def _flatten(report: Dict, prefix: str = "") -> Dict:
    flat = {}
    for key, value in report.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        elif isinstance(value, list):
            flat[name] = ";".join(str(v) for v in value)
        elif isinstance(value, complex):
            flat[f"{name}.re"], flat[f"{name}.im"] = value.real, value.imag
        else:
            flat[name] = getattr(value, "value", value)
    return flat


def _emit_report(report: Dict, title: str, args: argparse.Namespace, meta: Dict) -> None:
    fmt = args.format
    if fmt == OutputFormat.JSON.value:
        text = ReportFormatter.to_json({"metadata": meta, **report})
    elif fmt == OutputFormat.CSV.value:
        buffer = io.StringIO()
        DataProcessor.write_csv(pd.DataFrame([_flatten(report)]), buffer, meta)
        text = buffer.getvalue()
    else:
        text = ReportFormatter.to_text(report, title)
    _write(text, args.out)


def _emit_table(df: pd.DataFrame, args: argparse.Namespace, meta: Dict) -> None:
    if getattr(args, "table_format", args.format) == OutputFormat.JSON.value:
        text = ReportFormatter.to_json({"metadata": meta, "rows": df.to_dict(orient="records")})
    else:
        buffer = io.StringIO()
        DataProcessor.write_csv(df, buffer, meta)
        text = buffer.getvalue()
    _write(text, args.out)


def _write(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"✅ wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _metadata(command: str, cfg: Optional[RunConfig]) -> Dict:
    meta = {"command": command}
    if cfg is not None:
        meta["config_hash"] = config_hash(cfg)
        meta["seed"] = cfg.seed
    return meta


def _with_output_defaults(args: argparse.Namespace, cfg: RunConfig) -> RunConfig:
    """Command-line --out and --format win over the output section."""
    args.out = args.out or cfg.output.path
    args.table_format = args.format or cfg.output.format.value
    return cfg


def _require_config(args: argparse.Namespace) -> RunConfig:
    if not args.config:
        raise ConfigError(f"'{args.command}' needs --config PATH")
    return _with_output_defaults(args, load_config(args.config, seed=args.seed))


def _optional_config(args: argparse.Namespace) -> RunConfig:
    if args.config:
        return _with_output_defaults(args, load_config(args.config, seed=args.seed))
    cfg = config_from_dict({} if args.seed is None else {"seed": args.seed})
    return _with_output_defaults(args, cfg)


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _require_config(args)
    report = analysis_report(analyze(build_model(cfg)))
    for flag in report["flags"]:
        logger.warning("%s", flag)
    _emit_report(report, f"Optimal feedback analysis ({cfg.system_kind})", args,
                 _metadata("analyze", cfg))
    return EXIT_OK


def _with_axis(cfg: RunConfig, name: str, value: float) -> RunConfig:
    """Copy of ``cfg`` with one system parameter replaced (validated)."""
    kind = cfg.system_kind
    for section_name in (kind, "oscillator"):
        section = getattr(cfg, section_name, None)
        if section is not None and name in type(section).model_fields and name != "units":
            try:
                updated = type(section).model_validate({**section.model_dump(), name: value})
            except ValidationError as exc:
                raise ConfigError(f"sweep value {name}={value} is invalid: {exc}") from exc
            return cfg.model_copy(update={section_name: updated})
    raise ConfigError(f"sweep axis {name!r} is not a parameter of the {kind} system")


def sweep_table(cfg: RunConfig, workers: int = 1) -> pd.DataFrame:
    """Closed-form metrics over the product of the configured axes, in axis order."""
    axes = cfg.sweep.axes
    if not 1 <= len(axes) <= 2:
        raise ConfigError("sweep needs one or two axes")
    names = [a.name for a in axes]
    points = list(itertools.product(*(a.grid() for a in axes)))
    # validate every point before evaluating any
    configs = []
    for values in points:
        point = cfg
        for name, value in zip(names, values):
            point = _with_axis(point, name, float(value))
        configs.append(point)

    def evaluate(point: RunConfig) -> Dict:
        try:
            result = analyze(build_model(point))
        except PhysicsDomainError as exc:
            logger.warning("sweep point skipped: %s", exc)
            return {k: math.nan for k in SWEEP_METRICS}
        met = result.metrics
        return {"n_eff": met.n_eff, "u_ctrl": met.u_ctrl, "q_eff": met.q_eff, "eta2": met.eta2,
                "mu": result.mu, "a_over_b": result.a / result.b}

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(evaluate, configs))
    table = pd.DataFrame(points, columns=names)
    for key in SWEEP_METRICS:
        table[key] = [row[key] for row in rows]
    return table


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _require_config(args)
    table = sweep_table(cfg, args.workers)
    meta = _metadata("sweep", cfg)
    meta["axes"] = ",".join(a.name for a in cfg.sweep.axes)
    _emit_table(table, args, meta)
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = _require_config(args)
    kind = cfg.system_kind
    if kind == "readout":
        r = cfg.readout
        best = minimize_occupation(r.zeta_f, r.zeta_x, r.loss, r.squeeze_db,
                                   grid_points=cfg.sweep.grid_points)
        report = {"n_eff": best.n_eff, "converged": best.converged,
                  "readout": best.config.model_dump()}
    elif kind == "thermal":
        theta, _ = cfg.thermal.reduced()
        best = minimize_over_strength(theta)
        report = {"theta": theta, "x": best.x, "omega_q_over_omega_p": math.sqrt(best.x),
                  "n_eff": best.n_eff, "interior": best.interior}
        try:
            report["n_opt_closed_form"] = n_opt(theta)
            report["strength_closed_form"] = optimal_strength(theta)
        except OutOfRegimeError as exc:
            logger.info("closed forms not applicable: %s", exc)
    elif kind == "noise":
        model = build_model(cfg)
        found = brute_force_controller_search(model)
        report = {"u_best": found.u_best, "u_integral": found.u_integral,
                  "u_ctrl": analyze(model).metrics.u_ctrl,
                  "controller": {"C_0": found.coefficients[0], "C_1": found.coefficients[1],
                                 "C_2": found.coefficients[2]},
                  "stable_candidates": found.n_stable, "candidates": found.n_candidates}
    else:
        raise ConfigError("optimize needs a noise, readout or thermal section")
    _emit_report(report, f"Optimization ({kind})", args, _metadata("optimize", cfg))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        fixtures = load_fixtures(args.fixtures)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read fixtures: {exc}") from exc
    if args.seed is not None:
        fixtures["random"]["seed"] = args.seed
    runner = CheckRunner(fixtures)
    print(f"🧪 Running {args.level} verification suite...", file=sys.stderr)
    runner.run_level(args.level)
    print(runner.format_summary())
    if args.out:
        runner.save_results(args.out)
    return EXIT_OK if runner.all_passed else EXIT_VERIFY


def cmd_fig2(args: argparse.Namespace) -> int:
    cfg = _optional_config(args)
    s = cfg.sweep
    if args.panel == "left":
        table = fig2_left_sweep(s.thetas, s.x.grid(), workers=args.workers)
    else:
        table = fig2_right_sweep(s.eta_cl2.grid(), loss=s.loss, squeeze_levels=s.squeeze_levels,
                                 force_share=s.force_share, grid_points=s.grid_points,
                                 workers=args.workers)
    meta = _metadata(f"fig2 {args.panel}", cfg)
    _emit_table(table, args, meta)
    return EXIT_OK


MODE_COMMANDS = {
    RunMode.ANALYZE: cmd_analyze,
    RunMode.SWEEP: cmd_sweep,
    RunMode.OPTIMIZE: cmd_optimize,
    RunMode.VERIFY: cmd_verify,
    RunMode.FIG2: cmd_fig2,
}


def cmd_run(args: argparse.Namespace) -> int:
    """Run the command named by the configuration's mode."""
    cfg = _require_config(args)
    logger.info("config mode: %s", cfg.mode.value)
    return MODE_COMMANDS[cfg.mode](args)


def build_parser(default_workers: int = 1) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Run configuration (JSON or TOML)")
    common.add_argument("--out", help="Write output to this file instead of stdout")
    common.add_argument("--seed", type=int, help="Override the configured seed")
    common.add_argument("--workers", type=int, default=default_workers,
                        help="Concurrent sweep workers (default from OSCCTRL_WORKERS)")
    common.add_argument("--format", choices=[f.value for f in OutputFormat],
                        help="Machine-readable output format")
    common.add_argument("--log-level", help="Logging level (default from OSCCTRL_LOG_LEVEL)")

    parser = argparse.ArgumentParser(
        prog="oscctrl", description="Optimal feedback control of a continuously measured oscillator")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="Analyze one configured system") \
        .set_defaults(func=cmd_analyze)
    sub.add_parser("sweep", parents=[common], help="Sweep one or two system parameters") \
        .set_defaults(func=cmd_sweep)
    sub.add_parser("optimize", parents=[common], help="Minimize N_eff over free parameters") \
        .set_defaults(func=cmd_optimize)
    verify = sub.add_parser("verify", parents=[common], help="Run the verification suite")
    verify.add_argument("--level", choices=["fast", "full"], default="fast")
    verify.add_argument("--fixtures", help="Fixture file (default configs/fixtures.json)")
    verify.set_defaults(func=cmd_verify)
    fig2 = sub.add_parser("fig2", parents=[common], help="Plot-ready tables of the two figure panels")
    fig2.add_argument("panel", choices=["left", "right"])
    fig2.set_defaults(func=cmd_fig2)
    run = sub.add_parser("run", parents=[common], help="Run the command named by the config mode")
    run.add_argument("--panel", choices=["left", "right"], default="left", help="fig2 panel")
    run.add_argument("--level", choices=["fast", "full"], default="fast", help="verify level")
    run.add_argument("--fixtures", help="Fixture file for verify (default configs/fixtures.json)")
    run.set_defaults(func=cmd_run)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        settings = load_settings()
    except ConfigError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_CONFIG
    args = build_parser(settings.workers).parse_args(argv)
    level = (args.log_level or settings.log_level).upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"❌ configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PhysicsDomainError, NumericalError) as exc:
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValidationError as exc:
        print(f"❌ invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
