"""
Command-line front end.

    polygpt info --n 8 --family selfdual
    polygpt chsh-max --n 4 --family unrestricted
    polygpt sweep --n-min 3 --n-max 30 --output results/sweep.csv --plot
    polygpt adaptive --theory boxworld
    polygpt verify --freeze

Results go to stdout (or ``--output``); logs and progress go to stderr.
"""
import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

import click
import humanize
import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from polygpt import __version__
from polygpt.config import (
    FAMILIES,
    GAME_TABLES,
    SCHEMES,
    TENSOR_KINDS,
    Tolerances,
    get_selection,
    get_settings,
    save_selection,
)
from polygpt.models import Command, OutputFormat, ResultRow, RunConfig, Theory
from polygpt.utils.errors import ComputationError, PolyGPTError, VerificationFailure
from polygpt.utils.logger import get_logger, setup_logging
from worker.utils.progress import ProgressTracker

logger = get_logger(__name__)
console = Console(stderr=True)


def _resolve_defaults(family: Optional[str], scheme: Optional[str],
                      marginal: Optional[bool]) -> Dict[str, Any]:
    """CLI flags, then the frozen selection, then settings."""
    settings = get_settings()
    selection = get_selection()
    family = family or selection.get("family") or settings.FAMILY
    if scheme is None:
        scheme = selection.get("scheme") if family == selection.get("family") else None
    if marginal is None:
        marginal = selection.get("marginal_constraints", settings.MARGINAL_CONSTRAINTS)
    return {"family": family, "scheme": scheme or settings.SCHEME, "marginal_constraints": marginal}


def build_config(command: Command, **options: Any) -> RunConfig:
    """Validate options into a RunConfig; invalid flags become click usage errors."""
    tolerances = {k: v for k, v in options.pop("tolerances", {}).items() if v is not None}
    try:
        return RunConfig(command=command, tolerances=tolerances, **options)
    except ValidationError as e:
        messages = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise click.UsageError(messages)


def provenance(config: RunConfig, tol: Tolerances) -> Dict[str, Any]:
    return {
        "version": __version__,
        "command": config.command.value,
        "family": config.family,
        "scheme": config.scheme,
        "tensor": config.tensor,
        "marginal_constraints": config.marginal_constraints,
        "n_range": f"{config.n_range[0]}-{config.n_range[1]}",
        "full_enumeration": config.full_enumeration,
        **tol.as_dict(),
    }


def _writer(config: RunConfig):
    from storage import create_result_writer

    return create_result_writer({
        "format": config.format.value,
        "path": config.output,
        "digits": get_settings().SIGNIFICANT_DIGITS,
        "no_timing": config.no_timing,
    })


def _check_gaps(rows: List[ResultRow], tol: Tolerances) -> None:
    for row in rows:
        if row.certificate_gap > tol.gap:
            raise ComputationError(
                f"certificate gap {row.certificate_gap:.3g} exceeds tolerance at n={row.n}",
                subproblem={"n": row.n, "family": row.family, "scheme": row.scheme,
                            "tensor": row.tensor, "indices": list(row.argmax_effect_indices)},
            )


@contextmanager
def _progress(label: str, enabled: bool = True) -> Iterator[Optional[ProgressTracker]]:
    """ProgressTracker whose updates drive a rich progress bar on stderr."""
    if not enabled or not console.is_terminal:
        yield None
        return
    with Progress(TextColumn("{task.description}"), BarColumn(),
                  TextColumn("{task.completed}/{task.total}"), TimeElapsedColumn(),
                  console=console, transient=True) as bar:
        task = bar.add_task(label, total=None)

        def update(done: int, total: int) -> None:
            bar.update(task, completed=done, total=total)

        yield ProgressTracker(label, callback=update, update_interval=0.5)


def _write_replay(error: PolyGPTError, config: Optional[RunConfig]) -> Path:
    directory = Path(get_settings().OUTPUT_DIR)
    directory.mkdir(parents=True, exist_ok=True)
    name = config.command.value if config else "run"
    path = directory / f"replay-{name}.json"
    payload = {
        "error": error.to_dict(),
        "config": config.model_dump(mode="json") if config else None,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    return path


def run_command(config: RunConfig, action) -> None:
    """Run ``action(config, tol)`` and map failures onto exit codes."""
    started = click.get_current_context()
    try:
        tol = Tolerances.from_settings(config.tolerances)
        action(config, tol)
    except VerificationFailure as e:
        console.print(f"[red]verification failed:[/red] {', '.join(e.failed)}")
        started.exit(e.exit_code)
    except PolyGPTError as e:
        logger.error("command failed", command=config.command.value, **e.to_dict())
        if e.exit_code == 3:
            replay = _write_replay(e, config)
            console.print(f"[red]{e.code}[/red] {e.message} (replay: {replay})")
        else:
            console.print(f"[red]{e.code}[/red] {e.message}")
        started.exit(e.exit_code)


def tolerance_options(func):
    for name in ("pivot", "gap", "feas", "geom"):
        func = click.option(f"--tau-{name}", name, type=float, default=None,
                            help=f"Override the {name} tolerance")(func)
    return func


def system_options(func):
    func = click.option("--marginal/--no-marginal", "marginal", default=None,
                        help="Include conditional cone-membership rows")(func)
    func = click.option("--tensor", type=click.Choice(TENSOR_KINDS), default=None,
                        help="Tensor product kind")(func)
    func = click.option("--scheme", type=click.Choice(SCHEMES), default=None,
                        help="Self-dualization scheme for even n")(func)
    func = click.option("--family", type=click.Choice(FAMILIES), default=None)(func)
    return func


def output_options(func):
    func = click.option("--no-timing", is_flag=True, help="Zero wall_time_ms for byte-identical reruns")(func)
    func = click.option("--format", "output_format", type=click.Choice([f.value for f in OutputFormat]),
                        default="csv")(func)
    func = click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path),
                        default=None, help="Result file; stdout when omitted")(func)
    func = click.option("--workers", type=int, default=None,
                        help="Worker processes (POLYGPT_WORKERS)")(func)
    return func


@click.group()
@click.version_option(__version__, prog_name="polygpt")
@click.option("--log-level", default=None, help="debug, info, warning or error")
@click.option("--debug", is_flag=True, help="Human-readable logs")
def main(log_level: Optional[str], debug: bool) -> None:
    """Polygon GPT systems and CHSH games."""
    setup_logging(log_level, debug or None)


@main.command()
@click.option("--n", "n", type=int, required=True)
@system_options
def info(n: int, family, scheme, tensor, marginal) -> None:
    """Describe one polygon system."""
    from polygpt.services.chsh import extremal_measurements
    from polygpt.services.geometry import build_polygon_system, system_is_self_dual

    defaults = _resolve_defaults(family, scheme, marginal)
    config = build_config(Command.INFO, n_range=(n, n), family=defaults["family"],
                          scheme=defaults["scheme"], tensor=tensor or get_settings().TENSOR)

    def action(config: RunConfig, tol: Tolerances) -> None:
        system = build_polygon_system(n, config.family, config.scheme, tol)
        out = Console()
        out.print(f"[bold]{system.label}[/bold]  radius {system.radius:.12g}  "
                  f"symmetry order {system.symmetry_order}")
        table = Table("kind", "index", "x", "y", "z")
        for kind, rows in (("state", system.state_vertices), ("effect", system.effect_vertices)):
            for i, v in enumerate(rows):
                table.add_row(kind, str(i), *(f"{c:.9g}" for c in v))
        out.print(table)
        out.print(f"extremal measurements: {len(extremal_measurements(system))}")
        out.print(f"self-dual: {system_is_self_dual(system, tol)}")

    run_command(config, action)


@main.command("chsh-max")
@click.option("--n", "n", type=int, required=True)
@click.option("--full-enumeration", is_flag=True, help="Skip the symmetry reduction")
@system_options
@output_options
@tolerance_options
def chsh_max_command(n: int, full_enumeration: bool, family, scheme, tensor, marginal,
                     workers, output, output_format, no_timing, **tolerances) -> None:
    """Maximal CHSH winning probability for two copies of the n-gon."""
    from polygpt.services.sweep import sweep_point

    defaults = _resolve_defaults(family, scheme, marginal)
    config = build_config(
        Command.CHSH_MAX, n_range=(n, n), tensor=tensor or get_settings().TENSOR,
        workers=workers, output=output, format=output_format, no_timing=no_timing,
        full_enumeration=full_enumeration, tolerances=tolerances, **defaults,
    )

    def action(config: RunConfig, tol: Tolerances) -> None:
        with _progress(f"n={n}") as progress:
            row = sweep_point(n, config.family, config.scheme, config.tensor,
                              config.marginal_constraints, tol=tol, workers=config.workers,
                              full_enumeration=config.full_enumeration, progress=progress)
        _check_gaps([row], tol)
        _writer(config).write_rows([row], provenance(config, tol), stream=sys.stdout)
        if row.state is not None:
            console.print(f"argmax state W = {np.array2string(np.array(row.state), precision=6)}")

    run_command(config, action)


@main.command()
@click.option("--n-min", type=int, default=3, show_default=True)
@click.option("--n-max", type=int, default=30, show_default=True)
@click.option("--plot", is_flag=True, help="Write per-residue curves and an SVG next to the output")
@system_options
@output_options
@tolerance_options
def sweep(n_min: int, n_max: int, plot: bool, family, scheme, tensor, marginal,
          workers, output, output_format, no_timing, **tolerances) -> None:
    """CHSH maximum over a range of polygon sizes."""
    from polygpt.services.sweep import fit_residue_class, residue_groups, sweep as run_sweep

    defaults = _resolve_defaults(family, scheme, marginal)
    config = build_config(
        Command.SWEEP, n_range=(n_min, n_max), tensor=tensor or get_settings().TENSOR,
        workers=workers, output=output, format=output_format, no_timing=no_timing,
        plot=plot, tolerances=tolerances, **defaults,
    )

    def action(config: RunConfig, tol: Tolerances) -> None:
        with _progress("sweep") as progress:
            rows = run_sweep(config.family, config.scheme, config.sizes, config.tensor,
                             config.marginal_constraints, workers=config.workers, tol=tol,
                             progress=progress)
        _check_gaps(rows, tol)
        _writer(config).write_rows(rows, provenance(config, tol), stream=sys.stdout)
        for residue, group in residue_groups(rows).items():
            fit = fit_residue_class(group)
            if fit:
                logger.info("residue fit", residue=residue, a=fit.a, b=fit.b,
                            rms_residual=fit.rms_residual, label=fit.label)
        if config.plot:
            from storage.plot import write_residue_curves

            directory = config.output.parent if config.output else Path(get_settings().OUTPUT_DIR)
            files = write_residue_curves(rows, directory, get_settings().SIGNIFICANT_DIGITS, svg=True)
            console.print(f"wrote {len(files)} curve files to {directory}")

    run_command(config, action)


@main.command()
@click.option("--theory", type=click.Choice([t.value for t in Theory]), default="gpt",
              show_default=True)
@click.option("--table", "game_table", type=click.Choice(GAME_TABLES), default=None,
              help="Variant winning-condition table")
@click.option("--n-min", type=int, default=3, show_default=True)
@click.option("--n-max", type=int, default=8, show_default=True)
@system_options
@output_options
@tolerance_options
def adaptive(theory: str, game_table, n_min: int, n_max: int, family, scheme, tensor, marginal,
             workers, output, output_format, no_timing, **tolerances) -> None:
    """Adaptive CHSH game under one strategy class."""
    defaults = _resolve_defaults(family, scheme, marginal)
    config = build_config(
        Command.ADAPTIVE, theory=theory, n_range=(n_min, n_max),
        game_table=game_table or get_settings().GAME_TABLE, tensor=tensor or get_settings().TENSOR,
        workers=workers, output=output, format=output_format, no_timing=no_timing,
        tolerances=tolerances, **defaults,
    )

    def action(config: RunConfig, tol: Tolerances) -> None:
        document = adaptive_report(config, tol)
        document["provenance"] = provenance(config, tol)
        _writer(config).write_document(document, stream=sys.stdout)

    run_command(config, action)


def adaptive_report(config: RunConfig, tol: Tolerances) -> Dict[str, Any]:
    """Value and witness of the adaptive game for the configured theory."""
    from polygpt.services import games, quantum
    from polygpt.services.boxes import pr_box

    table = config.game_table
    report: Dict[str, Any] = {"theory": config.theory.value, "game_table": table}
    if config.theory == Theory.CLASSICAL:
        result = games.classical_max(table)
        report.update(
            value=float(result.value),
            exact=str(result.value),
            strategy={"alice": list(result.alice), "b": list(result.b),
                      "charlie": list(result.charlie)},
            optimal_strategies=result.optimal_count,
        )
    elif config.theory == Theory.QUANTUM:
        distribution = quantum.quantum_game_strategy(tol=tol)
        best = quantum.best_variant_table()
        report.update(
            value=games.win_probability(distribution, table, tol),
            angles=list(quantum.OPTIMAL_ANGLES),
            table_matches=quantum.table_matches(best, table),
            per_outcome={str(k): {"condition": list(c.as_tuple()), "score": s}
                         for k, (c, s) in best.items()},
        )
    elif config.theory == Theory.BOXWORLD:
        result = games.wiring_max(pr_box(), pr_box(), table, tol)
        report.update(
            value=result.value,
            wiring={"first": result.wiring.first, "x1": result.wiring.x1,
                    "input_rule": list(result.wiring.input_rule),
                    "output_rule": list(result.wiring.output_rule)},
            alice={"input_map": list(result.alice.input_map),
                   "output_function": list(result.alice.output_function)},
            charlie={"input_map": list(result.charlie.input_map),
                     "output_function": list(result.charlie.output_function)},
            conditioned_boxes=len(result.conditioned),
            conditioned_local=games.conditioned_locality_check(result.conditioned, tol),
            bound_holds=games.wiring_bound_holds(result, tol),
        )
    else:
        from polygpt.services.geometry import build_polygon_system

        bounds = []
        for n in config.sizes:
            system = build_polygon_system(n, config.family, config.scheme, tol)
            bound = games.adaptive_upper_bound(
                system, system, system, system, config.tensor, table,
                marginal_constraints=config.marginal_constraints, workers=config.workers, tol=tol,
            )
            bounds.append({
                "n": n,
                "value": bound.value,
                "per_variant": {f"{b[0]}{b[1]}": v for b, v in bound.per_variant.items()},
            })
        report.update(value=max(b["value"] for b in bounds), bounds=bounds)
    logger.info("adaptive game evaluated", theory=config.theory.value, value=report["value"])
    return report


@main.command()
@click.option("--n-max", type=int, default=30, show_default=True)
@click.option("--quick", is_flag=True, help="Shrink the expensive ranges")
@click.option("--freeze", is_flag=True, help="Write the selected configuration")
@click.option("--workers", type=int, default=None)
@tolerance_options
def verify(n_max: int, quick: bool, freeze: bool, workers, **tolerances) -> None:
    """Run the acceptance suite; exits 1 on any failure."""
    from polygpt.services.verification import run_verification

    config = build_config(Command.VERIFY, n_range=(3, n_max), workers=workers,
                          tolerances=tolerances)

    def action(config: RunConfig, tol: Tolerances) -> None:
        table = Table("check", "result", "detail")

        def on_check(check) -> None:
            mark = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
            console.print(f"{mark} {check.name}")
            table.add_row(check.name, mark, check.detail)

        report = run_verification(n_max, quick, config.workers, tol, on_check)
        Console().print(table)
        if freeze and report.selection:
            path = save_selection(report.selection)
            console.print(f"selection frozen to {path}")
        if not report.passed:
            raise VerificationFailure("acceptance checks failed", report.failed)
        console.print(f"all {humanize.apnumber(len(report.checks))} checks passed")

    run_command(config, action)


if __name__ == "__main__":
    main()
