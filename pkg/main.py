#!/usr/bin/env python3
"""
PCAAC Point Cloud Denoising Toolkit
Generates labeled LiDAR scenes, filters them and benchmarks the filters
"""
from typing import List, NoReturn, Optional

import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from src import __version__
from src.cloud_model import ORIGIN, Point3
from src.commands import (
    Algo, cmd_bench, cmd_compare, cmd_eval, cmd_filter, cmd_gen, labels_path,
    manifest_path, parse_algos, resolve_settings,
)
from src.config_manager import ConfigManager
from src.errors import PcaacError, exit_code_for
from src.eval_metrics import MetricsRow
from src.logger import ROOT_LOGGER, get_logger, setup_logger
from src.utils import format_fraction, parse_int_list, parse_point

logger = get_logger("cli")

app = typer.Typer(help="PCAAC point cloud denoising toolkit")
console = Console()


def initialize_system() -> ConfigManager:
    """Load configuration and set up logging."""
    try:
        config = ConfigManager()
        settings = config.get_logging_settings()
        setup_logger(ROOT_LOGGER, settings.level, settings.log_dir)
        logger.debug(f"Configuration loaded from {config.config_dir}")
        return config
    except (PcaacError, OSError) as e:
        fail(e, "Error initializing system")


def fail(error: BaseException, context: str = "Error") -> NoReturn:
    logger.debug(f"{context}: {error}", exc_info=True)
    console.print(f"[red]{context}: {error}[/red]")
    raise typer.Exit(exit_code_for(error))


def roster_option(text: Optional[str]) -> List[Algo]:
    try:
        return parse_algos(text)
    except PcaacError as e:
        raise typer.BadParameter(str(e), param_hint="--algo")


def origin_option(text: Optional[str]) -> Point3:
    if text is None:
        return ORIGIN
    try:
        return Point3.of(parse_point(text))
    except (PcaacError, ValueError) as e:
        raise typer.BadParameter(str(e), param_hint="--origin")


def metrics_table(title: str, rows: List[MetricsRow]) -> Table:
    table = Table(title=title)
    table.add_column("Filter", style="green")
    for column in ("Precision", "Recall", "F1", "Mult.", "ms"):
        table.add_column(column, justify="right")
    table.add_column("Note", style="red")
    for row in rows:
        record = row.as_record()
        table.add_row(record['filter'], record['precision'], record['recall'], record['f1'],
                      record['multiplications'], record['wall_ms'], record['note'])
    return table


# Shared pipeline flags
T_OPTION = typer.Option(None, "--t", help="Number of cylinder shells")
EPSILON_OPTION = typer.Option(None, "--epsilon1", help="DBSCAN radius of the innermost shell (m)")
MINPTS_OPTION = typer.Option(None, "--minpts", help="DBSCAN minimum neighborhood size")
PSI_OPTION = typer.Option(None, "--psi", help="Minimum cluster population")
PSI_MIN_OPTION = typer.Option(None, "--psi-min", help="Lower clamp of the psi ramp")
PSI_MAX_OPTION = typer.Option(None, "--psi-max", help="Upper clamp of the psi ramp")
TUNE_OPTION = typer.Option(False, "--tune-minpts", help="Pick minpts per shell by silhouette")
RAMP_OPTION = typer.Option(False, "--psi-ramp", help="Scale psi with sqrt(shell index)")
NO_TIMING_OPTION = typer.Option(False, "--no-timing", help="Leave wall-clock fields empty")


def pipeline_overrides(t, epsilon1, minpts, psi, psi_min, psi_max, tune_minpts, psi_ramp) -> dict:
    return {
        't': t, 'epsilon_1': epsilon1, 'minpts_default': minpts, 'psi_default': psi,
        'psi_min': psi_min, 'psi_max': psi_max,
        'tune_minpts': True if tune_minpts else None,
        'psi_ramp': True if psi_ramp else None,
    }


@app.command()
def gen(
    output: str = typer.Option(..., "--output", help="Labeled cloud to write (.xyz or .ply)"),
    spec: Optional[str] = typer.Option(None, "--spec", help="Scene spec YAML (default: calibrated scene)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the spec's seed"),
    no_timing: bool = NO_TIMING_OPTION,
):
    """Generate a labeled synthetic scene."""
    config = initialize_system()
    console.print("[yellow]Generating scene...[/yellow]")
    try:
        cloud = cmd_gen(output, spec, seed, config, record_timing=not no_timing)
    except (PcaacError, OSError) as e:
        fail(e, "Error generating scene")

    noise = int(cloud.truth_noise.sum())
    console.print(Panel.fit(
        f"[bold green]Scene generated[/bold green]\n\n"
        f"[cyan]Points:[/cyan] {len(cloud)}\n"
        f"[cyan]Signal:[/cyan] {len(cloud) - noise}\n"
        f"[cyan]Noise:[/cyan] {noise}\n"
        f"[cyan]Output:[/cyan] {output}\n"
        f"[cyan]Manifest:[/cyan] {manifest_path(output)}",
        title="Generation Results"
    ))


@app.command(name="filter")
def filter_cloud(
    input_path: str = typer.Option(..., "--input", help="Cloud to filter (.xyz or .ply)"),
    output: str = typer.Option(..., "--output", help="Filtered cloud to write"),
    algo: Algo = typer.Option(Algo.PCAAC, "--algo", help="Filter to run"),
    t: Optional[int] = T_OPTION,
    epsilon1: Optional[float] = EPSILON_OPTION,
    minpts: Optional[int] = MINPTS_OPTION,
    psi: Optional[int] = PSI_OPTION,
    psi_min: Optional[int] = PSI_MIN_OPTION,
    psi_max: Optional[int] = PSI_MAX_OPTION,
    tune_minpts: bool = TUNE_OPTION,
    psi_ramp: bool = RAMP_OPTION,
    no_timing: bool = NO_TIMING_OPTION,
    origin: Optional[str] = typer.Option(
        None, "--origin", help="Sensor position x,y,z the shells are centred on (default 0,0,0)"),
):
    """Filter a point cloud and write survivors plus predicted labels."""
    config = initialize_system()
    sensor = origin_option(origin)
    try:
        settings = resolve_settings(config, **pipeline_overrides(
            t, epsilon1, minpts, psi, psi_min, psi_max, tune_minpts, psi_ramp))
        console.print(f"[cyan]Running {algo.value} on {input_path}[/cyan]")
        run = cmd_filter(input_path, output, algo, settings, record_timing=not no_timing,
                         origin=sensor)
    except (PcaacError, OSError) as e:
        fail(e, "Error filtering cloud")

    console.print(Panel.fit(
        f"[bold green]Filtering complete[/bold green]\n\n"
        f"[cyan]Filter:[/cyan] {algo.value}\n"
        f"[cyan]Removed:[/cyan] {int(run.predicted.sum())} of {run.predicted.shape[0]}\n"
        f"[cyan]Output:[/cyan] {output}\n"
        f"[cyan]Labels:[/cyan] {labels_path(output)}",
        title="Filter Results"
    ))
    if run.report:
        table = Table(title="Regions")
        for column in ("Shell", "m", "k", "Variance", "eps", "minpts", "psi", "Removed"):
            table.add_column(column, justify="right")
        for r in run.report:
            table.add_row(str(r.index), str(r.m), str(r.k), format_fraction(r.variance_ratio, 4),
                          "-" if r.epsilon is None else f"{r.epsilon:.3f}",
                          "-" if r.minpts is None else str(r.minpts),
                          "-" if r.psi is None else str(r.psi), str(r.removed))
        console.print(table)


@app.command(name="eval")
def evaluate(
    input_path: str = typer.Option(..., "--input", help="Cloud with ground-truth labels"),
    labels: str = typer.Option(..., "--labels", help="Predicted-label file (0/1 per point)"),
    output: str = typer.Option(..., "--output", help="Metrics CSV to write"),
):
    """Score predicted labels against ground truth."""
    initialize_system()
    try:
        row = cmd_eval(input_path, labels, output)
    except (PcaacError, OSError) as e:
        fail(e, "Error evaluating labels")
    console.print(metrics_table("Evaluation", [row]))
    console.print(f"[green]Metrics written to {output}[/green]")


@app.command()
def compare(
    output: str = typer.Option(..., "--output", help="Metrics CSV to write"),
    input_path: Optional[str] = typer.Option(None, "--input", help="Labeled cloud (default: generate from --spec)"),
    spec: Optional[str] = typer.Option(None, "--spec", help="Scene spec YAML"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the spec's seed"),
    algos: Optional[str] = typer.Option(None, "--algo", help="Comma-separated filters (default: all)"),
    t: Optional[int] = T_OPTION,
    epsilon1: Optional[float] = EPSILON_OPTION,
    minpts: Optional[int] = MINPTS_OPTION,
    psi: Optional[int] = PSI_OPTION,
    psi_min: Optional[int] = PSI_MIN_OPTION,
    psi_max: Optional[int] = PSI_MAX_OPTION,
    tune_minpts: bool = TUNE_OPTION,
    psi_ramp: bool = RAMP_OPTION,
    no_timing: bool = NO_TIMING_OPTION,
):
    """Run every filter on one scene and rank them by F1."""
    config = initialize_system()
    roster = roster_option(algos)
    try:
        settings = resolve_settings(config, **pipeline_overrides(
            t, epsilon1, minpts, psi, psi_min, psi_max, tune_minpts, psi_ramp))
        console.print("[yellow]Comparing filters...[/yellow]")
        rows = cmd_compare(output, input_path, roster, settings, spec, seed, config,
                           record_timing=not no_timing)
    except (PcaacError, OSError) as e:
        fail(e, "Error comparing filters")
    console.print(metrics_table("Filter Comparison", rows))
    console.print(f"[green]Metrics written to {output}[/green]")


@app.command()
def bench(
    output: str = typer.Option(..., "--output", help="Timing CSV to write"),
    sizes: Optional[str] = typer.Option(None, "--sizes", help="Comma-separated scene sizes"),
    algos: Optional[str] = typer.Option(None, "--algo", help="Comma-separated filters"),
    spec: Optional[str] = typer.Option(None, "--spec", help="Base scene spec YAML"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the spec's seed"),
    brute_force: bool = typer.Option(False, "--brute-force", help="Scan all points instead of the grid index"),
    t: Optional[int] = T_OPTION,
    epsilon1: Optional[float] = EPSILON_OPTION,
    minpts: Optional[int] = MINPTS_OPTION,
    psi: Optional[int] = PSI_OPTION,
    no_timing: bool = NO_TIMING_OPTION,
):
    """Time filters and count their distance arithmetic across scene sizes."""
    config = initialize_system()
    try:
        defaults = config.get_bench_settings()
    except PcaacError as e:
        fail(e, "Invalid bench settings")
    try:
        size_list = parse_int_list(sizes) if sizes else list(defaults.sizes)
    except ValueError as e:
        raise typer.BadParameter(str(e), param_hint="--sizes")
    roster = roster_option(algos or ','.join(defaults.algos))

    try:
        settings = resolve_settings(config, **pipeline_overrides(
            t, epsilon1, minpts, psi, None, None, False, False))
        console.print(f"[yellow]Benchmarking {len(roster)} filter(s) on sizes {size_list}...[/yellow]")
        records = cmd_bench(output, size_list, roster, settings, spec,
                            seed if seed is not None else defaults.seed,
                            use_grid=False if brute_force else None, config=config,
                            record_timing=not no_timing)
    except (PcaacError, OSError) as e:
        fail(e, "Error benchmarking")

    table = Table(title="Benchmark")
    for column in ("m", "Filter", "Additions", "Multiplications", "ms", "F1", "Note"):
        table.add_column(column, justify="right")
    for r in records:
        table.add_row(r['m'], r['filter'], r['additions'], r['multiplications'],
                      r['wall_ms'], r['f1'], r['note'])
    console.print(table)
    console.print(f"[green]Results written to {output}[/green]")


@app.command()
def info():
    """Show toolkit version and resolved configuration."""
    config = initialize_system()
    console.print(Panel.fit(
        "[bold]PCAAC Toolkit Info[/bold]\n\n"
        f"[cyan]Version:[/cyan] {__version__}\n"
        f"[cyan]Config:[/cyan] {config.config_dir}\n"
        f"[cyan]Filters:[/cyan] {', '.join(a.value for a in Algo)}",
        title="System Information"
    ))
    table = Table(title="Resolved Configuration")
    table.add_column("Setting", style="green")
    table.add_column("Value", style="white")
    try:
        for key, value in config.summary():
            table.add_row(key, value)
    except PcaacError as e:
        fail(e, "Invalid configuration")
    console.print(table)


if __name__ == "__main__":
    app()
