"""Command-line interface for ccsim"""

import logging
import os
import sys

import click
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel

from src.core.config import create_config_from_env
from src.core.simkernel import RngStream
from src.core.trace_generator import DEFAULT_ZONES, describe, generate_traces
from src.models.errors import ConfigurationError, SimulationError, SimulationGuardError
from src.services.report_writer import report_dir, write_comparison, write_report
from src.services.scenario_service import ScenarioService
from src.utils.formatting import print_error, print_results_table, print_success, print_summary, print_warning
from src.utils.loaders import load_scenario, write_spot_traces
from src.utils.validation import validate_scenario

# Load environment variables
load_dotenv()

console = Console()

EXIT_CONFIG_ERROR = 2
EXIT_GUARD_TRIPPED = 3


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_time=False, show_path=False)],
        force=True,
    )


def get_service_from_env() -> ScenarioService:
    """Create a ScenarioService from environment variables"""
    try:
        config = create_config_from_env()
    except ConfigurationError as e:
        print_error(str(e), title="Configuration error")
        sys.exit(EXIT_CONFIG_ERROR)
    setup_logging(config.log_level)
    return ScenarioService(config)


def fail(error: Exception) -> None:
    """Print an error and exit with the code for its kind"""
    if isinstance(error, ConfigurationError):
        print_error(str(error), title="Configuration error")
        sys.exit(EXIT_CONFIG_ERROR)
    if isinstance(error, SimulationGuardError):
        print_error(str(error), title="Simulation guard tripped")
        sys.exit(EXIT_GUARD_TRIPPED)
    print_error(f"Error: {error}")
    sys.exit(1)


@click.group()
@click.version_option(version="0.1.0")
def cli():
    """ccsim - Deterministic simulator for elastic cloud analytics platforms

    Runs elastic-scaling, storage-cost, throughput, cost-aware provisioning
    and storage-lifecycle experiments described by scenario files.
    """
    pass


@cli.command()
@click.argument("scenario", type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the scenario seed")
@click.option("--out-dir", type=click.Path(), default=None, help="Output directory (default: $CCSIM_OUT_DIR or out)")
@click.option("--max-virtual-days", type=float, default=None, help="Virtual-time guard for elastic runs")
def run(scenario, seed, out_dir, max_virtual_days):
    """Run one scenario and write its report

    Example:
        ccsim run resources/scenarios/elastic_unlimited.scn
        ccsim run resources/scenarios/storage_cost.scn --out-dir results
    """
    service = get_service_from_env()
    out_dir = out_dir or service.config.out_dir
    try:
        report = service.run_path(scenario, seed=seed, max_virtual_days=max_virtual_days)
        write_report(report, out_dir)
    except SimulationError as e:
        fail(e)
    print_summary(report)
    print_success(f"Report written to {report_dir(out_dir, report)}")


@cli.command()
@click.argument("scenarios", nargs=-1, required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Override every scenario's seed")
@click.option("--out-dir", type=click.Path(), default=None, help="Output directory (default: $CCSIM_OUT_DIR or out)")
@click.option("--max-virtual-days", type=float, default=None, help="Virtual-time guard for elastic runs")
def compare(scenarios, seed, out_dir, max_virtual_days):
    """Compare elastic-scaling scenarios against the first one

    Example:
        ccsim compare resources/scenarios/elastic_no_scaling_40.scn resources/scenarios/elastic_unlimited.scn
    """
    service = get_service_from_env()
    out_dir = out_dir or service.config.out_dir
    try:
        reports = [service.run_path(path, seed=seed, max_virtual_days=max_virtual_days) for path in scenarios]
        rows = service.compare(reports)
        path = write_comparison(rows, out_dir)
    except SimulationError as e:
        fail(e)
    print_results_table([row.model_dump() for row in rows], title="Cost vs. makespan")
    if any(row.seed_mismatch for row in rows):
        print_warning("Some scenarios use a different seed than the baseline; their workloads differ")
    print_success(f"Comparison written to {path}")


@cli.command("gen-traces")
@click.option("--out", "out_file", required=True, type=click.Path(), help="CSV file to write")
@click.option("--days", type=int, default=31, help="Trace length in days")
@click.option("--seed", type=int, default=0, help="Random seed")
@click.option("--instance-type", default="c4.8xlarge", help="Instance type label")
@click.option("--on-demand-price", type=float, default=1.675, help="On-demand $/hour the spot levels are based on")
def gen_traces(out_file, days, seed, instance_type, on_demand_price):
    """Generate synthetic hourly spot traces for 10 AZs in 4 regions

    Example:
        ccsim gen-traces --out traces.csv --days 31 --seed 7
    """
    get_service_from_env()
    if days <= 0 or on_demand_price <= 0:
        print_error("--days and --on-demand-price must be positive", title="Configuration error")
        sys.exit(EXIT_CONFIG_ERROR)
    traces = generate_traces(RngStream(seed, "traces").child(instance_type), instance_type, on_demand_price, days=days)
    directory = os.path.dirname(out_file)
    if directory:
        os.makedirs(directory, exist_ok=True)
    write_spot_traces(out_file, traces)
    print_results_table(describe(traces), title=f"Spot traces for {instance_type}")
    print_success(f"Wrote {len(traces)} traces ({len(DEFAULT_ZONES)} AZs) to {out_file}")


@cli.command()
@click.argument("scenario", type=click.Path())
def validate(scenario):
    """Parse a scenario and run the cross-checks without simulating

    Example:
        ccsim validate resources/scenarios/lifecycle.scn
    """
    get_service_from_env()
    try:
        loaded = load_scenario(scenario)
    except SimulationError as e:
        fail(e)
    is_valid, issues = validate_scenario(loaded)
    if not is_valid:
        print_error("\n".join(f"- {issue}" for issue in issues), title=f"{scenario}: {len(issues)} issues")
        sys.exit(EXIT_CONFIG_ERROR)
    print_success(f"{loaded.name}: {loaded.experiment.value} scenario is valid")


@cli.command()
def config():
    """Show current configuration

    Example:
        ccsim config
    """
    service = get_service_from_env()
    console.print(Panel("[bold]Current Configuration[/bold]", style="blue"))
    for key, value in service.config.as_dict().items():
        console.print(f"[cyan]{key}:[/cyan] {value}")


def main():
    """Main entry point"""
    cli()


if __name__ == "__main__":
    main()
