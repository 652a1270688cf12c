"""CLI commands for inspecting and changing solver settings."""

import click
from rich.console import Console
from rich.table import Table

from ...utils.config import config_manager

console = Console()


@click.group()
def settings():
    """Show or change caps, sampling defaults and cache settings."""
    pass


@settings.command()
def show():
    """Show the effective configuration (file plus environment overrides)."""
    from ...core.transitions import weak_table_cache

    _tables = weak_table_cache()

    for section, values in config_manager.as_dict().items():
        table = Table(title=f"{section.title()} Settings")
        table.add_column("Setting", style="cyan")
        table.add_column("Value", style="magenta")
        for key, value in values.items():
            table.add_row(key, str(value))
        console.print(table)
        console.print()

    stats_table = Table(title="Weak Table Cache")
    stats_table.add_column("Metric", style="cyan")
    stats_table.add_column("Value", style="magenta")
    stats_table.add_row("Entries", str(len(_tables)))
    for key, value in sorted(_tables.stats.items()):
        stats_table.add_row(key.title(), str(value))
    console.print(stats_table)


@settings.command(name="set")
@click.argument("section")
@click.argument("key")
@click.argument("value")
def set_setting(section: str, key: str, value: str):
    """Persist SECTION.KEY = VALUE to the configuration file."""
    try:
        parsed = config_manager.update_setting(section, key, value)
    except (KeyError, ValueError) as exc:
        raise click.BadParameter(str(exc).strip("'"))
    console.print(f"[green]Set {section}.{key} to {parsed}[/green]")


@settings.command()
def path():
    """Print the configuration file location."""
    click.echo(str(config_manager.config_file))
