"""Config-driven frontend: expression language, schema, reports, CLI."""

from .cli import main, run_command
from .config import ConfigError, SystemConfig, build_system, load_config
from .expressions import ParseError, evaluate, free_refs, parse_expression, pretty
from .report import (
    build_report,
    canonical_json,
    config_digest,
    jsonable,
    render_report,
    write_report,
)

__all__ = [
    "ConfigError",
    "ParseError",
    "SystemConfig",
    "build_report",
    "build_system",
    "canonical_json",
    "config_digest",
    "evaluate",
    "free_refs",
    "jsonable",
    "load_config",
    "main",
    "parse_expression",
    "pretty",
    "render_report",
    "run_command",
    "write_report",
]
