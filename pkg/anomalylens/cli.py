"""Click CLI entrypoint for anomalylens."""

import json
import logging
import sys
from datetime import datetime, timedelta, timezone
from typing import Any, Dict, List, NoReturn, Optional, Tuple

import click

from . import __version__
from . import db as log_db
from .classify import Analysis, CleanVerdict, analyze, classify_schedule
from .config import (
    apply_env,
    effective_settings,
    get_config_path,
    load_config,
    save_config,
    set_setting,
)
from .enumeration import (
    catalog_forms,
    enumerate_dda,
    enumerate_sda,
    gen_schedules,
    render_catalog_table,
)
from .errors import AnomalyLensError
from .graph import conflict_dot, to_dot
from .isolation import LevelSystem, all_levels, check_schedule, verdict_for
from .pops import pop_text
from .schedule import parse, split_schedules
from .simulate import parse_strategies, simulate
from .types import EnumSpec, Schedule, SchedulerConfig, Settings, Subclass, Workload

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
_LOG_RECORD = "anomalylens.log_record"


class LoggingGroup(click.Group):
    """Click Group that logs every invocation to SQLite."""

    def invoke(self, ctx: click.Context) -> Any:
        with log_db.log_invocation("unknown") as record:
            ctx.meta[_LOG_RECORD] = record
            try:
                return super().invoke(ctx)
            except (click.ClickException, click.exceptions.Exit, click.Abort):
                raise
            except Exception as e:
                # Unexpected failures keep the exit-code contract.
                logger.debug("unexpected failure", exc_info=True)
                record["error_message"] = str(e)
                click.echo(f"Error: {e}", err=True)
                sys.exit(2)
            finally:
                if record["command"] == "unknown" and ctx.invoked_subcommand:
                    record["command"] = ctx.invoked_subcommand


def _record(**fields: Any) -> None:
    """Publish the running command's path, params and outcome to the invocation log."""
    ctx = click.get_current_context()
    record = ctx.meta.get(_LOG_RECORD)
    if record is None:
        return
    record["command"] = ctx.command_path.split(" ", 1)[-1]
    record["args"] = {k: getattr(v, "name", v) for k, v in ctx.params.items()}
    record.update(fields)


def _fail(message: str) -> NoReturn:
    click.echo(f"Error: {message}", err=True)
    _record(outcome="error", error_message=message)
    sys.exit(2)


def _emit(data: Any) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False))


def _enable_verbose() -> None:
    pkg_logger = logging.getLogger("anomalylens")
    if not any(getattr(h, "_anomalylens", False) for h in pkg_logger.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        handler._anomalylens = True  # type: ignore[attr-defined]
        pkg_logger.addHandler(handler)
    pkg_logger.setLevel(logging.DEBUG)


def _settings() -> Settings:
    try:
        return effective_settings()
    except ValueError as e:
        _fail(str(e))


def _read_schedules(source, lax_versions: bool) -> List[Tuple[str, Schedule]]:
    """Parse every schedule block of the input. Parse errors exit with code 2."""
    text = source.read()
    _record(input_text=text)
    blocks = split_schedules(text)
    if not blocks:
        _fail("no schedule found in input")
    parsed = []
    for i, block in enumerate(blocks, start=1):
        try:
            parsed.append((block.strip(), parse(block, lax_versions=lax_versions)))
        except AnomalyLensError as e:
            _fail(f"schedule {i}: {e}" if len(blocks) > 1 else str(e))
    return parsed


def build_report(source_text: str, result: Analysis, dot: bool = False) -> Dict[str, Any]:
    """Stable JSON report for one schedule."""
    s = result.schedule
    reports = result.reports()
    verdicts = {lvl.key: verdict_for(lvl, reports).verdict for lvl in all_levels()}
    return {
        "schemaVersion": SCHEMA_VERSION,
        "input": source_text,
        "schedule": s.text(),
        "pops": [dict(e.to_dict(), text=pop_text(e, s)) for e in result.pops],
        "cycles": [c.to_dict() for c in result.cycles],
        "cyclesTruncated": result.cycles.truncated,
        "anomaly": result.anomaly.to_dict() if result.anomaly else None,
        "verdicts": verdicts,
        "dot": to_dot(result.graph, result.anomaly.cycle if result.anomaly else None)
        if dot
        else None,
    }


@click.group(cls=LoggingGroup)
@click.version_option(version=__version__, prog_name="anomalylens")
@click.option("-v", "--verbose", is_flag=True, help="Log diagnostics to stderr")
def cli(verbose):
    """anomalylens - find, name and check data anomalies in transaction schedules."""
    if verbose:
        _enable_verbose()


@cli.command("classify")
@click.argument("source", type=click.File("r"), default="-")
@click.option("--lax-versions", is_flag=True, help="Accept any increasing write versions")
@click.option("--strict-rcw", is_flag=True, help="RCW pairs need a write in the reader")
@click.option("--dot", is_flag=True, help="Include the POP graph as DOT")
@click.option("--limit", type=int, default=None, help="Max cycles to enumerate")
@click.option("--json/--text", "output_json", default=True, help="Output JSON (default)")
def classify_cmd(source, lax_versions, strict_rcw, dot, limit, output_json):
    """Classify the anomaly of each schedule in SOURCE (file or - for stdin)."""
    settings = _settings()
    lax = lax_versions or settings.lax_versions
    strict = strict_rcw or settings.strict_rcw
    cycle_limit = limit if limit is not None else settings.cycle_limit
    results = []
    for text, s in _read_schedules(source, lax):
        results.append((text, analyze(s, strict_rcw=strict, limit=cycle_limit)))

    anomalous = any(r.anomalous for _, r in results)
    if output_json:
        reports = [build_report(text, r, dot=dot) for text, r in results]
        _emit(reports[0] if len(reports) == 1 else reports)
    else:
        for _, r in results:
            if r.anomaly:
                a = r.anomaly
                click.echo(f"{r.schedule.text()}  {a.cls.value} {a.subclass.value} {a.name}")
            else:
                click.echo(f"{r.schedule.text()}  clean")
    _record(outcome="anomalous" if anomalous else "clean")
    if anomalous:
        sys.exit(1)


@cli.command("check")
@click.argument("source", type=click.File("r"), default="-")
@click.option("--system", type=click.Choice(["simplified", "fine"]), default=None)
@click.option("--level", type=click.Choice(["NW", "NRW", "NPA", "NA"]), default=None)
@click.option("--lax-versions", is_flag=True, help="Accept any increasing write versions")
@click.option("--strict-rcw", is_flag=True, help="RCW pairs need a write in the reader")
def check_cmd(source, system, level, lax_versions, strict_rcw):
    """Check each schedule in SOURCE against an isolation level."""
    settings = _settings()
    try:
        lvl = LevelSystem(system or settings.system, level or settings.level)
    except AnomalyLensError as e:
        _fail(str(e))
    strict = strict_rcw or settings.strict_rcw
    out = []
    violated = False
    for text, s in _read_schedules(source, lax_versions or settings.lax_versions):
        verdict = check_schedule(lvl, s, strict_rcw=strict, limit=settings.cycle_limit)
        violated = violated or verdict.verdict == "violates"
        out.append(dict(verdict.to_dict(), schemaVersion=SCHEMA_VERSION, input=text))
    _emit(out[0] if len(out) == 1 else out)
    _record(outcome="violates" if violated else "allowed")
    if violated:
        sys.exit(1)


@cli.command("enumerate")
@click.option("--sda", "which", flag_value="sda", help="Single-variable catalog")
@click.option("--dda", "which", flag_value="dda", help="Double-variable catalog")
@click.option("--json", "output_json", is_flag=True, help="Output JSON")
def enumerate_cmd(which, output_json):
    """Print a two-transaction anomaly catalog."""
    if which is None:
        _fail("choose --sda or --dda")
    entries = enumerate_sda() if which == "sda" else enumerate_dda()
    forms = catalog_forms(entries, Subclass.SDA if which == "sda" else Subclass.DDA)
    if output_json:
        _emit(
            {
                "schemaVersion": SCHEMA_VERSION,
                "catalog": which,
                "forms": forms,
                "entries": [e.to_dict() for e in entries],
            }
        )
    else:
        click.echo(render_catalog_table(entries), nl=False)
        click.echo(f"{len(forms)} forms")
    _record(outcome="success")


@cli.command("generate")
@click.option("--txns", type=int, default=2, help="Transactions (default 2)")
@click.option("--vars", "n_vars", type=int, default=1, help="Variables (default 1)")
@click.option("--ops", type=int, default=2, help="Max data ops per transaction (default 2)")
@click.option("--terminals/--no-terminals", default=True, help="Allow commit/abort ops")
@click.option("--aborts/--no-aborts", default=True, help="Allow abort ops")
@click.option("--lax-versions", is_flag=True, help="Reads may see any earlier version")
@click.option("--ceiling", type=int, default=None, help="Refuse search spaces above this bound")
@click.option("--anomalous-only", is_flag=True, help="Only schedules whose POP graph has a cycle")
@click.option("--count", is_flag=True, help="Print the number of schedules only")
def generate_cmd(
    txns, n_vars, ops, terminals, aborts, lax_versions, ceiling, anomalous_only, count
):
    """Stream every schedule within the bounds, one per line."""
    settings = _settings()
    spec = EnumSpec(
        n_txns=txns,
        n_vars=n_vars,
        max_data_ops=ops,
        include_terminals=terminals,
        lax_versions=lax_versions,
        allow_aborts=aborts,
    )
    try:
        stream = gen_schedules(spec, ceiling=ceiling if ceiling is not None else settings.ceiling)
    except AnomalyLensError as e:
        _fail(str(e))
    total = 0
    for s in stream:
        if anomalous_only and isinstance(
            classify_schedule(s, strict_rcw=settings.strict_rcw), CleanVerdict
        ):
            continue
        total += 1
        if not count:
            click.echo(s.text())
    if count:
        click.echo(str(total))
    _record(outcome="success")


@cli.command("simulate")
@click.option("--seed", type=int, default=0, help="Random seed (default 0)")
@click.option("--strategies", default="none", help="Comma list of strategies, or none")
@click.option("--txns", type=int, default=4, help="Transactions (default 4)")
@click.option("--vars", "n_vars", type=int, default=3, help="Variables (default 3)")
@click.option("--min-ops", type=int, default=1, help="Min data ops per transaction")
@click.option("--max-ops", type=int, default=4, help="Max data ops per transaction")
@click.option("--write-ratio", type=float, default=None, help="Probability an op is a write")
@click.option("--abort-ratio", type=float, default=None, help="Probability a program aborts")
def simulate_cmd(seed, strategies, txns, n_vars, min_ops, max_ops, write_ratio, abort_ratio):
    """Run the seeded scheduler simulator and classify its committed history."""
    settings = _settings()
    try:
        cfg = SchedulerConfig(
            strategies=parse_strategies(strategies),
            seed=seed,
            workload=Workload(
                n_txns=txns,
                n_vars=n_vars,
                min_ops=min_ops,
                max_ops=max_ops,
                write_ratio=write_ratio if write_ratio is not None else settings.write_ratio,
                abort_ratio=abort_ratio if abort_ratio is not None else settings.abort_ratio,
                zipf_s=settings.zipf_s,
            ),
        )
        result = simulate(cfg)
    except AnomalyLensError as e:
        _fail(str(e))
    committed = analyze(result.committed, strict_rcw=settings.strict_rcw)
    data = result.to_dict()
    data["schemaVersion"] = SCHEMA_VERSION
    data["anomaly"] = committed.anomaly.to_dict() if committed.anomaly else None
    _emit(data)
    _record(outcome="anomalous" if committed.anomalous else "clean")
    if committed.anomalous:
        sys.exit(1)


@cli.command("dot")
@click.argument("source", type=click.File("r"), default="-")
@click.option("--view", type=click.Choice(["pop", "conflict"]), default="pop")
@click.option("--highlight/--no-highlight", default=True, help="Mark the canonical cycle")
@click.option("--lax-versions", is_flag=True, help="Accept any increasing write versions")
def dot_cmd(source, view, highlight, lax_versions):
    """Render each schedule's POP graph (or conflict graph) as Graphviz DOT."""
    settings = _settings()
    for _, s in _read_schedules(source, lax_versions or settings.lax_versions):
        if view == "conflict":
            click.echo(conflict_dot(s), nl=False)
            continue
        result = analyze(s, strict_rcw=settings.strict_rcw, limit=settings.cycle_limit)
        marked = result.anomaly.cycle if highlight and result.anomaly else None
        click.echo(to_dot(result.graph, marked), nl=False)
    _record(outcome="success")


# Settings
@cli.group("config")
def config_group():
    """Show and edit persisted settings."""
    pass


@config_group.command("show")
def config_show():
    """Show effective settings (file plus environment overrides)."""
    settings = _settings()
    _emit({"path": str(get_config_path()), "settings": settings.to_dict()})
    _record(outcome="success")


@config_group.command("set")
@click.argument("name")
@click.argument("value")
def config_set(name, value):
    """Persist one setting, e.g. ``config set ceiling 500000``."""
    try:
        settings = set_setting(load_config(), name, value)
        save_config(settings)
    except ValueError as e:
        _fail(str(e))
    click.echo(f"{name} = {getattr(apply_env(settings), name)}")
    _record(outcome="success")


@config_group.command("reset")
def config_reset():
    """Restore default settings."""
    save_config(Settings())
    click.echo("Settings reset to defaults.")
    _record(outcome="success")


# Logs
@cli.group("logs")
def logs_group():
    """List and query CLI invocation logs."""
    pass


@logs_group.command("list")
@click.option("--since", help="Only entries since (ISO date or e.g. 7d, 24h)")
@click.option("--until", help="Only entries until (ISO date)")
@click.option("--command", help="Filter by command (e.g. classify, logs list)")
@click.option("--outcome", type=click.Choice(log_db.OUTCOMES), help="Filter by outcome")
@click.option("--limit", type=int, default=50, help="Max entries to show (default 50)")
@click.option("--json", "output_json", is_flag=True, help="Output JSON")
def logs_list(since, until, command, outcome, limit, output_json):
    """List recent CLI invocation logs."""
    rows = log_db.query_logs(
        since=_parse_date_option(since) if since else None,
        until=_parse_date_option(until) if until else None,
        command=command,
        outcome=outcome,
        limit=limit,
    )
    _record(outcome="success")
    if output_json:
        click.echo(json.dumps(rows, indent=2))
        return
    if not rows:
        click.echo("No log entries found.")
        return
    for r in rows:
        err = f"  error: {r['error_message']}" if r["error_message"] else ""
        dur = f"  {r['duration_ms']}ms" if r["duration_ms"] is not None else ""
        click.echo(
            f"{r['ts']}  {r['command']:16s}  {r['outcome']:9s}  exit={r['exit_code']}{dur}{err}"
        )


@logs_group.command("query")
@click.option("--since", help="Only entries since (ISO date or e.g. 7d)")
@click.option("--until", help="Only entries until (ISO date)")
@click.option("--command", help="Filter by command")
@click.option("--outcome", type=click.Choice(log_db.OUTCOMES), help="Filter by outcome")
@click.option("--limit", type=int, default=100, help="Max entries (default 100)")
@click.option("--offset", type=int, default=0, help="Offset for pagination")
@click.option("--json", "output_json", is_flag=True, help="Output JSON")
def logs_query(since, until, command, outcome, limit, offset, output_json):
    """Query CLI logs with filters (same as list with pagination)."""
    rows = log_db.query_logs(
        since=_parse_date_option(since) if since else None,
        until=_parse_date_option(until) if until else None,
        command=command,
        outcome=outcome,
        limit=limit,
        offset=offset,
    )
    _record(outcome="success")
    if output_json:
        click.echo(json.dumps(rows, indent=2))
        return
    if not rows:
        click.echo("No log entries found.")
        return
    for r in rows:
        err = f"  error: {r['error_message']}" if r["error_message"] else ""
        digest = (r.get("input_digest") or "-")[:12]
        click.echo(
            f"{r['id']}  {r['ts']}  {r['command']:16s}  {r['outcome']:9s}  "
            f"exit={r['exit_code']}  input={digest}{err}"
        )


def _parse_date_option(s: str) -> Optional[datetime]:
    """Parse --since/--until: ISO date or relative like 7d, 24h."""
    if not s:
        return None
    s = s.strip().lower()
    now = datetime.now(timezone.utc)
    if s.endswith("d"):
        try:
            return now - timedelta(days=int(s[:-1]))
        except ValueError:
            pass
    if s.endswith("h"):
        try:
            return now - timedelta(hours=int(s[:-1]))
        except ValueError:
            pass
    try:
        return datetime.fromisoformat(s.replace("z", "+00:00"))
    except ValueError:
        _fail(f"Invalid date format: {s}. Use ISO date or e.g. 7d, 24h.")
        return None


if __name__ == "__main__":
    cli()
