"""Command line front end for the analysis, instrumentation, simulation,
and serving workflow.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 violation
found when --fail-on-violation is set.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from .classifier import (
    ClassifierError,
    RuleSet,
    agreement_rate,
    classify_corpus,
    load_labels,
    write_results_csv,
)
from .graph_model import GraphError, load_graph, serialize_graph
from .instrumentor import InstrumentationError, cn_config_doc, instrument
from .policy_engine import PolicyError
from .risk_discovery import MatchTables, RiskReport, discover_all
from .security_service import SecurityStore, SimSession, build_app, pace
from .sim_runtime import (
    ScenarioError,
    load_scenario,
    measure_cn_overhead,
    run_scenario,
    write_trace,
)

VALIDATION_ERRORS = (
    GraphError,
    ScenarioError,
    PolicyError,
    InstrumentationError,
    ClassifierError,
    json.JSONDecodeError,
    FileNotFoundError,
    ValueError,
)


class ViolationFound(Exception):
    def __init__(self, failed):
        super().__init__(f"failed checks: {', '.join(failed)}")
        self.failed = failed


def _note(ctx, message: str) -> None:
    if ctx.obj.get("verbose"):
        click.echo(message, err=True)


@click.group()
@click.option("--verbose", is_flag=True, help="Chatty diagnostics on stderr.")
@click.option("--seed", type=int, default=None, help="Override scenario seed.")
@click.pass_context
def cli(ctx, verbose, seed):
    """Interaction-risk toolkit for pub/sub robot apps."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["seed"] = seed


@cli.command()
@click.argument("graph_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--tables", "tables_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="report.json", show_default=True)
@click.pass_context
def analyze(ctx, graph_file, tables_file, out):
    """Discover interaction risks in a graph file."""
    graph = load_graph(graph_file)
    tables = None
    if tables_file:
        tables = MatchTables.from_dict(
            json.loads(Path(tables_file).read_text(encoding="utf-8"))
        )
    report = discover_all(graph, tables)
    Path(out).write_text(report.serialize() + "\n", encoding="utf-8")
    _note(ctx, f"analyzed {graph.name}: {len(report.findings)} findings")
    click.echo(f"{len(report.findings)} findings -> {out}")


@cli.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--rules", "rules_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True)
@click.pass_context
def classify(ctx, corpus_dir, rules_file, out):
    """Categorize repo records into function types."""
    ruleset = RuleSet.load(rules_file)
    results = classify_corpus(corpus_dir, ruleset)
    write_results_csv(results, out)
    click.echo(f"{len(results)} records -> {out}")
    labels = load_labels(corpus_dir)
    if labels:
        rate = agreement_rate(results, labels)
        click.echo(f"agreement with labels: {rate:.3f}")


@cli.command("instrument")
@click.argument("graph_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="instrumented.json", show_default=True)
@click.option("--cn-config", default="cns.json", show_default=True)
@click.option("--plan", "plan_file", default=None, help="Also write the reversal plan.")
@click.pass_context
def instrument_cmd(ctx, graph_file, report_file, out, cn_config, plan_file):
    """Rewire a graph with coordination nodes."""
    graph = load_graph(graph_file)
    report = None
    if report_file:
        report = RiskReport.parse(Path(report_file).read_text(encoding="utf-8"))
    instrumented, plan = instrument(graph, report)
    Path(out).write_text(serialize_graph(instrumented) + "\n", encoding="utf-8")
    Path(cn_config).write_text(
        json.dumps(cn_config_doc(plan), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    if plan_file:
        Path(plan_file).write_text(plan.serialize() + "\n", encoding="utf-8")
    _note(ctx, f"instrumented {graph.name} with {len(plan.cns)} coordination nodes")
    click.echo(f"{len(plan.cns)} coordination nodes -> {out}, {cn_config}")


def _parse_chain_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise ScenarioError(f"expected A..B, got {text!r}")
    return range(int(lo), int(hi) + 1)


def _echo_checks(result) -> None:
    for check_id, passed in sorted(result.checks.items()):
        click.echo(f"{'PASS' if passed else 'FAIL'} {check_id}")


@cli.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--trace", "trace_file", default=None)
@click.option("--report", "show_report", is_flag=True, help="Print the run summary as JSON.")
@click.option("--attack/--no-attack", default=True, show_default=True)
@click.option("--instrument/--no-instrument", "instrumented", default=True, show_default=True)
@click.option("--policies/--no-policies", "apply_policies", default=True, show_default=True)
@click.option("--fail-on-violation", is_flag=True)
@click.option("--bench-cn-chain", default=None, metavar="A..B", help="Measure per-message overhead across chain lengths.")
@click.option("--bench-messages", default=2000, show_default=True)
@click.pass_context
def simulate(
    ctx,
    scenario_file,
    trace_file,
    show_report,
    attack,
    instrumented,
    apply_policies,
    fail_on_violation,
    bench_cn_chain,
    bench_messages,
):
    """Run a scenario, or benchmark coordination-node overhead."""
    if bench_cn_chain:
        chain = _parse_chain_range(bench_cn_chain)
        stats = measure_cn_overhead(tuple(chain), messages=bench_messages)
        for n in chain:
            click.echo(f"n={n}: {stats['per_n_ms'][n]:.4f} ms")
        click.echo(
            f"fit: {stats['slope_ms_per_cn']:.4f} ms per node, "
            f"r_squared {stats['r_squared']:.4f}"
        )
        return
    if scenario_file is None:
        raise click.UsageError("missing scenario file")
    scenario = load_scenario(scenario_file)
    if ctx.obj.get("seed") is not None:
        scenario.seed = ctx.obj["seed"]
    result = run_scenario(
        scenario,
        instrumented=instrumented,
        attack=attack,
        apply_policies=apply_policies,
    )
    if trace_file:
        write_trace(result.trace, trace_file)
        _note(ctx, f"trace: {len(result.trace)} events -> {trace_file}")
    if show_report:
        click.echo(json.dumps(result.summary, indent=2, sort_keys=True))
    _echo_checks(result)
    failed = sorted(k for k, v in result.checks.items() if not v)
    if fail_on_violation and failed:
        raise ViolationFound(failed)


@cli.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default="pipeline_out", show_default=True)
@click.option("--attack/--no-attack", default=True, show_default=True)
@click.option("--instrument/--no-instrument", "instrumented", default=True, show_default=True)
@click.option("--fail-on-violation", is_flag=True)
@click.pass_context
def pipeline(ctx, scenario_file, out_dir, attack, instrumented, fail_on_violation):
    """Analyze, instrument, and simulate one scenario end to end."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = load_scenario(scenario_file)
    graph = scenario.load_graph()

    report = discover_all(graph)
    (out / "report.json").write_text(report.serialize() + "\n", encoding="utf-8")
    _note(ctx, f"report: {len(report.findings)} findings")

    if instrumented:
        rewired, plan = instrument(graph, report)
        (out / "instrumented.json").write_text(
            serialize_graph(rewired) + "\n", encoding="utf-8"
        )
        (out / "cns.json").write_text(
            json.dumps(cn_config_doc(plan), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        (out / "plan.json").write_text(plan.serialize() + "\n", encoding="utf-8")

    result = run_scenario(
        scenario,
        instrumented=instrumented,
        attack=attack,
        apply_policies=instrumented,
    )
    write_trace(result.trace, out / "trace.jsonl")
    (out / "summary.json").write_text(
        json.dumps(
            {"summary": result.summary, "checks": result.checks},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    _echo_checks(result)
    failed = sorted(k for k, v in result.checks.items() if not v)
    if fail_on_violation and failed:
        raise ViolationFound(failed)


def build_serve_session(
    scenario_file: str,
    *,
    attack: bool = True,
    enforce_roles: bool = True,
    state_dir: Optional[str] = None,
) -> SimSession:
    scenario = load_scenario(scenario_file)
    store = SecurityStore(state_dir=Path(state_dir)) if state_dir else SecurityStore()
    return SimSession(
        scenario,
        instrumented=True,
        attack=attack,
        enforce_roles=enforce_roles,
        store=store,
    )


@cli.command()
@click.option("--scenario", "scenario_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--listen", default="127.0.0.1:8787", show_default=True)
@click.option("--enforce-roles/--no-enforce-roles", default=True, show_default=True)
@click.option("--attack/--no-attack", default=True, show_default=True)
@click.option("--speed", default=1.0, show_default=True, help="Virtual seconds per wall second.")
@click.option("--state-dir", default=None, help="Persist models and violations here.")
@click.pass_context
def serve(ctx, scenario_file, listen, enforce_roles, attack, speed, state_dir):
    """Serve the operator console API against a live run."""
    import uvicorn

    session = build_serve_session(
        scenario_file,
        attack=attack,
        enforce_roles=enforce_roles,
        state_dir=state_dir,
    )
    app = build_app(session)
    pace(session, speed=speed)
    host, _, port = listen.rpartition(":")
    if not host:
        raise click.UsageError(f"listen address must be host:port, got {listen!r}")
    click.echo(f"serving {session.scenario.name} on http://{host}:{port}")
    uvicorn.run(
        app,
        host=host,
        port=int(port),
        log_level="info" if ctx.obj.get("verbose") else "warning",
    )


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except ViolationFound as exc:
        click.echo(str(exc), err=True)
        return 3
    except VALIDATION_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
