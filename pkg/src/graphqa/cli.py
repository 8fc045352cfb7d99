"""Command-line entry point.

Exit codes are a stable contract: 0 for an accepted run (or a clean report),
2 for a run that exhausted its refinement budget, 1 for configuration,
dataset, or infrastructure failures.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import click

from .backend import BackendConfig, TransportError, open_backend
from .cypher import ParseError
from .evalharness import DatasetFormatError, format_report_table, run_eval
from .extraction import extract_from_text
from .llm import (
    LlmConfig,
    LlmFormatError,
    OpenAiChatGateway,
    ReplayExhausted,
    load_replay_script,
    replay_gateway_for,
)
from .pipeline import PipelineAborted, PipelineConfig, run_pipeline
from .schema import introspect, render_nodes, render_relationships
from .store import GraphFormatError, load_graph_json
from .verification import verify_with_semantics

EXIT_OK = 0
EXIT_INFRA = 1
EXIT_EXHAUSTED = 2


@dataclass
class AppConfig:
    backend: BackendConfig = field(default_factory=BackendConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    judge_llm: LlmConfig = field(default_factory=LlmConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    out_dir: Optional[str] = None
    llm_spec: Optional[str] = None  # "replay:<path>" overrides the online config
    judge_llm_spec: Optional[str] = None


def _load_config(path: Optional[str]) -> AppConfig:
    config = AppConfig()
    if path is None:
        return config
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read config {path}: {exc}")
    if not isinstance(data, dict):
        raise click.ClickException("config file must hold a JSON object")
    if "backend" in data:
        config.backend = BackendConfig(**data["backend"])
    if "llm" in data:
        config.llm = LlmConfig(**data["llm"])
    if "judge_llm" in data:
        config.judge_llm = LlmConfig(**data["judge_llm"])
    if "pipeline" in data:
        config.pipeline = PipelineConfig(**data["pipeline"])
    config.out_dir = data.get("out_dir")
    config.llm_spec = data.get("llm_spec")
    config.judge_llm_spec = data.get("judge_llm_spec")
    return config


def _apply_flags(config: AppConfig, graph, backend_kind, mode, max_iters, llm, judge_llm, out_dir):
    if graph:
        config.backend.graph_path = graph
    if backend_kind:
        config.backend.kind = backend_kind
    if mode:
        config.pipeline = PipelineConfig(max_iters=config.pipeline.max_iters, mode=mode)
    if max_iters:
        config.pipeline = PipelineConfig(max_iters=max_iters, mode=config.pipeline.mode)
    if llm:
        config.llm_spec = llm
    if judge_llm:
        config.judge_llm_spec = judge_llm
    if out_dir:
        config.out_dir = out_dir
    return config


def _gateway_factory(spec: Optional[str], llm_config: LlmConfig):
    """Build a per-question gateway factory from an --llm spec.

    `replay:<path>` loads a script file for offline runs; anything else uses
    the online config (an `openai:<url>` spec overrides its endpoint).
    """
    if spec and spec.startswith("replay:"):
        path = spec[len("replay:") :]
        try:
            script = load_replay_script(path)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"cannot load replay script {path}: {exc}")
        return lambda qid: replay_gateway_for(script, qid)
    if spec and spec.startswith("openai:"):
        endpoint = spec[len("openai:") :]
        cfg = LlmConfig(
            endpoint=endpoint,
            model=llm_config.model,
            temperature=llm_config.temperature,
            max_tokens=llm_config.max_tokens,
            timeout=llm_config.timeout,
            retries=llm_config.retries,
            api_key_env=llm_config.api_key_env,
        )
        return lambda qid: OpenAiChatGateway(cfg)
    if spec:
        raise click.ClickException(f"unknown --llm spec {spec!r}; use replay:<path> or openai:<url>")
    return lambda qid: OpenAiChatGateway(llm_config)


def _open_backend_or_fail(config: AppConfig):
    try:
        return open_backend(config.backend)
    except (GraphFormatError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc))


_common_options = [
    click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file."),
    click.option("--graph", type=click.Path(), default=None, help="Graph file for the embedded backend."),
    click.option(
        "--backend", "backend_kind", type=click.Choice(["embedded", "remote"]), default=None,
        help="Backend kind.",
    ),
    click.option("--llm", default=None, help="LLM spec: replay:<script-path> or openai:<endpoint-url>."),
]


def common_options(func):
    for option in reversed(_common_options):
        func = option(func)
    return func


@click.group()
def main() -> None:
    """Ask natural-language questions over a labeled property graph."""


@main.command()
@click.argument("question")
@common_options
@click.option("--mode", type=click.Choice(["agentic", "single"]), default=None, help="Pipeline mode.")
@click.option("--max-iters", type=int, default=None, help="Generation attempt budget (default 4).")
@click.option("--trace", "trace_path", type=click.Path(), default=None, help="Write the run trace JSON here.")
def ask(question, config_path, graph, backend_kind, llm, mode, max_iters, trace_path) -> None:
    """Answer QUESTION over the configured graph."""
    config = _apply_flags(_load_config(config_path), graph, backend_kind, mode, max_iters, llm, None, None)
    backend = _open_backend_or_fail(config)
    gateway = _gateway_factory(config.llm_spec, config.llm)("ask")
    try:
        schema = introspect(backend)
        trace = run_pipeline(question, schema, backend, gateway, config.pipeline)
    except PipelineAborted as exc:
        if trace_path:
            _write_text(trace_path, exc.partial_trace.to_json())
        click.echo(f"pipeline aborted: {exc.cause}", err=True)
        sys.exit(EXIT_INFRA)
    except (TransportError, LlmFormatError, ReplayExhausted) as exc:
        click.echo(f"infrastructure failure: {exc}", err=True)
        sys.exit(EXIT_INFRA)
    if trace_path:
        _write_text(trace_path, trace.to_json())
    click.echo(trace.final_answer)
    click.echo(f"\nFinal Cypher:\n{trace.final_query}")
    sys.exit(EXIT_OK if trace.final_status == "Accepted" else EXIT_EXHAUSTED)


@main.command("eval")
@click.argument("dataset", type=click.Path())
@common_options
@click.option("--mode", type=click.Choice(["agentic", "single"]), default=None, help="Pipeline mode.")
@click.option("--max-iters", type=int, default=None, help="Generation attempt budget (default 4).")
@click.option("--judge-llm", default=None, help="Judge LLM spec (defaults to --llm).")
@click.option("--out-dir", type=click.Path(), default=None, help="Directory for results and traces.")
@click.option("--parallelism", type=int, default=4, help="Concurrent questions (default 4).")
def eval_command(dataset, config_path, graph, backend_kind, llm, mode, max_iters, judge_llm, out_dir, parallelism) -> None:
    """Evaluate the pipeline over a JSON-lines QA DATASET."""
    config = _apply_flags(
        _load_config(config_path), graph, backend_kind, mode, max_iters, llm, judge_llm, out_dir
    )
    backend = _open_backend_or_fail(config)
    gateway_factory = _gateway_factory(config.llm_spec, config.llm)
    judge_spec = config.judge_llm_spec or config.llm_spec
    judge_factory = _gateway_factory(judge_spec, config.judge_llm)
    try:
        schema = introspect(backend)
        reports, _ = run_eval(
            dataset,
            backend,
            schema,
            gateway_factory,
            judge_factory,
            mode=config.pipeline.mode,
            max_iters=config.pipeline.max_iters,
            parallelism=parallelism,
            out_dir=config.out_dir,
        )
    except DatasetFormatError as exc:
        click.echo(f"dataset error: {exc}", err=True)
        sys.exit(EXIT_INFRA)
    except TransportError as exc:
        click.echo(f"infrastructure failure: {exc}", err=True)
        sys.exit(EXIT_INFRA)
    click.echo(format_report_table(reports))
    sys.exit(EXIT_OK)


@main.command()
@common_options
@click.option("--out-nodes", type=click.Path(), default=None, help="Write the node rendering here.")
@click.option("--out-relationships", type=click.Path(), default=None, help="Write the relationship rendering here.")
def schema(config_path, graph, backend_kind, llm, out_nodes, out_relationships) -> None:
    """Print the graph schema in its prompt-ready textual forms."""
    config = _apply_flags(_load_config(config_path), graph, backend_kind, None, None, llm, None, None)
    backend = _open_backend_or_fail(config)
    try:
        graph_schema = introspect(backend)
    except TransportError as exc:
        click.echo(f"infrastructure failure: {exc}", err=True)
        sys.exit(EXIT_INFRA)
    nodes_text = render_nodes(graph_schema)
    rels_text = render_relationships(graph_schema)
    if out_nodes:
        _write_text(out_nodes, nodes_text)
    if out_relationships:
        _write_text(out_relationships, rels_text)
    if not out_nodes and not out_relationships:
        click.echo(nodes_text)
        click.echo(rels_text, nl=False)
    sys.exit(EXIT_OK)


@main.command("verify-query")
@click.argument("query_text")
@common_options
def verify_query(query_text, config_path, graph, backend_kind, llm) -> None:
    """Extract and verify QUERY_TEXT's entities against the graph."""
    config = _apply_flags(_load_config(config_path), graph, backend_kind, None, None, llm, None, None)
    backend = _open_backend_or_fail(config)
    try:
        report = extract_from_text(query_text)
    except ParseError as exc:
        click.echo(f"parse failure: {exc}", err=True)
        sys.exit(EXIT_INFRA)
    gateway = None
    if config.llm_spec:
        gateway = _gateway_factory(config.llm_spec, config.llm)("verify")
    try:
        verification = verify_with_semantics(report, backend, gateway)
    except (TransportError, LlmFormatError, ReplayExhausted) as exc:
        click.echo(f"infrastructure failure: {exc}", err=True)
        sys.exit(EXIT_INFRA)
    click.echo(verification.to_json())
    sys.exit(EXIT_OK)


@main.command("load-check")
@click.argument("graph_file", type=click.Path())
def load_check(graph_file) -> None:
    """Validate a graph file and report its size."""
    try:
        graph = load_graph_json(graph_file)
    except (GraphFormatError, OSError) as exc:
        click.echo(f"invalid graph file: {exc}", err=True)
        sys.exit(EXIT_INFRA)
    click.echo(f"{graph_file}: {len(graph.nodes)} nodes, {len(graph.edges)} edges")
    sys.exit(EXIT_OK)


def _write_text(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


if __name__ == "__main__":
    main()
