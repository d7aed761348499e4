"""Command-line client for the pipeline.

Every subcommand is a thin wrapper over the library; `serve` exposes the
same store over HTTP for the approval UI.  `--format json` makes every
command emit machine-readable output on stdout.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .errors import LabloopError
from .gateway import prompts
from .ideas.search import parse_idea_text, run_eis
from .ideas.types import make_seed
from .pipeline.config import PipelineConfig, render_command
from .pipeline.run import build_gateway, derived_run_id, run_pipeline
from .pipeline.store import RunStore, write_json
from .pipeline.trajectory import export_trajectory, messages_from_transcript, trajectory_document
from .probe.cache import ProbeCache
from .probe.formats import builtin_registry
from .probe.runner import probe_document, probe_tree
from .probe.tree import scan_tree
from .report.builder import DataReport, ReportOptions, build_report
from .skills.registry import scan_skills
from .skills.view import footprint, view_for_agent


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except LabloopError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
    return wrapper


def load_config(config_path: str | None, mock: bool, seed: int | None = None) -> PipelineConfig:
    if config_path:
        config = PipelineConfig.from_file(config_path)
    elif mock:
        config = PipelineConfig.mock()
    else:
        config = PipelineConfig()
    if mock:
        config.provider.kind = "mock"
        config.report.use_judge = False
    if seed is not None:
        config.seed = seed
    config.validate()
    return config


def emit(ctx, doc: dict, text: str):
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(doc, sort_keys=True, indent=1))
    else:
        click.echo(text)


@click.group()
@click.option("--format", "output_format", type=click.Choice(["text", "json"]),
              default="text", help="Output format for command results.")
@click.pass_context
def main(ctx, output_format):
    """Closed-loop research pipeline: probe data, search ideas, run experiments."""
    ctx.ensure_object(dict)
    ctx.obj["format"] = output_format


@main.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(), help="Write the probe document to a file.")
@click.option("--formats", help="Comma-separated format ids to restrict probing to.")
@click.pass_context
@handle_errors
def probe(ctx, root, out, formats):
    """Scan and probe a dataset tree; emit per-leaf schemas and fingerprints."""
    registry = builtin_registry()
    if formats:
        registry = registry.restricted([f.strip() for f in formats.split(",")])
    root = Path(root)
    tree = scan_tree(root, registry)
    cache = ProbeCache(root / ".probe-cache")
    run = probe_tree(tree, cache=cache)
    doc = probe_document(tree, run)
    if out:
        write_json(Path(out), doc)
    lines = [f"{leaf}: {info['format']}"
             + (f" ({info['failure']})" if info["failure"] else
                f" rows={info['schema']['row_count']}" if info["schema"] else "")
             for leaf, info in doc["leaves"].items()]
    lines.append(f"cache: {doc['cache']['hits']} hits, {doc['cache']['misses']} misses")
    emit(ctx, doc, "\n".join(lines))


@main.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--query", required=True, help="Research query conditioning role binding.")
@click.option("--idea", "idea_file", type=click.Path(exists=True, dir_okay=False),
              help="File with the current idea text.")
@click.option("--no-judge", is_flag=True, help="Heuristic role binding only.")
@click.option("--mock", is_flag=True, help="Use the deterministic mock provider.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(), help="Write report.v1 to a file.")
@click.pass_context
@handle_errors
def report(ctx, root, query, idea_file, no_judge, mock, config_path, out):
    """Build the four-part data report for a dataset."""
    config = load_config(config_path, mock)
    root = Path(root)
    tree = scan_tree(root)
    run = probe_tree(tree, cache=ProbeCache(root / ".probe-cache"))
    idea = Path(idea_file).read_text() if idea_file else ""
    use_judge = config.report.use_judge and not no_judge
    gateway = build_gateway(config) if use_judge else None
    options = ReportOptions(
        outlier_threshold=config.report.outlier_threshold,
        overlap_threshold=config.report.overlap_threshold,
        use_judge=use_judge,
    )
    data_report = build_report(run, query, idea, gateway=gateway, options=options)
    doc = data_report.to_document()
    if out:
        write_json(Path(out), doc)
    roles = {binding.field_id: binding.role for binding in data_report.semantics}
    text = "\n".join([
        f"structure: {len(data_report.structure)} leaves "
        f"({len(data_report.unparsable)} unparsable)",
        f"quality: {len(data_report.quality)} fields",
        "roles: " + ", ".join(f"{k}={v}" for k, v in roles.items()),
        f"dependency edges: {len(data_report.dependency.edges)}",
    ])
    emit(ctx, doc, text)


@main.command()
@click.option("--query", required=True)
@click.option("--seeds", type=int, help="Seed pool size (overrides config).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mock", is_flag=True)
@click.option("--seed", "rng_seed", type=int, default=0, help="Search RNG seed.")
@click.option("--out", type=click.Path(), help="Write the eis.v1 record to a file.")
@click.pass_context
@handle_errors
def ideate(ctx, query, seeds, config_path, mock, rng_seed, out):
    """Run the evolutionary idea search and print the winning idea."""
    config = load_config(config_path, mock)
    if seeds:
        config.eis.seeds = seeds
        config.eis.survivors = min(config.eis.survivors, max(1, seeds - 1))
        config.eis.validate()
    gateway = build_gateway(config)
    pool = []
    for i in range(1, config.eis.seeds + 1):
        reply = gateway.generate(prompts.seed_instruction(i, query), kind=f"seed:{i}")
        hypothesis, outline, prior = parse_idea_text(reply)
        pool.append(make_seed(f"seed-{i}", hypothesis, outline, prior))
    result = run_eis(pool, config.eis, gateway, rng_seed=rng_seed)
    doc = result.record.to_document()
    if out:
        write_json(Path(out), doc)
    text = (f"best idea: {result.best.id} "
            f"(composite {result.composites[result.best.id]:.4f}, "
            f"calls {result.ledger.total})\n{result.best.render()}")
    emit(ctx, doc, text)


@main.command()
@click.option("--data", "data_root", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--idea", "idea_file", type=click.Path(exists=True, dir_okay=False),
              help="File with the idea text guiding the codebase.")
@click.option("--workdir", required=True, type=click.Path(),
              help="Workspace directory (created if missing).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mock", is_flag=True)
@click.pass_context
@handle_errors
def experiment(ctx, data_root, idea_file, workdir, config_path, mock):
    """Run the coding loop and execution phase in a standalone workspace."""
    from .experiment.executor import execute
    from .experiment.loop import coding_loop, scaffold_codebase
    from .experiment.outcome import StructuredFailure
    from .experiment.workspace import Workspace

    config = load_config(config_path, mock)
    gateway = build_gateway(config)
    workspace = Workspace.create(Path(workdir), data_source=Path(data_root))
    idea = Path(idea_file).read_text() if idea_file else "baseline experiment"
    entry = render_command(config.experiment.entry_command)
    guard = render_command(config.experiment.guard_command)
    if not any(workspace.code_dir.iterdir()):
        scaffold_codebase(workspace, gateway, idea, "", entry)
    commit = coding_loop(workspace, gateway, guard, k_max=config.experiment.k_max)
    if isinstance(commit, StructuredFailure):
        emit(ctx, commit.to_dict(), f"coding failed: {commit.reason}")
        sys.exit(1)
    outcome = execute(workspace, entry,
                      sample_period=config.experiment.sample_period,
                      wall_limit=config.experiment.wall_limit)
    doc = outcome.to_dict()
    if isinstance(outcome, StructuredFailure):
        emit(ctx, doc, f"execution failed: {outcome.reason}")
        sys.exit(1)
    loss = outcome.final_signal.loss if outcome.final_signal else None
    emit(ctx, doc, f"exit {outcome.exit_status}, final loss {loss}, "
                   f"artifacts: {', '.join(outcome.artifacts) or 'none'}")


@main.command()
@click.option("--query", help="Research query (required unless resuming).")
@click.option("--data", "data_root", type=click.Path(file_okay=False),
              help="Dataset root (required unless resuming).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mock", is_flag=True, help="Deterministic offline providers.")
@click.option("--runs-dir", default="runs", type=click.Path(file_okay=False),
              help="Run store directory.")
@click.option("--run-id", help="Explicit run id (default derives from inputs).")
@click.option("--resume", "resume_id", help="Resume a parked or crashed run by id.")
@click.option("--seed", type=int, help="Pipeline seed (overrides config).")
@click.pass_context
@handle_errors
def run(ctx, query, data_root, config_path, mock, runs_dir, run_id, resume_id, seed):
    """Execute the full closed-loop pipeline for one dataset and query."""
    store = RunStore(runs_dir)
    if resume_id:
        record = run_pipeline(None, None, None, store, run_id=resume_id, resume=True)
    else:
        if not query or not data_root:
            raise click.UsageError("--query and --data are required (or use --resume)")
        config = load_config(config_path, mock, seed)
        record = run_pipeline(Path(data_root), query, config, store, run_id=run_id)
    doc = record.to_dict()
    emit(ctx, doc, f"run {record.run_id}: {record.status}"
         + (f" ({record.error})" if record.error else ""))
    if record.status == "failed":
        sys.exit(1)


@main.command()
@click.option("--runs-dir", default="runs", type=click.Path(file_okay=False))
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8085, type=int)
@click.option("--frontend", "frontend_dir", type=click.Path(file_okay=False),
              help="Directory with the built approval UI (served at /ui).")
@handle_errors
def serve(runs_dir, host, port, frontend_dir):
    """Serve the approval API (and UI, if built) over HTTP."""
    from .service.app import serve as serve_app
    default_frontend = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if frontend_dir is None and default_frontend.is_dir():
        frontend_dir = default_frontend
    serve_app(runs_dir, host=host, port=port, frontend_dir=frontend_dir)


@main.group()
def skills():
    """Inspect skill folders."""


@skills.command("list")
@click.option("--agent", help="Restrict to one agent role's view.")
@click.option("--folder", "folders", multiple=True,
              type=click.Path(exists=True, file_okay=False),
              help="Skill folder(s); defaults to the config's skill_folders.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@handle_errors
def skills_list(ctx, agent, folders, config_path):
    """List skills scanned from folders, optionally as one agent sees them."""
    folder_list = list(folders)
    if not folder_list and config_path:
        folder_list = PipelineConfig.from_file(config_path).skill_folders
    if not folder_list:
        raise click.UsageError("no skill folders: pass --folder or --config")
    registry = scan_skills(folder_list)
    if agent:
        view = view_for_agent(registry, agent)
        visible = view.skills
        fp = footprint(view)
        doc = {"agent": agent, "skills": [s.to_dict() for s in visible],
               "catalogue_tokens": fp.catalogue}
        text = "\n".join(f"{s.name}: {s.desc}" for s in visible) or "(none)"
        text += f"\ncatalogue tokens: {fp.catalogue}"
    else:
        doc = {"skills": [s.to_dict() for s in registry.in_order()],
               "diagnostics": [list(d) for d in registry.diagnostics]}
        text = "\n".join(f"{s.name} [{', '.join(sorted(s.agents))}]: {s.desc}"
                         for s in registry.in_order()) or "(none)"
    emit(ctx, doc, text)


@skills.command("check")
@click.argument("folder", type=click.Path(exists=True, file_okay=False))
@click.pass_context
@handle_errors
def skills_check(ctx, folder):
    """Validate every skill file in a folder; nonzero exit on problems."""
    registry = scan_skills([folder])
    doc = {"valid": len(registry), "diagnostics": [list(d) for d in registry.diagnostics]}
    text = f"{len(registry)} valid skills"
    if registry.diagnostics:
        text += "\n" + "\n".join(f"{path}: {reason}" for path, reason in registry.diagnostics)
    emit(ctx, doc, text)
    if registry.diagnostics:
        sys.exit(1)


@main.command("export-trajectory")
@click.argument("run_id")
@click.option("--runs-dir", default="runs", type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(), help="Output directory (default: run dir).")
@click.pass_context
@handle_errors
def export_trajectory_cmd(ctx, run_id, runs_dir, out):
    """Export a run's transcript as merged, capped, segmented trajectory files."""
    store = RunStore(runs_dir)
    store.load_record(run_id)
    transcript = store.read_artifact(run_id, "transcript.v1.json")
    messages = messages_from_transcript(transcript)
    segments, dropped = export_trajectory(messages)
    out_dir = Path(out) if out else store.run_dir(run_id) / "trajectory"
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = trajectory_document(segments, dropped)
    write_json(out_dir / "index.json", {
        "version": "trajectory.v1",
        "segments": len(segments),
        "dropped_blocks": dropped,
        "tokens": [s.total for s in segments],
    })
    for i, segment in enumerate(segments):
        write_json(out_dir / f"segment-{i:04d}.json", segment.to_dict())
    emit(ctx, doc, f"{len(segments)} segments, {dropped} dropped blocks -> {out_dir}")


if __name__ == "__main__":
    main()
