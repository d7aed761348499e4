"""Shipped prompt texts for every model-backed step.

These are deliberately plain and replaceable; nothing downstream depends on
their wording, only on the reply formats they demand.
"""

from __future__ import annotations

DIMENSION_QUESTIONS = {
    "novelty": "How original is this idea relative to what a well-read reviewer already knows?",
    "feasibility": "How realistically could a small team execute this idea with the described data?",
    "impact": "If the idea worked, how much would the field care?",
    "specificity": "How concrete and testable are the hypothesis and the experiment outline?",
}


def rank_instruction(dimension: str) -> str:
    question = DIMENSION_QUESTIONS.get(dimension, f"Judge the candidates on {dimension}.")
    return f"Evaluation dimension: {dimension}. {question}"


def improve_instruction(dimension: str) -> str:
    return (
        f"Rewrite the following research idea to strengthen its {dimension}. "
        "Keep whatever already works. Reply with three sections labelled "
        "'Hypothesis:', 'Experiment outline:' and 'Prior work:'."
    )


def combine_instruction() -> str:
    return (
        "Synthesise one new research idea that inherits the strongest elements "
        "of both parent ideas below. Reply with three sections labelled "
        "'Hypothesis:', 'Experiment outline:' and 'Prior work:'."
    )


def seed_instruction(index: int, query: str, corpus_note: str = "") -> str:
    extra = f"\nBackground notes:\n{corpus_note}" if corpus_note else ""
    return (
        f"Propose research idea #{index} for the query below. Reply with three "
        "sections labelled 'Hypothesis:', 'Experiment outline:' and 'Prior work:'."
        f"\n\nQuery: {query}{extra}"
    )


def semantics_instruction(query: str, idea: str, field_lines: list[str]) -> str:
    listing = "\n".join(field_lines)
    return (
        "Assign each data field below one role from: target, time-index, "
        "covariate, identifier, other. Reply with one line per field formatted "
        "'<field>: <role>' or '<field>: <role>, <confidence 0..1>'.\n\n"
        f"Research query: {query}\n"
        f"Current idea: {idea}\n\n"
        f"Fields:\n{listing}"
    )


def critique_instruction(axis: str, summary: str) -> str:
    goals = {
        "accuracy": "Find statements unsupported by the artifacts: misinformation, hallucinated results, wrong numbers.",
        "completeness": "Find technical or informational gaps: missing steps, unaddressed data issues, untested claims.",
        "neutrality": "Find biased framing: overclaiming, cherry-picking, loaded language.",
    }
    return (
        f"You are a critic reviewing research artifacts for {axis}. "
        f"{goals.get(axis, '')}\n"
        "Reply with exactly two fields:\n"
        "confidence: <number between 0 and 1, how confident you are the artifacts are sound on this axis>\n"
        "patch: <one concrete revision instruction, or 'none'>\n\n"
        f"Artifacts:\n{summary}"
    )


def approval_instruction(feedback_summary: str, workspace_summary: str) -> str:
    return (
        "You are the approval checker. Verify the critic's claims against the "
        "workspace evidence below, then commit a verdict. Reply with:\n"
        "verdict: PASS or REVISE\n"
        "reason: <one sentence grounded in the evidence>\n\n"
        f"Critic feedback:\n{feedback_summary}\n\n"
        f"Workspace evidence:\n{workspace_summary}"
    )


def scaffold_instruction(idea: str, report_summary: str, entry_command: str) -> str:
    return (
        "Write the initial experiment codebase for the idea below. The code "
        "must run via the entry command, read data only from the DATA_DIR "
        "environment variable, print progress lines like 'epoch k/N loss: x', "
        "and exit 0 on success. Reply with a JSON object "
        '{"hunks": [{"path": ..., "op": "create", "content": ...}]} and nothing else.\n\n'
        f"Entry command: {entry_command}\n"
        f"Idea:\n{idea}\n\n"
        f"Data report summary:\n{report_summary}"
    )


def reflect_instruction(diagnostics: str, log_tail: str) -> str:
    return (
        "The static guard rejected the current codebase. Produce the next "
        "patch as a JSON object {\"hunks\": [...]} where each hunk is "
        '{"path", "op": "create"|"replace-range"|"delete", and for replace-range '
        '"start_line"/"end_line" (1-based, inclusive) plus "content"}. '
        "Reply with the JSON only.\n\n"
        f"Guard diagnostics:\n{diagnostics}\n\n"
        f"Recent log:\n{log_tail}"
    )
