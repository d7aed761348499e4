"""Evolutionary idea search.

One run: rank the seed pool, pin the best seed, then iterate
select-improve-combine-rerank under a call budget, and finish with one
calibrated ranking pass over the final population so every surviving
candidate is scored in the same batch context.

Call accounting: one ledger entry per ranking dimension per batch (4), one
per improve child, one per combine child.  The final calibrated pass is
budget-exempt; the loop itself never exceeds the budget because an
iteration only starts if its full cost still fits.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass

from ..errors import GatewayError, SearchError
from ..gateway import Gateway, RankRequest
from ..gateway import prompts
from .scoring import composite, rank_to_scores, weakest_dimension
from .types import DIMENSIONS, CallLedger, Idea, Provenance, SearchConfig, SearchRecord

log = logging.getLogger(__name__)

ScoreTable = dict[str, dict[str, float]]


def batch_rank(ideas: list[Idea], gateway: Gateway, weights: dict[str, float],
               ledger: CallLedger, category: str = "ranking"
               ) -> tuple[ScoreTable, dict[str, float]]:
    """Rank the whole population once per dimension and recompute composites.

    Issues exactly one ranking request per dimension (dispatched in parallel
    when the gateway allows it); each reply must be a no-ties permutation.
    """
    if not ideas:
        raise SearchError("cannot rank an empty population")
    texts = tuple(idea.render() for idea in ideas)
    requests = [RankRequest(d, prompts.rank_instruction(d), texts) for d in DIMENSIONS]
    ledger.charge(category, len(requests))
    try:
        permutations = gateway.rank_many(requests, kinds=[f"{category}:{d}" for d in DIMENSIONS])
    except GatewayError as exc:
        raise SearchError(f"ranking failed on {category}: {exc}") from exc

    scores: ScoreTable = {idea.id: {} for idea in ideas}
    for dimension, permutation in zip(DIMENSIONS, permutations):
        ranks = permutation.ranks()
        dim_scores = rank_to_scores([ranks[i] for i in range(1, len(ideas) + 1)])
        for idea, score in zip(ideas, dim_scores):
            scores[idea.id][dimension] = score
    composites = {idea.id: composite(scores[idea.id], weights) for idea in ideas}
    return scores, composites


def _order_key(scores: ScoreTable, composites: dict[str, float]):
    """Best-first sort key: composite, then per-dimension scores, then id."""
    def key(idea: Idea):
        per_dim = tuple(-scores[idea.id][d] for d in DIMENSIONS)
        return (-composites[idea.id],) + per_dim + (idea.id,)
    return key


def select_survivors(ideas: list[Idea], scores: ScoreTable, composites: dict[str, float],
                     k: int, pinned_id: str) -> list[Idea]:
    """Top-k by composite plus the pinned seed, best first.

    Size is k when the pin already made the cut, k+1 otherwise.
    """
    ordered = sorted(ideas, key=_order_key(scores, composites))
    survivors = ordered[:k]
    if all(idea.id != pinned_id for idea in survivors):
        pinned = next(idea for idea in ideas if idea.id == pinned_id)
        survivors = sorted(survivors + [pinned], key=_order_key(scores, composites))
    return survivors


_MARKERS = (
    ("hypothesis", re.compile(r"hypothesis\s*:", re.IGNORECASE)),
    ("outline", re.compile(r"experiment outline\s*:", re.IGNORECASE)),
    ("prior", re.compile(r"prior work\s*:", re.IGNORECASE)),
)


def parse_idea_text(reply: str) -> tuple[str, str, str]:
    """Split a generated idea into its three sections, tolerantly.

    Replies without recognizable sections land whole in the hypothesis.
    """
    text = reply.strip()
    hits = []
    for name, pattern in _MARKERS:
        match = pattern.search(text)
        if match:
            hits.append((match.start(), match.end(), name))
    if not any(name == "hypothesis" for _, _, name in hits):
        return text, "", ""
    hits.sort()
    sections = {"hypothesis": "", "outline": "", "prior": ""}
    for i, (start, end, name) in enumerate(hits):
        stop = hits[i + 1][0] if i + 1 < len(hits) else len(text)
        sections[name] = text[end:stop].strip()
    return sections["hypothesis"], sections["outline"], sections["prior"]


def improve_children(survivors: list[Idea], scores: ScoreTable, n_improve: int,
                     gateway: Gateway, ledger: CallLedger, id_factory,
                     generation: int) -> list[Idea]:
    """Children that rewrite a parent along its weakest dimension.

    Parents rotate round-robin over the survivors (already best-first).
    """
    children: list[Idea] = []
    for j in range(n_improve):
        parent = survivors[j % len(survivors)]
        dimension = weakest_dimension(scores[parent.id])
        ledger.charge("improve")
        try:
            reply = gateway.generate(
                prompts.improve_instruction(dimension),
                context=[("user", f"Current idea:\n{parent.render()}")],
                kind=f"improve:{dimension}",
            )
        except GatewayError as exc:
            log.warning("improve child skipped (parent %s): %s", parent.id, exc)
            continue
        hypothesis, outline, prior = parse_idea_text(reply)
        children.append(Idea(
            id=id_factory(),
            hypothesis=hypothesis,
            outline=outline or parent.outline,
            prior_work=prior or parent.prior_work,
            provenance=Provenance("improve", (parent.id,), dimension),
            generation=generation,
        ))
    return children


def sample_parent_pairs(survivors: list[Idea], n_combine: int, rng: random.Random
                        ) -> list[tuple[Idea, Idea]]:
    """Rank-proportional parent pairs: weight m+1-rank, parents distinct."""
    m = len(survivors)
    if m < 2:
        if n_combine > 0:
            log.warning("combine disabled: fewer than 2 survivors")
        return []
    weights = [m + 1 - rank for rank in range(1, m + 1)]
    pairs = []
    for _ in range(n_combine):
        first = rng.choices(range(m), weights=weights)[0]
        rest = [i for i in range(m) if i != first]
        second = rng.choices(rest, weights=[weights[i] for i in rest])[0]
        pairs.append((survivors[first], survivors[second]))
    return pairs


def combine_children(pairs: list[tuple[Idea, Idea]], gateway: Gateway,
                     ledger: CallLedger, id_factory, generation: int) -> list[Idea]:
    children: list[Idea] = []
    for left, right in pairs:
        ledger.charge("combine")
        try:
            reply = gateway.generate(
                prompts.combine_instruction(),
                context=[
                    ("user", f"Parent A:\n{left.render()}"),
                    ("user", f"Parent B:\n{right.render()}"),
                ],
                kind="combine",
            )
        except GatewayError as exc:
            log.warning("combine child skipped (%s x %s): %s", left.id, right.id, exc)
            continue
        hypothesis, outline, prior = parse_idea_text(reply)
        children.append(Idea(
            id=id_factory(),
            hypothesis=hypothesis,
            outline=outline,
            prior_work=prior,
            provenance=Provenance("combine", (left.id, right.id)),
            generation=generation,
        ))
    return children


@dataclass
class EisResult:
    best: Idea
    population: list[Idea]
    scores: ScoreTable
    composites: dict[str, float]
    record: SearchRecord
    ledger: CallLedger


def run_eis(seeds: list[Idea], config: SearchConfig, gateway: Gateway,
            rng_seed: int = 0) -> EisResult:
    config.validate()
    if len(seeds) != config.seeds:
        raise SearchError(f"expected {config.seeds} seeds, got {len(seeds)}")
    rng = random.Random(rng_seed)
    record = SearchRecord(rng_seed=rng_seed, config=config)
    ledger = record.ledger
    for seed in seeds:
        record.register(seed)

    counter = 0

    def new_id() -> str:
        nonlocal counter
        counter += 1
        return f"idea-{counter:04d}"

    population = list(seeds)
    try:
        scores, composites = batch_rank(population, gateway, config.weights, ledger)
        pinned_id = min(seeds, key=_order_key(scores, composites)).id
        record.snapshot(0, population, scores, composites, pinned_id)

        iteration_cost = config.n_improve + config.n_combine + len(DIMENSIONS)
        for t in range(1, config.iterations + 1):
            # Start an iteration only if its full cost still fits the budget;
            # the final calibrated pass is exempt by design.
            if ledger.total + iteration_cost > config.budget:
                break
            survivors = select_survivors(population, scores, composites,
                                         config.survivors, pinned_id)
            improved = improve_children(survivors, scores, config.n_improve,
                                        gateway, ledger, new_id, t)
            pairs = sample_parent_pairs(survivors, config.n_combine, rng)
            combined = combine_children(pairs, gateway, ledger, new_id, t)
            for child in improved + combined:
                record.register(child)
            population = survivors + improved + combined
            scores, composites = batch_rank(population, gateway, config.weights, ledger)
            record.snapshot(t, population, scores, composites, pinned_id)
            if ledger.total > config.budget:
                break

        scores, composites = batch_rank(population, gateway, config.weights,
                                        ledger, category="final")
        record.snapshot("final", population, scores, composites, pinned_id)
    except SearchError as exc:
        raise SearchError(str(exc), record=record) from exc

    best = min(population, key=_order_key(scores, composites))
    record.best_id = best.id
    return EisResult(best, population, scores, composites, record, ledger)
