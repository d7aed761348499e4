"""Domain types for the evolutionary idea search."""

from __future__ import annotations

from dataclasses import dataclass, field

# Fixed dimension order; doubles as the tie-break order everywhere.
DIMENSIONS = ("novelty", "feasibility", "impact", "specificity")

DEFAULT_WEIGHTS = {
    "novelty": 0.30,
    "feasibility": 0.25,
    "impact": 0.25,
    "specificity": 0.20,
}

LEDGER_CATEGORIES = ("ranking", "improve", "combine", "final")


@dataclass(frozen=True)
class Provenance:
    kind: str                       # seed | improve | combine
    parents: tuple[str, ...] = ()
    dimension: str | None = None    # improve only: the targeted weakness

    def to_dict(self) -> dict:
        return {"kind": self.kind, "parents": list(self.parents), "dimension": self.dimension}


@dataclass
class Idea:
    id: str
    hypothesis: str
    outline: str
    prior_work: str
    provenance: Provenance
    generation: int = 0

    def render(self) -> str:
        """Single-text form used in ranking and parent prompts."""
        return (
            f"Hypothesis: {self.hypothesis}\n"
            f"Experiment outline: {self.outline}\n"
            f"Prior work: {self.prior_work}"
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "hypothesis": self.hypothesis,
            "outline": self.outline,
            "prior_work": self.prior_work,
            "provenance": self.provenance.to_dict(),
            "generation": self.generation,
        }


def make_seed(seed_id: str, hypothesis: str, outline: str = "", prior_work: str = "") -> Idea:
    return Idea(seed_id, hypothesis, outline, prior_work, Provenance("seed"), generation=0)


@dataclass
class SearchConfig:
    seeds: int = 8
    survivors: int = 4
    iterations: int = 3
    budget: int = 60
    n_improve: int = 3
    n_combine: int = 1
    weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))

    def validate(self):
        if self.seeds < 2:
            raise ValueError("need at least 2 seeds")
        if not 1 <= self.survivors < self.seeds:
            raise ValueError("survivors must satisfy 1 <= k < seeds")
        if self.n_improve < 0 or self.n_combine < 0 or self.n_improve + self.n_combine < 1:
            raise ValueError("need at least one child operator enabled")
        if self.budget < 4:
            raise ValueError("budget must cover at least one ranking pass (>= 4)")
        if set(self.weights) != set(DIMENSIONS):
            raise ValueError(f"weights must cover exactly {DIMENSIONS}")
        if abs(sum(self.weights.values()) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")

    def to_dict(self) -> dict:
        return {
            "seeds": self.seeds,
            "survivors": self.survivors,
            "iterations": self.iterations,
            "budget": self.budget,
            "n_improve": self.n_improve,
            "n_combine": self.n_combine,
            "weights": dict(self.weights),
        }


class CallLedger:
    """Monotone per-category call counts."""

    def __init__(self):
        self.counts = {category: 0 for category in LEDGER_CATEGORIES}

    def charge(self, category: str, n: int = 1):
        if category not in self.counts:
            raise ValueError(f"unknown ledger category: {category}")
        if n < 0:
            raise ValueError("ledger charges are non-negative")
        self.counts[category] += n

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        return {"counts": dict(self.counts), "total": self.total}


@dataclass
class GenerationSnapshot:
    index: int | str                # 0..T, or "final" for the calibrated pass
    population: list[str]
    scores: dict[str, dict[str, float]]
    composite: dict[str, float]
    pinned: str

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "population": list(self.population),
            "scores": {i: dict(s) for i, s in self.scores.items()},
            "composite": dict(self.composite),
            "pinned": self.pinned,
        }


@dataclass
class SearchRecord:
    """Full provenance of one search run; serializes as eis.v1."""

    rng_seed: int
    config: SearchConfig
    ideas: dict[str, Idea] = field(default_factory=dict)
    generations: list[GenerationSnapshot] = field(default_factory=list)
    best_id: str | None = None
    ledger: CallLedger = field(default_factory=CallLedger)

    def register(self, idea: Idea):
        self.ideas[idea.id] = idea

    def snapshot(self, index, population, scores, composite, pinned):
        self.generations.append(GenerationSnapshot(
            index=index,
            population=[i.id for i in population],
            scores={i.id: dict(scores[i.id]) for i in population},
            composite={i.id: composite[i.id] for i in population},
            pinned=pinned,
        ))

    def to_document(self) -> dict:
        return {
            "version": "eis.v1",
            "rng_seed": self.rng_seed,
            "config": self.config.to_dict(),
            "ideas": {i: idea.to_dict() for i, idea in self.ideas.items()},
            "generations": [g.to_dict() for g in self.generations],
            "best": self.best_id,
            "ledger": self.ledger.to_dict(),
        }
