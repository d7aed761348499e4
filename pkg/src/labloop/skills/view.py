"""Role-restricted skill views, lazy materialization, token footprint.

An agent only ever sees the skills whose agent set includes its role.  The
catalogue (short descriptors) is always in context; bodies cost tokens only
once invoked, so adding skills is nearly free until they activate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import SkillAccessError
from ..tokens import TokenCounter, whitespace_tokens
from .registry import Skill, SkillRegistry

_WORD = re.compile(r"\w+")


@dataclass
class AgentView:
    agent: str
    skills: list[Skill]                      # registry order
    invoked: set[str] = field(default_factory=set)

    def __contains__(self, name: str) -> bool:
        return any(s.name == name for s in self.skills)

    def get(self, name: str) -> Skill:
        for skill in self.skills:
            if skill.name == name:
                return skill
        raise SkillAccessError(f"skill '{name}' not visible to agent '{self.agent}'")


def view_for_agent(registry: SkillRegistry, agent: str) -> AgentView:
    """Exactly the skills permitting this role; preloads count as invoked."""
    visible = [s for s in registry.in_order() if agent in s.agents]
    preloaded = {s.name for s in visible if agent in s.preload}
    return AgentView(agent=agent, skills=visible, invoked=preloaded)


def _tokenize(text: str) -> list[str]:
    return _WORD.findall(text.casefold())


def _contains_sequence(haystack: list[str], needle: list[str]) -> bool:
    if not needle or len(needle) > len(haystack):
        return False
    return any(haystack[i:i + len(needle)] == needle
               for i in range(len(haystack) - len(needle) + 1))


def trigger_skills(query: str, view: AgentView) -> list[str]:
    """Case-folded whole-word keyword match, in registry order."""
    query_tokens = _tokenize(query)
    matched = []
    for skill in view.skills:
        for keyword in skill.keywords:
            if _contains_sequence(query_tokens, _tokenize(keyword)):
                matched.append(skill.name)
                break
    return matched


def materialize(view: AgentView, name: str) -> str:
    """Return the body and mark the skill invoked; idempotent for footprint."""
    skill = view.get(name)
    view.invoked.add(skill.name)
    return skill.body


@dataclass(frozen=True)
class ContextFootprint:
    agent: str
    catalogue: int
    invoked: tuple[str, ...]
    materialized: int

    @property
    def total(self) -> int:
        return self.catalogue + self.materialized


def footprint(view: AgentView, counter: TokenCounter = whitespace_tokens) -> ContextFootprint:
    """Catalogue descriptor tokens plus materialized body tokens."""
    catalogue = sum(counter(s.desc) for s in view.skills)
    materialized = sum(counter(s.body) for s in view.skills if s.name in view.invoked)
    return ContextFootprint(
        agent=view.agent,
        catalogue=catalogue,
        invoked=tuple(sorted(view.invoked)),
        materialized=materialized,
    )
