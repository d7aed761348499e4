"""Skill files and the auto-scanned registry.

A skill file is front-matter between two `---` lines followed by the body:

    ---
    name: spectral-plots
    desc: recipes for plotting spectra with sensible axes
    agents: experiment, data
    preload: experiment
    keywords: plot, spectra
    ---
    1. Load the cube ...

Skills are prompt recipes, not executable code.  Invalid files are skipped
with a diagnostic; a duplicate name across files is a hard error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DuplicateSkillError, SkillError

FRONT_MATTER_DELIMITER = "---"
REQUIRED_KEYS = ("name", "desc", "agents")


@dataclass(frozen=True)
class Skill:
    name: str
    desc: str
    agents: frozenset[str]
    preload: frozenset[str]
    body: str
    keywords: tuple[str, ...]
    source: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "desc": self.desc,
            "agents": sorted(self.agents),
            "preload": sorted(self.preload),
            "keywords": list(self.keywords),
            "source": self.source,
        }


def _split_front_matter(text: str) -> tuple[dict[str, str], str]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != FRONT_MATTER_DELIMITER:
        raise SkillError("missing front-matter opening delimiter")
    header: dict[str, str] = {}
    for index, line in enumerate(lines[1:], start=1):
        if line.strip() == FRONT_MATTER_DELIMITER:
            body = "\n".join(lines[index + 1:]).strip()
            return header, body
        if not line.strip():
            continue
        if ":" not in line:
            raise SkillError(f"malformed header line: {line!r}")
        key, _, value = line.partition(":")
        header[key.strip().lower()] = value.strip()
    raise SkillError("missing front-matter closing delimiter")


def _csv_set(raw: str) -> frozenset[str]:
    return frozenset(part.strip() for part in raw.split(",") if part.strip())


def parse_skill_file(path: Path | str) -> Skill:
    path = Path(path)
    header, body = _split_front_matter(path.read_text(encoding="utf-8"))
    for key in REQUIRED_KEYS:
        if not header.get(key):
            raise SkillError(f"missing required header field: {key}")
    agents = _csv_set(header["agents"])
    preload = _csv_set(header.get("preload", ""))
    if not agents:
        raise SkillError("agents list is empty")
    if not preload <= agents:
        raise SkillError(
            f"preload roles not a subset of agent roles: {sorted(preload - agents)}")
    keywords = tuple(part.strip().casefold()
                     for part in header.get("keywords", "").split(",") if part.strip())
    return Skill(
        name=header["name"],
        desc=header["desc"],
        agents=agents,
        preload=preload,
        body=body,
        keywords=keywords,
        source=str(path),
    )


@dataclass
class SkillRegistry:
    skills: dict[str, Skill] = field(default_factory=dict)   # insertion = scan order
    diagnostics: list[tuple[str, str]] = field(default_factory=list)

    def __contains__(self, name: str) -> bool:
        return name in self.skills

    def __len__(self) -> int:
        return len(self.skills)

    def in_order(self) -> list[Skill]:
        return list(self.skills.values())


SKILL_SUFFIXES = (".md", ".skill", ".txt")


def scan_skills(folders) -> SkillRegistry:
    """Scan folders (recursively, sorted paths) into a registry.

    Rescanning unchanged folders yields an equal registry.
    """
    registry = SkillRegistry()
    for folder in folders:
        folder = Path(folder)
        if not folder.is_dir():
            registry.diagnostics.append((str(folder), "not a directory"))
            continue
        for path in sorted(p for p in folder.rglob("*") if p.is_file()):
            if path.suffix.lower() not in SKILL_SUFFIXES:
                continue
            try:
                skill = parse_skill_file(path)
            except SkillError as exc:
                registry.diagnostics.append((str(path), str(exc)))
                continue
            if skill.name in registry.skills:
                other = registry.skills[skill.name].source
                raise DuplicateSkillError(
                    f"skill '{skill.name}' defined in both {other} and {path}")
            registry.skills[skill.name] = skill
    return registry
