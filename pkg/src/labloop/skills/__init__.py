from .registry import Skill, SkillRegistry, parse_skill_file, scan_skills
from .view import AgentView, ContextFootprint, footprint, materialize, trigger_skills, view_for_agent

__all__ = [
    "Skill",
    "SkillRegistry",
    "parse_skill_file",
    "scan_skills",
    "AgentView",
    "ContextFootprint",
    "footprint",
    "materialize",
    "trigger_skills",
    "view_for_agent",
]
