"""Pipeline configuration: one versioned, human-editable YAML document.

Secrets never live in the file; the provider block names an env var and the
token is read from the environment at construction time.  Commands may use
the "{python}" placeholder, replaced with the running interpreter.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..errors import ConfigError
from ..ideas.types import SearchConfig

CONFIG_VERSION = 1

DEFAULT_GUARD = "{python} -m compileall -q ."
DEFAULT_ENTRY = "{python} main.py"


def render_command(command: str) -> str:
    return command.replace("{python}", sys.executable)


@dataclass
class ProviderBlock:
    kind: str = "mock"                # mock | http
    endpoint: str = ""
    model: str = ""
    auth_env: str = ""
    timeout: float = 60.0
    retries: int = 2
    concurrency: int = 4

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "endpoint": self.endpoint, "model": self.model,
            "auth_env": self.auth_env, "timeout": self.timeout,
            "retries": self.retries, "concurrency": self.concurrency,
        }


@dataclass
class ReportBlock:
    outlier_threshold: float = 3.5
    overlap_threshold: float = 0.8
    use_judge: bool = True

    def to_dict(self) -> dict:
        return {"outlier_threshold": self.outlier_threshold,
                "overlap_threshold": self.overlap_threshold,
                "use_judge": self.use_judge}


@dataclass
class ExperimentBlock:
    guard_command: str = DEFAULT_GUARD
    entry_command: str = DEFAULT_ENTRY
    k_max: int = 5
    sample_period: float = 10.0
    wall_limit: float = 1800.0

    def to_dict(self) -> dict:
        return {"guard_command": self.guard_command, "entry_command": self.entry_command,
                "k_max": self.k_max, "sample_period": self.sample_period,
                "wall_limit": self.wall_limit}


@dataclass
class CriticBlock:
    n_max: int = 2
    pass_threshold: float = 0.5
    approval_mode: str = "headless"   # headless | interactive
    approval_wait: float = 0.0        # seconds to poll before parking/fallback
    fallback_headless: bool = False

    def to_dict(self) -> dict:
        return {"n_max": self.n_max, "pass_threshold": self.pass_threshold,
                "approval_mode": self.approval_mode,
                "approval_wait": self.approval_wait,
                "fallback_headless": self.fallback_headless}


@dataclass
class PipelineConfig:
    provider: ProviderBlock = field(default_factory=ProviderBlock)
    eis: SearchConfig = field(default_factory=SearchConfig)
    report: ReportBlock = field(default_factory=ReportBlock)
    experiment: ExperimentBlock = field(default_factory=ExperimentBlock)
    critic: CriticBlock = field(default_factory=CriticBlock)
    skill_folders: list[str] = field(default_factory=list)
    seed: int = 0

    def validate(self):
        problems = []
        if self.provider.kind not in ("mock", "http"):
            problems.append(f"provider.kind must be mock or http, got {self.provider.kind!r}")
        if self.provider.kind == "http" and not self.provider.endpoint:
            problems.append("provider.endpoint required for http provider")
        if self.provider.timeout <= 0:
            problems.append("provider.timeout must be positive")
        if self.provider.concurrency < 1:
            problems.append("provider.concurrency must be >= 1")
        try:
            self.eis.validate()
        except ValueError as exc:
            problems.append(f"eis: {exc}")
        if not 0 <= self.report.overlap_threshold <= 1:
            problems.append("report.overlap_threshold must be in [0, 1]")
        if self.report.outlier_threshold <= 0:
            problems.append("report.outlier_threshold must be positive")
        if self.experiment.k_max < 0:
            problems.append("experiment.k_max must be >= 0")
        if self.experiment.sample_period <= 0:
            problems.append("experiment.sample_period must be positive")
        if self.experiment.wall_limit <= 0:
            problems.append("experiment.wall_limit must be positive")
        if self.critic.n_max < 0:
            problems.append("critic.n_max must be >= 0")
        if not 0 <= self.critic.pass_threshold <= 1:
            problems.append("critic.pass_threshold must be in [0, 1]")
        if self.critic.approval_mode not in ("headless", "interactive"):
            problems.append("critic.approval_mode must be headless or interactive")
        for folder in self.skill_folders:
            if not Path(folder).is_dir():
                problems.append(f"skill folder missing: {folder}")
        if problems:
            raise ConfigError("invalid config:\n" + "\n".join(f"  - {p}" for p in problems))

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "provider": self.provider.to_dict(),
            "eis": self.eis.to_dict(),
            "report": self.report.to_dict(),
            "experiment": self.experiment.to_dict(),
            "critic": self.critic.to_dict(),
            "skill_folders": list(self.skill_folders),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config document must be a mapping")
        version = raw.get("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version: {version}")
        known = {"version", "provider", "eis", "report", "experiment", "critic",
                 "skill_folders", "seed"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        def build(cls_, block, name):
            block = block or {}
            if not isinstance(block, dict):
                raise ConfigError(f"{name} block must be a mapping")
            valid = {f for f in cls_.__dataclass_fields__}
            bad = set(block) - valid
            if bad:
                raise ConfigError(f"unknown keys in {name}: {sorted(bad)}")
            try:
                return cls_(**block)
            except TypeError as exc:
                raise ConfigError(f"bad {name} block: {exc}") from None

        return cls(
            provider=build(ProviderBlock, raw.get("provider"), "provider"),
            eis=build(SearchConfig, raw.get("eis"), "eis"),
            report=build(ReportBlock, raw.get("report"), "report"),
            experiment=build(ExperimentBlock, raw.get("experiment"), "experiment"),
            critic=build(CriticBlock, raw.get("critic"), "critic"),
            skill_folders=list(raw.get("skill_folders") or []),
            seed=int(raw.get("seed", 0)),
        )

    @classmethod
    def from_file(cls, path: Path | str) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file is not valid YAML: {exc}") from None
        return cls.from_dict(raw or {})

    @classmethod
    def mock(cls, seed: int = 0, **overrides) -> "PipelineConfig":
        """Offline configuration: deterministic providers, fast experiment loop."""
        config = cls(
            provider=ProviderBlock(kind="mock", concurrency=1),
            report=ReportBlock(use_judge=False),
            # generous sample period: the mock entry script exits in well
            # under one period, keeping sample counts replay-stable
            experiment=ExperimentBlock(sample_period=5.0, wall_limit=60.0),
            seed=seed,
        )
        for key, value in overrides.items():
            setattr(config, key, value)
        return config
