"""Run configuration shared by the CLI, strategies, and evaluation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

BACKEND_MODES = ("live", "record", "replay")
KNOWN_METRICS = ("chrf", "bertscore", "bleurt", "xcomet")


@dataclass
class RunConfig:
    approach: str = "PBP_VIS"
    target_lang: str = "en"
    mode: str = "replay"
    cassette: Path | None = None
    model: str = "gpt-4-turbo-2024-04-09"
    temperature: float = 0.5
    max_output: int = 4096
    workers: int = 1
    retries: int = 2
    lmax: int = 150
    max_side: int = 1536
    jpeg_quality: int = 90
    prompt_dir: Path | None = None
    metrics: tuple[str, ...] = ("chrf",)
    scoring_endpoint: str | None = None
    aggregate: str = "macro"
    output_dir: Path = field(default_factory=lambda: Path("runs"))

    def validate(self) -> None:
        if self.mode not in BACKEND_MODES:
            raise ConfigError("mode", f"unknown backend mode {self.mode!r}")
        if self.mode == "replay" and not self.cassette:
            raise ConfigError("mode", "replay mode requires a cassette path")
        if self.workers < 1:
            raise ConfigError("workers", "workers must be >= 1")
        if self.retries < 0:
            raise ConfigError("retries", "retries must be >= 0")
        for metric in self.metrics:
            if metric not in KNOWN_METRICS:
                raise ConfigError("metrics", f"unknown metric {metric!r}")
        if self.aggregate not in ("macro", "corpus"):
            raise ConfigError("aggregate", f"unknown aggregate {self.aggregate!r}")

    def digest(self) -> str:
        """Stable digest over the fields that affect artifacts."""
        semantic = {
            "approach": self.approach,
            "target_lang": self.target_lang,
            "model": self.model,
            "temperature": self.temperature,
            "max_output": self.max_output,
            "retries": self.retries,
            "lmax": self.lmax,
            "max_side": self.max_side,
            "jpeg_quality": self.jpeg_quality,
            "metrics": list(self.metrics),
            "aggregate": self.aggregate,
            "prompt_dir": str(self.prompt_dir) if self.prompt_dir else None,
        }
        canon = json.dumps(semantic, sort_keys=True)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()
