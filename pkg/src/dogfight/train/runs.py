"""Training run directory: config snapshot, metrics log, checkpoints.

Metrics are appended as one JSON object per line with sorted keys, so two
runs with identical histories produce byte-identical logs.
"""

from __future__ import annotations

import json
from pathlib import Path


class RunDir:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.metrics_path = self.path / "metrics.jsonl"

    def write_config(self, config: dict):
        (self.path / "config.json").write_text(
            json.dumps(config, indent=2, sort_keys=True) + "\n")

    def log_metrics(self, record: dict):
        with open(self.metrics_path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def checkpoint_path(self, name: str) -> Path:
        ckpt_dir = self.path / "checkpoints"
        ckpt_dir.mkdir(exist_ok=True)
        return ckpt_dir / f"{name}.ckpt"

    def read_metrics(self) -> list[dict]:
        if not self.metrics_path.exists():
            return []
        return [json.loads(line) for line in
                self.metrics_path.read_text().splitlines() if line]
