"""Export batch manifest: what produced the files, with which checkpoint."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path


@dataclass
class ExporterManifest:
    model_id: str
    checkpoint_hash: str
    tokenizer_id: str
    hop_s: float
    dim: int
    exported_at: str = ""
    inputs: list[str] | None = None

    def stamp(self) -> "ExporterManifest":
        if not self.exported_at:
            self.exported_at = datetime.now(timezone.utc).isoformat()
        return self

    def write(self, path: Path | str) -> None:
        Path(path).write_text(
            json.dumps(asdict(self.stamp()), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
