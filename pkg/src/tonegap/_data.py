"""Packaged data file loading."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any


def load_packaged(name: str, path: str | Path | None = None) -> dict[str, Any]:
    """Load a JSON data file: an explicit path wins, else the packaged copy."""
    if path is not None:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    ref = resources.files("tonegap.data").joinpath(name)
    return json.loads(ref.read_text(encoding="utf-8"))
