"""Pipeline configuration: a flat ``key = value`` file plus flag overrides."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import InputError
from .ingest import read_kv_file

PATH_KEYS = ("cube", "library", "class_references", "radiometry", "out")


@dataclass
class PipelineConfig:
    seed: int = 0
    k_max: int = 10
    k_override: int | None = None
    similarity_threshold: float = 0.5
    ra_high: float = 0.8
    ra_low: float = 0.2
    band_mask: str = ""
    restarts: int = 8
    ridge: float = 1e-6
    elbow_sample: int = 20000
    threads: int = 1
    soil_class: str | None = None
    cube: str | None = None
    library: str | None = None
    class_references: str | None = None
    radiometry: str | None = None
    out: str = "litmap_out"

    def __post_init__(self):
        if not 0 < self.similarity_threshold < 1:
            raise InputError("similarity_threshold must lie in (0, 1)")
        if not 0 <= self.ra_low < self.ra_high <= 1:
            raise InputError("need 0 <= ra_low < ra_high <= 1")
        if self.k_max < 3:
            raise InputError("k_max must be at least 3")
        if self.k_override is not None and self.k_override < 1:
            raise InputError("k_override must be positive")
        if self.threads < 1:
            raise InputError("threads must be positive")

    @classmethod
    def from_file(cls, path=None, **overrides):
        """Load a config file (relative paths resolve against its folder); non-None overrides win."""
        values = {}
        if path is not None:
            path = Path(path)
            kv = read_kv_file(path)
            known = {f.name: f for f in fields(cls)}
            for key, raw in kv.items():
                if key not in known:
                    raise InputError(f"{path}: unknown config key {key!r}")
                values[key] = _cast(known[key], raw)
                if key in PATH_KEYS and values[key] is not None and not Path(values[key]).is_absolute():
                    values[key] = str(path.parent / values[key])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self):
        return asdict(self)

    def digest(self, exclude=("threads", "out")):
        """Hash of every setting that can change results."""
        d = {k: v for k, v in self.to_dict().items() if k not in exclude}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def _cast(f, raw):
    raw = raw.strip()
    if raw.lower() in ("", "none") and f.name not in ("band_mask",):
        return None
    t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    try:
        if t.startswith("int"):
            return int(raw)
        if t.startswith("float"):
            return float(raw)
    except ValueError:
        raise InputError(f"config key {f.name!r}: cannot parse {raw!r}") from None
    return raw
