"""Service configuration: one dataclass, a JSON config file, flag overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .detector import DetectorConfig
from .store import StoreConfig

SERVER_VERSION = "1.0.0"


def parse_version(text: str) -> tuple[int, int, int]:
    """Strict MAJOR.MINOR.PATCH with numeric components."""
    parts = text.split(".")
    if len(parts) != 3 or not all(p.isdigit() for p in parts):
        raise ValueError(f"{text!r} is not a MAJOR.MINOR.PATCH version")
    major, minor, patch = (int(p) for p in parts)
    return major, minor, patch


@dataclass(frozen=True)
class VersionPolicy:
    min_supported: str = "1.0.0"
    current: str = SERVER_VERSION

    def __post_init__(self) -> None:
        if parse_version(self.min_supported) > parse_version(self.current):
            raise ValueError("min_supported must not exceed current version")

    def compatible(self, client_version: str) -> bool:
        return parse_version(client_version) >= parse_version(self.min_supported)


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    token: str = ""
    data_dir: Path = Path("footscan-data")
    blob_strategy: str = "inline"
    object_store_root: Path | None = None  # defaults under data_dir
    max_photo_bytes: int = 5_242_880
    min_supported_version: str = "1.0.0"
    server_version: str = SERVER_VERSION
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    poll_interval: float = 0.5
    lease_seconds: float = 60.0
    max_attempts: int = 3

    def __post_init__(self) -> None:
        self.version_policy()  # validates both version strings

    def store_config(self) -> StoreConfig:
        root = self.object_store_root or self.data_dir / "blobs"
        return StoreConfig(
            data_path=self.data_dir / "footscan.db",
            blob_strategy=self.blob_strategy,
            object_store_root=root,
            max_photo_bytes=self.max_photo_bytes,
        )

    def version_policy(self) -> VersionPolicy:
        return VersionPolicy(min_supported=self.min_supported_version,
                             current=self.server_version)

    @classmethod
    def load(cls, config_file: Path | None = None,
             **overrides: Any) -> "ServiceConfig":
        """Build a config from an optional JSON file plus flag overrides.

        Overrides with value None are treated as "not given".
        """
        raw: dict[str, Any] = {}
        if config_file is not None:
            raw.update(json.loads(Path(config_file).read_text(encoding="utf-8")))
        detector_raw = dict(raw.pop("detector", {}))
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "detector":
                detector_raw.update(value)
            else:
                raw[key] = value
        for path_key in ("data_dir", "object_store_root"):
            if raw.get(path_key) is not None:
                raw[path_key] = Path(raw[path_key])
        unknown = set(raw) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(detector=DetectorConfig(**detector_raw), **raw)

    def with_overrides(self, **overrides: Any) -> "ServiceConfig":
        kept = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **kept) if kept else self
