from __future__ import annotations

import json
from pathlib import Path

from pydantic import BaseSettings

CONFIG_DIR = Path(__file__).parent.parent / "config"
SCENARIO_DIR = CONFIG_DIR / "scenarios"


class Settings(BaseSettings):
    product = "rhsim"
    chaincode_name = "ridehail"
    chaincode_version = "1.0"
    block_digest = "sha256"
    password_digest = "sha256"
    key_separator = "~"
    location_tolerance_m: float = 150.0
    batch_timeout_ms: float = 2000.0
    max_message_count: int = 10
    default_policy = "CROSS_ORG:1"
    sweep_policy = "ALL_ORG_PEERS"
    default_link_latency_ms: float = 1.0
    verify_cache_size: int = 1 << 16
    sweep_workers: int = 1
    window_size: int = 1000
    output_dir = "out"
    log_level = "INFO"

    class Config:
        env_prefix = "RHSIM_"

    def load_json(self, path: str | Path) -> dict:
        p = Path(path)
        if not p.is_absolute() and not p.exists():
            p = CONFIG_DIR / p
        with open(p) as f:
            return json.load(f)

    def output_path(self, out: str | None = None) -> Path:
        p = Path(out or self.output_dir)
        p.mkdir(parents=True, exist_ok=True)
        return p


settings = Settings()
