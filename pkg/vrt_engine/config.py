"""Environment-driven engine settings and JSON config loading."""

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Union

from dotenv import load_dotenv

from .errors import InvalidConfig, StoreIOError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


@dataclass(frozen=True)
class EngineSettings:
    """Remote service and runtime defaults."""

    endpoint: str = "http://localhost:8700"
    timeout_s: float = 30.0
    max_in_flight: int = 4
    retries: int = 3
    backoff_s: float = 0.25
    log_level: str = "INFO"
    seed: int = 0

    @classmethod
    def from_env(cls) -> "EngineSettings":
        """Read VRT_* variables, after loading a .env file if present."""
        load_dotenv()
        try:
            return cls(
                endpoint=os.getenv("VRT_ENDPOINT", "http://localhost:8700"),
                timeout_s=float(os.getenv("VRT_TIMEOUT_S", "30")),
                max_in_flight=int(os.getenv("VRT_MAX_IN_FLIGHT", "4")),
                retries=int(os.getenv("VRT_RETRIES", "3")),
                backoff_s=float(os.getenv("VRT_BACKOFF_S", "0.25")),
                log_level=os.getenv("VRT_LOG_LEVEL", "INFO").upper(),
                seed=int(os.getenv("VRT_SEED", "0")),
            )
        except ValueError as e:
            raise InvalidConfig(f"Invalid VRT_* environment value: {e}") from e


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT)


def load_json_config(path: Union[str, Path]) -> Dict[str, Any]:
    """Load a JSON object from disk."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        logger.error(f"Failed to read config {path}: {e}")
        raise StoreIOError(f"Cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidConfig(f"Config {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise InvalidConfig(f"Config {path} must hold a JSON object")
    return data
