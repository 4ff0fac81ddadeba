"""
Environment settings
Values come from the process environment, optionally seeded from a .env file
"""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

from richards.errors import ConfigurationError

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _flag(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    value = raw.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ConfigurationError(f"{name} must be a boolean, got {raw!r}")


def _number(name: str, default, kind=float):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return kind(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be {kind.__name__}, got {raw!r}") from None


@dataclass(frozen=True)
class Settings:
    output_dir: str = "runs"
    parts: int = 1
    collective_timeout: float = 300.0
    verbose: bool = True

    @classmethod
    def from_env(cls, dotenv: bool = True) -> "Settings":
        if dotenv:
            load_dotenv()
        settings = cls(
            output_dir=os.getenv("RICHARDS_OUTPUT_DIR") or cls.output_dir,
            parts=_number("RICHARDS_PARTS", cls.parts, int),
            collective_timeout=_number("RICHARDS_COLLECTIVE_TIMEOUT", cls.collective_timeout),
            verbose=_flag("RICHARDS_VERBOSE", cls.verbose),
        )
        if settings.parts < 1:
            raise ConfigurationError(f"RICHARDS_PARTS must be >= 1, got {settings.parts}")
        if not settings.collective_timeout > 0:
            raise ConfigurationError("RICHARDS_COLLECTIVE_TIMEOUT must be > 0")
        return settings
