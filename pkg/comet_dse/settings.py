"""
Environment settings for the command-line tool
"""

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings

CONFIG_FILENAME = "comet.yaml"


class CometSettings(BaseSettings):
    """Process-level settings read from COMET_* environment variables or .env"""

    # Directory holding comet.yaml, used when --config is omitted
    config_dir: Path | None = Field(default=None)

    # Default worker count for sweeps
    jobs: int = Field(default=1, ge=1)

    # Logging
    log_level: str = Field(default="INFO")

    model_config = {"env_prefix": "COMET_", "env_file": ".env", "case_sensitive": False}

    def default_config_path(self) -> Path | None:
        """<config_dir>/comet.yaml when the directory is set and the file exists"""
        if self.config_dir is None:
            return None
        candidate = self.config_dir / CONFIG_FILENAME
        return candidate if candidate.is_file() else None


def get_settings() -> CometSettings:
    """Get settings instance"""
    return CometSettings()
