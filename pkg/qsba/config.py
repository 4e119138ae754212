"""
QSBA Configuration Module

Environment-driven defaults for the command-line front end. Only the default
report directory comes from the environment; everything that affects a run
lives in the scenario file.
"""

import os
from pathlib import Path
from typing import List

try:
    from dotenv import load_dotenv

    # Load environment variables from .env file
    load_dotenv()
except ImportError:
    pass


class OutputConfig:
    """Report output configuration."""

    def __init__(self):
        self.dir = os.getenv("QSBA_OUTPUT_DIR", "reports")
        self.report_name = "run_report.json"
        self.transcript_name = "transcript.jsonl"


class LoggingConfig:
    """Logging configuration (overridable from the CLI)."""

    def __init__(self):
        self.level = os.getenv("QSBA_LOG_LEVEL", "WARNING")
        self.file = os.getenv("QSBA_LOG_FILE") or None


class Config:
    """Main configuration class."""

    def __init__(self):
        self.output = OutputConfig()
        self.logging = LoggingConfig()

    def output_dir(self) -> Path:
        """Resolve and create the default output directory."""
        path = Path(self.output.dir)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def validate_config(self) -> List[str]:
        """Validate configuration and return list of errors."""
        errors = []
        if not self.output.dir.strip():
            errors.append("QSBA_OUTPUT_DIR must not be empty")
        if self.logging.level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            errors.append(f"unknown QSBA_LOG_LEVEL {self.logging.level!r}")
        return errors


# Global configuration instance
config = Config()
