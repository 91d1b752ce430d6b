# app/config.py
import logging
import os

from dotenv import load_dotenv

from utils.logging import setup_logging

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)


class Config:
    def __init__(self):
        # ==== process level settings, experiment settings live in config documents
        self.env = os.getenv("ENV", "local")
        self.release = os.getenv("RELEASE", "local")
        self.debug = self.load("DEBUG") == "true"
        # Experiments
        self.default_config_path = self.load("SGDCT_CONFIG")
        self.output_dir = self.load("SGDCT_OUTPUT_DIR", "runs")
        self.workers = int(self.load("SGDCT_WORKERS", "1"))
        if self.workers < 1:
            raise ValueError("SGDCT_WORKERS must be at least 1")
        self.divergence_guard = float(self.load("SGDCT_DIVERGENCE_GUARD", "1e6"))
        # Housing data location, used when a config names no path
        self.boston_csv = self.load("BOSTON_CSV")
        # Sentry
        self.sentry_dsn = self.load("SENTRY_DSN")
        self.sentry_sample_rate = float(self.load("SENTRY_SAMPLE_RATE", "0.1"))
        self.sentry_traces_sample_rate = float(
            self.load("SENTRY_TRACES_SAMPLE_RATE", "0.01")
        )

    def setup(self) -> None:
        """Configure logging once the process knows it is an application."""
        setup_logging(self.env, self.debug)
        logger.info("config loaded")

    def load(self, key, default=None):
        """Load a setting from env"""
        return os.getenv(key, default)


config: Config = Config()
