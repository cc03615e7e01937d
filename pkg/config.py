import logging
import os
from pathlib import Path

import aiofiles

from errors import ConfigurationError


class Config:
    __jobs = None
    __log_level = None
    __debug = None
    __default_stopwords = None

    __data_dir = Path(__file__).resolve().parent / "data"

    @staticmethod
    def get_jobs():
        if Config.__jobs is None:
            value = os.environ.get("SCLOP_JOBS")
            if value is None:
                Config.__jobs = os.cpu_count() or 1
            else:
                try:
                    Config.__jobs = int(value)
                except ValueError:
                    raise ConfigurationError(f"SCLOP_JOBS must be an integer, got {value!r}")

                if Config.__jobs < 1:
                    raise ConfigurationError(f"SCLOP_JOBS must be at least 1, got {Config.__jobs}")

        return Config.__jobs

    @staticmethod
    def get_log_level():
        if Config.__log_level is None:
            name = os.environ.get("SCLOP_LOG_LEVEL", "INFO").upper()
            level = logging.getLevelName(name)
            if not isinstance(level, int):
                raise ConfigurationError(f"Unknown log level in SCLOP_LOG_LEVEL: {name}")

            Config.__log_level = level

        return Config.__log_level

    @staticmethod
    def is_debug():
        if Config.__debug is None:
            Config.__debug = os.environ.get("SCLOP_DEBUG", "").lower() in ["1", "true", "yes", "on"]

        return Config.__debug

    @staticmethod
    def get_templates_dir():
        return Config.__data_dir / "templates"

    @staticmethod
    async def get_default_stopwords():
        if Config.__default_stopwords is None:
            async with aiofiles.open(Config.__data_dir / "stopwords_en.txt", "r", encoding="utf-8") as file:
                results = await file.read()
                Config.__default_stopwords = frozenset(
                    line.strip() for line in results.splitlines() if line.strip() != ""
                )

        return Config.__default_stopwords

    @staticmethod
    def reset():
        """Drops every cached value so the next getter call re-reads its source."""
        Config.__jobs = None
        Config.__log_level = None
        Config.__debug = None
        Config.__default_stopwords = None
