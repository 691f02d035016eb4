from typing import Any, Dict, Optional
import logging
import logging.config

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def get_logger_config(level: str = "INFO", log_file: Optional[str] = None) -> Dict[str, Any]:
    """Build a dictConfig dictionary for the toolkit loggers"""
    handlers: Dict[str, Dict[str, Any]] = {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "default",
            "stream": "ext://sys.stderr",
        }
    }
    if log_file:
        handlers["file"] = {
            "class": "logging.FileHandler",
            "formatter": "default",
            "filename": log_file,
            "encoding": "utf-8",
        }
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {"default": {"format": LOG_FORMAT}},
        "handlers": handlers,
        "loggers": {
            "src": {"level": level.upper(), "handlers": list(handlers), "propagate": False},
        },
    }


def setup_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    """Configure logging for the toolkit"""
    logging.config.dictConfig(get_logger_config(level, log_file))
