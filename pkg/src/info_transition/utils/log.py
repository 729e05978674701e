import logging
import logging.config
from typing import Optional

from .config import Settings, get_settings


def configure_logging(settings: Optional[Settings] = None) -> None:
    """Apply the package logging configuration once at start-up"""
    settings = settings or get_settings()
    logging.config.dictConfig(settings.get_log_config())
    logging.getLogger(__name__).debug(f"Logging configured at level {settings.log_level}")
