from .settings import ObfuscatorSettings, Settings, RandomAstBounds
from .logging_config import setup_logging, get_logger_config

__all__ = ['ObfuscatorSettings', 'Settings', 'RandomAstBounds', 'setup_logging', 'get_logger_config']
