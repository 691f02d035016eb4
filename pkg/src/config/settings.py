from pathlib import Path
from typing import Dict, List, Optional, Union
import logging

import yaml
from pydantic import BaseModel, Field

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "config" / "obfuscator_config.yaml"

logger = logging.getLogger(__name__)


class RandomAstBounds(BaseModel):
    """Bounds used when drawing random message instances"""

    max_value_length: int = Field(32, ge=0)
    max_elements: int = Field(8, ge=0)
    presence_probability: float = Field(0.5, ge=0.0, le=1.0)


class PadWidth(BaseModel):
    min: int = Field(1, ge=1)
    max: int = Field(8, ge=1)


class ObfuscationRanges(BaseModel):
    """Parameter ranges drawn by the obfuscator"""

    pad_width: PadWidth = Field(default_factory=PadWidth)
    prefix_widths: List[int] = Field(default_factory=lambda: [2, 3, 4])


class BenchDefaults(BaseModel):
    levels: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    trials: int = Field(1000, ge=1)
    plans_per_level: int = Field(20, ge=1)
    master_seed: int = 1
    format: str = "table"


class CodegenDefaults(BaseModel):
    output_dir: str = "gen"


class LoggingDefaults(BaseModel):
    level: str = "INFO"
    file: Optional[str] = None


class Settings(BaseModel):
    random_ast: RandomAstBounds = Field(default_factory=RandomAstBounds)
    obfuscation: ObfuscationRanges = Field(default_factory=ObfuscationRanges)
    bench: BenchDefaults = Field(default_factory=BenchDefaults)
    codegen: CodegenDefaults = Field(default_factory=CodegenDefaults)
    logging: LoggingDefaults = Field(default_factory=LoggingDefaults)


class ObfuscatorSettings:
    @staticmethod
    def load(path: Optional[Union[str, Path]] = None) -> Settings:
        """
        Load settings from a YAML file.

        Args:
            path: Configuration file; the bundled config/obfuscator_config.yaml when omitted

        Returns:
            Settings with defaults filled in for missing keys
        """
        config_path = Path(path) if path else DEFAULT_CONFIG_PATH
        if not config_path.exists():
            logger.warning(f"Config file {config_path} not found, using defaults")
            return Settings()
        with config_path.open(encoding="utf-8") as handle:
            config = yaml.safe_load(handle) or {}
        return ObfuscatorSettings.get_settings(config)

    @staticmethod
    def get_settings(config: Dict) -> Settings:
        """
        Generate typed settings from a configuration dictionary.

        Args:
            config: Dictionary as read from the YAML file

        Returns:
            Settings model
        """
        return Settings.model_validate(config)

    @staticmethod
    def get_test_settings() -> Settings:
        """
        Generate settings for testing purposes.

        Returns:
            Settings with small bench sizes
        """
        return Settings(
            bench=BenchDefaults(trials=40, plans_per_level=4, master_seed=7),
            logging=LoggingDefaults(level="DEBUG"),
        )
