from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional
import os


class Settings(BaseSettings):
    # Logging configuration
    log_level: str = "INFO"
    log_file: Optional[str] = None

    # Physical constants table (JSON); falls back to built-in values
    constants_path: Optional[str] = None

    # Output configuration
    output_dir: str = "runs"

    # Numerical configuration
    default_mu: int = 64
    separability_tol: float = 1e-10
    max_state_qubits: int = 22
    max_density_dim: int = 2048
    natural_units: bool = False

    # Execution configuration
    max_workers: int = 4

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="INFO_TRANSITION_",
        case_sensitive=False,
        extra="ignore",
    )

    def __init__(self, **kwargs):
        super().__init__(**kwargs)

        # Validate configuration
        self._validate_config()

    def _validate_config(self):
        """Validate configuration settings"""
        if self.log_level.upper() not in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
            raise ValueError(f"Unsupported log level: {self.log_level}")

        if self.default_mu < 4 or self.default_mu % 2:
            raise ValueError("Default fine-graining mu must be even and at least 4")

        if self.separability_tol <= 0:
            raise ValueError("Separability tolerance must be positive")

        if self.max_state_qubits < 1 or self.max_density_dim < 1:
            raise ValueError("Dense capacity caps must be positive")

        if self.max_workers < 1:
            raise ValueError("max_workers must be at least 1")

    @classmethod
    def from_env_file(cls, env_file: str = ".env"):
        """Load configuration from environment file"""
        return cls(_env_file=env_file)

    @classmethod
    def from_dict(cls, config_dict: dict):
        """Load configuration from dictionary"""
        return cls(**config_dict)

    def to_dict(self) -> dict:
        """Convert configuration to dictionary"""
        return {
            "logging": {
                "level": self.log_level,
                "file": self.log_file
            },
            "constants_path": self.constants_path,
            "output_dir": self.output_dir,
            "numerics": {
                "default_mu": self.default_mu,
                "separability_tol": self.separability_tol,
                "max_state_qubits": self.max_state_qubits,
                "max_density_dim": self.max_density_dim,
                "natural_units": self.natural_units
            },
            "execution": {
                "max_workers": self.max_workers
            }
        }

    def get_constants_path(self) -> Optional[str]:
        """Constants table path from settings or the INFO_TRANSITION_CONSTANTS variable"""
        return self.constants_path or os.getenv("INFO_TRANSITION_CONSTANTS")

    def get_log_config(self) -> dict:
        """Get logging configuration"""
        handlers = {
            "console": {
                "class": "logging.StreamHandler",
                "formatter": "default",
                "level": self.log_level.upper()
            }
        }
        package_handlers = ["console"]
        if self.log_file:
            handlers["file"] = {
                "class": "logging.FileHandler",
                "filename": self.log_file,
                "formatter": "detailed",
                "level": "DEBUG"
            }
            package_handlers.append("file")

        return {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "default": {
                    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
                },
                "detailed": {
                    "format": "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"
                }
            },
            "handlers": handlers,
            "loggers": {
                "info_transition": {
                    "handlers": package_handlers,
                    "level": self.log_level.upper(),
                    "propagate": False
                }
            },
            "root": {
                "handlers": ["console"],
                "level": "WARNING"
            }
        }


# Default configuration instance
default_settings = None


def get_settings() -> Settings:
    """Get application settings (singleton pattern)"""
    global default_settings
    if default_settings is None:
        default_settings = Settings()
    return default_settings


def load_settings(config_file: Optional[str] = None) -> Settings:
    """Load settings from configuration file"""
    if config_file:
        return Settings.from_env_file(config_file)
    return Settings()
