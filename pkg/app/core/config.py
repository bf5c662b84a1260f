from typing import Any, Type, TypeVar

from pydantic import BaseModel, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.errors import ConfigError

class Settings(BaseSettings):
    APP_NAME: str = "Grounded ASR Toolkit"
    APP_VERSION: str = "0.1.0"
    ENV: str = "local"
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(levelname)s: %(message)s"
    RUN_REGISTRY_FILENAME: str = "runs.db"

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

settings = Settings()


ConfigT = TypeVar("ConfigT", bound=BaseModel)


def parse_config(model: Type[ConfigT], data: dict[str, Any]) -> ConfigT:
    """Validate ``data`` into ``model``, reporting problems as ConfigError."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc']) or model.__name__}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"invalid {model.__name__}: {problems}")
