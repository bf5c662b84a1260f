from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker

# Lazy initialization - one engine per registry database, created when first needed
_engines: dict[str, Engine] = {}
_session_makers: dict[str, sessionmaker] = {}

def registry_url(out_dir) -> str:
    from app.core.config import settings

    return f"sqlite:///{(out_dir / settings.RUN_REGISTRY_FILENAME).resolve()}"

def get_engine(url: str) -> Engine:
    """Get or create the engine for ``url``."""
    if url not in _engines:
        _engines[url] = create_engine(url, pool_pre_ping=True)
    return _engines[url]

def get_session_local(url: str) -> sessionmaker:
    """Get or create the session maker for ``url``."""
    if url not in _session_makers:
        _session_makers[url] = sessionmaker(autocommit=False, autoflush=False, bind=get_engine(url))
    return _session_makers[url]

