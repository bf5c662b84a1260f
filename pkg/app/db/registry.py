"""Recording CLI runs in the out dir's SQLite registry."""
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional
import logging

from sqlalchemy import select

from app.db.migrate import upgrade
from app.db.session import get_session_local, registry_url
from app.models.run import Run, RunStatus

logger = logging.getLogger(__name__)


class RunRegistry:
    def __init__(self, out_dir: Path):
        self.url = registry_url(Path(out_dir))
        upgrade(self.url)
        self.SessionLocal = get_session_local(self.url)

    def start(self, command: str, seed: int, out_dir: Path, config_json: str, artifact_version: str) -> int:
        db = self.SessionLocal()
        try:
            run = Run(
                command=command,
                seed=seed,
                out_dir=str(out_dir),
                config_json=config_json,
                artifact_version=artifact_version,
                status=RunStatus.RUNNING,
                started_at=datetime.now(timezone.utc),
            )
            db.add(run)
            db.commit()
            logger.debug(f"Registered {command} run {run.id} in {self.url}")
            return run.id
        finally:
            db.close()

    def finish(self, run_id: int, exit_code: int, error: Optional[str] = None) -> None:
        db = self.SessionLocal()
        try:
            run = db.get(Run, run_id)
            if run is None:
                logger.warning(f"Run {run_id} vanished from {self.url}")
                return
            run.status = RunStatus.COMPLETED if exit_code == 0 else RunStatus.FAILED
            run.exit_code = exit_code
            run.error = error
            run.completed_at = datetime.now(timezone.utc)
            db.commit()
        finally:
            db.close()

    def runs(self) -> list[Run]:
        db = self.SessionLocal()
        try:
            return list(db.scalars(select(Run).order_by(Run.id)))
        finally:
            db.close()
