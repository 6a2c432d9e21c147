"""Where run directories live.

The data root is, in order: ``KS_GLIMM_DATA_DIR``; ``<checkout>/data`` when the working
directory sits inside a ks-glimm source checkout; the per-user data directory. Each run
writes into ``<root>/runs/<run_id>/``.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from platformdirs import user_data_dir

from ks_glimm.util.ids import parse_run_id

logger = logging.getLogger(__name__)

ENV_VAR = "KS_GLIMM_DATA_DIR"
PROJECT_NAME = "ks-glimm"


@dataclass(frozen=True)
class DataRoot:
    root: Path
    source: str  # "env" | "checkout" | "user"

    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    def run_dir(self, run_id: str) -> Path:
        parse_run_id(run_id)
        return self.runs_dir / run_id

    def prepare_run_dir(self, run_id: str) -> Path:
        """Create the directory of ``run_id``; an earlier run with the same id is overwritten file by file."""
        d = self.run_dir(run_id)
        if d.exists():
            logger.info("reusing run directory %s", d)
        d.mkdir(parents=True, exist_ok=True)
        return d


def find_checkout(start: Path | None = None) -> Path | None:
    """Nearest ancestor of ``start`` whose pyproject.toml declares this project."""
    here = (start or Path.cwd()).resolve()
    for p in [here, *here.parents]:
        manifest = p / "pyproject.toml"
        if manifest.is_file() and f'name = "{PROJECT_NAME}"' in manifest.read_text(encoding="utf-8"):
            return p
    return None


def resolve_data_root() -> DataRoot:
    env = os.environ.get(ENV_VAR)
    if env:
        return DataRoot(Path(env).expanduser().resolve(), "env")
    checkout = find_checkout()
    if checkout is not None:
        return DataRoot(checkout / "data", "checkout")
    return DataRoot(Path(user_data_dir(appname=PROJECT_NAME, appauthor=False)).resolve(), "user")
