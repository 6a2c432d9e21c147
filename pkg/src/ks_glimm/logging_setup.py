from __future__ import annotations

import logging
import sys

_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(*, quiet: bool = False) -> logging.Logger:
    """Install one stream handler on the package logger.

    Calling it again only adjusts the level and rebinds the handler to the current
    stderr, so repeated CLI invocations in one process do not stack handlers.
    """
    logger = logging.getLogger("ks_glimm")
    logger.setLevel(logging.WARNING if quiet else logging.INFO)
    ours = [h for h in logger.handlers if getattr(h, "_ks_glimm", False)]
    for h in ours:
        h.stream = sys.stderr
    if not ours:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_FORMAT))
        handler._ks_glimm = True  # type: ignore[attr-defined]
        logger.addHandler(handler)
    logger.propagate = False
    return logger
