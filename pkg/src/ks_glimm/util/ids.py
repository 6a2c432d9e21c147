"""Run ids of the form ``<command>-<digest>``.

The digest covers the canonical config text, so repeating a command with an identical
config lands in the same run directory and replaces its rows in the results store.
"""

from __future__ import annotations

import hashlib
import re

from ks_glimm.errors import ConfigError

DIGEST_LEN = 12

_COMMAND = re.compile(r"^[a-z][a-z-]*[a-z]$")
_RUN_ID = re.compile(rf"^(?P<command>[a-z][a-z-]*[a-z])-(?P<digest>[0-9a-f]{{{DIGEST_LEN}}})$")


def config_digest(config_text: str) -> str:
    """sha256 hex digest of the config text, blind to line endings, blank lines and trailing blanks."""
    lines = (ln.rstrip() for ln in config_text.splitlines())
    canonical = "\n".join(ln for ln in lines if ln)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def run_id(command: str, config_text: str) -> str:
    if not _COMMAND.match(command):
        raise ConfigError(f"not a command name: {command!r}")
    return f"{command}-{config_digest(config_text)[:DIGEST_LEN]}"


def failed_run_id(command: str) -> str:
    """Id for a run whose config never resolved; it has no digest and no run directory."""
    return f"{command}-invalid"


def parse_run_id(rid: str) -> tuple[str, str]:
    """``(command, digest)`` of a run id."""
    m = _RUN_ID.match(rid)
    if m is None:
        raise ConfigError(f"malformed run id {rid!r}; expected <command>-<{DIGEST_LEN} hex digits>")
    return m.group("command"), m.group("digest")
