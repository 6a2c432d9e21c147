from __future__ import annotations

import pytest

from ks_glimm.config import RunConfig, apply_overrides
from ks_glimm.errors import ConfigError
from ks_glimm.experiments import run_id_for
from ks_glimm.util.ids import DIGEST_LEN, config_digest, failed_run_id, parse_run_id, run_id


def test_config_digest_ignores_layout() -> None:
    text = "mesh.h=0.01\nmesh.X=60\n"
    assert config_digest(text) == config_digest("mesh.h=0.01  \r\n\r\nmesh.X=60")
    assert config_digest(text) != config_digest("mesh.h=0.02\nmesh.X=60\n")
    assert len(config_digest(text)) == 64


def test_run_id_depends_on_command_and_config() -> None:
    a = run_id("simulate", "mesh.h=0.01\n")
    assert a == run_id("simulate", "mesh.h=0.01\n")
    assert a != run_id("decay", "mesh.h=0.01\n")
    assert a != run_id("simulate", "mesh.h=0.02\n")
    assert parse_run_id(a) == ("simulate", a[-DIGEST_LEN:])
    assert parse_run_id(run_id("oracle-compare", ""))[0] == "oracle-compare"


def test_run_id_rejects_bad_names() -> None:
    for bad in ("Simulate", "sim ulate", "-decay", "decay-", ""):
        with pytest.raises(ConfigError):
            run_id(bad, "x")
    for bad in ("run_abc", "simulate-XYZ", "simulate-0123", failed_run_id("simulate")):
        with pytest.raises(ConfigError):
            parse_run_id(bad)


def test_run_id_for_follows_overrides() -> None:
    cfg = RunConfig()
    assert run_id_for("simulate", cfg) == run_id_for("simulate", RunConfig())
    assert run_id_for("simulate", cfg) != run_id_for("simulate", apply_overrides(cfg, ["mesh.h=0.02"]))
