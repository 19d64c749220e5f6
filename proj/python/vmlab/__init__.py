"""Relativistic Vlasov-Maxwell asymptotics laboratory."""

import json
import os

from ._core import (
    CoulombPair,
    DomainError,
    LorentzTransform,
    PreconditionError,
    RuntimeFailure,
    ValidationError,
    VmlabError,
    axis_angle,
    boost_to_rest,
    boost_x,
    check,
    coulomb_gauss_identity,
    coulomb_pair,
    decompose,
    embed_rotation,
    energy,
    field_invariants,
    hat,
    onset_time,
    q_transform_value,
    read_profile,
    transform_field,
    version,
)
from . import _core

__version__ = version()


def run_scenario(config):
    """Run a scenario. `config` is a path or a dict; returns (artifact_dir, report)."""
    if isinstance(config, dict):
        d, text = _core._run_scenario_json(json.dumps(config))
    else:
        d, text = _core._run_scenario(os.fspath(config))
    return d, json.loads(text)


def boost_rerun(artifact_dir, phi):
    """Boosted-slice rerun of a stored run; returns (boost_dir, boost_report)."""
    d, text = _core._boost_rerun(os.fspath(artifact_dir), float(phi))
    return d, json.loads(text)


def report(artifact_dir):
    """The stored report.json of a run as a dict."""
    return json.loads(_core._report(os.fspath(artifact_dir)))
