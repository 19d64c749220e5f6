import json
import math
import os
import pathlib

import numpy as np
import pytest

import vmlab

SCENARIOS = pathlib.Path(os.environ.get("VMLAB_SCENARIOS", pathlib.Path(__file__).parents[2] / "scenarios"))


def test_hat_check_round_trip():
    v = [0.3, -1.2, 2.0]
    u = vmlab.hat(v)
    assert math.sqrt(sum(x * x for x in u)) < 1.0
    assert np.allclose(vmlab.check(u), v, rtol=1e-12, atol=1e-12)
    with pytest.raises(vmlab.DomainError):
        vmlab.check([1.0, 0.0, 0.0])


def test_lorentz_algebra():
    a = vmlab.embed_rotation(vmlab.axis_angle([0, 0, 1], 0.4)) * vmlab.boost_x(0.7)
    assert a.metric_defect() < 1e-13
    r1, phi, r2 = vmlab.decompose(a)
    assert phi == pytest.approx(0.7, rel=1e-12)
    assert np.allclose((r1 * vmlab.boost_x(phi) * r2).matrix, a.matrix, atol=1e-12)
    t, x = vmlab.boost_to_rest(math.sqrt(1.25), [0.5, 0, 0]).apply(1.0, [0, 0, 0])
    assert t == pytest.approx(math.sqrt(1.25))
    assert np.allclose(x, [0.5, 0, 0])
    with pytest.raises(vmlab.ValidationError):
        vmlab.LorentzTransform.from_matrix([[1, 0.1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


def test_field_invariants_survive_a_boost():
    e, b = [0.1, 0.5, -0.2], [0.3, 0.0, 0.4]
    e2, b2 = vmlab.transform_field(e, b, vmlab.boost_x(1.1))
    assert np.allclose(vmlab.field_invariants(e2, b2), vmlab.field_invariants(e, b), atol=1e-12)


def test_coulomb_gauss_identity():
    pair = vmlab.coulomb_pair(0.2, 0.6)
    for delta in (0.06, 0.12, 0.18):
        lhs, rhs = vmlab.coulomb_gauss_identity(pair, delta)
        assert abs(lhs - rhs) <= 1e-6 * max(abs(lhs), 1.0)


def test_transformation_law_rotation_has_no_prefactor():
    a = vmlab.embed_rotation(vmlab.axis_angle([1, 1, 0], 0.9))
    q = lambda u: math.exp(-sum(x * x for x in u))
    assert vmlab.q_transform_value(q, a, [0.2, 0.1, 0.3]) == pytest.approx(q([0.2, 0.1, 0.3]), rel=1e-13)


def test_free_stream_scenario(tmp_path, monkeypatch):
    monkeypatch.setenv("VMLAB_OUTPUT_ROOT", str(tmp_path))
    d, rep = vmlab.run_scenario(SCENARIOS / "free-stream.json")
    assert rep["classifier"]["verdict"] == "LINEAR"
    assert rep["version"] == vmlab.__version__
    assert vmlab.report(d) == rep
    q = vmlab.read_profile(pathlib.Path(d) / "q_profile.bin")
    assert q["total"].shape == (q["n"],) * 3
    _, boosted = vmlab.boost_rerun(d, 0.6)
    assert boosted["final_relative_deviation"] <= 1e-8


def test_validation_error_from_dict(tmp_path, monkeypatch):
    monkeypatch.setenv("VMLAB_OUTPUT_ROOT", str(tmp_path))
    cfg = json.loads((SCENARIOS / "free-stream.json").read_text())
    cfg["species"][0]["mass"] = -1.0
    with pytest.raises(vmlab.ValidationError, match=r"species\[0\]\.mass"):
        vmlab.run_scenario(cfg)
