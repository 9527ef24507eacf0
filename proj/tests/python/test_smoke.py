import math

import numpy as np
import pytest

import qsut

SIMPLE = """
null_set = {45}
alt_set = (45,180]
truth_omega = 90
methods = aLHT+, LHT
budgets = 10, 20
runs = 20
master_seed = 3
"""


def test_family_state():
    plus = qsut.state_from_angle(qsut.FamilyConfig(), 90.0)
    assert np.allclose(plus, 0.5 * np.ones((2, 2)))


def test_helstrom_spot_value():
    zero = qsut.state_from_angle(qsut.FamilyConfig(), 0.0)
    plus = qsut.state_from_angle(qsut.FamilyConfig(), 90.0)
    assert qsut.helstrom_bound(zero, plus, 0.5, 1) == pytest.approx(0.5 * (1 - math.sqrt(0.5)), abs=1e-12)
    m0, m1 = qsut.helstrom_povm(zero, plus)
    assert np.allclose(m0 + m1, np.eye(2))


def test_born_and_tensor_power():
    zero = qsut.state_from_angle(qsut.FamilyConfig(), 0.0)
    assert qsut.tensor_power(zero, 3).shape == (8, 8)
    probs = qsut.born_probabilities(zero, [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    assert probs == pytest.approx([1.0, 0.0])


def test_hypothesis_sets():
    alt = qsut.HypothesisSet.parse("(45,180]")
    assert not alt.contains(45.0)
    angles = qsut.grid_angles(alt)
    assert angles[0] == 45.5 and angles[-1] == 180.0


def test_calibration_and_block_level():
    zero = qsut.state_from_angle(qsut.FamilyConfig(), 0.0)
    plus = qsut.state_from_angle(qsut.FamilyConfig(), 90.0)
    lam, size, power = qsut.calibrate_lht_lambda(zero, plus, 4, 0.05)
    assert size <= 0.05 and 0 < lam < 1 and power > 0.99
    assert qsut.block_level(1, 0.05) == 0.05


def test_eprocess_identity():
    exact, mle = qsut.eprocess_expectation("aLHT+", qsut.FamilyConfig(0.9, 0.9), "[30,60]", "(60,180]", 45.0)
    assert exact == pytest.approx([1.0, 1.0, 1.0], abs=1e-9)
    assert all(v <= 1 + 1e-9 for v in mle)


def test_sweep_is_deterministic():
    cfg = qsut.ExperimentConfig.from_text(SIMPLE)
    first = qsut.sweep_csv(cfg)
    assert first.splitlines()[0] == qsut.RESULT_HEADER
    assert first == qsut.sweep_csv(cfg, threads=2)
    rows = qsut.run_sweep(cfg)
    assert [r["method"] for r in rows] == ["aLHT+", "aLHT+", "LHT", "LHT"]
    assert all(0.0 <= r["power"] <= 1.0 for r in rows)


def test_single_run_trace():
    cfg = qsut.ExperimentConfig.from_text(SIMPLE)
    run = qsut.run_single(cfg, "aLHT+", 20, 11)
    assert run["copies_used"] <= 20
    assert "aLHT+" in run["trace"]


def test_errors_are_raised():
    with pytest.raises(qsut.QsutError, match="ParseError"):
        qsut.ExperimentConfig.from_text(SIMPLE + "bogus = 1\n")
    with pytest.raises(qsut.QsutError):
        qsut.state_from_angle(qsut.FamilyConfig(1.5, 1.0), 0.0)


def test_verify_suite_passes():
    assert all(passed for _, passed, _ in qsut.verify())
