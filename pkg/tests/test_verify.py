import numpy as np
import pytest

from sqkd.attack import depolarizing_attack, identity_attack, random_attack
from sqkd.verify import IDENTITY_TOL, check_attack, fuzz, oracle_quantities


def test_identity_attack_oracle():
    o = oracle_quantities(identity_attack())
    assert o["lambda1"] == pytest.approx(1.0)
    assert o["lambda2"] == 0.0
    assert o["g03"] == pytest.approx(1.0)


@pytest.mark.parametrize("att", [identity_attack(), depolarizing_attack(0.1), random_attack(2, 0),
                                 random_attack(7, 3)], ids=["identity", "depolarizing", "d2", "d7"])
def test_check_attack_passes(att):
    chk = check_attack(att)
    assert chk.failures() == []
    assert chk.worst() <= IDENTITY_TOL


def test_failures_are_reported():
    chk = check_attack(random_attack(4, 0))
    chk.residuals["lambda_sum"] = 1.0
    assert chk.failures() == ["lambda_sum"]


def test_fuzz_report():
    rep = fuzz(10, 100)
    assert rep.ok and rep.n == 10
    assert set(rep.worst) >= {"pair_bound", "q_0", "g03_observed", "cross_1"}
