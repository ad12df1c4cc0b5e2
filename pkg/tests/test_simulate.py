import math

import numpy as np
import pytest

from sqkd.attack import depolarizing_attack, identity_attack, observables, random_attack
from sqkd.errors import DomainError
from sqkd.estimate import Mode
from sqkd.simulate import (ProtocolConfig, branch_tables, empirical_statistics, expected_key_fraction,
                           key_to_hex, outcome_to_csv, run_protocol, statistics_counts)


def test_config_validation():
    with pytest.raises(DomainError):
        ProtocolConfig(p=1.0)
    with pytest.raises(DomainError):
        ProtocolConfig(q=0.0)
    with pytest.raises(DomainError):
        ProtocolConfig(iterations=0)
    assert ProtocolConfig(mode=2).basis_probs()[2] == 0.0


def test_identity_attack_gives_equal_keys():
    out = run_protocol(ProtocolConfig(iterations=20_000, seed=1), identity_attack())
    assert out.key_length > 0
    assert np.array_equal(out.raw_key_a, out.raw_key_b)
    emp = out.empirical
    assert emp.reflect("+", "+") == 1.0
    assert emp.reflect("0Y", "0Y") == 1.0
    assert emp.ab("0", "1") == 0.0


def test_tally_invariants():
    cfg = ProtocolConfig(iterations=50_000, seed=4)
    out = run_protocol(cfg, depolarizing_attack(0.1))
    assert sum(out.counts.values()) == cfg.iterations
    key_rounds = sum(n for (i, a, b, k, acc, test), n in out.counts.items()
                     if acc == 1 and test == 0 and a != "R")
    assert key_rounds == out.key_length
    assert out.raw_key_a.size == out.raw_key_b.size


def test_mode2_never_uses_y():
    out = run_protocol(ProtocolConfig(mode=2, iterations=20_000, seed=2), depolarizing_attack(0.05))
    assert not any(k[0] == "0Y" or k[2] == "Y" for k in out.counts)
    assert out.empirical.mode is Mode.MODE2


def test_same_seed_same_outcome():
    cfg = ProtocolConfig(iterations=300_000, seed=99)
    a = run_protocol(cfg, random_attack(3, 1))
    b = run_protocol(cfg, random_attack(3, 1), workers=3)
    assert a.counts == b.counts
    assert np.array_equal(a.raw_key_a, b.raw_key_a)
    assert outcome_to_csv(a) == outcome_to_csv(b)


def test_different_seed_differs():
    att = depolarizing_attack(0.1)
    a = run_protocol(ProtocolConfig(iterations=1000, seed=1), att)
    b = run_protocol(ProtocolConfig(iterations=1000, seed=2), att)
    assert a.counts != b.counts


def test_tiny_run_marks_rows_absent():
    out = run_protocol(ProtocolConfig(iterations=10, seed=0), depolarizing_attack(0.1))
    emp = empirical_statistics(out)
    assert len(emp.p_aa) < len(observables(depolarizing_attack(0.1)).p_aa)


def test_statistics_exclude_untested_zz_rounds():
    out = run_protocol(ProtocolConfig(iterations=20_000, seed=5), depolarizing_attack(0.1))
    kept = statistics_counts(out)
    assert all(t == 1 for (i, a, b, k, acc, t) in kept if i in "01" and a != "R" and b == "Z")


def test_branch_tables_match_observables():
    att = random_attack(4, 8)
    p_bob, p_alice = branch_tables(att)
    exact = observables(att)
    assert p_bob[2] == pytest.approx(exact.ab("+", "1"))
    assert p_alice[3, 0, 1] == pytest.approx(exact.aa("0Y", "0", "-"))
    assert p_alice[1, 2, 2] == pytest.approx(exact.reflect("1", "1Y"))


def test_key_fraction_close_to_expected():
    cfg = ProtocolConfig(iterations=200_000, seed=12)
    att = depolarizing_attack(0.1)
    out = run_protocol(cfg, att)
    p = expected_key_fraction(cfg, att)
    assert p == pytest.approx(cfg.p ** 3 * cfg.q * ((1 - 0.1) ** 2 + 0.1 ** 2))
    sigma = math.sqrt(p * (1 - p) / cfg.iterations)
    assert abs(out.key_length / cfg.iterations - p) <= 4 * sigma


def test_export_header_and_hex():
    out = run_protocol(ProtocolConfig(iterations=500, seed=3), identity_attack())
    text = outcome_to_csv(out)
    assert text.startswith("# seed=3 mode=3")
    assert f"# raw_key_a={key_to_hex(out.raw_key_a)}" in text
    assert key_to_hex(np.array([1, 0, 1, 0, 0, 0, 0, 1])) == "a1"
