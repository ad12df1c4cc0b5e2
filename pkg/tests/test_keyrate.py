import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqkd.attack import depolarizing_attack, exact_conditional_entropy, observables
from sqkd.bb84cad import cad_error
from sqkd.errors import DomainError, InfeasibleError
from sqkd.estimate import Mode, mode3_bounds, norms_from_stats, symmetric_stats
from sqkd.keyrate import (ChannelFamily, channel_rate, entropy_lower_bound, entropy_objective,
                          h_a_given_b, key_error, key_rate, lambda2_interval, noise_threshold,
                          sweep_rows)
from sqkd.qmath import binary_entropy

GRID = np.linspace(0.0, 0.5, 100)


def _rates(mode, kind, **kw):
    return np.array([channel_rate(mode, ChannelFamily.make(kind, q), **kw).rate for q in GRID])


def test_channel_family_rules():
    assert ChannelFamily.make("independent", 0.1).q_x == pytest.approx(0.18)
    assert ChannelFamily.make("dependent", 0.1).q_x == 0.1
    assert ChannelFamily.make("custom", 0.1, 0.3).q_x == 0.3
    with pytest.raises(DomainError):
        ChannelFamily.make("custom", 0.1)
    with pytest.raises(DomainError):
        ChannelFamily.make("dependent", 0.1, 0.2)
    with pytest.raises(DomainError):
        ChannelFamily.make("other", 0.1)


@pytest.mark.parametrize("mode", [Mode.MODE2, Mode.MODE3])
def test_noiseless_rate(mode):
    r = key_rate(mode, symmetric_stats(0.0, 0.0, 0.0, mode))
    assert r.rate == 1.0
    assert r.effective_rate == 0.5
    assert r.lambda2_worst == 0.0


def test_h_a_given_b_anchors():
    assert h_a_given_b(norms_from_stats(symmetric_stats(0.0, 0.0, 0.0))) == 0.0
    nm = norms_from_stats(symmetric_stats(0.1, 0.1, 0.0))
    assert h_a_given_b(nm) == pytest.approx(binary_entropy(0.01 / 0.82), abs=1e-12)
    assert h_a_given_b(nm) == pytest.approx(0.095, abs=5e-4)
    with pytest.raises(DomainError):
        h_a_given_b(nm, n=0.0)


def test_uniform_key_table_has_unit_entropy():
    nm = norms_from_stats(symmetric_stats(0.5, 0.5, 0.0))
    assert h_a_given_b(nm) == pytest.approx(1.0)


@given(st.floats(0.0, 0.5))
def test_key_error_is_cad_block_two(q):
    assert key_error(q) == cad_error(2, q)
    if q > 0:
        assert key_error(q) == pytest.approx(q * q / (q * q + (1 - q) ** 2), rel=1e-12)


def test_dense_grid_oracle_for_lambda2():
    b = mode3_bounds(symmetric_stats(0.1, 0.1, 0.1))
    val, l2, l1 = entropy_lower_bound(b)
    lo, hi = lambda2_interval(b)
    dense = entropy_objective(b)(np.linspace(lo, hi, 1_000_001)).min()
    assert val == pytest.approx(dense, abs=1e-6)
    assert val <= dense + 1e-12
    assert l1 + l2 == pytest.approx(b.lambda_sum)
    assert abs(l1) <= b.cs1 + 1e-12 and abs(l2) <= b.cs2 + 1e-12


def test_empty_interval_is_infeasible():
    b = mode3_bounds(symmetric_stats(0.1, 0.1, 0.1))
    with pytest.raises(InfeasibleError):
        lambda2_interval(b, total=b.cs1 + b.cs2 + 0.1)


def test_rate_near_mode3_dependent_threshold():
    r = channel_rate(Mode.MODE3, ChannelFamily.make("dependent", 0.26))
    assert r.rate == pytest.approx(0.0, abs=0.01)


def test_three_bases_beat_two():
    fam = ChannelFamily.make("independent", 0.1)
    assert channel_rate(3, fam).rate > channel_rate(2, fam).rate


@pytest.mark.parametrize("q", np.linspace(0.0, 0.5, 50))
def test_bound_sound_against_exact_entropy(q):
    att = depolarizing_attack(q)
    try:
        exact = exact_conditional_entropy(att)
    except Exception:
        pytest.skip("no key rounds")
    r = key_rate(Mode.MODE3, observables(att))
    assert r.s_ae_lower <= exact + 1e-9


@pytest.mark.parametrize("kind", ["independent", "dependent"])
def test_mode3_rate_monotone(kind):
    assert np.all(np.diff(_rates(Mode.MODE3, kind)) <= 1e-9)


@pytest.mark.parametrize("kind", ["independent", "dependent"])
def test_mode2_rate_monotone_when_sum_is_a_lower_bound(kind):
    assert np.all(np.diff(_rates(Mode.MODE2, kind, sum_at_least=True)) <= 1e-9)


@pytest.mark.parametrize("kind", ["independent", "dependent"])
def test_mode2_fixed_sum_rate_single_sign_change(kind):
    # pinning the sum to its lower bound is not monotone once the bound is
    # negative, far above threshold; the sign pattern still allows bisection
    r = _rates(Mode.MODE2, kind)
    positive = r > 0
    assert positive[0] and not positive[-1]
    assert np.count_nonzero(np.diff(positive.astype(int))) == 1
    assert np.all(np.diff(r[GRID <= 0.2]) <= 1e-9)


def test_fixed_sum_never_above_free_sum():
    for q in (0.05, 0.1, 0.12):
        fam = ChannelFamily.make("independent", q)
        fixed = channel_rate(2, fam).s_ae_lower
        free = channel_rate(2, fam, sum_at_least=True).s_ae_lower
        assert free <= fixed + 1e-9


def test_threshold_ordering():
    t = {(m, k): noise_threshold(m, k) for m in (2, 3) for k in ("independent", "dependent")}
    for k in ("independent", "dependent"):
        assert t[(3, k)] >= t[(2, k)]
    for m in (2, 3):
        assert t[(m, "dependent")] >= t[(m, "independent")]


def test_threshold_rejects_custom():
    with pytest.raises(DomainError):
        noise_threshold(3, "custom")


def test_sweep_rows_shape():
    rows = list(sweep_rows(3, "independent", [0.0, 0.1]))
    assert len(rows) == 2 and len(rows[0]) == 9
    assert rows[0][6] == 1.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_custom_channel_rate_bounded(q, q_x):
    try:
        r = channel_rate(3, ChannelFamily.make("custom", q, q_x))
    except InfeasibleError:
        return
    assert 0.0 <= r.s_ae_lower <= 1.0 + 1e-12
    assert r.rate <= 1.0 + 1e-12
