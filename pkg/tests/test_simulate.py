"""Tests for the discrete-event simulator and its capacity estimators."""

import io
import math

import numpy as np
import pytest

from qcl.capacity import QueueChannelSpec, erasure_capacity
from qcl.channels import (ERASED, BinarySymmetric, BitFlipModel,
                          DecoherenceModel, Erasure, RandomBijective,
                          bernoulli_noise, xor_table)
from qcl.queueing import (DelayConvention, Deterministic, Exponential,
                          InstabilityError, PoissonArrivals)
from qcl.simulate import (EstimateWithError, estimate_bijective_bounds,
                          estimate_bsc_capacity, estimate_erasure_capacity,
                          estimate_expectation_over_pi, simulate_transmission,
                          stratified_erasure_capacity, sweep_rows,
                          validate_formula)


def _spec(lam=0.5, kappa=1.0, channel=None, service=None, convention=None,
          csir=False):
    return QueueChannelSpec(
        arrival=PoissonArrivals(lam),
        service=service or Exponential(1.0),
        channel=channel or Erasure(DecoherenceModel.exponential(kappa), 2),
        delay_convention=convention or DelayConvention.WAITING_BEFORE_SERVICE,
        receiver_knows_timing=csir)


def _bsc_spec(lam=0.5, kappa=1.0, **kw):
    return _spec(lam, channel=BinarySymmetric(BitFlipModel.exponential(kappa)),
                 **kw)


def _bijective_spec(lam=0.5, kappa=1.0):
    channel = RandomBijective((0, 1), xor_table(2),
                              bernoulli_noise(BitFlipModel.exponential(kappa)))
    return _spec(lam, channel=channel)


def test_transcript_is_a_fifo_queue():
    t = simulate_transmission(_spec(0.7), 5000, seed=3)
    d_prev = 0.0
    for j in range(len(t)):
        expected = max(d_prev, t.a[j]) + t.s[j]
        assert t.d[j] == pytest.approx(expected, abs=1e-9)
        d_prev = t.d[j]
    # waiting-before-service delay is departure - arrival - service
    np.testing.assert_allclose(t.w, t.d - t.a - t.s, atol=1e-9)
    assert np.all(t.w >= 0.0)


def test_sojourn_convention_delay():
    t = simulate_transmission(_spec(0.7, convention=DelayConvention.SOJOURN),
                              5000, seed=3)
    np.testing.assert_allclose(t.w, t.d - t.a, atol=1e-9)
    assert np.all(t.w >= t.s - 1e-12)


def test_same_seed_reproduces_transcript():
    t1 = simulate_transmission(_spec(), 2000, seed=11)
    t2 = simulate_transmission(_spec(), 2000, seed=11)
    for name in ("x", "a", "d", "s", "w", "y"):
        np.testing.assert_array_equal(getattr(t1, name), getattr(t2, name))
    t3 = simulate_transmission(_spec(), 2000, seed=12)
    assert not np.array_equal(t1.y, t3.y)


def test_zero_length_and_unstable_transmission():
    empty = simulate_transmission(_spec(), 0, seed=1)
    assert len(empty) == 0
    with pytest.raises(InstabilityError):
        simulate_transmission(_spec(1.2), 100, seed=1)
    with pytest.raises(ValueError):
        simulate_transmission(_spec(), -1, seed=1)


def test_erasure_transcript_never_flips_symbols():
    t = simulate_transmission(_spec(0.8, kappa=2.0), 20000, seed=5)
    erased = t.y == ERASED
    assert erased.any() and (~erased).any()
    np.testing.assert_array_equal(t.y[~erased], t.x[~erased])


def test_erasure_estimate_matches_closed_form():
    spec = _spec(0.5, 1.0)
    est = estimate_erasure_capacity(simulate_transmission(spec, 200_000, seed=7))
    target = erasure_capacity(spec).bits_per_sec
    assert target == pytest.approx(1.0 / 3.0)
    assert abs(est.value - target) <= 4.0 * est.std_error
    assert est.std_error < 0.01
    assert {"erased_fraction", "binomial_std_error", "batches"} <= set(est.details)
    # batch-means error should not undercut the iid binomial error
    assert est.std_error >= 0.5 * est.details["binomial_std_error"]


def test_erasure_estimator_input_checks():
    with pytest.raises(ValueError):
        estimate_erasure_capacity(simulate_transmission(_spec(), 0, seed=1))
    bsc_t = simulate_transmission(_bsc_spec(), 100, seed=1)
    with pytest.raises(TypeError):
        estimate_erasure_capacity(bsc_t)
    with pytest.raises(TypeError):
        stratified_erasure_capacity(bsc_t)


def test_stratified_estimate_telescopes_to_plain():
    t = simulate_transmission(_spec(0.6, 0.5), 50_000, seed=9)
    plain = estimate_erasure_capacity(t)
    strat = stratified_erasure_capacity(t, buckets=32)
    assert strat.value == pytest.approx(plain.value, abs=1e-12)
    assert strat.details["buckets"] <= 32


def test_expectation_over_pi_mean_wait():
    # M/M/1 at lam=0.5: E[Wq] = rho/(mu - lam) = 1.0
    est = estimate_expectation_over_pi(lambda w: w, _spec(0.5), 200_000, seed=13)
    assert abs(est.value - 1.0) <= 4.0 * est.std_error
    assert est.details["burn_in"] > 0


def test_expectation_over_pi_rejects_non_elementwise():
    with pytest.raises(ValueError):
        estimate_expectation_over_pi(lambda w: np.mean(w), _spec(0.5), 1000,
                                     seed=1)


def test_bsc_estimates_and_timing_gain():
    t = simulate_transmission(_bsc_spec(0.5), 200_000, seed=17)
    blind = estimate_bsc_capacity(t, csir=False)
    aware = estimate_bsc_capacity(t, csir=True)
    # concavity of entropy makes the timing-aware plug-in >= blind pointwise
    assert aware.value >= blind.value - 1e-12
    assert abs(blind.value - 0.17498878917582289) <= 4.0 * blind.std_error
    assert 0.0 < blind.details["mean_flip"] < 0.5
    with pytest.raises(TypeError):
        estimate_bsc_capacity(simulate_transmission(_spec(), 100, seed=1),
                              csir=False)


def test_bijective_bounds_bracket_and_order():
    for seed in range(5):
        lower, upper, csir = estimate_bijective_bounds(_bijective_spec(),
                                                       20_000, seed=seed)
        assert lower.value <= upper.value + 1e-12
        assert isinstance(csir, EstimateWithError)
    with pytest.raises(ValueError):
        estimate_bijective_bounds(_bijective_spec(), 1, seed=0)
    with pytest.raises(TypeError):
        estimate_bijective_bounds(_bsc_spec(), 100, seed=0)


def test_validate_formula_reports():
    good = validate_formula(1.0, EstimateWithError(1.001, 0.001, 100))
    assert good.passed and good.sigma_distance == pytest.approx(1.0)
    bad = validate_formula(1.0, EstimateWithError(1.01, 0.001, 100))
    assert not bad.passed and bad.sigma_distance == pytest.approx(10.0)
    assert "FAIL" in str(bad) and "pass" in str(good)
    exact = validate_formula(2.0, EstimateWithError(2.0, 0.0, 1))
    assert exact.passed
    off = validate_formula(2.0, EstimateWithError(2.1, 0.0, 1))
    assert not off.passed and math.isinf(off.sigma_distance)
    # plain floats work too
    assert validate_formula(0.5, 0.5).passed


def test_sweep_rows_analytic_only():
    rows = sweep_rows([0.0, 0.3, 0.6], [0.5, 1.0], n=0)
    assert len(rows) == 6
    assert [r["kappa"] for r in rows] == [0.5, 0.5, 0.5, 1.0, 1.0, 1.0]
    assert rows[0]["capacity_analytic"] == 0.0
    expected = erasure_capacity(_spec(0.3, 0.5)).bits_per_sec
    assert rows[1]["capacity_analytic"] == pytest.approx(expected, abs=1e-15)
    assert all(r["capacity_mc"] is None and r["mc_stderr"] is None
               for r in rows)


def test_sweep_rows_drops_unstable_rates_with_warning():
    with pytest.warns(UserWarning, match="stability"):
        rows = sweep_rows([0.5, 1.0, 1.5], [1.0], n=0)
    assert [r["lambda"] for r in rows] == [0.5]


def test_sweep_rows_threaded_matches_serial():
    grid = dict(lambdas=[0.2, 0.5, 0.8], kappas=[1.0], n=2000, seed=21)
    serial = sweep_rows(jobs=1, **grid)
    threaded = sweep_rows(jobs=4, **grid)
    assert serial == threaded
    for row in serial:
        assert row["mc_stderr"] > 0.0
        assert abs(row["capacity_mc"] - row["capacity_analytic"]) <= \
            6.0 * row["mc_stderr"]


def test_sweep_rows_deterministic_service():
    rows = sweep_rows([0.4], [1.0], n=0, service=Deterministic(1.0))
    expected = erasure_capacity(_spec(0.4, service=Deterministic(1.0))).bits_per_sec
    assert rows[0]["capacity_analytic"] == pytest.approx(expected, abs=1e-15)


def test_to_csv_format_and_determinism(tmp_path):
    t = simulate_transmission(_spec(0.8, kappa=2.0), 500, seed=5)
    buf = io.StringIO()
    t.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "index,x,a,d,s,w,y"
    assert len(lines) == 501
    assert any(line.endswith(",?") for line in lines[1:])
    # same seed, same bytes
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    t.to_csv(p1)
    simulate_transmission(_spec(0.8, kappa=2.0), 500, seed=5).to_csv(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_estimate_with_error_validation():
    with pytest.raises(ValueError):
        EstimateWithError(value=1.0, std_error=-0.1, n=10)
