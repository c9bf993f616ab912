"""Unit tests for the delay-dependent channels: error models, symbol
transmission, entropy helpers, and the bijection wire format."""

import json
import math

import numpy as np
import pytest

from qcl.channels import (ERASED, BinarySymmetric, BitFlipModel,
                          DecoherenceModel, Erasure, RandomBijective,
                          alphabet_size, apply_channel, bernoulli_noise,
                          binary_entropy, discrete_entropy, dump_bijection,
                          load_bijection, wait_geometric_noise, xor_table)


def test_decoherence_exponential_family_shape():
    model = DecoherenceModel.exponential(1.0)
    assert model.kappa == 1.0
    assert model.error_prob(0.0) == 0.0
    assert model.error_prob(50.0) == pytest.approx(1.0)
    w = np.array([0.0, 0.5, 2.0])
    assert np.allclose(model.error_prob(w), 1.0 - np.exp(-w))
    assert model.laplace(1.0) == pytest.approx(0.5)  # kappa/(u*(u+kappa))


def test_decoherence_noiseless_and_invalid_kappa():
    silent = DecoherenceModel.exponential(0.0)
    assert np.all(silent.error_prob(np.array([0.0, 3.0, 100.0])) == 0.0)
    assert silent.laplace(2.0) == 0.0
    with pytest.raises(ValueError):
        DecoherenceModel.exponential(-0.1)


def test_decoherence_rejects_out_of_range_probability():
    broken = DecoherenceModel(p=lambda w: np.asarray(w) * 2.0)
    with pytest.raises(ValueError):
        broken.error_prob(3.0)


def test_bit_flip_stays_below_one_half():
    flip = BitFlipModel.exponential(2.0)
    assert flip.flip_prob(0.0) == 0.0
    assert flip.flip_prob(100.0) == pytest.approx(0.5)
    assert np.all(flip.flip_prob(np.linspace(0, 10, 50)) <= 0.5)
    broken = BitFlipModel(phi=lambda w: np.full_like(np.asarray(w, float), 0.7))
    with pytest.raises(ValueError):
        broken.flip_prob(1.0)


def test_channel_constructors_validate():
    with pytest.raises(ValueError):
        Erasure(DecoherenceModel.exponential(1.0), alphabet_size=1)
    assert alphabet_size(Erasure(DecoherenceModel.exponential(1.0), 4)) == 4
    assert alphabet_size(BinarySymmetric(BitFlipModel.exponential(1.0))) == 2


def test_random_bijective_table_validation():
    noise = bernoulli_noise(BitFlipModel.exponential(1.0))
    ch = RandomBijective((0, 1), ((0, 1), (1, 0)), noise)
    assert ch.size == 2
    with pytest.raises(ValueError):  # row is not a permutation
        RandomBijective((0, 1), ((0, 0), (1, 0)), noise)
    with pytest.raises(ValueError):  # wrong shape
        RandomBijective((0, 1, 2), ((0, 1), (1, 0)), noise)
    with pytest.raises(ValueError):  # duplicate symbols
        RandomBijective((0, 0), ((0, 1), (1, 0)), noise)
    with pytest.raises(ValueError):  # single symbol
        RandomBijective((0,), ((0,),), noise)


def test_noise_dist_is_validated_simplex():
    ch = RandomBijective((0, 1), xor_table(2),
                         bernoulli_noise(BitFlipModel.exponential(1.0)))
    probs = ch.noise_dist(np.array([0.0, 1.0, 10.0]))
    assert probs.shape == (3, 2)
    assert np.allclose(probs.sum(axis=1), 1.0)
    bad = RandomBijective((0, 1), xor_table(2), lambda w: np.array([0.9, 0.9]))
    with pytest.raises(ValueError):
        bad.noise_dist(1.0)
    short = RandomBijective((0, 1), xor_table(2), lambda w: np.array([1.0]))
    with pytest.raises(ValueError):
        short.noise_dist(1.0)


def test_xor_table_is_group_table():
    assert xor_table(2) == ((0, 1), (1, 0))
    table = np.array(xor_table(5))
    want = np.arange(5)
    for row in table:
        assert np.array_equal(np.sort(row), want)
    for col in table.T:
        assert np.array_equal(np.sort(col), want)


def test_bernoulli_noise_law():
    law = bernoulli_noise(BitFlipModel.exponential(1.0))
    assert np.allclose(law(0.0), [1.0, 0.0])
    q = -0.5 * math.expm1(-2.0)
    assert np.allclose(law(2.0), [1.0 - q, q])


def test_wait_geometric_noise_limits():
    law = wait_geometric_noise(1.0, 4)
    assert np.allclose(law(0.0), [1.0, 0.0, 0.0, 0.0])
    spread = law(200.0)
    assert np.allclose(spread, 0.25, atol=1e-6)  # flattens toward uniform
    rows = law(np.array([0.1, 1.0, 5.0]))
    assert rows.shape == (3, 4)
    assert np.allclose(rows.sum(axis=1), 1.0)
    # heavier waits push mass to higher noise symbols
    assert rows[0, 0] > rows[2, 0]
    with pytest.raises(ValueError):
        wait_geometric_noise(-1.0, 3)
    with pytest.raises(ValueError):
        wait_geometric_noise(1.0, 1)


def test_erasure_never_outputs_wrong_symbol():
    ch = Erasure(DecoherenceModel.exponential(1.0), alphabet_size=3)
    rng = np.random.default_rng(55)
    x = rng.integers(0, 3, size=20_000)
    w = rng.exponential(1.0, size=20_000)
    y = apply_channel(ch, x, w, rng)
    assert set(np.unique(y)) <= {ERASED, 0, 1, 2}
    kept = y != ERASED
    assert np.array_equal(y[kept], x[kept])
    assert 0 < kept.mean() < 1


def test_erasure_fraction_tracks_error_probability():
    ch = Erasure(DecoherenceModel.exponential(1.0), alphabet_size=2)
    rng = np.random.default_rng(56)
    n = 200_000
    x = np.zeros(n, dtype=int)
    w = np.full(n, 0.7)
    y = apply_channel(ch, x, w, rng)
    p = -math.expm1(-0.7)
    frac = (y == ERASED).mean()
    assert frac == pytest.approx(p, abs=4 * math.sqrt(p * (1 - p) / n))
    assert np.all(apply_channel(ch, x, np.zeros(n), rng) == 0)


def test_bsc_flips_track_flip_probability():
    ch = BinarySymmetric(BitFlipModel.exponential(1.0))
    rng = np.random.default_rng(57)
    n = 200_000
    x = rng.integers(0, 2, size=n)
    w = np.full(n, 1.5)
    y = apply_channel(ch, x, w, rng)
    q = -0.5 * math.expm1(-1.5)
    frac = (y != x).mean()
    assert frac == pytest.approx(q, abs=4 * math.sqrt(q * (1 - q) / n))
    assert set(np.unique(y)) <= {0, 1}


def test_xor_bernoulli_matches_bsc_distribution():
    # the XOR table driven by Bernoulli(phi(w)) noise IS the flip channel
    rng_w = np.random.default_rng(58)
    w = rng_w.exponential(1.0, size=200_000)
    x = rng_w.integers(0, 2, size=200_000)
    y_bsc = apply_channel(BinarySymmetric(BitFlipModel.exponential(1.0)),
                          x, w, np.random.default_rng(1))
    y_xor = apply_channel(
        RandomBijective((0, 1), xor_table(2),
                        bernoulli_noise(BitFlipModel.exponential(1.0))),
        x, w, np.random.default_rng(2))
    f1, f2 = (y_bsc != x).mean(), (y_xor != x).mean()
    se = math.sqrt(2 * 0.25 / x.size)
    assert f1 == pytest.approx(f2, abs=4 * se)


def test_apply_channel_scalar_round_trip():
    ch = Erasure(DecoherenceModel.exponential(1.0))
    y = apply_channel(ch, 1, 0.0, np.random.default_rng(0))
    assert isinstance(y, int) and y == 1
    ch2 = RandomBijective((0, 1), xor_table(2),
                          bernoulli_noise(BitFlipModel.exponential(1.0)))
    assert apply_channel(ch2, 0, 0.0, np.random.default_rng(0)) == 0


def test_apply_channel_input_validation():
    ch = Erasure(DecoherenceModel.exponential(1.0))
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        apply_channel(ch, 2, 1.0, rng)  # outside binary alphabet
    with pytest.raises(ValueError):
        apply_channel(ch, 0, -1.0, rng)  # negative wait
    with pytest.raises(TypeError):
        apply_channel(object(), 0, 1.0, rng)


def test_apply_channel_bijective_uses_table_rows():
    table = ((1, 0, 2), (2, 1, 0), (0, 2, 1))
    ch = RandomBijective((0, 1, 2), table, wait_geometric_noise(1.0, 3))
    y = apply_channel(ch, np.array([0, 1, 2]), np.zeros(3),
                      np.random.default_rng(0))
    # zero wait pins the noise symbol to 0, so y = table[x][0]
    assert np.array_equal(y, [1, 2, 0])


def test_binary_entropy_values():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.11) == pytest.approx(0.4999159581645280, abs=1e-13)
    assert binary_entropy(1.0 / 6.0) == pytest.approx(0.6500224216483542,
                                                      abs=1e-13)
    arr = binary_entropy(np.array([0.0, 0.5, 1.0]))
    assert np.allclose(arr, [0.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        binary_entropy(1.2)
    with pytest.raises(ValueError):
        binary_entropy(-0.01)


def test_binary_entropy_concavity():
    rng = np.random.default_rng(60)
    for _ in range(200):
        p, q = rng.random(2)
        a = rng.random()
        mixed = binary_entropy(a * p + (1 - a) * q)
        parts = a * binary_entropy(p) + (1 - a) * binary_entropy(q)
        assert mixed >= parts - 1e-12


def test_discrete_entropy_values():
    assert discrete_entropy([0.25, 0.25, 0.25, 0.25]) == pytest.approx(2.0)
    assert discrete_entropy([1.0, 0.0, 0.0]) == 0.0
    both = discrete_entropy(np.array([[0.5, 0.5], [1.0, 0.0]]))
    assert np.allclose(both, [1.0, 0.0])
    assert discrete_entropy([0.5, 0.5]) == binary_entropy(0.5)
    with pytest.raises(ValueError):
        discrete_entropy([0.6, 0.6])
    with pytest.raises(ValueError):
        discrete_entropy([1.5, -0.5])


def test_bijection_json_round_trip(tmp_path):
    alphabet = ("a", "b", "c")
    table = ((1, 2, 0), (0, 1, 2), (2, 0, 1))
    doc = dump_bijection(alphabet, table)
    assert doc["alphabet"] == ["a", "b", "c"]
    assert doc["g"]["a"] == ["b", "c", "a"]
    assert load_bijection(doc) == (alphabet, table)
    path = tmp_path / "bijection.json"
    path.write_text(json.dumps(doc))
    assert load_bijection(str(path)) == (alphabet, table)
    with open(path) as fh:
        assert load_bijection(fh) == (alphabet, table)


def test_load_bijection_rejects_malformed_documents():
    with pytest.raises(ValueError):
        load_bijection({"alphabet": [0, 1]})  # missing g
    with pytest.raises(ValueError):
        load_bijection({"alphabet": [0, 1], "g": {"0": [0, 1]}})  # missing row
    with pytest.raises(ValueError):
        load_bijection({"alphabet": [0, 1],
                        "g": {"0": [0, 1], "1": [0, 7]}})  # alien symbol
    with pytest.raises(ValueError):
        load_bijection({"alphabet": [0, 1],
                        "g": {"0": [0, 1], "1": [0]}})  # short row
    with pytest.raises(ValueError):
        load_bijection({"alphabet": [0, 0], "g": {"0": [0, 0]}})  # dup symbols
