import math

import numpy as np
import pytest

from hankelrecon.metrics import effective_rank, hankel_singular_values
from hankelrecon.signal_model import (
    TABLE_NOISE_STD,
    ExponentialModel,
    NoiseSpec,
    PeakParams,
    TrainingRanges,
    add_noise,
    noise,
    rng_state,
    sample_noise_std,
    sample_training_model,
    synthesize,
    table_signal,
)


def test_single_peak_closed_form():
    pk = PeakParams(0.7, 20.0, 0.125, 0.5)
    x = synthesize(ExponentialModel((pk,), 1.0, 16))
    n = np.arange(16)
    expect = 0.7 * np.exp(0.5j) * np.exp(-n / 20.0) * np.exp(2j * np.pi * 0.125 * n)
    np.testing.assert_allclose(x, expect, rtol=1e-14)
    assert x[0] == pytest.approx(0.7 * np.exp(0.5j))


def test_sample_interval_scales_time():
    pk = PeakParams(1.0, 10.0, 0.1, 0.0)
    x = synthesize(ExponentialModel((pk,), 0.5, 8))
    assert x[2] == pytest.approx(np.exp(-1.0 / 10.0) * np.exp(2j * np.pi * 0.1 * 1.0))


def test_empty_model_is_zero():
    assert not np.any(synthesize(ExponentialModel((), 1.0, 7)))


@pytest.mark.parametrize("kw", [
    dict(amplitude=0.0, damping=1.0, frequency=0.1, phase=0.0),
    dict(amplitude=1.0, damping=-1.0, frequency=0.1, phase=0.0),
    dict(amplitude=1.0, damping=1.0, frequency=1.0, phase=0.0),
    dict(amplitude=1.0, damping=1.0, frequency=0.1, phase=2 * math.pi),
])
def test_peak_validation(kw):
    with pytest.raises(ValueError):
        PeakParams(**kw)


def test_model_validation():
    with pytest.raises(ValueError):
        ExponentialModel((), 1.0, 0)
    with pytest.raises(ValueError):
        ExponentialModel((), 0.0, 8)


def test_table_signals():
    s2 = table_signal("S2")
    assert s2.length == 255 and s2.sample_interval == 1.0
    assert [p.amplitude for p in s2.peaks] == [0.100, 0.325, 0.550, 0.775, 1.000]
    assert [p.damping for p in s2.peaks] == [50.0, 75.0, 100.0, 125.0, 150.0]
    assert [p.frequency for p in s2.peaks] == [0.165, 0.333, 0.498, 0.667, 0.831]
    np.testing.assert_allclose([p.phase for p in s2.peaks], [0.4 * math.pi, 0.8 * math.pi, 1.2 * math.pi,
                                                              1.6 * math.pi, 0.0], atol=1e-12)
    s1 = table_signal("s1")
    assert [p.amplitude for p in s1.peaks] == [0.300, 0.475, 0.650, 0.825, 1.000]
    assert TABLE_NOISE_STD == 0.03
    with pytest.raises(ValueError):
        table_signal("S3")


def test_table_signal_rank_five():
    x = synthesize(table_signal("S2"))
    s = hankel_singular_values(x)
    assert np.count_nonzero(s > 1e-8 * s[0]) == 5
    assert effective_rank(x) == 5


def test_without_drops_one_peak():
    m = table_signal("S2")
    assert len(m.without(0).peaks) == 4
    assert m.without(4).peaks == m.peaks[:4]


def test_training_sampling_respects_ranges():
    ranges = TrainingRanges()
    rng = np.random.default_rng(5)
    for _ in range(200):
        m = sample_training_model(ranges, rng)
        assert 1 <= len(m.peaks) <= 10
        for p in m.peaks:
            assert 0.05 <= p.amplitude <= 1.0
            assert 10.0 <= p.damping <= 179.2
            assert 0.0 <= p.frequency < 1.0
            assert 0.0 <= p.phase < 2 * math.pi
    for _ in range(100):
        assert 0.0 <= sample_noise_std(ranges, rng) <= 0.04


def test_training_ranges_validation():
    with pytest.raises(ValueError):
        TrainingRanges(amplitude=(1.0, 0.5))


def test_training_sampling_deterministic():
    assert sample_training_model(rng=7) == sample_training_model(rng=7)


def test_noise_deterministic_and_scaled():
    spec = NoiseSpec("gaussian", 0.03, seed=11)
    a = noise((20000,), spec)
    np.testing.assert_array_equal(a, noise((20000,), spec))
    assert np.std(a.real) == pytest.approx(0.03, rel=0.03)
    assert np.std(a.imag) == pytest.approx(0.03, rel=0.03)
    u = noise((20000,), NoiseSpec("uniform", 0.1, 3))
    assert np.max(np.abs(u.real)) <= 0.1 and np.max(np.abs(u.imag)) <= 0.1


def test_zero_noise_returns_exact_copy():
    x = synthesize(table_signal("S1"))
    y = add_noise(x, NoiseSpec("gaussian", 0.0, 1))
    np.testing.assert_array_equal(x, y)
    assert y is not x


def test_noise_spec_metadata_and_validation():
    md = NoiseSpec("uniform", 0.2, 4).metadata()
    assert md["kind"] == "uniform" and md["seed"] == 4 and "convention" in md
    with pytest.raises(ValueError):
        NoiseSpec("laplace", 0.1)
    with pytest.raises(ValueError):
        NoiseSpec("gaussian", -1.0)


def test_rng_state_reproducible():
    assert rng_state(3) == rng_state(3)
    assert rng_state(3) != rng_state(4)
