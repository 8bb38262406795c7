import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmder.errors import ContractError, DataError
from mmder.signal import (
    LOG_FLOOR,
    SpectrogramConfig,
    Waveform,
    log_mel,
    mel_centers,
    mel_filterbank,
    mfcc,
    read_wav,
    spectrogram_image,
    stft,
    to_image,
    write_wav,
)

from oracles import direct_dct2_ortho, mel_centers_closed_form, naive_dft_frames, periodic_hann


def test_waveform_contract():
    with pytest.raises(ContractError):
        Waveform(np.zeros((2, 3)), 16000)
    with pytest.raises(ContractError):
        Waveform(np.zeros(3), 0)
    with pytest.raises(ContractError):
        Waveform(np.array([0.0, np.nan]), 16000)
    assert Waveform(np.zeros(8000), 16000).duration == 0.5


def test_stft_zero_signal_is_zero():
    spec = stft(Waveform(np.zeros(1024), 16000), n_fft=256, hop=128)
    assert spec.shape == (7, 129)
    assert np.all(spec == 0)


def test_stft_dc_rectangular():
    spec = stft(Waveform(np.ones(512), 16000), n_fft=256, hop=256, window="rect")
    assert np.allclose(np.abs(spec[:, 0]), 256.0)
    assert np.allclose(np.abs(spec[:, 1:]), 0.0, atol=1e-9)


def test_stft_parseval(rng):
    n = 128
    x = rng.normal(size=4 * n)
    spec = stft(Waveform(x, 8000), n_fft=n, hop=n, window="rect")
    full_energy = np.abs(spec[:, 0]) ** 2 + np.abs(spec[:, -1]) ** 2 + 2 * np.sum(np.abs(spec[:, 1:-1]) ** 2, axis=1)
    assert np.allclose(full_energy / n, np.sum(x.reshape(4, n) ** 2, axis=1))


def test_stft_matches_naive_dft(rng):
    x = rng.normal(size=700)
    got = stft(Waveform(x, 16000), n_fft=128, hop=50)
    want = naive_dft_frames(x, 128, 50, periodic_hann(128))
    assert got.shape == want.shape
    assert np.max(np.abs(got - want)) < 1e-9


def test_stft_short_input_padded_to_one_frame():
    assert stft(Waveform(np.ones(10), 16000), n_fft=64, hop=16).shape == (1, 33)


@pytest.mark.parametrize("kwargs", [{"n_fft": 100}, {"hop": 0}])
def test_stft_rejects_bad_parameters(kwargs):
    with pytest.raises(ContractError):
        stft(Waveform(np.ones(512), 16000), **{"n_fft": 128, "hop": 64, **kwargs})


def test_mel_centers_closed_form():
    assert np.allclose(mel_centers(12, 30.0, 7000.0), mel_centers_closed_form(12, 30.0, 7000.0), rtol=1e-12)


def test_filterbank_unimodal_and_bounded():
    fb = mel_filterbank(40, 512, 16000)
    assert fb.shape == (40, 257)
    assert np.all(fb >= 0) and np.all(fb.max(axis=1) <= 1.0)
    assert np.all(fb.sum(axis=0) <= 1.0 + 1e-12)
    for row in fb:
        nz = np.flatnonzero(row)
        peak = np.argmax(row)
        assert np.all(np.diff(row[nz[0] : peak + 1]) >= 0)
        assert np.all(np.diff(row[peak : nz[-1] + 1]) <= 0)


def test_filterbank_single_filter_spans_band():
    fb = mel_filterbank(1, 256, 8000)
    assert fb.shape == (1, 129)
    assert fb[0, 0] == 0.0 and fb[0, -1] == 0.0 and fb[0].max() > 0.9


def test_filterbank_rejects_bad_edges():
    with pytest.raises(ContractError):
        mel_filterbank(10, 512, 16000, f_min=9000.0)
    with pytest.raises(ContractError):
        mel_filterbank(0, 512, 16000)


def test_log_mel_of_silence_is_floor():
    cfg = SpectrogramConfig(n_mels=20)
    grid = log_mel(Waveform(np.zeros(32000), 16000), cfg)
    assert grid.shape == (1 + (32000 - 512) // 160, 20)
    assert np.all(grid == np.log(LOG_FLOOR))


@pytest.mark.parametrize("band", [8, 20, 31])
def test_sine_at_mel_center_dominates_its_filter(band):
    sr, n_mels = 16000, 40
    centers = mel_centers(n_mels, 0.0, sr / 2)
    t = np.arange(sr) / sr
    grid = log_mel(Waveform(np.sin(2 * np.pi * centers[band] * t), sr), SpectrogramConfig(n_mels=n_mels))
    assert np.all(np.argmax(grid, axis=1) == band)


def test_mfcc_matches_direct_dct(rng):
    grid = rng.normal(size=(5, 16))
    got = mfcc(grid, 10)
    for r in range(5):
        assert np.allclose(got[r], direct_dct2_ortho(grid[r])[:10], atol=1e-12)


def test_mfcc_of_constant_row():
    out = mfcc(np.full((1, 9), 2.0), 9)
    assert out[0, 0] == pytest.approx(2.0 * 3.0)
    assert np.allclose(out[0, 1:], 0.0, atol=1e-12)


def test_mfcc_full_is_invertible(rng):
    import scipy.fft

    grid = rng.normal(size=(3, 12))
    back = scipy.fft.idct(mfcc(grid, 12), type=2, norm="ortho", axis=-1)
    assert np.allclose(back, grid, atol=1e-12)


def test_mfcc_rejects_too_many_coefficients():
    with pytest.raises(ContractError, match="n_mels"):
        mfcc(np.zeros((2, 8)), 9)


def test_to_image_constant_is_zeros():
    img = to_image(np.full((5, 7), 3.0), 4, 4)
    assert img.values.shape == (4, 4) and np.all(img.values == 0.0)


def test_to_image_identity_size_is_minmax(rng):
    grid = rng.normal(size=(6, 9))
    img = to_image(grid, 6, 9).values
    assert np.allclose(img, (grid - grid.min()) / (grid.max() - grid.min()))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_to_image_range(h, w, seed):
    grid = np.random.default_rng(seed).normal(size=(7, 5))
    img = to_image(grid, h, w).values
    assert img.shape == (h, w)
    assert img.min() >= 0.0 and img.max() <= 1.0


def test_spectrogram_image_rows_are_mel_axis():
    sr = 16000
    cfg = SpectrogramConfig(n_mels=32, height=32, width=20)
    t = np.arange(2 * sr) / sr
    low = spectrogram_image(Waveform(np.sin(2 * np.pi * 300 * t), sr), cfg).values
    high = spectrogram_image(Waveform(np.sin(2 * np.pi * 5000 * t), sr), cfg).values
    assert low.shape == (32, 20)
    assert np.argmax(low.mean(axis=1)) < np.argmax(high.mean(axis=1))


def test_spectrogram_image_mfcc_height():
    cfg = SpectrogramConfig(n_mels=40, representation="mfcc", n_mfcc=13, height=16, width=16)
    img = spectrogram_image(Waveform(np.random.default_rng(0).normal(size=32000), 16000), cfg)
    assert img.values.shape == (16, 16)


def test_wav_round_trip(tmp_path, rng):
    x = np.clip(rng.normal(scale=0.3, size=4000), -0.99, 0.99)
    path = tmp_path / "a.wav"
    write_wav(path, Waveform(x, 8000))
    back = read_wav(path)
    assert back.sample_rate == 8000
    assert np.max(np.abs(back.samples - x)) <= 0.5 / 32768 + 1e-12


def test_corrupt_wav_is_data_error(tmp_path):
    path = tmp_path / "bad.wav"
    path.write_bytes(b"RIFF\x00\x00junk")
    with pytest.raises(DataError):
        read_wav(path)
