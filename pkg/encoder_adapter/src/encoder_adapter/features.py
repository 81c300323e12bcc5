"""Log-mel spectrogram front end.

Frames are strictly causal: frame k covers samples [k*hop, k*hop + n_fft),
with no center padding, so everything a frame sees ends at its own right
edge. All downstream causality guarantees rest on this.
"""

from __future__ import annotations

import numpy as np
import torch

SAMPLE_RATE = 16_000
N_FFT = 400  # 25 ms
HOP = 160  # 10 ms
N_MELS = 80

CHUNK_MS = 40
SAMPLES_PER_CHUNK = SAMPLE_RATE * CHUNK_MS // 1000  # 640
FRAMES_PER_CHUNK = SAMPLES_PER_CHUNK // HOP  # 4


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def mel_filterbank(
    n_mels: int = N_MELS, n_fft: int = N_FFT, sample_rate: int = SAMPLE_RATE
) -> np.ndarray:
    """Triangular mel filters, shape (n_mels, n_fft // 2 + 1)."""
    n_bins = n_fft // 2 + 1
    fft_freqs = np.linspace(0.0, sample_rate / 2.0, n_bins)
    mel_points = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bank = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lower, center, upper = hz_points[m : m + 3]
        rising = (fft_freqs - lower) / max(center - lower, 1e-9)
        falling = (upper - fft_freqs) / max(upper - center, 1e-9)
        bank[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


_WINDOW = torch.hann_window(N_FFT)
_BANK = torch.tensor(mel_filterbank(), dtype=torch.float32)


def log_mel_frames(audio: np.ndarray) -> torch.Tensor:
    """Causal log-mel frames, shape (n_frames, N_MELS).

    Audio shorter than one frame yields zero frames.
    """
    wave = torch.as_tensor(np.asarray(audio, dtype=np.float32))
    if wave.numel() < N_FFT:
        return torch.zeros((0, N_MELS))
    spec = torch.stft(
        wave,
        n_fft=N_FFT,
        hop_length=HOP,
        window=_WINDOW,
        center=False,
        return_complex=True,
    )
    power = spec.abs() ** 2  # (n_bins, n_frames)
    mel = _BANK @ power
    return torch.log10(torch.clamp(mel, min=1e-10)).T.contiguous()


def frame_for_chunk(chunk: int) -> int:
    """Index of the last frame ending at or before the start of `chunk`.

    The likelihood row for chunk i conditions on audio up to the end of
    chunk i-1, i.e. sample i * SAMPLES_PER_CHUNK; the frame ending there is
    4*i - 3 (frames end at k*HOP + N_FFT).
    """
    return max(0, FRAMES_PER_CHUNK * chunk - 3)


def n_chunks_for_samples(n_samples: int) -> int:
    return int(np.ceil(n_samples / SAMPLES_PER_CHUNK))
