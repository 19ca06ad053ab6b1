"""Deterministic lossy-channel model: whole-frame erasures plus bit bursts.

All randomness comes from a counter-based generator (a splitmix64-style
avalanche over (seed, frame index, bit index)), never from sequential
state. Dropping, reordering, or re-running any subset of frames therefore
never shifts the noise applied to the others, which keeps A/B experiments
reproducible. Bit indices count MSB-first within each frame's bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from narrowcast.carousel import Frame

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_SEED_TAG = 0x6A09E667F3BCC909
_DROP_TAG = 0x243F6A8885A308D3


def _mix64(x: int) -> int:
    x &= _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


def _mix64_array(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x *= np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return x


def _frame_key(seed: int, frame_index: int) -> int:
    return _mix64(_mix64(seed ^ _SEED_TAG) + frame_index * _GOLDEN)


def _threshold(probability: float) -> int:
    # maps [0,1] to an inclusive-exclusive u64 threshold; 1.0 saturates
    if probability <= 0.0:
        return 0
    if probability >= 1.0:
        return 1 << 64
    return int(probability * float(1 << 64))


@dataclass(frozen=True)
class ChannelModel:
    frame_loss_prob: float = 0.0
    bit_error_rate: float = 0.0
    burst_len: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.frame_loss_prob <= 1.0:
            raise ValueError("frame_loss_prob must be in [0, 1]")
        if not 0.0 <= self.bit_error_rate <= 1.0:
            raise ValueError("bit_error_rate must be in [0, 1]")
        if self.burst_len < 1:
            raise ValueError("burst_len must be >= 1")


def perturb_frame(frame: Frame, model: ChannelModel) -> Optional[Frame]:
    """One frame through the channel: None when dropped, else the noisy frame."""
    key = _frame_key(model.seed, frame.index)
    if model.frame_loss_prob > 0.0:
        if _mix64(key ^ _DROP_TAG) < _threshold(model.frame_loss_prob):
            return None
    if model.bit_error_rate <= 0.0 or not frame.data:
        return frame
    nbits = len(frame.data) * 8
    counters = np.arange(2, nbits + 2, dtype=np.uint64) * np.uint64(_GOLDEN)
    counters += np.uint64(key)
    words = _mix64_array(counters)
    threshold = _threshold(model.bit_error_rate)
    if threshold >= 1 << 64:
        starts = np.arange(nbits)
    else:
        starts = np.flatnonzero(words < np.uint64(threshold))
    if starts.size == 0:
        return frame
    bits = np.unpackbits(np.frombuffer(frame.data, dtype=np.uint8))
    # each start flips burst_len consecutive bits; overlaps flip back,
    # matching sequential XOR application
    delta = np.zeros(nbits + 1, dtype=np.int64)
    np.add.at(delta, starts, 1)
    np.add.at(delta, np.minimum(starts + model.burst_len, nbits), -1)
    coverage = np.cumsum(delta[:-1])
    bits ^= (coverage & 1).astype(np.uint8)
    return Frame(
        index=frame.index,
        timestamp=frame.timestamp,
        data=np.packbits(bits).tobytes(),
    )


def perturb_iter(frames: Iterable[Frame], model: ChannelModel) -> Iterator[Frame]:
    """Streaming form of perturb; dropped frames simply never appear."""
    for frame in frames:
        survivor = perturb_frame(frame, model)
        if survivor is not None:
            yield survivor


def perturb(frames: Iterable[Frame], model: ChannelModel) -> list[Frame]:
    """Apply the channel to a frame list; survivors keep index and timestamp."""
    return list(perturb_iter(frames, model))
