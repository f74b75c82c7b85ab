"""Input checks shared by the estimator wrappers.

scikit-learn's ``check_array`` rejects complex data, so received samples and
channel objects are validated here.
"""

from __future__ import annotations

import numbers

import numpy as np

from .channel import ChannelRealization
from .mimo import MimoChannels


def check_bits(bits, n_bits: int) -> np.ndarray:
    """2-D array of 0/1 words with ``n_bits`` columns; a flat array is reshaped."""
    arr = np.asarray(bits)
    if arr.ndim == 1:
        if arr.size % n_bits:
            raise ValueError(f"{arr.size} bits do not split into {n_bits}-bit words")
        arr = arr.reshape(-1, n_bits)
    if arr.ndim != 2 or arr.shape[1] != n_bits:
        raise ValueError(f"expected words of {n_bits} bits, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("bits must be 0 or 1")
    return arr.astype(np.uint8)


def check_received(y, n_antennas: int = 1) -> np.ndarray:
    """Finite complex samples: shape (n,) for one antenna, (n, Nr) otherwise."""
    arr = np.asarray(y, dtype=complex)
    if n_antennas == 1:
        arr = arr.reshape(-1)
    else:
        arr = np.atleast_2d(arr)
        if arr.shape[1] != n_antennas:
            raise ValueError(f"expected {n_antennas} receive antennas, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("received samples contain NaN or inf")
    return arr


def check_channel(channel, n_elements: int, n_groups: int) -> ChannelRealization:
    if not isinstance(channel, ChannelRealization):
        raise TypeError(f"expected a ChannelRealization, got {type(channel).__name__}")
    if channel.f.shape[-1] != n_elements or channel.h.shape[-1] != n_groups:
        raise ValueError(
            f"channel has N={channel.f.shape[-1]}, L={channel.h.shape[-1]}; "
            f"the estimator expects N={n_elements}, L={n_groups}"
        )
    return channel


def check_mimo_channels(channels, cfg) -> MimoChannels:
    if not isinstance(channels, MimoChannels):
        raise TypeError(f"expected MimoChannels, got {type(channels).__name__}")
    want = {"H": (cfg.nr, cfg.nt), "F": (cfg.n_elements, cfg.nt), "G": (cfg.nr, cfg.n_elements)}
    for name, shape in want.items():
        got = getattr(channels, name).shape
        if got != shape:
            raise ValueError(f"{name} has shape {got}, expected {shape}")
    return channels


def check_random_state(seed) -> np.random.Generator:
    """None, an int seed or an existing Generator."""
    if seed is None or isinstance(seed, numbers.Integral):
        return np.random.default_rng(seed)
    if isinstance(seed, np.random.Generator):
        return seed
    raise TypeError(f"cannot build a Generator from {seed!r}")
