"""Local operators on emitter and time-bin spaces.

Basis conventions: a two-level emitter is ordered (ground, excited); a bin
channel is ordered by photon number (0, 1, ...). Multi-emitter and
multi-channel spaces are row-major Kronecker products, emitter 1 (or the
right-moving channel) first.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .tensor_core import kron_all

RIGHT = 0
LEFT = 1
_CHANNELS = {"R": RIGHT, "r": RIGHT, "right": RIGHT, "L": LEFT, "l": LEFT, "left": LEFT}


def channel_index(channel) -> int:
    if isinstance(channel, (int, np.integer)):
        return int(channel)
    try:
        return _CHANNELS[channel]
    except KeyError:
        raise ValueError(f"unknown channel {channel!r}; use 'R' or 'L'") from None


def destroy(d: int) -> np.ndarray:
    """Truncated bosonic annihilation operator of extent ``d``."""
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(np.complex128)


def sigma_minus() -> np.ndarray:
    return np.array([[0, 1], [0, 0]], dtype=np.complex128)


def sigma_plus() -> np.ndarray:
    return sigma_minus().conj().T


def tls_pop() -> np.ndarray:
    """Excited-state projector of a single emitter."""
    return np.array([[0, 0], [0, 1]], dtype=np.complex128)


def embed(op, position: int, dims: Sequence[int]) -> np.ndarray:
    """Place a local operator at ``position`` of a product space."""
    ops = [np.eye(d, dtype=np.complex128) for d in dims]
    ops[position] = np.asarray(op, dtype=np.complex128)
    return kron_all(*ops)


def emitter_op(op, which: int, d_sys: Sequence[int]) -> np.ndarray:
    """Single-emitter operator extended to the joint emitter space."""
    return embed(op, which, d_sys)


def tls_pop_ops(d_sys: Sequence[int]) -> list[np.ndarray]:
    return [emitter_op(tls_pop(), i, d_sys) for i in range(len(d_sys))]


def channel_op(op, channel, d_t: Sequence[int]) -> np.ndarray:
    return embed(op, channel_index(channel), d_t)


def bin_number(d_t: Sequence[int], channel=RIGHT) -> np.ndarray:
    """Photon number ``a^dag a`` of one channel of a bin."""
    d = d_t[channel_index(channel)]
    a = destroy(d)
    return channel_op(a.conj().T @ a, channel, d_t)


def bin_number_total(d_t: Sequence[int]) -> np.ndarray:
    return sum(bin_number(d_t, c) for c in range(len(d_t)))


def b_pop(d_t: Sequence[int], delta_t: float, channel=RIGHT) -> np.ndarray:
    """Flux operator ``dB^dag dB / dt^2`` of one channel (photons per unit time)."""
    return bin_number(d_t, channel) / delta_t


def b_pop_total(d_t: Sequence[int], delta_t: float) -> np.ndarray:
    return bin_number_total(d_t) / delta_t


def noise_annihilator(d_t: Sequence[int], delta_t: float, channel=RIGHT) -> np.ndarray:
    """``Delta B`` of one channel on the full bin space (scaled by sqrt(dt))."""
    d = d_t[channel_index(channel)]
    return np.sqrt(delta_t) * channel_op(destroy(d), channel, d_t)
