"""Initial emitter states, vacuum chains and Fock-pulse chains."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import operators as ops
from .errors import ConfigError, ContractViolation, DimensionError
from .model import SimParams
from .mps import TIME_BIN, SiteTensor
from .tensor_core import tensor_kron


@dataclass(frozen=True)
class SystemState:
    """Pure state of the emitters, emitter 1 first."""

    amplitudes: np.ndarray
    dims: tuple[int, ...] = (2,)

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "dims", tuple(self.dims))
        if amp.size != int(np.prod(self.dims)):
            raise DimensionError(f"{amp.size} amplitudes do not fit dims {self.dims}")
        if abs(np.vdot(amp, amp).real - 1.0) > 1e-12:
            raise ContractViolation("system state is not normalized")

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)

    def kron(self, other: "SystemState") -> "SystemState":
        return SystemState(tensor_kron(self.amplitudes, other.amplitudes), self.dims + other.dims)


def tls_ground() -> SystemState:
    return SystemState(np.array([1, 0]), (2,))


def tls_excited() -> SystemState:
    return SystemState(np.array([0, 1]), (2,))


def product_state(*states: SystemState) -> SystemState:
    out = states[0]
    for s in states[1:]:
        out = out.kron(s)
    return out


def entangled_pair(c1: complex, c2: complex) -> SystemState:
    """``c1 |e, g> + c2 |g, e>`` of two emitters."""
    if abs(abs(c1) ** 2 + abs(c2) ** 2 - 1.0) > 1e-12:
        raise ContractViolation("|c1|^2 + |c2|^2 must equal 1")
    e, g = tls_excited().amplitudes, tls_ground().amplitudes
    return SystemState(c1 * np.kron(e, g) + c2 * np.kron(g, e), (2, 2))


def vacuum(n_bins: int, params: SimParams) -> list[SiteTensor]:
    """Bond-1 chain of empty bins labelled 0..n_bins-1."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    empty = np.zeros((1, params.d_bin, 1), dtype=np.complex128)
    empty[0, 0, 0] = 1.0
    return [SiteTensor(empty.copy(), TIME_BIN, k) for k in range(n_bins)]


@dataclass(frozen=True)
class Envelope:
    """Pulse amplitudes ``f_k`` on the bin grid, with ``sum |f_k|^2 = 1``."""

    samples: np.ndarray
    delta_t: float

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.delta_t


def normalize_pulse(env: Envelope) -> Envelope:
    samples = np.asarray(env.samples, dtype=np.complex128)
    nrm = np.sqrt(np.sum(np.abs(samples) ** 2))
    if nrm == 0:
        raise ContractViolation("cannot normalize an all-zero envelope")
    return Envelope(samples / nrm, env.delta_t)


def gaussian_envelope(t_c: float, sigma: float, params: SimParams, pulse_time: float | None = None) -> Envelope:
    """Gaussian amplitudes sampled at ``t_k = k dt`` for ``pulse_time`` (default ``t_max``)."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    pulse_time = params.t_max if pulse_time is None else pulse_time
    n = int(round(pulse_time / params.delta_t))
    t = np.arange(n) * params.delta_t
    raw = np.exp(-((t - t_c) ** 2) / (2 * sigma**2))
    return normalize_pulse(Envelope(raw, params.delta_t))


def read_envelope_csv(path, params: SimParams) -> Envelope:
    """Load ``re,im`` rows (one per bin); the row count must equal the step count."""
    values = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                re_, im_ = float(row[0]), float(row[1]) if len(row) > 1 else 0.0
            except ValueError:
                continue  # header line
            values.append(complex(re_, im_))
    if len(values) != params.n_steps:
        raise DimensionError(f"envelope has {len(values)} samples, the grid has {params.n_steps} bins")
    return normalize_pulse(Envelope(np.array(values), params.delta_t))


def _fock_channel_tensors(f: np.ndarray, n_photons: int) -> list[np.ndarray]:
    """Single-channel site tensors ``(left, n, right)`` of an n-photon pulse."""
    m = len(f)
    chi = n_photons + 1
    tensors = []
    for k, fk in enumerate(f):
        a = np.zeros((chi, chi, chi), dtype=np.complex128)  # (left, photons, right)
        if n_photons == 1:
            a[:, 0, :] = np.eye(2)
            a[0, 1, 1] = fk
        else:
            a[:, 0, :] = np.eye(3)
            a[0, 1, 1] = np.sqrt(2) * fk
            a[1, 1, 2] = np.sqrt(2) * fk
            a[0, 2, 2] = np.sqrt(2) * fk**2
        if k == 0:
            a = a[:1]
        if k == m - 1:
            # closing column: the bond index counts photons still to be placed
            a = a[:, :, chi - 1:chi]
        tensors.append(a)
    return tensors


def fock_pulse(env: Envelope, n_photons: int, params: SimParams, direction="R") -> list[SiteTensor]:
    """Chain of bins holding an ``n_photons`` Fock pulse with envelope ``env``.

    Tensors follow the upper-triangular bond construction where the bond index
    tracks how many photons have been placed to the left; the chain is scaled
    to unit norm afterwards. Other channels stay in vacuum.
    """
    if n_photons not in (1, 2):
        raise ConfigError("only 1- and 2-photon pulses are supported")
    ch = ops.channel_index(direction)
    if ch >= len(params.d_t):
        raise DimensionError(f"channel {direction!r} not present in bins with d_t={params.d_t}")
    if params.d_t[ch] < n_photons + 1:
        raise DimensionError(f"a {n_photons}-photon pulse needs channel extent >= {n_photons + 1}")
    f = np.asarray(env.samples, dtype=np.complex128)
    if len(f) < 2:
        raise ValueError("a pulse needs at least two bins")
    if len(f) > params.n_steps:
        raise DimensionError(f"envelope has {len(f)} bins, the grid only {params.n_steps}")

    local = _fock_channel_tensors(f, n_photons)
    d_t = params.d_t
    sites = []
    for k, a in enumerate(local):
        lb, _, rb = a.shape
        full = np.zeros((lb, params.d_bin, rb), dtype=np.complex128)
        for n in range(n_photons + 1):
            idx = [0] * len(d_t)
            idx[ch] = n
            full[:, int(np.ravel_multi_index(idx, d_t)), :] = a[:, n, :]
        sites.append(SiteTensor(full, TIME_BIN, k))
    _normalize_chain(sites)
    # pad to the full grid with vacuum
    for k in range(len(f), params.n_steps):
        empty = np.zeros((1, params.d_bin, 1), dtype=np.complex128)
        empty[0, 0, 0] = 1.0
        sites.append(SiteTensor(empty, TIME_BIN, k))
    return sites


def _normalize_chain(sites: Sequence[SiteTensor]) -> None:
    env = np.ones((1, 1), dtype=np.complex128)
    for s in sites:
        env = np.einsum("ab,asc,bsd->cd", env, s.data.conj(), s.data)
    nrm = np.sqrt(abs(env[0, 0]))
    if nrm == 0:
        raise ContractViolation("pulse chain has zero norm")
    scale = nrm ** (1.0 / len(sites))
    for s in sites:
        s.data = s.data / scale
