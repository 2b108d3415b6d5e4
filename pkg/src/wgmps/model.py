"""Per-step Hamiltonians of the emitter/waveguide collision model.

Every generator is ``H(t_k) * dt``, a Hermitian matrix on the Kronecker
product of the gate's roles in the order ``(system, present_bin[,
feedback_bin])``. Couplings enter through the bin noise operators
``dB = sqrt(dt) * a``, so a rate ``gamma`` contributes ``sqrt(gamma) (s+ dB + h.c.)``.
The feedback phase multiplies the delayed-bin coupling ``s+ dB_delayed``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import operators as ops
from .errors import ConfigError, DimensionError
from .tensor_core import DEFAULT_CUTOFF, kron_all, matrix_exponential_unitary

SYSTEM = "system"
PRESENT = "present_bin"
FEEDBACK = "feedback_bin"


def _as_rates(value, n: int, name: str) -> tuple[float, ...]:
    if np.isscalar(value):
        return (float(value),) * n
    rates = tuple(float(v) for v in value)
    if len(rates) != n:
        raise ConfigError(f"{name} needs one rate per emitter ({n}), got {len(rates)}")
    return rates


@dataclass(frozen=True)
class SimParams:
    """Simulation parameters in units of the decay rate (gamma = 1).

    ``d_sys`` holds one extent per emitter and ``d_t`` one extent per field
    channel in a bin (``(right, left)`` for an infinite waveguide, a single
    folded channel for the mirror geometry). ``gamma_l``/``gamma_r`` accept a
    scalar or one value per emitter.
    """

    delta_t: float = 0.05
    t_max: float = 8.0
    d_sys: tuple[int, ...] = (2,)
    d_t: tuple[int, ...] = (2, 2)
    gamma_l: tuple[float, ...] | float = 0.5
    gamma_r: tuple[float, ...] | float = 0.5
    tau: float = 0.0
    phi: float = 0.0
    bond_max: int = 4
    cutoff: float = DEFAULT_CUTOFF
    detuning: float = 0.0

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "d_sys", tuple(int(d) for d in np.atleast_1d(self.d_sys)))
        set_(self, "d_t", tuple(int(d) for d in np.atleast_1d(self.d_t)))
        n = len(self.d_sys)
        set_(self, "gamma_l", _as_rates(self.gamma_l, n, "gamma_l"))
        set_(self, "gamma_r", _as_rates(self.gamma_r, n, "gamma_r"))
        if not self.delta_t > 0:
            raise ConfigError("delta_t must be positive")
        if not self.t_max > 0:
            raise ConfigError("t_max must be positive")
        if min(self.gamma_l + self.gamma_r) < 0:
            raise ConfigError("decay rates must be non-negative")
        if self.bond_max < 1:
            raise ConfigError("bond_max must be >= 1")
        if self.tau < 0:
            raise ConfigError("tau must be non-negative")
        ratio = self.tau / self.delta_t
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError(f"tau={self.tau} is not a multiple of delta_t={self.delta_t}")
        if any(d < 2 for d in self.d_t) or any(d < 2 for d in self.d_sys):
            raise ConfigError("local extents must be >= 2")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.delta_t))

    @property
    def delay_steps(self) -> int:
        return int(round(self.tau / self.delta_t))

    @property
    def d_bin(self) -> int:
        return int(np.prod(self.d_t))

    @property
    def d_system(self) -> int:
        return int(np.prod(self.d_sys))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.delta_t

    def replace(self, **changes) -> "SimParams":
        from dataclasses import replace

        return replace(self, **changes)


def coupling(kind: str = "symmetrical", gamma: float = 1.0) -> tuple[float, float]:
    """Split a total rate into ``(gamma_l, gamma_r)``."""
    if kind in ("symmetrical", "symmetric"):
        return gamma / 2, gamma / 2
    if kind in ("chiral", "chiral_r", "right"):
        return 0.0, gamma
    if kind in ("chiral_l", "left"):
        return gamma, 0.0
    raise ConfigError(f"unknown coupling kind {kind!r}")


@dataclass(frozen=True)
class PumpSpec:
    """Classical drive ``Omega(t_k)`` on the emitter, in units of gamma."""

    kind: str = "none"
    omega: float = 0.0
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("none", "cw", "envelope"):
            raise ConfigError(f"unknown pump kind {self.kind!r}")
        if self.kind == "envelope":
            if self.samples is None:
                raise ConfigError("envelope pump needs samples")
            object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))

    @classmethod
    def coerce(cls, pump) -> "PumpSpec":
        if pump is None:
            return cls()
        if isinstance(pump, PumpSpec):
            return pump
        if np.isscalar(pump):
            return cls("cw", float(pump)) if pump != 0 else cls()
        return cls("envelope", samples=np.asarray(pump, dtype=float))

    @property
    def time_dependent(self) -> bool:
        return self.kind == "envelope"

    def at(self, k: int) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "cw":
            return self.omega
        if k >= len(self.samples):
            raise IndexError(f"pump envelope has {len(self.samples)} samples, step {k} requested")
        return float(self.samples[k])

    def check_length(self, n_steps: int) -> None:
        if self.kind == "envelope" and len(self.samples) < n_steps:
            raise ConfigError(f"pump envelope has {len(self.samples)} samples but the run needs {n_steps}")


def gaussian_pulse_pump(area: float, t_c: float, sigma: float, params: SimParams) -> PumpSpec:
    """Gaussian drive sampled at the bin starts, scaled to a Rabi angle ``area``.

    The rotation angle is ``2 * sum(Omega_k) * dt`` for the ``Omega (s+ + s-)``
    convention, so ``area=pi`` inverts an undamped emitter.
    """
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    t = np.arange(params.n_steps) * params.delta_t
    shape = np.exp(-((t - t_c) ** 2) / (2 * sigma**2))
    samples = 0.5 * area * shape / (shape.sum() * params.delta_t)
    return PumpSpec("envelope", samples=samples)


@dataclass(frozen=True)
class NoiseOps:
    annihilate: np.ndarray
    number: np.ndarray
    delta_t: float


def noise_operators(d_t: int, delta_t: float) -> NoiseOps:
    """Bin noise operators ``dB = sqrt(dt) a`` and ``dB^dag dB`` for one channel."""
    if d_t < 2:
        raise DimensionError("a bin channel needs extent >= 2")
    a = np.sqrt(delta_t) * ops.destroy(d_t)
    return NoiseOps(a, a.conj().T @ a, delta_t)


@dataclass(frozen=True)
class StepPropagator:
    gate: np.ndarray
    arity: int
    site_roles: tuple[str, ...]
    dims: tuple[int, ...]

    def ordered(self, order: Sequence[int]) -> np.ndarray:
        """Gate matrix with its legs permuted into ``order`` (indices into ``site_roles``)."""
        order = list(order)
        if order == list(range(self.arity)):
            return self.gate
        n = self.arity
        g = self.gate.reshape(self.dims + self.dims)
        g = g.transpose(order + [n + o for o in order])
        dim = int(np.prod(self.dims))
        return np.ascontiguousarray(g.reshape(dim, dim))


def build_propagator(generator, arity: int, roles: Sequence[str], dims: Sequence[int] | None = None) -> StepPropagator:
    """Exponentiate a per-step generator into a unitary gate."""
    generator = np.asarray(generator, dtype=np.complex128)
    if dims is None:
        if arity != 1:
            raise ValueError("dims are required for multi-site propagators")
        dims = (generator.shape[0],)
    dims = tuple(int(d) for d in dims)
    if len(dims) != arity or len(tuple(roles)) != arity:
        raise ValueError("roles and dims must both have one entry per site")
    if int(np.prod(dims)) != generator.shape[0]:
        raise DimensionError(f"generator extent {generator.shape[0]} does not match dims {dims}")
    return StepPropagator(matrix_exponential_unitary(generator), arity, tuple(roles), dims)


@dataclass
class StepGenerator:
    """Discretized Hamiltonian ``H(t_k) dt`` for every step of a run."""

    arity: int
    roles: tuple[str, ...]
    dims: tuple[int, ...]
    static_part: np.ndarray
    pump_part: np.ndarray | None = None
    pump: PumpSpec = field(default_factory=PumpSpec)
    delta_t: float = 0.05
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def time_dependent(self) -> bool:
        return self.pump_part is not None and self.pump.time_dependent

    def generator(self, k: int) -> np.ndarray:
        if self.pump_part is None:
            return self.static_part
        return self.static_part + self.pump.at(k) * self.delta_t * self.pump_part

    def propagator(self, k: int) -> StepPropagator:
        key = k if self.time_dependent else 0
        prop = self._cache.get(key)
        if prop is None:
            prop = build_propagator(self.generator(k), self.arity, self.roles, self.dims)
            if not self.time_dependent:
                self._cache[key] = prop
        return prop

    def excitation_number(self, d_sys: Sequence[int], d_t: Sequence[int]) -> np.ndarray:
        """Total emitter excitations plus photons in every bin role."""
        sys_n = sum(ops.tls_pop_ops(d_sys))
        bin_n = ops.bin_number_total(d_t)
        terms = []
        for i, role in enumerate(self.roles):
            local = [np.eye(d, dtype=np.complex128) for d in self.dims]
            local[i] = sys_n if role == SYSTEM else bin_n
            terms.append(kron_all(*local))
        return sum(terms)


def _hc(x: np.ndarray) -> np.ndarray:
    return x + x.conj().T


def _check_channels(params: SimParams, n: int, what: str) -> None:
    if len(params.d_t) != n:
        raise DimensionError(f"{what} needs {n} field channel(s) per bin, params.d_t={params.d_t}")


def _pump_terms(params: SimParams, pump, delta) -> tuple[PumpSpec, float]:
    pump = PumpSpec.coerce(pump)
    pump.check_length(params.n_steps)
    detuning = params.detuning if delta is None else float(delta)
    return pump, detuning


def hamiltonian_1tls(params: SimParams, pump=None, delta: float | None = None) -> StepGenerator:
    """Single emitter in an infinite waveguide (bins carry right and left channels)."""
    _check_channels(params, 2, "hamiltonian_1tls")
    if params.d_sys != (2,):
        raise DimensionError("hamiltonian_1tls expects a single two-level emitter")
    pump, detuning = _pump_terms(params, pump, delta)
    dt = params.delta_t
    sp, sm = ops.sigma_plus(), ops.sigma_minus()
    d_bin = params.d_bin
    i_bin = np.eye(d_bin)
    h = detuning * dt * np.kron(ops.tls_pop(), i_bin)
    for ch, rate in ((ops.RIGHT, params.gamma_r[0]), (ops.LEFT, params.gamma_l[0])):
        db = ops.noise_annihilator(params.d_t, dt, ch)
        h = h + np.sqrt(rate) * _hc(np.kron(sp, db))
    pump_part = np.kron(sp + sm, i_bin) if pump.kind != "none" else None
    return StepGenerator(2, (SYSTEM, PRESENT), (2, d_bin), h, pump_part, pump, dt)


def hamiltonian_1tls_feedback(params: SimParams, pump=None, delta: float | None = None) -> StepGenerator:
    """Single emitter in front of a mirror, folded into one channel.

    The emitter couples with ``gamma_r`` to the present bin and with
    ``gamma_l * exp(i phi)`` to the bin emitted one round trip ``tau`` earlier.
    """
    _check_channels(params, 1, "hamiltonian_1tls_feedback")
    if params.d_sys != (2,):
        raise DimensionError("hamiltonian_1tls_feedback expects a single two-level emitter")
    if params.delay_steps < 1:
        raise ConfigError("mirror feedback needs tau >= delta_t")
    pump, detuning = _pump_terms(params, pump, delta)
    dt = params.delta_t
    d = params.d_bin
    sp, sm = ops.sigma_plus(), ops.sigma_minus()
    db = ops.noise_annihilator(params.d_t, dt, 0)
    eye = np.eye(d)
    h = detuning * dt * kron_all(ops.tls_pop(), eye, eye)
    h = h + np.sqrt(params.gamma_r[0]) * _hc(kron_all(sp, db, eye))
    h = h + np.sqrt(params.gamma_l[0]) * _hc(np.exp(1j * params.phi) * kron_all(sp, eye, db))
    pump_part = kron_all(sp + sm, eye, eye) if pump.kind != "none" else None
    return StepGenerator(3, (SYSTEM, PRESENT, FEEDBACK), (2, d, d), h, pump_part, pump, dt)


def hamiltonian_2tls_mar(params: SimParams) -> StepGenerator:
    """Two emitters sharing each bin, separated by a propagation phase ``phi``.

    Right-movers reach emitter 2 after emitter 1 and left-movers the other way
    round; each picks up ``exp(i phi)`` at the downstream emitter. The
    cascaded exchange term ``J`` removes the backwards coupling, so in the
    single-excitation sector the amplitudes obey the zero-delay limit of the
    delayed-coupling equations for any phase.
    """
    _check_channels(params, 2, "hamiltonian_2tls_mar")
    if params.d_sys != (2, 2):
        raise DimensionError("hamiltonian_2tls_mar expects two two-level emitters")
    dt = params.delta_t
    d_sys = params.d_sys
    d_bin = params.d_bin
    phase = np.exp(1j * params.phi)
    s1 = ops.emitter_op(ops.sigma_plus(), 0, d_sys)
    s2 = ops.emitter_op(ops.sigma_plus(), 1, d_sys)
    i_bin = np.eye(d_bin)
    b_r = ops.noise_annihilator(params.d_t, dt, ops.RIGHT)
    b_l = ops.noise_annihilator(params.d_t, dt, ops.LEFT)
    (gl1, gl2), (gr1, gr2) = params.gamma_l, params.gamma_r

    h = _hc(np.sqrt(gr1) * np.kron(s1, b_r) + np.sqrt(gr2) * phase * np.kron(s2, b_r))
    h = h + _hc(np.sqrt(gl2) * np.kron(s2, b_l) + np.sqrt(gl1) * phase * np.kron(s1, b_l))
    # s1+ s2- carries J_r, s2+ s1- carries J_l (plus conjugates)
    j_r = 0.5j * np.sqrt(gr1 * gr2) * np.conj(phase)
    j_l = 0.5j * np.sqrt(gl1 * gl2) * np.conj(phase)
    exchange = j_r * (s1 @ s2.conj().T) + j_l * (s2 @ s1.conj().T)
    h = h + dt * np.kron(_hc(exchange), i_bin)
    return StepGenerator(2, (SYSTEM, PRESENT), (4, d_bin), h, None, PumpSpec(), dt)


def hamiltonian_2tls_nmar(params: SimParams) -> StepGenerator:
    """Two emitters a delay ``tau`` apart.

    Emitter 1 couples to the present right-mover and the delayed left-mover,
    emitter 2 to the present left-mover and the delayed right-mover; both
    delayed couplings carry ``exp(i phi)``.
    """
    _check_channels(params, 2, "hamiltonian_2tls_nmar")
    if params.d_sys != (2, 2):
        raise DimensionError("hamiltonian_2tls_nmar expects two two-level emitters")
    if params.delay_steps < 1:
        raise ConfigError("hamiltonian_2tls_nmar needs tau >= delta_t")
    dt = params.delta_t
    d_sys = params.d_sys
    d_bin = params.d_bin
    phase = np.exp(1j * params.phi)
    s1 = ops.emitter_op(ops.sigma_plus(), 0, d_sys)
    s2 = ops.emitter_op(ops.sigma_plus(), 1, d_sys)
    eye = np.eye(d_bin)
    b_r = ops.noise_annihilator(params.d_t, dt, ops.RIGHT)
    b_l = ops.noise_annihilator(params.d_t, dt, ops.LEFT)
    (gl1, gl2), (gr1, gr2) = params.gamma_l, params.gamma_r

    h = np.sqrt(gr1) * kron_all(s1, b_r, eye)
    h = h + np.sqrt(gl2) * kron_all(s2, b_l, eye)
    h = h + np.sqrt(gl1) * phase * kron_all(s1, eye, b_l)
    h = h + np.sqrt(gr2) * phase * kron_all(s2, eye, b_r)
    h = _hc(h)
    return StepGenerator(3, (SYSTEM, PRESENT, FEEDBACK), (4, d_bin, d_bin), h, None, PumpSpec(), dt)


GeneratorFactory = Callable[[SimParams], StepGenerator]
