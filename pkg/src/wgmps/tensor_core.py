"""Dense complex tensor kernels.

Tensors are plain ``numpy.ndarray`` objects of dtype ``complex128`` stored in
C (row-major) order over the listed axes; every reshape in the package is a
metadata change on that order. MPS site tensors use the axis convention
``(left_bond, physical, right_bond)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ContractViolation, DimensionError, NumericError

DEFAULT_CUTOFF = 1e-12
HERMITIAN_TOL = 1e-10


def as_tensor(x) -> np.ndarray:
    """Return ``x`` as a C-contiguous complex128 array."""
    return np.ascontiguousarray(x, dtype=np.complex128)


def _check_finite(x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise NumericError(f"{what} contains NaN or Inf entries")


def contract(a, b, axis_pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Sum over paired axes of ``a`` and ``b``.

    The result keeps the free axes of ``a`` followed by the free axes of ``b``,
    each in their original order.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    axes_a = [p[0] for p in axis_pairs]
    axes_b = [p[1] for p in axis_pairs]
    for ia, ib in zip(axes_a, axes_b):
        if not (-a.ndim <= ia < a.ndim and -b.ndim <= ib < b.ndim):
            raise DimensionError(f"axis pair ({ia}, {ib}) out of range for ranks {a.ndim}, {b.ndim}")
        if a.shape[ia] != b.shape[ib]:
            raise DimensionError(
                f"cannot contract axis {ia} (extent {a.shape[ia]}) with axis {ib} (extent {b.shape[ib]})"
            )
    return np.tensordot(a, b, axes=(axes_a, axes_b))


@dataclass(frozen=True)
class SvdResult:
    """Truncated singular value decomposition ``m ~= left @ diag(s) @ right``.

    ``discarded_weight`` is the sum of squared singular values that were dropped,
    measured before any renormalization of the kept ones.
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    discarded_weight: float

    @property
    def rank(self) -> int:
        return len(self.singular_values)


def _raw_svd(m: np.ndarray):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        pass
    try:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"SVD did not converge for a {m.shape[0]}x{m.shape[1]} matrix") from exc


def svd_truncate(
    m,
    bond_max: int,
    cutoff: float = DEFAULT_CUTOFF,
    preserve_norm: bool = False,
) -> SvdResult:
    """SVD of a matrix keeping at most ``bond_max`` singular values.

    A singular value ``s_i`` is dropped when ``s_i**2 / sum(s**2) < cutoff``.
    At least one value is always kept. With ``preserve_norm`` the kept values
    are rescaled so that their squared sum equals the untruncated total.
    """
    m = as_tensor(m)
    if m.ndim != 2:
        raise DimensionError(f"svd_truncate expects a matrix, got rank {m.ndim}")
    if bond_max < 1:
        raise ContractViolation("bond_max must be >= 1")
    if cutoff < 0:
        raise ContractViolation("cutoff must be non-negative")
    _check_finite(m, "matrix passed to svd_truncate")

    u, s, vh = _raw_svd(m)
    total = float(np.sum(s * s))
    keep = min(bond_max, len(s))
    if total == 0.0:
        keep = 1
    elif cutoff > 0.0:
        keep = min(keep, max(1, int(np.count_nonzero(s * s / total >= cutoff))))
    keep = max(keep, 1)
    dropped = s[keep:]
    discarded = float(np.sum(dropped * dropped))
    s_kept = s[:keep].copy()
    if preserve_norm and discarded > 0.0:
        kept_total = float(np.sum(s_kept * s_kept))
        if kept_total > 0.0:
            s_kept *= np.sqrt(total / kept_total)
    return SvdResult(
        left=np.ascontiguousarray(u[:, :keep]),
        singular_values=s_kept,
        right=np.ascontiguousarray(vh[:keep, :]),
        discarded_weight=discarded,
    )


def matrix_exponential_unitary(h) -> np.ndarray:
    """Return ``exp(-1j * h)`` for a Hermitian matrix ``h``.

    Uses the Hermitian eigendecomposition, which is exact to rounding for the
    small generators used here.
    """
    h = as_tensor(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {h.shape}")
    _check_finite(h, "generator")
    scale = max(np.linalg.norm(h), 1.0)
    if np.linalg.norm(h - h.conj().T) > HERMITIAN_TOL * scale:
        raise ContractViolation("generator is not Hermitian")
    herm = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(herm)
    return np.ascontiguousarray((v * np.exp(-1j * w)) @ v.conj().T)


def tensor_kron(a, b) -> np.ndarray:
    """Kronecker product; 1-D inputs are treated as column vectors."""
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim == 1 and b.ndim == 1:
        return np.kron(a, b)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("tensor_kron expects rank-1 or rank-2 inputs")
    out = np.kron(a, b)
    _check_finite(out, "kron product")
    return out


def kron_all(*ops) -> np.ndarray:
    """Left-to-right Kronecker product of several operators."""
    out = as_tensor(ops[0])
    for op in ops[1:]:
        out = tensor_kron(out, op)
    return out
