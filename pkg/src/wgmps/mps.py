"""Matrix product state container with orthogonality-center bookkeeping.

Site tensors have axes ``(left_bond, physical, right_bond)``. The chain keeps
a single orthogonality center (OC): sites to its left are left-normalized,
sites to its right right-normalized. Gauge moves are exact; truncation only
happens when a bond is re-split after a swap or a gate.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractViolation, DimensionError
from .tensor_core import DEFAULT_CUTOFF, as_tensor, svd_truncate

SYSTEM = "system"
TIME_BIN = "time_bin"
DUMP_FORMAT_VERSION = 1
UNITARY_TOL = 1e-8


@dataclass
class SiteTensor:
    """One MPS site.

    ``time_index`` is the bin label (step number) for time bins and ``None``
    for the system site.
    """

    data: np.ndarray
    kind: str = TIME_BIN
    time_index: int | None = None

    def __post_init__(self):
        self.data = as_tensor(self.data)
        if self.data.ndim != 3:
            raise DimensionError(f"site tensor must be rank 3, got shape {self.data.shape}")
        if self.kind not in (SYSTEM, TIME_BIN):
            raise ValueError(f"unknown site kind {self.kind!r}")

    @property
    def left_bond(self) -> int:
        return self.data.shape[0]

    @property
    def physical(self) -> int:
        return self.data.shape[1]

    @property
    def right_bond(self) -> int:
        return self.data.shape[2]

    def copy(self) -> "SiteTensor":
        return SiteTensor(self.data.copy(), self.kind, self.time_index)


@dataclass(frozen=True)
class SchmidtSpectrum:
    values: np.ndarray
    cut_label: str = "system_cut"
    time_index: int | None = None


@dataclass(frozen=True)
class Snapshot:
    """Read-only copy of one site in orthogonality-center form.

    Local expectations follow from ``data`` alone. ``step`` is the evolution
    step at which the copy was taken; ``time_index`` the bin label.
    """

    data: np.ndarray
    step: int
    kind: str = TIME_BIN
    time_index: int | None = None

    @property
    def physical(self) -> int:
        return self.data.shape[1]


@dataclass
class GateReport:
    """Singular values at every bond re-split by a gate, keyed by cut index."""

    spectra: dict[int, np.ndarray] = field(default_factory=dict)
    discarded_weight: float = 0.0


def local_expectation(tensor: np.ndarray, op) -> complex:
    """``<O>`` for a site tensor in orthogonality-center form."""
    op = as_tensor(op)
    if op.shape != (tensor.shape[1], tensor.shape[1]):
        raise DimensionError(f"operator shape {op.shape} does not match physical extent {tensor.shape[1]}")
    return complex(np.einsum("asb,st,atb->", tensor.conj(), op, tensor, optimize=True))


def _left_qr(a: np.ndarray):
    l, d, r = a.shape
    q, rmat = np.linalg.qr(a.reshape(l * d, r))
    return q.reshape(l, d, -1), rmat


def _right_qr(a: np.ndarray):
    """Factor ``a = R @ Q`` with Q right-normalized."""
    l, d, r = a.shape
    q, rmat = np.linalg.qr(a.reshape(l, d * r).conj().T)
    return q.conj().T.reshape(-1, d, r), rmat.conj().T


class Mps:
    """Finite MPS with a tracked orthogonality center.

    Parameters
    ----------
    sites : sequence of SiteTensor
        Chain in order. Tensors are brought into mixed canonical form around
        ``oc_index`` unless ``canonicalize`` is False.
    oc_index : int
        Position of the orthogonality center.
    bond_max, cutoff : int, float
        Truncation settings used whenever a bond is re-split.
    normalize : bool
        Rescale to unit norm after canonicalization.
    """

    def __init__(
        self,
        sites: Sequence[SiteTensor],
        oc_index: int = 0,
        bond_max: int = 64,
        cutoff: float = DEFAULT_CUTOFF,
        canonicalize: bool = True,
        normalize: bool = True,
    ):
        if not sites:
            raise ValueError("an MPS needs at least one site")
        self.sites = list(sites)
        if not 0 <= oc_index < len(self.sites):
            raise IndexError(f"oc_index {oc_index} outside chain of length {len(self.sites)}")
        self.oc_index = oc_index
        self.bond_max = int(bond_max)
        self.cutoff = float(cutoff)
        self.discarded_weight = 0.0
        self._check_bonds()
        if canonicalize:
            self._canonicalize()
        if normalize:
            nrm = np.linalg.norm(self.sites[self.oc_index].data)
            if nrm == 0.0:
                raise ContractViolation("cannot normalize a zero state")
            self.sites[self.oc_index].data = self.sites[self.oc_index].data / nrm
        self.peak_bond = max(self.bond_dims(), default=1)

    def __len__(self) -> int:
        return len(self.sites)

    def _check_bonds(self) -> None:
        if self.sites[0].left_bond != 1 or self.sites[-1].right_bond != 1:
            raise DimensionError("outer bonds of the chain must have extent 1")
        for k in range(len(self.sites) - 1):
            if self.sites[k].right_bond != self.sites[k + 1].left_bond:
                raise DimensionError(
                    f"bond mismatch between sites {k} and {k + 1}: "
                    f"{self.sites[k].right_bond} != {self.sites[k + 1].left_bond}"
                )

    def _canonicalize(self) -> None:
        for k in range(self.oc_index):
            self._shift_right(k)
        for k in range(len(self.sites) - 1, self.oc_index, -1):
            self._shift_left(k)

    def copy(self) -> "Mps":
        new = Mps.__new__(Mps)
        new.sites = [s.copy() for s in self.sites]
        new.oc_index = self.oc_index
        new.bond_max = self.bond_max
        new.cutoff = self.cutoff
        new.discarded_weight = self.discarded_weight
        new.peak_bond = self.peak_bond
        return new

    def bond_dims(self) -> list[int]:
        return [s.right_bond for s in self.sites[:-1]]

    def physical_dims(self) -> list[int]:
        return [s.physical for s in self.sites]

    def _track_bond(self, chi: int) -> None:
        if chi > self.peak_bond:
            self.peak_bond = chi

    # gauge moves

    def _shift_right(self, k: int, with_svd: bool = False):
        """Move the center from site k to k+1 without truncation."""
        a = self.sites[k].data
        l, d, r = a.shape
        if with_svd:
            res = svd_truncate(a.reshape(l * d, r), bond_max=l * d + r, cutoff=0.0)
            q = res.left.reshape(l, d, -1)
            carry = res.singular_values[:, None] * res.right
            spectrum = res.singular_values
        else:
            q, carry = _left_qr(a)
            spectrum = None
        self.sites[k].data = np.ascontiguousarray(q)
        self.sites[k + 1].data = np.ascontiguousarray(np.tensordot(carry, self.sites[k + 1].data, axes=(1, 0)))
        return spectrum

    def _shift_left(self, k: int) -> None:
        q, carry = _right_qr(self.sites[k].data)
        self.sites[k].data = np.ascontiguousarray(q)
        self.sites[k - 1].data = np.ascontiguousarray(np.tensordot(self.sites[k - 1].data, carry, axes=(2, 0)))

    def move_oc(self, target: int) -> "Mps":
        """Gauge the chain so the orthogonality center sits at ``target``."""
        if not 0 <= target < len(self.sites):
            raise IndexError(f"target {target} outside chain of length {len(self.sites)}")
        while self.oc_index < target:
            self._shift_right(self.oc_index)
            self.oc_index += 1
        while self.oc_index > target:
            self._shift_left(self.oc_index)
            self.oc_index -= 1
        return self

    def sweep_oc_right(self, target: int) -> dict[int, np.ndarray]:
        """Move the center rightwards by SVD, returning the spectrum at each crossed cut."""
        if target < self.oc_index:
            raise ValueError("sweep_oc_right only moves to the right")
        spectra = {}
        while self.oc_index < target:
            s = self._shift_right(self.oc_index, with_svd=True)
            spectra[self.oc_index + 1] = _normalized(s)
            self.oc_index += 1
        return spectra

    # local updates

    def _split_pair(self, theta: np.ndarray, k: int, oc_right: bool) -> np.ndarray:
        """Write a two-site block back into sites k, k+1 by truncated SVD."""
        l, d1, d2, r = theta.shape
        res = svd_truncate(theta.reshape(l * d1, d2 * r), self.bond_max, self.cutoff, preserve_norm=True)
        chi = res.rank
        left = res.left.reshape(l, d1, chi)
        right = res.right.reshape(chi, d2, r)
        if oc_right:
            right = res.singular_values[:, None, None] * right
        else:
            left = left * res.singular_values[None, None, :]
        self.sites[k].data = np.ascontiguousarray(left)
        self.sites[k + 1].data = np.ascontiguousarray(right)
        self.discarded_weight += res.discarded_weight
        self._track_bond(chi)
        return res.singular_values

    def swap_adjacent(self, k: int) -> np.ndarray:
        """Exchange the physical legs and labels of sites k and k+1.

        The center must sit on one of the two sites and follows the site that
        carried it. Returns the singular values of the re-split bond.
        """
        if not 0 <= k < len(self.sites) - 1:
            raise IndexError(f"no adjacent pair at {k}")
        if self.oc_index not in (k, k + 1):
            raise ContractViolation(f"orthogonality center {self.oc_index} not on pair ({k}, {k + 1})")
        a, b = self.sites[k], self.sites[k + 1]
        theta = np.tensordot(a.data, b.data, axes=(2, 0)).transpose(0, 2, 1, 3)
        moving_right = self.oc_index == k
        s = self._split_pair(theta, k, oc_right=moving_right)
        a.kind, b.kind = b.kind, a.kind
        a.time_index, b.time_index = b.time_index, a.time_index
        self.oc_index = k + 1 if moving_right else k
        return _normalized(s)

    def apply_gate(
        self,
        gate,
        first_site: int,
        n: int | None = None,
        out_order: Sequence[int] | None = None,
        strict: bool = True,
    ) -> GateReport:
        """Apply a gate acting on ``n`` adjacent physical legs and re-split.

        ``gate`` is a square matrix over the row-major product of the window's
        physical extents (chain order). ``out_order`` optionally permutes the
        window's sites afterwards, e.g. ``(1, 0)`` to apply the gate and then
        exchange the two sites. The center ends on the leftmost system site of
        the window, or on the window's first site if it has none.
        """
        gate = as_tensor(gate)
        if gate.ndim != 2 or gate.shape[0] != gate.shape[1]:
            raise DimensionError(f"gate must be a square matrix, got {gate.shape}")
        if n is None:
            n = self._infer_window(gate.shape[0], first_site)
        if first_site < 0 or first_site + n > len(self.sites):
            raise IndexError(f"gate window [{first_site}, {first_site + n}) outside chain")
        window = self.sites[first_site:first_site + n]
        dims = [s.physical for s in window]
        if int(np.prod(dims)) != gate.shape[0]:
            raise DimensionError(f"gate extent {gate.shape[0]} does not match window extents {dims}")
        if not first_site <= self.oc_index < first_site + n:
            raise ContractViolation(f"orthogonality center {self.oc_index} outside the gate window")
        if strict:
            dev = np.linalg.norm(gate.conj().T @ gate - np.eye(gate.shape[0]))
            if dev > UNITARY_TOL:
                raise ContractViolation(f"gate is not unitary (deviation {dev:.2e})")

        theta = window[0].data
        for s in window[1:]:
            theta = np.tensordot(theta, s.data, axes=(theta.ndim - 1, 0))
        l, r = theta.shape[0], theta.shape[-1]
        theta = theta.reshape(l, -1, r)
        theta = np.einsum("ij,ajb->aib", gate, theta, optimize=True)
        theta = theta.reshape((l, *dims, r))

        meta = [(s.kind, s.time_index) for s in window]
        if out_order is not None:
            order = list(out_order)
            if sorted(order) != list(range(n)):
                raise ValueError(f"out_order {out_order} is not a permutation of {n} sites")
            theta = theta.transpose(0, *[o + 1 for o in order], n + 1)
            dims = [dims[o] for o in order]
            meta = [meta[o] for o in order]

        center = next((i for i, (kind, _) in enumerate(meta) if kind == SYSTEM), 0)
        report = GateReport()
        before = self.discarded_weight
        new = [None] * n
        # peel sites off the left up to the center
        for i in range(center):
            lb = theta.shape[0]
            rest = theta.shape[2:]
            res = svd_truncate(theta.reshape(lb * dims[i], -1), self.bond_max, self.cutoff, preserve_norm=True)
            new[i] = res.left.reshape(lb, dims[i], res.rank)
            theta = (res.singular_values[:, None] * res.right).reshape((res.rank, *rest))
            report.spectra[first_site + i + 1] = _normalized(res.singular_values)
            self.discarded_weight += res.discarded_weight
            self._track_bond(res.rank)
        # and off the right down to the center
        for i in range(n - 1, center, -1):
            rb = theta.shape[-1]
            lead = theta.shape[:-2]
            res = svd_truncate(theta.reshape(-1, dims[i] * rb), self.bond_max, self.cutoff, preserve_norm=True)
            new[i] = res.right.reshape(res.rank, dims[i], rb)
            theta = (res.left * res.singular_values[None, :]).reshape((*lead, res.rank))
            report.spectra[first_site + i] = _normalized(res.singular_values)
            self.discarded_weight += res.discarded_weight
            self._track_bond(res.rank)
        new[center] = theta.reshape(theta.shape[0], dims[center], theta.shape[-1])

        for i in range(n):
            site = self.sites[first_site + i]
            site.data = np.ascontiguousarray(new[i])
            site.kind, site.time_index = meta[i]
        self.oc_index = first_site + center
        report.discarded_weight = self.discarded_weight - before
        return report

    def _infer_window(self, extent: int, first_site: int) -> int:
        prod = 1
        for n, s in enumerate(self.sites[first_site:], start=1):
            prod *= s.physical
            if prod == extent:
                return n
            if prod > extent:
                break
        raise DimensionError(f"gate extent {extent} matches no window starting at site {first_site}")

    # measurements

    def expectation_local(self, op, site: int) -> complex | float:
        """``<psi|O_site|psi>``; real output when the imaginary part is below 1e-10."""
        if self.sites[site].physical != np.shape(op)[0]:
            raise DimensionError(
                f"operator extent {np.shape(op)[0]} != physical extent {self.sites[site].physical}"
            )
        self.move_oc(site)
        val = local_expectation(self.sites[site].data, op)
        return val.real if abs(val.imag) < 1e-10 else val

    def snapshot(self, site: int, step: int) -> Snapshot:
        """Orthogonality-center form copy of one site, without moving the center."""
        a = self.sites[site].data
        if site == self.oc_index:
            data = a.copy()
        elif site == self.oc_index - 1:
            _, rmat = _right_qr(self.sites[self.oc_index].data)
            data = np.tensordot(a, rmat, axes=(2, 0))
        elif site == self.oc_index + 1:
            _, rmat = _left_qr(self.sites[self.oc_index].data)
            data = np.tensordot(rmat, a, axes=(1, 0))
        else:
            self.move_oc(site)
            data = self.sites[site].data.copy()
        s = self.sites[site]
        return Snapshot(np.ascontiguousarray(data), step, s.kind, s.time_index)

    def schmidt_at_cut(self, cut: int, cut_label: str = "system_cut", time_index: int | None = None) -> SchmidtSpectrum:
        """Schmidt values for the bipartition ``sites[:cut] | sites[cut:]``."""
        if not 0 <= cut <= len(self.sites):
            raise IndexError(f"cut {cut} outside 0..{len(self.sites)}")
        if cut == 0 or cut == len(self.sites):
            return SchmidtSpectrum(np.ones(1), cut_label, time_index)
        self.move_oc(cut - 1)
        a = self.sites[cut - 1].data
        s = np.linalg.svd(a.reshape(-1, a.shape[2]), compute_uv=False)
        return SchmidtSpectrum(_normalized(s), cut_label, time_index)

    def norm(self) -> float:
        return float(np.sqrt(abs(global_overlap(self, self))))

    def to_dense(self) -> np.ndarray:
        """Full state vector in chain order (small chains only)."""
        psi = self.sites[0].data
        for s in self.sites[1:]:
            psi = np.tensordot(psi, s.data, axes=(psi.ndim - 1, 0))
        return psi.reshape(-1)

    def find(self, kind: str, time_index: int | None = None) -> int:
        for i, s in enumerate(self.sites):
            if s.kind == kind and (kind == SYSTEM or s.time_index == time_index):
                return i
        raise KeyError(f"no {kind} site with time_index {time_index}")

    # persistence

    def dump(self, path) -> None:
        """Write the chain to an ``.npz`` file with a versioned JSON header."""
        header = {
            "format": "wgmps-mps",
            "version": DUMP_FORMAT_VERSION,
            "oc_index": self.oc_index,
            "bond_max": self.bond_max,
            "cutoff": self.cutoff,
            "discarded_weight": self.discarded_weight,
            "sites": [
                {"shape": list(s.data.shape), "kind": s.kind, "time_index": s.time_index}
                for s in self.sites
            ],
        }
        arrays = {f"site_{i:06d}": s.data for i, s in enumerate(self.sites)}
        with open(path, "wb") as fh:
            np.savez(fh, header=np.array(json.dumps(header)), **arrays)

    @classmethod
    def load(cls, path) -> "Mps":
        with np.load(path, allow_pickle=False) as npz:
            header = json.loads(str(npz["header"]))
            if header.get("format") != "wgmps-mps":
                raise ValueError("not an MPS dump")
            if header["version"] > DUMP_FORMAT_VERSION:
                raise ValueError(f"unsupported dump version {header['version']}")
            sites = []
            for i, meta in enumerate(header["sites"]):
                data = npz[f"site_{i:06d}"]
                if list(data.shape) != meta["shape"]:
                    raise DimensionError(f"site {i} shape does not match header")
                sites.append(SiteTensor(data, meta["kind"], meta["time_index"]))
        mps = cls(sites, header["oc_index"], header["bond_max"], header["cutoff"], canonicalize=False, normalize=False)
        mps.discarded_weight = header["discarded_weight"]
        return mps


def _normalized(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    total = np.sqrt(np.sum(s * s))
    return s / total if total > 0 else s


def global_overlap(a: Mps, b: Mps) -> complex:
    """``<a|b>`` by a left-to-right transfer-matrix sweep."""
    if len(a) != len(b):
        raise DimensionError(f"chains differ in length: {len(a)} vs {len(b)}")
    env = np.ones((1, 1), dtype=np.complex128)
    for k, (sa, sb) in enumerate(zip(a.sites, b.sites)):
        if sa.physical != sb.physical:
            raise DimensionError(f"physical extents differ at site {k}: {sa.physical} vs {sb.physical}")
        env = np.einsum("ab,asc,bsd->cd", env, sa.data.conj(), sb.data, optimize=True)
    return complex(env[0, 0])


def product_sites(vectors: Sequence, kinds: Sequence[str] | None = None, labels: Sequence | None = None) -> list[SiteTensor]:
    """Bond-1 site tensors from local state vectors."""
    out = []
    for i, v in enumerate(vectors):
        v = as_tensor(v).reshape(-1)
        kind = kinds[i] if kinds else TIME_BIN
        label = labels[i] if labels else None
        out.append(SiteTensor(v.reshape(1, -1, 1), kind, label))
    return out
