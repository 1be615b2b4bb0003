"""Tight-binding models as matrix-valued Laurent polynomials in e^{ik}.

A model is a map ``r -> H_r`` of integer hopping offsets to q x q blocks,
defining the Bloch Hamiltonian H(k) = sum_r H_r e^{ikr}.  Real-space
Hamiltonians on a ring of N sites follow from the same blocks under
periodic, open, or directionally-cut ("winding control") boundary
conditions, with the convention H[i, i+r] = H_r: blocks at negative
offsets carry rightward hops (site i-|r| -> i), positive offsets carry
leftward hops.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Mapping, Optional

import numpy as np

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the built-in two-band model: hopping t_h, gain/loss g,
    inter-component coupling delta (all real, energy units)."""

    t_h: float = 2.0
    g: float = 0.8
    delta: float = 0.1

    def __post_init__(self):
        for name in ("t_h", "g", "delta"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")


# dispersion callback: k array -> (energies (nbands, nk), dE/dk (nbands, nk))
DispersionFn = Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class BlochModel:
    """Bloch Hamiltonian H(k) = sum_r H_r e^{ikr} with |r| <= l, H_r q x q.

    ``dispersion``, when present, returns closed-form band energies and
    their k-derivatives; custom models fall back to finite differences
    downstream.
    """

    q: int
    l: int
    hoppings: Mapping[int, np.ndarray]
    name: str = "custom"
    params: Optional[ModelParams] = None
    dispersion: Optional[DispersionFn] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.q < 1 or self.l < 1:
            raise ValueError("q and l must be positive integers")
        hop = {}
        any_nonzero = False
        for r, H in self.hoppings.items():
            if abs(r) > self.l:
                raise ValueError(f"hopping offset {r} exceeds range l={self.l}")
            H = np.asarray(H, dtype=complex)
            if H.shape != (self.q, self.q):
                raise ValueError(f"hopping block at offset {r} has shape {H.shape}, expected {(self.q, self.q)}")
            H = H.copy()
            H.setflags(write=False)
            hop[r] = H
            any_nonzero = any_nonzero or np.any(H != 0)
        if not any_nonzero:
            raise ValueError("model needs at least one nonzero hopping block")
        object.__setattr__(self, "hoppings", hop)

    def offsets(self):
        return sorted(self.hoppings)


class SymmetryKind(Enum):
    ATRS = "atrs"
    PSEUDO_HERMITICITY = "pseudo_hermiticity"


@dataclass(frozen=True)
class SymmetryDescriptor:
    """A unitary operator implementing either anomalous time-reversal
    (T H(k)^T T^{-1} = H(-k), with T T* = -1) or pseudo-Hermiticity
    (eta H(k)^dag eta^{-1} = H(k), eta Hermitian unitary)."""

    kind: SymmetryKind
    operator: np.ndarray

    def __post_init__(self):
        op = np.asarray(self.operator, dtype=complex).copy()
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError("symmetry operator must be a square matrix")
        if np.abs(op @ op.conj().T - np.eye(op.shape[0])).max() > 1e-12:
            raise ValueError("symmetry operator must be unitary")
        if self.kind is SymmetryKind.ATRS:
            dev = np.abs(op @ op.conj() + np.eye(op.shape[0])).max()
            if dev > 1e-12:
                raise ValueError(f"ATRS operator must satisfy T T* = -1 (deviation {dev:.2e})")
        else:
            if np.abs(op - op.conj().T).max() > 1e-12:
                raise ValueError("pseudo-Hermiticity operator must be Hermitian")
        op.setflags(write=False)
        object.__setattr__(self, "operator", op)


class BCKind(Enum):
    PBC = "pbc"
    OBC = "obc"
    WINDING_CONTROL = "winding_control"


class Suppress(Enum):
    """Which wrap-around (chain-end) hopping direction to switch off."""

    LEFTWARD_END_HOPS = "left"
    RIGHTWARD_END_HOPS = "right"


@dataclass(frozen=True)
class BoundaryCondition:
    kind: BCKind
    suppress: Optional[Suppress] = None

    def __post_init__(self):
        if self.kind is BCKind.WINDING_CONTROL and self.suppress is None:
            raise ValueError("winding-control boundary needs a suppressed direction")
        if self.kind is not BCKind.WINDING_CONTROL and self.suppress is not None:
            raise ValueError("suppress only applies to winding-control boundaries")


PBC = BoundaryCondition(BCKind.PBC)
OBC = BoundaryCondition(BCKind.OBC)


def winding_control(suppress: Suppress) -> BoundaryCondition:
    return BoundaryCondition(BCKind.WINDING_CONTROL, suppress)


@dataclass(frozen=True)
class RealSpaceHamiltonian:
    n_sites: int
    q: int
    matrix: np.ndarray
    bc: BoundaryCondition


def build_symplectic_hn(params: ModelParams = ModelParams()) -> BlochModel:
    """Two-band nearest-neighbor ring with anomalous time-reversal symmetry:

        H(k) = 2 t_h cos k - 2 (delta sigma_x + i g sigma_z) sin k

    Kramers-paired bands E_pm(k) = 2 t_h cos k +- 2i sqrt(g^2 - delta^2) sin k
    trace one loop in opposite directions whenever |g| > |delta|.
    """
    t, g, d = params.t_h, params.g, params.delta
    m = d * SIGMA_X + 1j * g * SIGMA_Z
    hoppings = {+1: t * SIGMA_0 + 1j * m, -1: t * SIGMA_0 - 1j * m}

    sc = np.sqrt(complex(g * g - d * d))

    def dispersion(k: np.ndarray):
        k = np.asarray(k, dtype=float)
        e_plus = 2 * t * np.cos(k) + 2j * sc * np.sin(k)
        e_minus = 2 * t * np.cos(k) - 2j * sc * np.sin(k)
        de_plus = -2 * t * np.sin(k) + 2j * sc * np.cos(k)
        de_minus = -2 * t * np.sin(k) - 2j * sc * np.cos(k)
        return np.stack([e_plus, e_minus]), np.stack([de_plus, de_minus])

    return BlochModel(q=2, l=1, hoppings=hoppings, name="symplectic_hn",
                      params=params, dispersion=dispersion)


def build_ordinary_model() -> BlochModel:
    """Single-band ring H(k) = 2 sin k - i sin 2k (hopping range 2).

    Its spectrum is a figure-eight through the origin whose two lobes
    carry opposite winding number, the minimal setting for a
    single-channel (ordinary) skin effect.
    """
    hoppings = {
        +1: np.array([[-1j]]), -1: np.array([[1j]]),
        +2: np.array([[-0.5 + 0j]]), -2: np.array([[0.5 + 0j]]),
    }

    def dispersion(k: np.ndarray):
        k = np.asarray(k, dtype=float)
        e = 2 * np.sin(k) - 1j * np.sin(2 * k)
        de = 2 * np.cos(k) - 2j * np.cos(2 * k)
        return e[None, :], de[None, :]

    return BlochModel(q=1, l=2, hoppings=hoppings, name="ordinary", dispersion=dispersion)


def build_custom(q: int, l: int, entries) -> BlochModel:
    """Assemble a model from (offset, row, col, re, im) hopping entries."""
    hoppings: Dict[int, np.ndarray] = {}
    for offset, row, col, re, im in entries:
        offset, row, col = int(offset), int(row), int(col)
        blk = hoppings.setdefault(offset, np.zeros((q, q), dtype=complex))
        blk[row, col] += complex(re, im)
    return BlochModel(q=q, l=l, hoppings=hoppings, name="custom")


def bloch_matrix(model: BlochModel, k: float) -> np.ndarray:
    """Evaluate H(k) = sum_r H_r e^{ikr} (exactly 2*pi periodic)."""
    H = np.zeros((model.q, model.q), dtype=complex)
    for r, blk in model.hoppings.items():
        H += blk * np.exp(1j * k * r)
    return H


def bloch_matrices(model: BlochModel, k: np.ndarray) -> np.ndarray:
    """Vectorized H(k) over a momentum array; shape (nk, q, q)."""
    k = np.asarray(k, dtype=float)
    H = np.zeros(k.shape + (model.q, model.q), dtype=complex)
    for r, blk in model.hoppings.items():
        H += np.exp(1j * k * r)[..., None, None] * blk
    return H


def real_space_hamiltonian(model: BlochModel, n_sites: int,
                           bc: BoundaryCondition = PBC) -> RealSpaceHamiltonian:
    """Realize the model on a ring/chain of ``n_sites`` sites.

    PBC gives the block-circulant matrix; OBC drops every wrap-around
    block; winding control drops only the wrap blocks of one hopping
    direction (positive offsets = leftward end hops, negative = rightward).
    """
    if n_sites <= 2 * model.l:
        raise ValueError(f"need n_sites > 2*l = {2 * model.l}, got {n_sites}")
    q = model.q
    H = np.zeros((n_sites * q, n_sites * q), dtype=complex)
    for r, blk in model.hoppings.items():
        for i in range(n_sites):
            j = i + r
            wraps = not (0 <= j < n_sites)
            if wraps:
                if bc.kind is BCKind.OBC:
                    continue
                if bc.kind is BCKind.WINDING_CONTROL:
                    if bc.suppress is Suppress.LEFTWARD_END_HOPS and r > 0:
                        continue
                    if bc.suppress is Suppress.RIGHTWARD_END_HOPS and r < 0:
                        continue
            j %= n_sites
            H[i * q:(i + 1) * q, j * q:(j + 1) * q] += blk
    return RealSpaceHamiltonian(n_sites=n_sites, q=q, matrix=H, bc=bc)


@dataclass(frozen=True)
class SymmetryReport:
    kind: SymmetryKind
    max_deviation: float

    @property
    def holds(self) -> bool:
        return self.max_deviation < 1e-10


def check_symmetry(model: BlochModel, sym: SymmetryDescriptor,
                   kgrid: Optional[np.ndarray] = None) -> SymmetryReport:
    """Max entrywise deviation of the symmetry relation over a k grid."""
    op = sym.operator
    if op.shape[0] != model.q:
        raise ValueError(f"operator dimension {op.shape[0]} != model dimension {model.q}")
    if kgrid is None:
        kgrid = 2.0 * np.pi * np.arange(257) / 256
    else:
        kgrid = np.asarray(getattr(kgrid, "points", kgrid), dtype=float)
    op_inv = op.conj().T  # unitary
    dev = 0.0
    for k in kgrid:
        Hk = bloch_matrix(model, k)
        if sym.kind is SymmetryKind.ATRS:
            resid = op @ Hk.T @ op_inv - bloch_matrix(model, -k)
        else:
            resid = op @ Hk.conj().T @ op_inv - Hk
        dev = max(dev, float(np.abs(resid).max()))
    return SymmetryReport(kind=sym.kind, max_deviation=dev)


def with_extra_hopping(model: BlochModel, offset: int, block: np.ndarray,
                       name: Optional[str] = None) -> BlochModel:
    """A copy of ``model`` with ``block`` added at ``offset`` (range grows as needed)."""
    hop = {r: np.array(b) for r, b in model.hoppings.items()}
    hop[offset] = hop.get(offset, np.zeros((model.q, model.q), dtype=complex)) + block
    return BlochModel(q=model.q, l=max(model.l, abs(offset)), hoppings=hop,
                      name=name or model.name + "+extra", params=model.params)
