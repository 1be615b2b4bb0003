"""Band structures, spectral winding numbers, characteristic-polynomial
roots, and real-space spectra under all boundary conditions.

Winding numbers are evaluated from the total unwrapped phase of
det[H(k) - eps0] along one BZ traversal, refined until successive phase
steps stay below pi/2, so the returned integer is grid-independent.
Characteristic roots come from a companion-matrix solve (``np.roots``,
which balances) of z^p det[H(z) - eps0].
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .grids import KGrid, Window
from .models import (
    OBC,
    PBC,
    BCKind,
    BlochModel,
    BoundaryCondition,
    Suppress,
    bloch_matrices,
    real_space_hamiltonian,
    winding_control,
)

EP_CONDITION_THRESHOLD = 1e8
DEGENERACY_MARGIN = 1e-8


class ContourDegenerateError(ValueError):
    """Reference energy too close to the spectrum for a winding contour."""

    def __init__(self, eps0, margin):
        super().__init__(f"reference {eps0} lies within {margin:.3e} of the spectrum")
        self.eps0 = eps0
        self.margin = margin


# ---------------------------------------------------------------------------
# band structures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandStructure:
    """Bands over one BZ window, labeled continuously in k.

    ``right_vecs[ik, :, b]`` is the unit-normalized right eigenvector of
    band ``b`` at ``kgrid.points[ik]``; ``left_vecs`` holds the
    biorthogonal partners (<u~_m|u_n> = delta_mn by construction).
    Band 0 is the one whose imaginary part peaks highest over the grid.
    ``ep_flags`` marks k points where the eigenbasis is too ill-conditioned
    to trust (exceptional-point proximity).
    """

    kgrid: KGrid
    energies: np.ndarray      # (n_bands, nk) complex
    right_vecs: np.ndarray    # (nk, q, n_bands)
    left_vecs: np.ndarray     # (nk, q, n_bands)
    ep_flags: np.ndarray      # (nk,) bool
    band_labels: np.ndarray   # (nk, n_bands) int, raw eigensolve index per label
    model: BlochModel

    @property
    def n_bands(self) -> int:
        return self.energies.shape[0]


def _eig_sorted_q2(Hk: np.ndarray):
    """Closed-form eigensolve of a stack of 2x2 matrices."""
    a, b = Hk[:, 0, 0], Hk[:, 0, 1]
    c, d = Hk[:, 1, 0], Hk[:, 1, 1]
    half_tr = 0.5 * (a + d)
    disc = np.sqrt(half_tr * half_tr - (a * d - b * c))
    energies = np.stack([half_tr + disc, half_tr - disc], axis=1)  # (nk, 2)
    nk = Hk.shape[0]
    vecs = np.empty((nk, 2, 2), dtype=complex)
    scale = np.abs(Hk).max(axis=(1, 2)) + 1.0
    for ib in range(2):
        e = energies[:, ib]
        # (H - E) v = 0; pick the better-conditioned row
        v1 = np.stack([b, e - a], axis=1)
        v2 = np.stack([e - d, c], axis=1)
        use2 = np.abs(b) < np.abs(c)
        vecs[:, :, ib] = np.where(use2[:, None], v2, v1)
    # diagonal matrix: both closed-form vectors degenerate to zero/parallel;
    # hand the two bands distinct basis vectors instead
    tiny = (np.abs(b) + np.abs(c)) < 1e-14 * scale
    if np.any(tiny):
        onsite = np.stack([a, d], axis=1)
        for ik in np.nonzero(tiny)[0]:
            first = int(np.argmin(np.abs(onsite[ik] - energies[ik, 0])))
            vecs[ik] = 0.0
            vecs[ik, first, 0] = 1.0
            vecs[ik, 1 - first, 1] = 1.0
    return energies, vecs


def _normalize_columns(vecs: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    vecs = vecs / norms
    # deterministic phase: largest-modulus component real positive
    q = vecs.shape[1]
    lead = np.take_along_axis(vecs, np.argmax(np.abs(vecs), axis=1)[:, None, :], axis=1)
    phase = lead / np.where(np.abs(lead) == 0, 1.0, np.abs(lead))
    return vecs / np.where(np.abs(lead) == 0, 1.0, phase)


def band_structure(model: BlochModel, nk: int,
                   window: Window = Window.ZERO_TO_2PI) -> BandStructure:
    """Diagonalize H(k) on an ``nk``-point grid with continuous band labels."""
    if nk < 16:
        raise ValueError("band_structure needs nk >= 16")
    grid = KGrid(nk, window)
    Hk = bloch_matrices(model, grid.points)
    q = model.q

    if q == 1:
        energies = Hk[:, 0, 0][None, :]
        ones = np.ones((nk, 1, 1), dtype=complex)
        flags = np.zeros(nk, dtype=bool)
        labels = np.zeros((nk, 1), dtype=int)
        return BandStructure(grid, energies, ones, ones.copy(), flags, labels, model)

    if q == 2:
        raw_e, raw_v = _eig_sorted_q2(Hk)
    else:
        raw_e = np.empty((nk, q), dtype=complex)
        raw_v = np.empty((nk, q, q), dtype=complex)
        for ik in range(nk):
            raw_e[ik], raw_v[ik] = np.linalg.eig(Hk[ik])
    raw_v = _normalize_columns(raw_v)

    # continuity: match each k's bands by eigenvector overlap against the
    # last frame whose eigenvectors were actually distinct (degenerate
    # frames keep the previous assignment and are skipped as references),
    # breaking ties by eigenvalue proximity
    labels = np.empty((nk, q), dtype=int)
    labels[0] = np.arange(q)
    ref_v, ref_e = None, None
    for ik in range(nk):
        if ik > 0:
            if ref_v is None:
                labels[ik] = labels[ik - 1]
            else:
                overlap = np.abs(ref_v.conj().T @ raw_v[ik])
                de = np.abs(ref_e[:, None] - raw_e[ik][None, :])
                score = overlap - 1e-6 * de / (1.0 + de)
                if q == 2:
                    keep = score[0, 0] + score[1, 1] >= score[0, 1] + score[1, 0]
                    labels[ik] = (0, 1) if keep else (1, 0)
                else:
                    _, cols = linear_sum_assignment(-score)
                    labels[ik] = cols
        cur = raw_v[ik][:, labels[ik]]
        gram_off = np.abs(cur.conj().T @ cur - np.eye(q)).max()
        if gram_off < 1.0 - 1e-6:
            ref_v, ref_e = cur, raw_e[ik][labels[ik]]

    energies = np.empty((q, nk), dtype=complex)
    right = np.empty((nk, q, q), dtype=complex)
    for ik in range(nk):
        energies[:, ik] = raw_e[ik][labels[ik]]
        right[ik] = raw_v[ik][:, labels[ik]]

    # global order: band 0 ("plus") is the counterclockwise loop when the
    # bands form an oppositely-oriented pair; otherwise fall back to the
    # imaginary-dispersion maximum
    order = _band_order(energies)
    energies = energies[order]
    right = right[:, :, order]
    labels = labels[:, order]

    conds = np.array([np.linalg.cond(right[ik]) for ik in range(nk)])
    flags = ~np.isfinite(conds) | (conds > EP_CONDITION_THRESHOLD)
    left = np.empty_like(right)
    for ik in range(nk):
        if flags[ik]:
            left[ik] = np.linalg.pinv(right[ik]).conj().T
        else:
            left[ik] = np.linalg.inv(right[ik]).conj().T
    return BandStructure(grid, energies, right, left, flags, labels, model)


def _curve_orientation(e: np.ndarray):
    """Winding of a closed band curve around its own centroid (+-1), or
    None when the centroid is not cleanly enclosed."""
    c = e.mean()
    curve = np.concatenate([e, e[:1]]) - c
    scale = np.abs(curve).max()
    if scale == 0 or np.abs(curve).min() < 1e-9 * scale:
        return None
    phase = np.unwrap(np.angle(curve))
    if np.abs(np.diff(phase)).max() >= 0.5 * np.pi:
        return None
    total = (phase[-1] - phase[0]) / (2.0 * np.pi)
    w = int(np.rint(total))
    return w if abs(total - w) < 0.01 else None


def _band_order(energies: np.ndarray) -> np.ndarray:
    nb = energies.shape[0]
    if nb == 2:
        w = [_curve_orientation(energies[b]) for b in range(2)]
        if w[0] is not None and w[1] is not None and w[0] * w[1] < 0:
            return np.array([0, 1]) if w[0] > 0 else np.array([1, 0])
    imax = np.unravel_index(np.argmax(energies.imag), energies.shape)[1]
    return np.lexsort((energies.real[:, imax], -energies.imag[:, imax]))


def band_derivatives(bands: BandStructure) -> np.ndarray:
    """dE/dk per band on the grid: closed form when the model has one,
    spectral (FFT) differentiation of the periodic band data otherwise."""
    model = bands.model
    k = bands.kgrid.points
    if model.dispersion is not None:
        e_ana, de_ana = model.dispersion(k)
        perm = _match_analytic_bands(bands.energies, e_ana)
        return de_ana[perm]
    e = bands.energies
    nk = e.shape[1]
    freqs = np.fft.fftfreq(nk, d=1.0 / nk)  # integer harmonics of e^{ik}
    if nk % 2 == 0:
        freqs[nk // 2] = 0.0  # drop the unpaired Nyquist mode
    return np.fft.ifft(1j * freqs * np.fft.fft(e, axis=1), axis=1)


def _match_analytic_bands(energies: np.ndarray, e_ana: np.ndarray) -> np.ndarray:
    """Permutation mapping band labels to rows of a closed-form dispersion."""
    nb = energies.shape[0]
    perm = np.empty(nb, dtype=int)
    used = set()
    for b in range(nb):
        dev = [np.inf if j in used else np.abs(energies[b] - e_ana[j]).max()
               for j in range(nb)]
        j = int(np.argmin(dev))
        perm[b] = j
        used.add(j)
    return perm


# ---------------------------------------------------------------------------
# winding numbers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindingResult:
    reference: complex
    winding: int
    phase_margin: float


def _det_on_contour(model: BlochModel, eps0: complex, nk: int) -> np.ndarray:
    k = 2.0 * np.pi * np.arange(nk + 1) / nk
    Hk = bloch_matrices(model, k)
    if model.q == 1:
        return Hk[:, 0, 0] - eps0
    shifted = Hk - eps0 * np.eye(model.q)
    return np.linalg.det(shifted)


def winding_number(model: BlochModel, eps0: complex, nk: int = 256,
                   margin_threshold: float = 1e-8) -> WindingResult:
    """Spectral winding of det[H(k) - eps0] around one BZ traversal."""
    nk_cur = max(int(nk), 32)
    while True:
        d = _det_on_contour(model, eps0, nk_cur)
        margin = float(np.abs(d).min())
        if margin <= margin_threshold:
            raise ContourDegenerateError(eps0, margin)
        phase = np.unwrap(np.angle(d))
        total = (phase[-1] - phase[0]) / (2.0 * np.pi)
        w = int(np.rint(total))
        steps = np.abs(np.diff(phase))
        if steps.max() < 0.5 * np.pi and abs(total - w) < 0.01:
            return WindingResult(reference=complex(eps0), winding=w, phase_margin=margin)
        if nk_cur >= (1 << 16):
            raise RuntimeError(f"winding contour did not resolve at eps0={eps0}")
        nk_cur *= 2


def per_band_winding(bands: BandStructure, band_index: int, eps0: complex,
                     margin_threshold: float = 1e-8) -> int:
    """Winding of the single band curve E_b(k) - eps0 over the BZ."""
    e = bands.energies[band_index]
    curve = np.concatenate([e, e[:1]]) - eps0
    margin = float(np.abs(curve).min())
    if margin <= margin_threshold:
        raise ContourDegenerateError(eps0, margin)
    phase = np.unwrap(np.angle(curve))
    if np.abs(np.diff(phase)).max() >= 0.5 * np.pi:
        raise ValueError("band grid too coarse to resolve the winding; increase nk")
    total = (phase[-1] - phase[0]) / (2.0 * np.pi)
    w = int(np.rint(total))
    if abs(total - w) >= 0.01:
        raise ValueError(f"band winding not integer-like: {total}")
    return w


def band_windings(bands: BandStructure, eps0: complex) -> List[int]:
    return [per_band_winding(bands, b, eps0) for b in range(bands.n_bands)]


def scan_winding(model: BlochModel, re_range, im_range, resolution: float,
                 nk: int = 256) -> List[tuple]:
    """Winding map over a rectangle; points landing on the spectrum are skipped.

    Returns (re, im, winding) triples in row-major order.
    """
    res = []
    re_vals = np.arange(re_range[0], re_range[1] + 0.5 * resolution, resolution)
    im_vals = np.arange(im_range[0], im_range[1] + 0.5 * resolution, resolution)
    for im in im_vals:
        for re in re_vals:
            try:
                w = winding_number(model, complex(re, im), nk=nk)
            except ContourDegenerateError:
                continue
            res.append((float(re), float(im), w.winding))
    return res


# ---------------------------------------------------------------------------
# characteristic-polynomial roots (GBZ conditions)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymplecticPairCheck:
    """Degeneracy of the two largest sub-unit-circle root moduli and of
    their reciprocal partners (both must vanish on a Kramers-paired
    open-boundary spectrum)."""

    inner_gap: float
    outer_gap: float
    reciprocal_mismatch: float


@dataclass(frozen=True)
class GbzReport:
    reference: complex
    pole_order: int
    roots: np.ndarray           # sorted by ascending modulus
    ordinary_gap: Optional[float]
    symplectic_pair: Optional[SymplecticPairCheck]


def _laurent_det(model: BlochModel, eps0: complex) -> np.ndarray:
    """Coefficients of det[H(z) - eps0] over offsets -l*q .. +l*q."""
    q, l = model.q, model.l
    width = 2 * l + 1
    entry = np.zeros((q, q, width), dtype=complex)
    for r, blk in model.hoppings.items():
        entry[:, :, r + l] += blk
    for i in range(q):
        entry[i, i, l] -= eps0

    out_width = 2 * l * q + 1
    det = np.zeros(out_width, dtype=complex)
    for perm in itertools.permutations(range(q)):
        sign = _perm_sign(perm)
        term = np.array([1.0 + 0j])
        for i, j in enumerate(perm):
            term = np.convolve(term, entry[i, j])
        pad = (out_width - term.size) // 2
        det[pad:pad + term.size] += sign * term
    return det


def _perm_sign(perm) -> int:
    seen = [False] * len(perm)
    sign = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, cycle = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            cycle += 1
        if cycle % 2 == 0:
            sign = -sign
    return sign


def char_poly_roots(model: BlochModel, eps0: complex) -> GbzReport:
    """Roots of z^p det[H(z) - eps0], z the analytic continuation of e^{ik}.

    p is the actual pole order of the Laurent determinant at z = 0
    (degenerate leading/trailing coefficients are trimmed first).
    Roots are sorted by ascending modulus; the straddling-gap and
    symplectic pair checks are filled from that ordering.
    """
    coeffs = _laurent_det(model, eps0)  # offsets -lq .. +lq
    lq = model.l * model.q
    tol = 1e-12 * np.abs(coeffs).max()
    if not np.any(np.abs(coeffs) > tol):
        raise ValueError("characteristic polynomial is degenerate (all coefficients vanish)")
    nz = np.nonzero(np.abs(coeffs) > tol)[0]
    lo, hi = nz[0] - lq, nz[-1] - lq  # lowest/highest surviving Laurent offsets
    trimmed = coeffs[nz[0]:nz[-1] + 1]
    if trimmed.size < 2:
        raise ValueError("characteristic polynomial is degenerate (constant in z)")

    pole_order = max(0, -int(lo))
    # z^{-lo} * det: plain polynomial with ascending powers = trimmed
    roots = np.roots(trimmed[::-1])
    if lo > 0:
        roots = np.concatenate([roots, np.zeros(lo, dtype=complex)])
    order = np.lexsort((np.angle(roots), np.abs(roots)))
    roots = roots[order]

    p = pole_order
    gap = None
    if 1 <= p < roots.size:
        gap = float(np.abs(roots[p]) - np.abs(roots[p - 1]))

    pair = None
    if p >= 2 and roots.size == 2 * p:
        mods = np.abs(roots)
        mismatch = 0.0
        for z in roots:
            mismatch = max(mismatch, float(np.min(np.abs(z * roots - 1.0))))
        pair = SymplecticPairCheck(
            inner_gap=float(abs(mods[p - 1] - mods[p - 2])),
            outer_gap=float(abs(mods[p + 1] - mods[p])),
            reciprocal_mismatch=mismatch,
        )
    return GbzReport(reference=complex(eps0), pole_order=pole_order,
                     roots=roots, ordinary_gap=gap, symplectic_pair=pair)


# ---------------------------------------------------------------------------
# real-space spectra
# ---------------------------------------------------------------------------

def _common_eigenbasis(model: BlochModel) -> Optional[np.ndarray]:
    """A matrix diagonalizing every hopping block simultaneously, or None."""
    if model.q == 1:
        return np.eye(1, dtype=complex)
    k_probe = 0.7310585786  # generic point, avoids accidental symmetry
    H = bloch_matrices(model, np.array([k_probe]))[0]
    w, V = np.linalg.eig(H)
    if not np.all(np.isfinite(V)) or np.linalg.cond(V) > 1e10:
        return None
    Vi = np.linalg.inv(V)
    for blk in model.hoppings.values():
        D = Vi @ blk @ V
        off = np.abs(D - np.diag(np.diag(D))).max()
        if off > 1e-11 * (1.0 + np.abs(blk).max()):
            return None
    return V


def _gauge_candidates(coeffs: dict) -> List[float]:
    cands = [1.0]
    for d in sorted({abs(r) for r in coeffs if r != 0}):
        cp, cm = coeffs.get(d, 0.0), coeffs.get(-d, 0.0)
        if abs(cp) > 0 and abs(cm) > 0:
            rho = float((abs(cm) / abs(cp)) ** (1.0 / (2.0 * d)))
            cands.extend([rho, 1.0 / rho])
    return cands


def _scalar_chain_eigvals(coeffs: dict, n_sites: int, bc: BoundaryCondition) -> np.ndarray:
    """Eigenvalues of a single-component chain, computed after the diagonal
    gauge similarity that minimizes departure from normality.

    The gauge is a pure similarity transform, so the spectrum is unchanged
    in exact arithmetic; it removes the exponential ill-conditioning of
    skin-effect matrices that otherwise pollutes dense eigensolves.
    """
    A = np.zeros((n_sites, n_sites), dtype=complex)
    for r, c in coeffs.items():
        if c == 0:
            continue
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
            A[i, j % n_sites] += c

    sites = np.arange(n_sites)
    best = None
    for rho in _gauge_candidates(coeffs):
        if rho <= 0 or rho ** (n_sites - 1) > 1e250 or rho ** (n_sites - 1) < 1e-250:
            if rho != 1.0:
                continue
        D = rho ** sites
        B = A * np.outer(1.0 / D, D)
        if not np.all(np.isfinite(B)):
            continue
        defect = np.linalg.norm(B @ B.conj().T - B.conj().T @ B)
        if best is None or defect < best[0]:
            best = (defect, B)
    return np.linalg.eigvals(best[1])


def real_space_spectrum(model: BlochModel, n_sites: int,
                        bc: BoundaryCondition = PBC) -> np.ndarray:
    """All n_sites*q eigenvalues of the real-space Hamiltonian.

    When the hopping blocks share an eigenbasis the problem is first
    decoupled into scalar chains and each chain is gauged before the
    dense eigensolve, which keeps skin spectra accurate at sizes where
    the raw matrix is hopelessly non-normal.  The preprocessing is a
    similarity transform: the returned spectrum is the same operator's.
    """
    V = _common_eigenbasis(model)
    if V is None:
        H = real_space_hamiltonian(model, n_sites, bc)
        return np.linalg.eigvals(H.matrix)
    if n_sites <= 2 * model.l:
        raise ValueError(f"need n_sites > 2*l = {2 * model.l}, got {n_sites}")
    Vi = np.linalg.inv(V)
    out = []
    for j in range(model.q):
        coeffs = {r: complex((Vi @ blk @ V)[j, j]) for r, blk in model.hoppings.items()}
        out.append(_scalar_chain_eigvals(coeffs, n_sites, bc))
    return np.concatenate(out)


def obc_spectrum(model: BlochModel, n_sites: int) -> np.ndarray:
    """Open-boundary eigenvalues (dense non-Hermitian eigensolve)."""
    if n_sites < 20:
        raise ValueError(f"obc_spectrum needs n_sites >= 20, got {n_sites}")
    return real_space_spectrum(model, n_sites, OBC)


def winding_control_spectrum(model: BlochModel, n_sites: int,
                             suppress: Suppress) -> np.ndarray:
    """Spectrum with one wrap-around hopping direction switched off.

    The spectral loop whose quasiparticles move in the suppressed
    direction collapses onto its open-boundary arc; the counter-moving
    loop survives.
    """
    if n_sites < 20:
        raise ValueError(f"winding_control_spectrum needs n_sites >= 20, got {n_sites}")
    return real_space_spectrum(model, n_sites, winding_control(suppress))


def set_distance(points: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest reference point."""
    points = np.asarray(points).ravel()
    reference = np.asarray(reference).ravel()
    return np.array([np.abs(reference - p).min() for p in points])


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    return float(max(set_distance(a, b).max(), set_distance(b, a).max()))
