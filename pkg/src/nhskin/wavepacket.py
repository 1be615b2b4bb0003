"""Gaussian wavepacket construction and PBC time evolution in momentum
space, with channel-resolved peak tracking and center-of-mass analytics.

Evolution is spectral: each band amplitude picks up exp(-i E_b(k) t)
exactly, with all exponentials handled in the log domain (per-instant
max-exponent subtraction) so that strongly growing imaginary parts never
overflow.  States are renormalized at every instant, in momentum space
over band amplitudes and in real space over the site spinor density.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import logsumexp

from .grids import KGrid, Window, wrap_to_window
from .models import BlochModel
from .spectral import BandStructure, band_derivatives, band_structure, _match_analytic_bands


class FixedPointError(RuntimeError):
    """Peak self-consistency iteration failed; carries the last iterate."""

    def __init__(self, message, last_iterate):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(frozen=True)
class GaussianSpec:
    """Two-channel Gaussian initial data: momentum centers k0, site centers
    n0, common momentum width sigma, and participation coefficients c in
    [0, 1].  A Kramers-pair excitation uses k0_minus = -k0_plus mod 2*pi."""

    k0_plus: float
    k0_minus: float = 0.0
    n0_plus: float = 0.0
    n0_minus: float = 0.0
    sigma: float = 0.4
    c_plus: float = 1.0
    c_minus: float = 0.0
    sigma_minus: Optional[float] = None

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ValueError("sigma must be positive")
        if self.sigma_minus is not None and not (self.sigma_minus > 0):
            raise ValueError("sigma_minus must be positive")
        for name in ("c_plus", "c_minus"):
            c = getattr(self, name)
            if not (0.0 <= c <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {c}")
        if self.sigma_minus is not None and self.sigma_minus != self.sigma:
            warnings.warn("unequal widths for the two channels break their"
                          " mirror-symmetric evolution", stacklevel=2)

    def center(self, band: int) -> float:
        return self.k0_plus if band == 0 else self.k0_minus

    def site(self, band: int) -> float:
        return self.n0_plus if band == 0 else self.n0_minus

    def coefficient(self, band: int) -> float:
        return self.c_plus if band == 0 else self.c_minus

    def width(self, band: int) -> float:
        if band == 0 or self.sigma_minus is None:
            return self.sigma
        return self.sigma_minus


def kramers_partner(k0: float, window: Window = Window.ZERO_TO_2PI) -> float:
    """The momentum paired with k0 under k -> -k, in window coordinates."""
    return float(wrap_to_window(-k0, window))


def gaussian_envelope(k: np.ndarray, k0: float, n0: float, sigma: float) -> np.ndarray:
    """exp[-(k-k0)^2 / (2 sigma^2) - i (k-k0) n0] on the given labels.

    The difference k-k0 is taken in window coordinates (not wrapped), so
    the envelope depends on the BZ window once its tails cross an edge.
    """
    dk = np.asarray(k, dtype=float) - k0
    return np.exp(-dk * dk / (2.0 * sigma * sigma) - 1j * dk * n0)


@dataclass(frozen=True)
class OverlapKernel:
    """Equal-momentum kernel A[alpha, beta, ik] =
    conj(W^alpha_k c_alpha) W^beta_k c_beta <u_alpha(k)|u_beta(k)>."""

    values: np.ndarray  # (nb, nb, nk)


def overlap_kernel(spec: GaussianSpec, bands: BandStructure) -> OverlapKernel:
    nb = bands.n_bands
    k = bands.kgrid.points
    w = np.stack([gaussian_envelope(k, spec.center(b), spec.site(b), spec.width(b))
                  * spec.coefficient(b) for b in range(nb)])
    u_olap = np.einsum("kqa,kqb->abk", bands.right_vecs.conj(), bands.right_vecs)
    return OverlapKernel(values=w.conj()[:, None, :] * w[None, :, :] * u_olap)


def _check_exceptional_support(spec: GaussianSpec, bands: BandStructure):
    if not np.any(bands.ep_flags):
        return
    k = bands.kgrid.points
    for b in range(bands.n_bands if bands.n_bands <= 2 else 2):
        if spec.coefficient(b) == 0:
            continue
        dist = np.abs(np.angle(np.exp(1j * (k - spec.center(b)))))
        if np.any(bands.ep_flags & (dist <= 5.0 * spec.width(b))):
            raise ValueError("exceptional-point-flagged momenta inside the"
                             f" 5 sigma support of channel {b}")


def initial_state(spec: GaussianSpec, bands: BandStructure) -> np.ndarray:
    """Band amplitudes a_b(k) at t=0, normalized so sum |a|^2 = 1.

    The state is a_0 W^+ c_+ |u_0> + a_1 W^- c_- |u_1> with self-normalized
    right eigenvectors; for single-band models only the plus channel exists.
    """
    nb = bands.n_bands
    nk = bands.kgrid.n
    if nb == 1 and spec.c_minus != 0:
        raise ValueError("single-band model cannot host a minus channel (c_minus != 0)")
    if nb > 2:
        raise ValueError("two-channel initial data needs a one- or two-band model")
    _check_exceptional_support(spec, bands)
    k = bands.kgrid.points
    a = np.zeros((nb, nk), dtype=complex)
    a[0] = spec.c_plus * gaussian_envelope(k, spec.k0_plus, spec.n0_plus, spec.width(0))
    if nb == 2:
        a[1] = spec.c_minus * gaussian_envelope(k, spec.k0_minus, spec.n0_minus, spec.width(1))
    nrm = np.linalg.norm(a)
    if nrm == 0:
        raise ValueError("initial state has zero norm (both coefficients vanish?)")
    return a / nrm


def circular_com(density: np.ndarray) -> tuple:
    """Ring center of mass from the first Fourier moment.

    Returns (position in [0, N), moment magnitude); the position is NaN
    when the moment magnitude is negligible (symmetric/uniform density).
    """
    p = np.asarray(density, dtype=float)
    total = p.sum()
    if total <= 0:
        raise ValueError("channel density is numerically zero")
    p = p / total
    n = p.size
    moment = np.sum(p * np.exp(2j * np.pi * np.arange(n) / n))
    mag = float(np.abs(moment))
    if mag < 1e-12:
        return float("nan"), mag
    return float((np.angle(moment) * n / (2.0 * np.pi)) % n), mag


def _unwrap_ring_series(raw: np.ndarray, n: int) -> np.ndarray:
    """Minimal-displacement continuation of ring positions over time."""
    out = np.full_like(raw, np.nan)
    prev_raw = None
    prev_out = None
    for i, x in enumerate(raw):
        if np.isnan(x):
            continue
        if prev_raw is None:
            out[i] = x
        else:
            step = (x - prev_raw + 0.5 * n) % n - 0.5 * n
            out[i] = prev_out + step
        prev_raw, prev_out = x, out[i]
    return out


@dataclass(frozen=True)
class WavepacketRun:
    """Time series of a spectral evolution, normalized per instant.

    Momentum amplitudes are stored per band with a per-time log-scale
    factor (the subtracted exponent plus the normalization log); COM
    series are unwrapped ring positions, NaN where the Fourier moment is
    degenerate.
    """

    times: np.ndarray               # (T,)
    momentum_amps: np.ndarray       # (T, nb, nk) complex, unit norm per time
    logscale: np.ndarray            # (T,)
    real_amps: np.ndarray           # (T, N, q) complex, unit norm per time
    kmax_numeric: np.ndarray        # (T, nb) argmax momentum per band
    com_numeric_channels: np.ndarray  # (T, nb) unwrapped
    com_numeric_total: np.ndarray   # (T,) unwrapped
    com_channel_magnitude: np.ndarray  # (T, nb) Fourier-moment magnitude
    com_total_magnitude: np.ndarray    # (T,)
    com_analytic: np.ndarray        # (T, nb) n0 + Vg(t) t
    vg: np.ndarray                  # (T, nb) channel COM velocity
    channel_weights: np.ndarray     # (T, nb)
    bands: BandStructure
    spec: GaussianSpec
    kgrid: KGrid

    @property
    def n_bands(self) -> int:
        return self.momentum_amps.shape[1]


def evolve(model: BlochModel, spec: GaussianSpec, kgrid: KGrid,
           times) -> WavepacketRun:
    """Spectrally evolve the Gaussian initial state over ``times``.

    ``times`` must be ascending and start at 0.  Per band b,
    a_b(k, t) = a_b(k, 0) exp(-i E_b(k) t), evaluated with a per-time
    max-exponent shift, then normalized; real-space spinors follow from
    the unitary lattice transform and are normalized independently.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a nonempty 1D array")
    if times[0] != 0.0:
        raise ValueError("times must start at 0")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly ascending")

    bands = band_structure(model, kgrid.n, kgrid.window)
    nb, nk, q = bands.n_bands, kgrid.n, model.q
    a0 = initial_state(spec, bands)
    with np.errstate(divide="ignore"):
        log_abs0 = np.log(np.abs(a0))
    phase0 = np.angle(a0)
    e_im = bands.energies.imag
    e_re = bands.energies.real
    de_re = band_derivatives(bands).real
    kpts = kgrid.points

    # |W|^2 per band (participation coefficients cancel in the COM ratio)
    log_weight = np.stack([
        -((kpts - spec.center(b)) / spec.width(b)) ** 2 for b in range(nb)])

    T = times.size
    mom = np.empty((T, nb, nk), dtype=complex)
    logscale = np.empty(T)
    real_amps = np.empty((T, nk, q), dtype=complex)
    kmax = np.full((T, nb), np.nan)
    com_ch_raw = np.full((T, nb), np.nan)
    com_ch_mag = np.zeros((T, nb))
    com_tot_raw = np.full(T, np.nan)
    com_tot_mag = np.zeros(T)
    vg = np.empty((T, nb))
    com_ana = np.empty((T, nb))
    weights = np.zeros((T, nb))

    for it, t in enumerate(times):
        logs = log_abs0 + e_im * t
        shift = logs.max()
        amps = np.exp(logs - shift) * np.exp(1j * (phase0 - e_re * t))
        nrm = np.linalg.norm(amps)
        amps /= nrm
        mom[it] = amps
        logscale[it] = shift + np.log(nrm)

        dens_b = np.abs(amps) ** 2
        weights[it] = dens_b.sum(axis=1)

        spinor_k = np.einsum("bk,kqb->kq", amps, bands.right_vecs)
        psi = kgrid.to_real_space(spinor_k)
        psi /= np.linalg.norm(psi)
        real_amps[it] = psi
        com_tot_raw[it], com_tot_mag[it] = circular_com((np.abs(psi) ** 2).sum(axis=1))

        for b in range(nb):
            x = log_weight[b] + 2.0 * e_im[b] * t
            w = np.exp(x - x.max())
            vg[it, b] = float(np.sum(w * de_re[b]) / np.sum(w))
            com_ana[it, b] = spec.site(b) + vg[it, b] * t
            if weights[it, b] <= 0:
                continue
            kmax[it, b] = kpts[np.argmax(dens_b[b])]
            chi = kgrid.to_real_space(amps[b][:, None] * bands.right_vecs[:, :, b])
            com_ch_raw[it, b], com_ch_mag[it, b] = circular_com(
                (np.abs(chi) ** 2).sum(axis=1))

    com_ch = np.column_stack([_unwrap_ring_series(com_ch_raw[:, b], nk)
                              for b in range(nb)])
    com_tot = _unwrap_ring_series(com_tot_raw, nk)
    return WavepacketRun(times=times, momentum_amps=mom, logscale=logscale,
                         real_amps=real_amps, kmax_numeric=kmax,
                         com_numeric_channels=com_ch, com_numeric_total=com_tot,
                         com_channel_magnitude=com_ch_mag,
                         com_total_magnitude=com_tot_mag,
                         com_analytic=com_ana, vg=vg, channel_weights=weights,
                         bands=bands, spec=spec, kgrid=kgrid)


# ---------------------------------------------------------------------------
# momentum-peak self-consistency
# ---------------------------------------------------------------------------

def _imag_derivative_fn(bands: BandStructure, band_index: int) -> Callable:
    """dE_b^I/dk as a function of (possibly off-grid) momentum."""
    model = bands.model
    if model.dispersion is not None:
        perm = _match_analytic_bands(bands.energies,
                                     model.dispersion(bands.kgrid.points)[0])
        row = int(perm[band_index])

        def closed_form(k):
            return model.dispersion(np.atleast_1d(np.asarray(k, dtype=float)))[1][row].imag

        return closed_form

    de = band_derivatives(bands)[band_index].imag
    kp = bands.kgrid.points
    start = bands.kgrid.window.start
    kp_ext = np.concatenate([kp, [start + 2.0 * np.pi]])
    de_ext = np.concatenate([de, de[:1]])

    def interpolated(k):
        kk = (np.atleast_1d(np.asarray(k, dtype=float)) - start) % (2.0 * np.pi) + start
        return np.interp(kk, kp_ext, de_ext)

    return interpolated


def _log_density_curvature(k, k0, sigma, t, d_im, h=1e-6):
    d2 = (d_im(k + h)[0] - d_im(k - h)[0]) / (2.0 * h)
    return -2.0 / (sigma * sigma) + 2.0 * t * d2


def kmax_selfconsistent(spec: GaussianSpec, bands: BandStructure, band_index: int,
                        t: float, k_seed: Optional[float] = None,
                        tol: float = 1e-10, max_iter: int = 10000) -> float:
    """Solve k = k0 + sigma^2 t dE^I/dk|_k for the channel's momentum peak.

    Damped fixed-point iteration with adaptive damping (halved whenever the
    residual stops contracting), seeded at ``k_seed`` for continuation in t.
    The converged point is verified to be a log-density maximum; if the
    iteration lands on a minimum, the nearest true peak branch is returned.
    """
    k0 = spec.center(band_index)
    sigma = spec.width(band_index)
    d_im = _imag_derivative_fn(bands, band_index)
    seed = float(k_seed) if k_seed is not None else k0
    k = seed
    h = 1e-6
    converged = False
    for _ in range(max_iter):
        target = k0 + sigma * sigma * t * float(d_im(k)[0])
        if abs(target - k) < tol:
            converged = True
            break
        # damping from the local map derivative: alpha = 1/(1 - g') makes the
        # damped step a Newton step on k - g(k); clamp near the bifurcation
        slope = sigma * sigma * t * (float(d_im(k + h)[0]) - float(d_im(k - h)[0])) / (2 * h)
        if slope < 0.9:
            alpha = min(1.0, max(1.0 / (1.0 - slope), 1e-6))
        else:
            alpha = 0.05
        k = (1.0 - alpha) * k + alpha * target

    bad_extremum = converged and t > 0 and _log_density_curvature(k, k0, sigma, t, d_im) > 0
    if not converged or bad_extremum:
        branches = kmax_branches(spec, bands, band_index, t)
        if branches.size == 0:
            raise FixedPointError(f"peak equation did not converge at t={t}", k)
        k = float(branches[np.argmin(np.abs(branches - seed))])
    return float(k)


def kmax_branches(spec: GaussianSpec, bands: BandStructure, band_index: int,
                  t: float, n_scan: int = 200001) -> np.ndarray:
    """All log-density maxima of the channel at time t (dense residual scan).

    Solutions of the peak equation are located by sign changes of
    f(k) = k - k0 - sigma^2 t dE^I/dk over the full admissible span and
    polished by bisection; only maxima (negative curvature) are kept.
    Positions are reported in unreduced coordinates around k0 and may
    leave the BZ window; reduce mod 2*pi as needed.
    """
    k0 = spec.center(band_index)
    sigma = spec.width(band_index)
    d_im = _imag_derivative_fn(bands, band_index)
    probe = np.linspace(0.0, 2.0 * np.pi, 2048)
    dmax = float(np.abs(d_im(probe)).max())
    span = max(np.pi, sigma * sigma * t * dmax) + 0.5
    kk = np.linspace(k0 - span, k0 + span, n_scan)
    f = kk - k0 - sigma * sigma * t * d_im(kk)
    sgn = np.sign(f)
    crossings = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    roots = []
    for idx in crossings:
        a, b = kk[idx], kk[idx + 1]
        fa = f[idx]
        for _ in range(80):
            mid = 0.5 * (a + b)
            fm = mid - k0 - sigma * sigma * t * float(d_im(mid)[0])
            if np.sign(fm) == np.sign(fa):
                a, fa = mid, fm
            else:
                b = mid
        root = 0.5 * (a + b)
        if t == 0 or _log_density_curvature(root, k0, sigma, t, d_im) < 0:
            roots.append(root)
    if not roots and abs(float(d_im(k0)[0])) < 1e-12:
        roots.append(k0)  # stationary center before any bifurcation
    return np.array(sorted(roots))


def kmax_trajectory(spec: GaussianSpec, bands: BandStructure, band_index: int,
                    times) -> np.ndarray:
    """Continuation of the self-consistent peak along an ascending time grid."""
    out = np.empty(len(times))
    seed = None
    for i, t in enumerate(times):
        seed = kmax_selfconsistent(spec, bands, band_index, float(t), k_seed=seed)
        out[i] = seed
    return out


# ---------------------------------------------------------------------------
# center-of-mass analytics
# ---------------------------------------------------------------------------

def com_velocity(spec: GaussianSpec, bands: BandStructure, band_index: int,
                 t: float) -> float:
    """Channel COM velocity: the |W|^2 e^{2 E^I t}-weighted BZ average of
    dE^R/dk, with the shared exponent shifted out before exponentiation."""
    k = bands.kgrid.points
    logw = -(((k - spec.center(band_index)) / spec.width(band_index)) ** 2)
    x = logw + 2.0 * bands.energies[band_index].imag * t
    w = np.exp(x - x.max())
    de_re = band_derivatives(bands)[band_index].real
    return float(np.sum(w * de_re) / np.sum(w))


def com_analytic(spec: GaussianSpec, bands: BandStructure, band_index: int,
                 t: float) -> float:
    """Predicted channel center of mass n0 + Vg(t) t (unwrapped)."""
    return spec.site(band_index) + com_velocity(spec, bands, band_index, t) * t


def com_numeric(run: WavepacketRun, t_index: int,
                channel: Union[int, str] = "total") -> float:
    """Measured circular COM (unwrapped); NaN where the moment is degenerate."""
    if channel == "total":
        return float(run.com_numeric_total[t_index])
    b = int(channel)
    if run.channel_weights[t_index, b] <= 0:
        raise ValueError(f"channel {b} density is numerically zero")
    return float(run.com_numeric_channels[t_index, b])


# ---------------------------------------------------------------------------
# channel separation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparationReport:
    times: np.ndarray
    ratio: np.ndarray
    threshold: float
    time_below: Optional[float]   # first time from which the ratio stays below


def channel_separation_check(run: WavepacketRun,
                             threshold: float = 1e-3) -> SeparationReport:
    """Cross-channel vs dominant-term magnitude ratio over time.

    The cross term sum_k |A_{+-}(k,k)| carries no exponential growth; the
    dominant term sum_k A_{++}(k,k) e^{2 E_+^I t} does, so the ratio decays
    once the growing channel takes over.
    """
    if run.n_bands < 2:
        raise ValueError("channel separation needs a two-band run")
    kernel = overlap_kernel(run.spec, run.bands).values
    cross = float(np.sum(np.abs(kernel[0, 1])))
    diag = kernel[0, 0].real
    with np.errstate(divide="ignore"):
        log_diag = np.log(np.maximum(diag, 0.0))
    e_im = run.bands.energies[0].imag
    ratio = np.empty(run.times.size)
    for it, t in enumerate(run.times):
        log_den = logsumexp(log_diag + 2.0 * e_im * t)
        ratio[it] = cross * np.exp(-log_den)
    below = ratio < threshold
    time_below = None
    for i in range(ratio.size):
        if below[i:].all():
            time_below = float(run.times[i])
            break
    return SeparationReport(times=run.times, ratio=ratio, threshold=threshold,
                            time_below=time_below)
