"""Quantum-state overlap geometry: Gram matrices, Toeplitz symbols, spectral measures."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from . import signals as sg
from .errors import (NonUniformGrid, NotCirculant, NotPositive, NotToeplitz,
                     StepTooLarge, Unsupported, WindowTooNarrow)

TWO_PI = 2.0 * np.pi


class Exactness(Enum):
    EXACT = "exact"
    MANY_CYCLES = "many_cycles"


@dataclass(frozen=True)
class GramMatrix:
    """Hermitian PSD matrix of quantum-state overlaps on a parameter grid."""

    entries: np.ndarray
    grid: np.ndarray
    encoding: sg.Encoding
    exactness: Exactness

    @property
    def n(self):
        return self.entries.shape[0]

    def validate(self, psd_tol_per_dim=1e-9):
        g = self.entries
        herm = float(np.max(np.abs(g - g.conj().T)))
        diag = float(np.max(np.abs(np.diag(g) - 1.0)))
        min_eig = float(np.linalg.eigvalsh(g)[0])
        ok = herm <= 1e-12 and diag <= 1e-12 and min_eig >= -psd_tol_per_dim * self.n
        return ok, {"hermiticity": herm, "unit_diagonal": diag, "min_eigenvalue": min_eig}


def gram_coherent(problem, many_cycles=False, bath=None):
    """Overlap matrix of the coherent states indexed by the problem grid.

    With a discretized bath the overlaps are products of per-oscillator
    coherent-state overlaps; otherwise the continuum closed forms are used.
    """
    if problem.encoding is not sg.Encoding.COHERENT:
        raise ValueError("gram_coherent requires a coherent-encoding problem")
    if bath is not None:
        a = bath.amplitudes  # (n, M)
        n2 = np.sum(np.abs(a) ** 2, axis=1)
        cross = a.conj() @ a.T
        ent = np.exp(-0.5 * (n2[:, None] + n2[None, :] - 2.0 * cross))
        return GramMatrix(ent, problem.grid, problem.encoding, Exactness.EXACT)
    g = problem.grid
    nbar = np.broadcast_to(np.asarray(sg.mean_particle_number(
        problem.signal, g, problem.parameter, many_cycles), dtype=float), g.shape)
    l2 = sg.l2_inner_product(problem.signal, g[:, None], g[None, :],
                             problem.parameter, many_cycles)
    ent = np.exp(-0.5 * (nbar[:, None] + nbar[None, :] - l2))
    tag = Exactness.MANY_CYCLES if many_cycles else Exactness.EXACT
    return GramMatrix(ent, g, problem.encoding, tag)


def gram_single_particle(problem, many_cycles=False):
    """Overlap matrix of single-particle states (normalized temporal modes)."""
    if problem.encoding is not sg.Encoding.SINGLE_PARTICLE:
        raise ValueError("gram_single_particle requires single-particle encoding")
    g = problem.grid
    nbar = np.broadcast_to(np.asarray(sg.mean_particle_number(
        problem.signal, g, problem.parameter, many_cycles), dtype=float), g.shape)
    l2 = sg.l2_inner_product(problem.signal, g[:, None], g[None, :],
                             problem.parameter, many_cycles)
    ent = l2 / (2.0 * np.sqrt(nbar[:, None] * nbar[None, :]))
    tag = Exactness.MANY_CYCLES if many_cycles else Exactness.EXACT
    return GramMatrix(np.asarray(ent, dtype=complex), g, problem.encoding, tag)


@dataclass
class ToeplitzDefect:
    toeplitz: float
    circulant: float


def toeplitz_defect(gram):
    """Max entry spread along diagonals, plus the circulant (wrapped) defect."""
    grid = np.asarray(gram.grid, dtype=float)
    steps = np.diff(grid)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
        raise NonUniformGrid("toeplitz defect needs a uniform grid")
    g = gram.entries
    t_def = float(np.max(np.abs(g[1:, 1:] - g[:-1, :-1]))) if g.shape[0] > 1 else 0.0
    n = g.shape[0]
    row = g[0]
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    c_def = float(np.max(np.abs(g - row[idx])))
    return ToeplitzDefect(t_def, c_def)


@dataclass(frozen=True)
class ToeplitzSymbol:
    """Overlap as a function of the parameter lag, G(theta - theta')."""

    fn: Callable[[np.ndarray], np.ndarray]
    tail: float = 0.0                 # asymptotic value subtracted before transforms
    period: float | None = None       # set for circulant (periodic) symbols
    lag_half_width: float = 40.0      # default sampling window
    lag_step: float = 0.01
    zero_step: float | None = None    # align window ends to zeros of the tail ripple
    label: str = "symbol"

    def __call__(self, lags):
        return self.fn(np.asarray(lags, dtype=float))

    def aligned_half_width(self, half_width=None):
        hw = self.lag_half_width if half_width is None else half_width
        if self.zero_step:
            hw = max(1, round(hw / self.zero_step)) * self.zero_step
        return hw


def symbol_from_problem(problem, many_cycles=True):
    """Closed-form lag symbol for the Toeplitz problem families."""
    sig = problem.signal
    A, T, par = sig.amplitude, sig.duration, problem.parameter
    coh = problem.encoding is sg.Encoding.COHERENT

    if par in (sg.Parameter.AMPLITUDE, sg.Parameter.DISPLACEMENT):
        if not coh:
            raise Unsupported("amplitude symbols are defined for coherent encoding")
        n1 = float(sg.mean_particle_number(sig, 1.0, par, many_cycles))
        scale = 1.0 / np.sqrt(n1)
        return ToeplitzSymbol(lambda d: np.exp(-0.5 * n1 * d**2), 0.0, None,
                              12.0 * scale, scale / 200.0, None, "amplitude")

    if par is sg.Parameter.PHASE:
        if sig.kind is sg.SignalKind.WINDOWED_SINUSOID:
            if not many_cycles:
                raise NotToeplitz("exact sinusoid phase overlaps are not Toeplitz")
            c = 0.5 * A**2 * T
            return ToeplitzSymbol(lambda d: np.exp(-c * np.sin(0.5 * d) ** 2),
                                  0.0, TWO_PI, np.pi, np.pi / 2048, None, "phase")
        if sig.kind in (sg.SignalKind.COMPLEX_EXPONENTIAL, sg.SignalKind.PHASE_ROTATED):
            mu = 0.5 * A**2 * T
            s = 1.0 if sig.kind is sg.SignalKind.PHASE_ROTATED else -1.0
            return ToeplitzSymbol(lambda d: np.exp(-mu * (1.0 - np.exp(1j * s * d))),
                                  0.0, TWO_PI, np.pi, np.pi / 2048, None, "phase")
        raise Unsupported(f"no phase symbol for {sig.kind}")

    if par is sg.Parameter.PULSE_CENTRE:
        if sig.kind is not sg.SignalKind.SINE_GAUSSIAN:
            raise Unsupported("pulse-centre symbol needs a Gaussian pulse")
        s2 = sig.sigma**2
        if coh:
            nbar = float(sg.mean_particle_number(sig, 0.0, par))
            fn = lambda d: np.exp(-nbar * (1.0 - np.exp(-(d**2) / (8.0 * s2))))
            return ToeplitzSymbol(fn, float(np.exp(-nbar)), None,
                                  40.0 * sig.sigma, sig.sigma / 50.0, None, "pulse_centre")
        return ToeplitzSymbol(lambda d: np.exp(-(d**2) / (8.0 * s2)), 0.0, None,
                              30.0 * sig.sigma, sig.sigma / 50.0, None, "pulse_centre")

    # frequency parameter
    if sig.kind is sg.SignalKind.WINDOWED_SINUSOID:
        if not many_cycles:
            raise NotToeplitz("exact sinusoid frequency overlaps are not Toeplitz")
        c = 0.25 * A**2 * T
        half = sig.window is sg.Window.CENTERED
        wT = 0.5 * T if half else T
        if coh:
            fn = lambda d: np.exp(-c * (1.0 - sg.sinc(d * wT)))
            return ToeplitzSymbol(fn, float(np.exp(-c)), None, 40.0 * T,
                                  min(0.02, 2.0 / (A * T**1.5)), np.pi / wT, "frequency")
        return ToeplitzSymbol(lambda d: sg.sinc(d * wT) + 0j, 0.0, None,
                              600.0 * np.pi / wT, 0.05 / wT, np.pi / wT, "frequency_sp")
    if sig.kind is sg.SignalKind.COMPLEX_EXPONENTIAL:
        if sig.window is sg.Window.CENTERED:
            if coh:
                c = 0.5 * A**2 * T
                fn = lambda d: np.exp(-c * (1.0 - sg.sinc(0.5 * d * T)))
                return ToeplitzSymbol(fn, float(np.exp(-c)), None, 40.0 * T,
                                      min(0.02, 2.0 / (A * T**1.5)), TWO_PI / T, "frequency")
            return ToeplitzSymbol(lambda d: sg.sinc(0.5 * d * T) + 0j, 0.0, None,
                                  1200.0 * np.pi / T, 0.1 / T, TWO_PI / T, "frequency_sp")
        if coh:
            fn = lambda d: np.exp(-0.5 * A**2 * (T - sg.finite_time_delta(-d, T)))
            return ToeplitzSymbol(fn, float(np.exp(-0.5 * A**2 * T)), None, 40.0 * T,
                                  min(0.02, 2.0 / (A * T**1.5)), TWO_PI / T, "frequency")
        fn = lambda d: sg.finite_time_delta(-d, T) / T
        return ToeplitzSymbol(fn, 0.0, None, 1200.0 * np.pi / T, 0.1 / T,
                              TWO_PI / T, "frequency_sp")
    if sig.kind is sg.SignalKind.SINE_GAUSSIAN:
        s2 = sig.sigma**2
        if coh:
            nbar = 0.5 * np.sqrt(np.pi) * A**2 * sig.sigma
            fn = lambda d: np.exp(-nbar * (1.0 - np.exp(-0.25 * s2 * d**2)))
            return ToeplitzSymbol(fn, float(np.exp(-nbar)), None, 60.0 / sig.sigma,
                                  0.02 / sig.sigma, None, "frequency")
        return ToeplitzSymbol(lambda d: np.exp(-0.25 * s2 * d**2) + 0j, 0.0, None,
                              30.0 / sig.sigma, 0.02 / sig.sigma, None, "frequency_sp")
    if sig.kind is sg.SignalKind.LORENTZIAN_DECAY:
        gam = sig.gamma
        if coh:
            c = 0.5 * A**2 / gam
            fn = lambda d: np.exp(-c * d**2 / (4.0 * gam**2 + d**2))
            return ToeplitzSymbol(fn, float(np.exp(-c)), None, 2000.0 * gam,
                                  gam / 50.0, None, "frequency")
        return ToeplitzSymbol(lambda d: 4.0 * gam**2 / (4.0 * gam**2 + d**2) + 0j,
                              0.0, None, 2000.0 * gam, gam / 50.0, None, "frequency_sp")
    raise Unsupported(f"no closed-form symbol for {sig.kind}/{par}")


@dataclass
class SpectralMeasure:
    """Nonnegative spectral density of a Toeplitz symbol, plus an explicit DC atom."""

    k: np.ndarray
    density: np.ndarray
    atom_weight: float = 0.0
    norm_defect: float = 0.0

    @property
    def dk(self):
        return float(self.k[1] - self.k[0])

    def total_mass(self):
        return float(np.trapezoid(self.density, self.k)) + self.atom_weight

    def moments(self):
        """Mean and variance of the measure (atom sits at k = 0)."""
        m0 = self.total_mass()
        m1 = float(np.trapezoid(self.density * self.k, self.k))
        m2 = float(np.trapezoid(self.density * self.k**2, self.k))
        mean = m1 / m0
        return mean, m2 / m0 - mean**2


@dataclass
class DiscreteSpectralMeasure:
    """Fourier-series weights of a 2*pi-periodic symbol, indexed by integers."""

    indices: np.ndarray
    weights: np.ndarray
    norm_defect: float = 0.0

    def variance(self):
        w = self.weights / self.weights.sum()
        mean = float(np.sum(w * self.indices))
        return float(np.sum(w * self.indices**2) - mean**2)


def fourier_density(values, lags, k_out, pad_factor=8):
    """(1/2pi) int e^{-ik lag} f(lag) dlag on k_out, trapezoid + zero-padded FFT."""
    lags = np.asarray(lags, dtype=float)
    n = lags.size
    dlag = lags[1] - lags[0]
    k_out = np.atleast_1d(np.asarray(k_out, dtype=float))
    dk_req = np.min(np.diff(k_out)) if k_out.size > 1 else 0.05
    nfft = int(2 ** np.ceil(np.log2(max(2 * n, pad_factor * TWO_PI / (dlag * dk_req)))))
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    spec = np.fft.fft(np.asarray(values) * w, n=nfft)
    kn = TWO_PI * np.fft.fftfreq(nfft, d=dlag)
    dens = spec * np.exp(-1j * kn * lags[0]) * dlag / TWO_PI
    order = np.argsort(kn)
    kn = kn[order]
    dens = dens[order]
    if np.max(np.abs(k_out)) > -kn[0]:
        raise WindowTooNarrow("lag step too coarse for the requested k range")
    re = np.interp(k_out, kn, dens.real)
    im = np.interp(k_out, kn, dens.imag)
    return re, im


def _detect_tail(vals, lags):
    """Estimate a constant tail from the outer 5% of the lag window."""
    n = lags.size
    m = max(8, n // 20)
    edge = np.concatenate([vals[:m], vals[-m:]])
    level = float(np.mean(edge.real))
    spread = float(np.std(edge.real)) + float(np.max(np.abs(edge.imag)))
    return level, spread


def spectral_measure(symbol, k_grid, lag_half_width=None, lag_step=None,
                     negative_floor=1e-9):
    """Spectral density of a Toeplitz symbol on k_grid, with explicit DC atom.

    The constant tail is subtracted before the Fourier transform and
    recorded as an atom at k = 0; a finite lag grid cannot represent it
    otherwise.  Densities below -negative_floor (relative to the peak)
    raise NotPositive; smaller negative excursions clip to zero.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    if isinstance(symbol, ToeplitzSymbol):
        hw = symbol.aligned_half_width(lag_half_width)
        step = symbol.lag_step if lag_step is None else lag_step
        kmax = float(np.max(np.abs(k_grid)))
        step = min(step, np.pi / (1.5 * max(kmax, 1e-12)))
        n = int(np.ceil(2 * hw / step)) + 1
        lags = np.linspace(-hw, hw, n)
        vals = np.asarray(symbol(lags), dtype=complex)
        tail = symbol.tail
        edge_gap = float(np.max(np.abs(vals[[0, -1]] - tail)))
        if edge_gap > 1e-6 and symbol.zero_step is None and tail == 0.0:
            level, spread = _detect_tail(vals, lags)
            if spread > 1e-6:
                raise WindowTooNarrow(
                    f"symbol does not settle within the lag window (gap {edge_gap:.2e})")
            tail = level
    else:
        lags, vals = symbol
        lags = np.asarray(lags, dtype=float)
        vals = np.asarray(vals, dtype=complex)
        level, spread = _detect_tail(vals, lags)
        if spread > 1e-6:
            raise WindowTooNarrow("sampled symbol has no detectable constant tail")
        tail = level if abs(level) > 1e-12 else 0.0
    re, _ = fourier_density(vals - tail, lags, k_grid)
    peak = max(float(np.max(re)), 1e-300)
    # Gibbs undershoot next to a genuine jump reaches ~9% of the peak; a
    # non-positive-definite symbol rings at >= 22% (first sinc lobe)
    if float(np.min(re)) < -max(negative_floor, 0.15 * peak):
        raise NotPositive(f"density reaches {np.min(re):.3e}; invalid symbol")
    dens = np.clip(re, 0.0, None)
    atom = float(np.real(tail))
    mass = float(np.trapezoid(dens, k_grid)) + atom
    return SpectralMeasure(k_grid, dens, atom, abs(mass - 1.0))


def discrete_spectral_measure(symbol, n_samples=4096, k_max=None, tol=1e-10):
    """Fourier-series weights g_k of a 2*pi-periodic symbol."""
    if isinstance(symbol, ToeplitzSymbol):
        if symbol.period is None or abs(symbol.period - TWO_PI) > 1e-12:
            raise NotCirculant("symbol is not 2*pi-periodic")
        fn = symbol
    else:
        fn = symbol
        probe = np.array([-np.pi, np.pi, 0.3, 0.3 - TWO_PI])
        v = np.asarray(fn(probe))
        if abs(v[0] - v[1]) > 1e-9 or abs(v[2] - v[3]) > 1e-9:
            raise NotCirculant("symbol values do not repeat with period 2*pi")
    th = -np.pi + TWO_PI * np.arange(n_samples) / n_samples
    vals = np.asarray(fn(th), dtype=complex)
    # g_k = (1/2pi) int_{-pi}^{pi} e^{-ik th} G(th) dth, periodic rectangle rule
    coef = np.fft.fft(np.fft.ifftshift(vals)) / n_samples
    idx = np.fft.fftfreq(n_samples, d=1.0 / n_samples).astype(int)
    order = np.argsort(idx)
    idx, coef = idx[order], coef[order]
    if k_max is not None:
        keep = np.abs(idx) <= k_max
        idx, coef = idx[keep], coef[keep]
    w = coef.real
    if float(np.min(w)) < -1e-9:
        raise NotPositive("discrete spectral weights significantly negative")
    w = np.clip(w, 0.0, None)
    keep = w > tol * max(float(np.max(w)), 1e-300)
    return DiscreteSpectralMeasure(idx[keep], w[keep], abs(float(np.sum(w)) - 1.0))


@dataclass
class LowSnrTerms:
    """Leading particle-number terms of the frequency-symbol spectral measure."""

    prefactor: float
    atom_weight: float
    rectangle_height: float
    rectangle_support: tuple
    triangle_coeff: float
    triangle_support: tuple
    residual_scale: float

    def density(self, k):
        k = np.asarray(k, dtype=float)
        lo, hi = self.rectangle_support
        rect = np.where((k >= lo) & (k <= hi), self.rectangle_height, 0.0)
        tri = self.triangle_coeff * np.maximum(0.0, self.triangle_support[1] - np.abs(k))
        return rect + tri


def low_snr_spectral_terms(A, T, order=2):
    """Atom, rectangle and triangle terms of the weak-signal expansion."""
    if order > 2:
        raise Unsupported("expansion implemented through the two-particle term")
    pref = float(np.exp(-0.25 * A**2 * T))
    rect = pref * A**2 / 8.0 if order >= 1 else 0.0
    tri = pref * A**4 / 128.0 if order >= 2 else 0.0
    return LowSnrTerms(pref, pref, rect, (-T, T), tri, (-2 * T, 2 * T),
                       A**6 * T**3 / 384.0)


def resynthesize_symbol(measure, lags):
    """Inverse transform int e^{ik lag} g(k) dk + atom; round-trip check helper."""
    lags = np.asarray(lags, dtype=float)
    phases = np.exp(1j * np.outer(lags, measure.k))
    vals = np.trapezoid(phases * measure.density[None, :], measure.k, axis=1)
    return vals + measure.atom_weight


def qfi_from_fidelity(overlap, theta, dtheta):
    """QFI estimate 4(1 - F)/dtheta^2 from the overlap at small parameter steps.

    `overlap` is a ToeplitzSymbol or a callable (theta, theta') -> complex.
    Uses symmetric steps and Richardson extrapolation; raises StepTooLarge
    when halving the step moves the estimate by more than 10%.
    """
    if isinstance(overlap, ToeplitzSymbol):
        pair = lambda a, b: overlap(np.asarray(a) - np.asarray(b))
    else:
        pair = overlap

    def estimate(h):
        fp = np.abs(pair(theta, theta + h)) ** 2
        fm = np.abs(pair(theta, theta - h)) ** 2
        return float((2.0 - fp - fm) * 2.0 / h**2)

    i1 = estimate(dtheta)
    i2 = estimate(0.5 * dtheta)
    scale = max(abs(i2), 1e-30)
    if abs(i2 - i1) > 0.1 * scale and abs(i2 - i1) > 1e-12:
        raise StepTooLarge(
            f"fidelity step {dtheta:g} outside the quadratic regime "
            f"({i1:.6g} vs {i2:.6g})")
    return (4.0 * i2 - i1) / 3.0
