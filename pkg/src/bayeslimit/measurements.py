"""Concrete measurement schemes on the discretized bath and their Monte-Carlo BMSE."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.fft import dct
from scipy.special import xlogy

from . import signals as sg
from . import whitening
from .errors import Aliased, AllZeroPosterior

SQRT_HALF = np.sqrt(0.5)


class SchemeKind(Enum):
    TIME_QUADRATURE = "time_quadrature"
    TIME_COUNTING = "time_counting"
    FOURIER_COUNTING = "fourier_counting"
    WHITENING_PROJECTION = "whitening_projection"


class FourierTransformKind(Enum):
    DFT = "dft"
    DCT = "dct"


@dataclass(frozen=True)
class MeasurementScheme:
    kind: SchemeKind
    transform: FourierTransformKind = FourierTransformKind.DFT
    seed: int = 0


@dataclass
class DiscretizedBath:
    """Per-oscillator coherent amplitudes alpha_j(theta) = i sqrt(dt/2) h_theta(t_j)."""

    problem: object
    amplitudes: np.ndarray       # (n_grid, bins)
    times: np.ndarray
    dt: float

    @property
    def bins(self):
        return self.amplitudes.shape[1]

    @property
    def quadrature_means(self):
        """Mean of the displaced quadrature per bin, sqrt(2) Im alpha."""
        return np.sqrt(2.0) * self.amplitudes.imag

    @property
    def counting_rates(self):
        return np.abs(self.amplitudes) ** 2

    def total_numbers(self):
        return np.sum(self.counting_rates, axis=1)

    @property
    def phase_step(self):
        """Accumulated phase spread per bin across the grid, (grid span) * dt."""
        return float((self.problem.grid[-1] - self.problem.grid[0]) * self.dt)


def discretize(problem, bins, dt):
    """Left-endpoint time sampling of the signal over its window.

    Raises Aliased when the grid reaches the Nyquist bound pi/dt or the
    phase step per bin reaches pi.
    """
    if problem.parameter is sg.Parameter.FREQUENCY:
        if float(np.max(problem.grid)) >= np.pi / dt:
            raise Aliased(f"max grid frequency {np.max(problem.grid):.4g} >= pi/dt")
        span = float(problem.grid[-1] - problem.grid[0])
        if span * dt >= np.pi:
            raise Aliased("grid span times dt reaches pi")
    lo, hi = problem.signal.window_bounds()
    t = lo + dt * np.arange(bins)
    vals = np.stack([np.asarray(sg.evaluate(problem.signal, th, t, problem.parameter))
                     for th in problem.grid])
    if problem.signal.kind in (sg.SignalKind.WINDOWED_SINUSOID,
                               sg.SignalKind.COMPLEX_EXPONENTIAL,
                               sg.SignalKind.PHASE_ROTATED):
        # a bin starting at the window's right edge covers (hi, hi + dt),
        # which holds no signal
        vals[:, t >= hi - 1e-12] = 0.0
    amps = 1j * np.sqrt(0.5 * dt) * vals
    return DiscretizedBath(problem, amps.astype(complex), t, float(dt))


def fourier_rates(bath, transform=FourierTransformKind.DFT):
    """Counting rates after a passive unitary mode transform of the bath."""
    a = bath.amplitudes
    if transform is FourierTransformKind.DFT:
        b = np.fft.fft(a, axis=1) / np.sqrt(bath.bins)
    else:
        b = dct(a, type=2, norm="ortho", axis=1)
    return np.abs(b) ** 2


def sample_outcome(bath, scheme, theta_index, rng):
    """One measurement record for the true parameter at the given grid index."""
    if scheme.kind is SchemeKind.TIME_QUADRATURE:
        mean = bath.quadrature_means[theta_index]
        return mean + rng.normal(0.0, SQRT_HALF, size=mean.size)
    if scheme.kind is SchemeKind.TIME_COUNTING:
        return rng.poisson(bath.counting_rates[theta_index])
    if scheme.kind is SchemeKind.FOURIER_COUNTING:
        rates = fourier_rates(bath, scheme.transform)[theta_index]
        return rng.poisson(rates)
    raise ValueError(f"sample_outcome does not handle {scheme.kind}")


@dataclass
class GridPosterior:
    grid: np.ndarray
    weights: np.ndarray

    @property
    def mean(self):
        return float(np.sum(self.weights * self.grid))

    @property
    def variance(self):
        m = self.mean
        return float(np.sum(self.weights * (self.grid - m) ** 2))


def _log_likelihood_table(bath, scheme):
    if scheme.kind is SchemeKind.TIME_QUADRATURE:
        return bath.quadrature_means
    if scheme.kind is SchemeKind.TIME_COUNTING:
        return bath.counting_rates
    if scheme.kind is SchemeKind.FOURIER_COUNTING:
        return fourier_rates(bath, scheme.transform)
    raise ValueError(f"no likelihood table for {scheme.kind}")


def posterior_on_grid(bath, scheme, outcome, prior):
    """Grid posterior from one outcome record, combined with the prior.

    Log-likelihoods are normalized with max subtraction before
    exponentiating; a posterior that still underflows to zero raises
    AllZeroPosterior (grid and signal model are inconsistent).
    """
    table = _log_likelihood_table(bath, scheme)
    if scheme.kind is SchemeKind.TIME_QUADRATURE:
        # product of unit-variance/2 Gaussians: -(y - mean)^2 per bin
        ll = 2.0 * table @ outcome - np.sum(table**2, axis=1)
    else:
        ll = xlogy(outcome, table).sum(axis=1) - table.sum(axis=1)
    logw = ll + np.log(prior.probabilities)
    logw -= logw.max()
    w = np.exp(logw)
    s = w.sum()
    if not np.isfinite(s) or s <= 0:
        raise AllZeroPosterior("posterior underflowed after stabilization")
    return GridPosterior(prior.grid, w / s)


@dataclass
class BmseResult:
    bmse: float                 # mean posterior variance
    se: float
    bmse_sq: float              # mean squared error of the posterior mean
    se_sq: float
    trials: int

    def consistency_gap(self):
        return abs(self.bmse - self.bmse_sq), np.hypot(self.se, self.se_sq)


def _batch_se(values, batches=20):
    m = (values.size // batches) * batches
    bm = values[:m].reshape(batches, -1).mean(axis=1)
    return float(bm.std(ddof=1) / np.sqrt(batches))


def _trial_rng(seed, trial):
    return np.random.default_rng(np.random.SeedSequence((seed, trial)))


def bmse_monte_carlo(bath, scheme, prior, trials, seed=None):
    """Monte-Carlo BMSE: draw theta from the prior, an outcome from the
    likelihood, and average the posterior variance (and, equivalently, the
    squared error of the posterior mean).

    Per-trial generators are derived from (seed, trial index), so serial
    and parallel execution produce identical results.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    if seed is None:
        seed = scheme.seed
    table = _log_likelihood_table(bath, scheme)
    row2 = np.sum(table**2, axis=1)
    rates_sum = table.sum(axis=1)
    logp = np.log(prior.probabilities)
    probs = prior.probabilities
    grid = prior.grid
    pvar = np.empty(trials)
    sqerr = np.empty(trials)
    quad = scheme.kind is SchemeKind.TIME_QUADRATURE
    for t in range(trials):
        rng = _trial_rng(seed, t)
        j = int(rng.choice(grid.size, p=probs))
        if quad:
            y = table[j] + rng.normal(0.0, SQRT_HALF, size=table.shape[1])
            ll = 2.0 * table @ y - row2
        else:
            y = rng.poisson(table[j])
            ll = xlogy(y, table).sum(axis=1) - rates_sum
        logw = ll + logp
        logw -= logw.max()
        w = np.exp(logw)
        w /= w.sum()
        m1 = float(w @ grid)
        pvar[t] = float(w @ (grid - m1) ** 2)
        sqerr[t] = (m1 - grid[j]) ** 2
    return BmseResult(float(pvar.mean()), _batch_se(pvar),
                      float(sqerr.mean()), _batch_se(sqerr), trials)


def whitening_projection_bmse(symbol, prior, trials, seed=0, window_multiple=8.0,
                              lag_step=None):
    """Monte-Carlo BMSE of projecting onto the whitened (covariant) states.

    Outcomes are drawn from the finite-resolution covariant likelihood over
    its full lag range, so uninformative far-field results keep their
    prior-level error instead of being conditioned away.
    """
    kern = whitening.projection_kernel(symbol, prior.support[1] - prior.support[0],
                                       window_multiple, lag_step)
    lags, kv = kern.lags, kern.values
    cdf = np.cumsum(kv)
    cdf /= cdf[-1]
    grid = prior.grid
    probs = prior.probabilities
    pw = prior.weights
    pvar = np.empty(trials)
    sqerr = np.empty(trials)
    for t in range(trials):
        rng = _trial_rng(seed, t)
        j = int(rng.choice(grid.size, p=probs))
        out = grid[j] + lags[int(np.searchsorted(cdf, rng.random()))]
        w = np.interp(out - grid, lags, kv, left=0.0, right=0.0) * pw
        s = w.sum()
        if s <= 0:
            pvar[t] = prior.variance
            sqerr[t] = (prior.mean - grid[j]) ** 2
            continue
        w /= s
        m1 = float(w @ grid)
        pvar[t] = float(w @ (grid - m1) ** 2)
        sqerr[t] = (m1 - grid[j]) ** 2
    return BmseResult(float(pvar.mean()), _batch_se(pvar),
                      float(sqerr.mean()), _batch_se(sqerr), trials)
