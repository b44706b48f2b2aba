"""Bayesian mixed state, BSLD and minimum Bayesian mean-square error (MBMSE)."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateState, GridMismatch

EPS_PAIR_RELATIVE = 1e-12


class PriorKind(Enum):
    UNIFORM_INTERVAL = "uniform_interval"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class DiscretePrior:
    """Normalized probability weights pi_j on a parameter grid.

    weights are densities: sum_j pi_j * dtheta = 1.  Statistics use the
    centered offsets theta_j - mean, matching the convention of estimating
    the deviation from the prior mean.
    """

    grid: np.ndarray
    weights: np.ndarray
    kind: PriorKind

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        d = float(grid[1] - grid[0])
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "weights", w / (np.sum(w) * d))

    @property
    def spacing(self):
        return float(self.grid[1] - self.grid[0])

    @property
    def probabilities(self):
        return self.weights * self.spacing

    @property
    def mean(self):
        return float(np.sum(self.probabilities * self.grid))

    @property
    def centered(self):
        return self.grid - self.mean

    @property
    def variance(self):
        return float(np.sum(self.probabilities * self.centered**2))

    @property
    def support(self):
        d = 0.5 * self.spacing
        return float(self.grid[0] - d), float(self.grid[-1] + d)


def uniform_prior(center, width, n):
    """Flat prior on (center - width/2, center + width/2), n midpoint cells."""
    d = width / n
    grid = center - 0.5 * width + (np.arange(n) + 0.5) * d
    return DiscretePrior(grid, np.full(n, 1.0 / width), PriorKind.UNIFORM_INTERVAL)


def gaussian_prior(center, sigma, n, span=6.0):
    """Gaussian prior sampled on n points over center +- span*sigma."""
    grid = np.linspace(center - span * sigma, center + span * sigma, n)
    w = np.exp(-0.5 * ((grid - center) / sigma) ** 2)
    return DiscretePrior(grid, w, PriorKind.GAUSSIAN)


@dataclass
class BayesSolution:
    """BSLD solve output: optimal measurement spectrum and the MBMSE."""

    mbmse: float
    prior_variance: float
    rho_eigenvalues: np.ndarray
    rho_vectors: np.ndarray
    bsld: np.ndarray             # in the rho eigenbasis
    pair_floor: float
    identity_gap: float          # relative gap between the two MBMSE routes
    lyapunov_residual: float
    outcome_bmse: float | None = field(default=None)


def mixed_state(basis, prior):
    """Prior-averaged state rho and Bayesian derivative rho' in the waveform basis."""
    if basis.gram.grid.shape != prior.grid.shape or \
            not np.allclose(basis.gram.grid, prior.grid, rtol=0, atol=1e-12):
        raise GridMismatch("basis and prior use different parameter grids")
    c = basis.coefficients()                       # (n, r)
    p = prior.probabilities
    theta = prior.centered
    rho = c.T @ (p[:, None] * c.conj())
    rhop = c.T @ ((p * theta)[:, None] * c.conj())
    rho = 0.5 * (rho + rho.conj().T)
    rhop = 0.5 * (rhop + rhop.conj().T)
    # truncation loses a little trace; rescale the pair consistently
    tr = float(np.trace(rho).real)
    return rho / tr, rhop / tr


def bsld_mbmse(rho, rhop, prior_variance, pair_floor=None):
    """Solve the Lyapunov equation rho' = (rho L + L rho)/2 and evaluate the MBMSE.

    Eigenvalue pairs with lambda_j + lambda_k below the floor are excluded,
    mirroring the zero-sum exclusion of the exact solution.  The MBMSE is
    evaluated both from the pair sum and as prior_variance - tr(rho L^2);
    their relative gap is reported for consistency checking.
    """
    lam, vec = np.linalg.eigh(rho)
    if pair_floor is None:
        pair_floor = EPS_PAIR_RELATIVE * float(np.sum(np.abs(lam)))
    m = vec.conj().T @ rhop @ vec
    pair_sum = lam[:, None] + lam[None, :]
    mask = pair_sum > pair_floor
    if not np.any(mask):
        raise DegenerateState("entire spectrum excluded by the pair floor")
    bsld = np.zeros_like(m)
    bsld[mask] = 2.0 * m[mask] / pair_sum[mask]
    weight = np.zeros_like(pair_sum)
    weight[mask] = 4.0 * np.broadcast_to(lam[:, None], pair_sum.shape)[mask] \
        / pair_sum[mask] ** 2
    gain = float(np.sum(weight * np.abs(m) ** 2))
    gain_trace = float(np.real(np.einsum("j,jk,kj->", lam, bsld, bsld)))
    mbmse = prior_variance - gain
    gap = abs(gain - gain_trace) / max(abs(gain), 1e-300)
    resid = float(np.max(np.abs(np.where(mask, 0.5 * pair_sum * bsld - m, 0.0))))
    return BayesSolution(mbmse, prior_variance, lam, vec, bsld,
                         float(pair_floor), gap, resid)


@dataclass
class OptimalMeasurement:
    """Eigenbasis of the BSLD: estimate values and measurement vectors."""

    estimates: np.ndarray        # eigenvalues of L (optimal estimator values)
    vectors_basis: np.ndarray    # columns in the orthonormal waveform basis
    vectors_grid: np.ndarray     # columns as coefficients over the grid states


def optimal_measurement(solution, basis):
    """Optimal projective measurement from the BSLD eigendecomposition."""
    est, v = np.linalg.eigh(solution.bsld)
    vecs = solution.rho_vectors @ v      # back to the orthonormal waveform basis
    grid_coeffs = basis.vectors @ (vecs / np.sqrt(basis.eigenvalues)[:, None])
    return OptimalMeasurement(est, vecs, grid_coeffs)


def measurement_bmse(solution, prior, basis):
    """BMSE of the BSLD eigenbasis from explicit outcome statistics.

    Sums p(theta) |<x|h_theta>|^2 (x_est - theta)^2 directly, avoiding the
    cancellation of two large terms that plagues wide-prior evaluations of
    the closed-form MBMSE.
    """
    meas = optimal_measurement(solution, basis)
    amp = basis.coefficients().conj() @ meas.vectors_basis     # <x | h_j> entries
    prob = np.abs(amp) ** 2
    theta = prior.centered
    err = (meas.estimates[None, :] - theta[:, None]) ** 2
    return float(np.sum(prior.probabilities[:, None] * prob * err))


def solve(basis, prior, pair_floor=None, with_outcome_bmse=True):
    """Full pipeline: mixed state, BSLD solve, MBMSE, direct-outcome check."""
    rho, rhop = mixed_state(basis, prior)
    sol = bsld_mbmse(rho, rhop, prior.variance, pair_floor)
    if with_outcome_bmse:
        sol.outcome_bmse = measurement_bmse(sol, prior, basis)
    return sol


def solution_to_dict(solution, top=12):
    """JSON-ready summary: leading mixed-state spectrum, MBMSE, residuals."""
    lam = np.sort(solution.rho_eigenvalues)[::-1]
    return {
        "mbmse": solution.mbmse,
        "prior_variance": solution.prior_variance,
        "outcome_bmse": solution.outcome_bmse,
        "rho_spectrum_top": [float(v) for v in lam[:top]],
        "identity_gap": solution.identity_gap,
        "lyapunov_residual": solution.lyapunov_residual,
        "pair_floor": solution.pair_floor,
    }


class DisplacementScheme(Enum):
    QUADRATURE = "quadrature"
    NUMBER_RESOLVING = "number_resolving"


@dataclass
class DisplacementToy:
    """Closed-form Bayesian answers for displacement sensing of one oscillator."""

    sigma: float
    mbmse: float
    bmse: float
    estimator_gain: float    # posterior mean = gain * quadrature outcome
    posterior_variance: float


def displacement_toy(sigma, scheme=DisplacementScheme.QUADRATURE):
    """Analytic BMSE of the single-mode displacement problem, Gaussian prior.

    Quadrature readout attains the quantum limit sigma^2/(1 + 2 sigma^2);
    photon counting cannot tell the displacement sign, so its likelihood
    is even in the displacement and its BMSE stays at the prior variance.
    """
    if sigma <= 0:
        raise ValueError("prior width must be positive")
    mb = sigma**2 / (1.0 + 2.0 * sigma**2)
    gain = 2.0 * sigma**2 / (1.0 + 2.0 * sigma**2)
    if scheme is DisplacementScheme.QUADRATURE:
        return DisplacementToy(sigma, mb, mb, gain, mb)
    return DisplacementToy(sigma, mb, sigma**2, 0.0, sigma**2)
