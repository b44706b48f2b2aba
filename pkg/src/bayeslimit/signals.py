"""Classical waveform families and their closed-form derived quantities.

Conventions: waveforms carry units of sqrt(Hz), times are in seconds and
angular frequencies in rad/s.  The mean particle number of the coherent
state driven by a waveform h is (1/2) * ||h||^2 in L2.  Inner products
conjugate the first argument.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import Unsupported


class SignalKind(Enum):
    WINDOWED_SINUSOID = "windowed_sinusoid"
    COMPLEX_EXPONENTIAL = "complex_exponential"
    SINE_GAUSSIAN = "sine_gaussian"
    LORENTZIAN_DECAY = "lorentzian_decay"
    SCALED_TEMPLATE = "scaled_template"
    PHASE_ROTATED = "phase_rotated"


class Window(Enum):
    ZERO_TO_T = "zero_to_T"
    CENTERED = "centered"


class Parameter(Enum):
    FREQUENCY = "frequency"
    AMPLITUDE = "amplitude"
    PHASE = "phase"
    PULSE_CENTRE = "pulse_centre"
    DISPLACEMENT = "displacement"


class Encoding(Enum):
    COHERENT = "coherent"
    SINGLE_PARTICLE = "single_particle"


def sinc(x):
    """sin(x)/x with sinc(0) = 1 (unnormalized convention)."""
    return np.sinc(np.asarray(x) / np.pi)


def finite_time_delta(x, T):
    """Finite-time delta delta_T(x) = (e^{ixT} - 1)/(ix), with delta_T(0) = T.

    Evaluated as T e^{ixT/2} sinc(xT/2), which removes the 0/0 branch.
    """
    x = np.asarray(x, dtype=float)
    return T * np.exp(0.5j * x * T) * sinc(0.5 * x * T)


@dataclass(frozen=True)
class SignalFamily:
    """A parameterized classical waveform h_theta(t).

    Which field plays the role of theta is decided by the estimation
    problem's parameter (frequency by default); the remaining fields are
    treated as known constants.
    """

    kind: SignalKind
    amplitude: float = 1.0          # A, sqrt(Hz)
    phase: float = 0.0              # phi, rad
    omega: float = 1.0              # rad/s
    window: Window = Window.ZERO_TO_T
    duration: float = 1.0           # T, s
    sigma: float = 1.0              # pulse width, s
    t0: float = 0.0                 # pulse centre, s
    gamma: float = 1.0              # decay rate, 1/s
    template_times: np.ndarray | None = field(default=None, repr=False)
    template_values: np.ndarray | None = field(default=None, repr=False)

    def window_bounds(self):
        if self.window is Window.ZERO_TO_T:
            return 0.0, self.duration
        return -0.5 * self.duration, 0.5 * self.duration

    def with_parameter(self, parameter, theta):
        """Copy of the family with the estimated parameter set to theta."""
        import dataclasses

        fields = {
            Parameter.FREQUENCY: "omega",
            Parameter.AMPLITUDE: "amplitude",
            Parameter.PHASE: "phase",
            Parameter.PULSE_CENTRE: "t0",
            Parameter.DISPLACEMENT: "amplitude",
        }
        return dataclasses.replace(self, **{fields[parameter]: theta})


@dataclass(frozen=True)
class EstimationProblem:
    """A single-parameter estimation problem on a discrete parameter grid."""

    signal: SignalFamily
    parameter: Parameter
    encoding: Encoding
    grid: np.ndarray
    prior: object | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        object.__setattr__(self, "grid", grid)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("parameter grid must be a 1-D array with >= 2 points")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("parameter grid must be strictly increasing")
        if self.prior is not None:
            lo, hi = self.prior.support
            if grid[0] < lo - 1e-12 or grid[-1] > hi + 1e-12:
                raise ValueError("grid extends beyond the prior support")

    @property
    def grid_spacing(self):
        return float(self.grid[1] - self.grid[0])


def _template_unit_number(sig):
    t = np.asarray(sig.template_times, dtype=float)
    v = np.asarray(sig.template_values)
    return 0.5 * float(np.trapezoid(np.abs(v) ** 2, t))


def evaluate(signal, theta, t, parameter=Parameter.FREQUENCY):
    """Waveform value h_theta(t); zero outside the window for windowed kinds."""
    sig = signal.with_parameter(parameter, theta)
    t = np.asarray(t, dtype=float)
    A, phi, om = sig.amplitude, sig.phase, sig.omega
    if sig.kind is SignalKind.WINDOWED_SINUSOID:
        lo, hi = sig.window_bounds()
        return np.where((t >= lo) & (t <= hi), A * np.cos(om * t + phi), 0.0)
    if sig.kind in (SignalKind.COMPLEX_EXPONENTIAL, SignalKind.PHASE_ROTATED):
        lo, hi = sig.window_bounds()
        s = -1.0 if sig.kind is SignalKind.PHASE_ROTATED else 1.0
        vals = -1j * A * np.exp(1j * (om * t + s * phi))
        return np.where((t >= lo) & (t <= hi), vals, 0.0)
    if sig.kind is SignalKind.SINE_GAUSSIAN:
        u = t - sig.t0
        return A * np.exp(-(u**2) / (2 * sig.sigma**2) + 1j * om * u + 1j * phi)
    if sig.kind is SignalKind.LORENTZIAN_DECAY:
        u = t - sig.t0
        return A * np.exp(-sig.gamma * np.abs(u) + 1j * om * u + 1j * phi)
    if sig.kind is SignalKind.SCALED_TEMPLATE:
        return A * np.interp(t, sig.template_times, sig.template_values,
                             left=0.0, right=0.0)
    raise Unsupported(f"evaluate not defined for {sig.kind}")


def mean_particle_number(signal, theta, parameter=Parameter.FREQUENCY,
                         many_cycles=False):
    """Mean particle number of the driven coherent state, (1/2)||h_theta||^2."""
    sig = signal.with_parameter(parameter, theta)
    A, phi, om, T = sig.amplitude, sig.phase, sig.omega, sig.duration
    if sig.kind is SignalKind.WINDOWED_SINUSOID:
        if many_cycles:
            return A**2 * T / 4.0
        if sig.window is Window.ZERO_TO_T:
            corr = sinc(om * T) * np.cos(om * T + 2 * phi)
        else:
            corr = sinc(om * T) * np.cos(2 * phi)
        return A**2 * T / 4.0 * (1.0 + corr)
    if sig.kind in (SignalKind.COMPLEX_EXPONENTIAL, SignalKind.PHASE_ROTATED):
        return A**2 * T / 2.0
    if sig.kind is SignalKind.SINE_GAUSSIAN:
        return np.sqrt(np.pi) * A**2 * sig.sigma / 2.0
    if sig.kind is SignalKind.LORENTZIAN_DECAY:
        return A**2 / (2.0 * sig.gamma)
    if sig.kind is SignalKind.SCALED_TEMPLATE:
        return A**2 * _template_unit_number(sig)
    raise Unsupported(f"mean particle number not defined for {sig.kind}")


def l2_inner_product(signal, theta1, theta2, parameter=Parameter.FREQUENCY,
                     many_cycles=False):
    """L2 inner product int h_theta1^*(t) h_theta2(t) dt of two family members."""
    if parameter in (Parameter.AMPLITUDE, Parameter.DISPLACEMENT):
        n1 = mean_particle_number(signal, 1.0, parameter, many_cycles)
        return 2.0 * theta1 * theta2 * n1
    if parameter is Parameter.PHASE:
        sig = signal
        A, T = sig.amplitude, sig.duration
        if sig.kind is SignalKind.WINDOWED_SINUSOID:
            if not many_cycles:
                raise Unsupported("sinusoid phase overlap requires many_cycles")
            return 0.5 * A**2 * T * np.cos(theta1 - theta2)
        if sig.kind in (SignalKind.COMPLEX_EXPONENTIAL, SignalKind.PHASE_ROTATED):
            s = -1.0 if sig.kind is SignalKind.PHASE_ROTATED else 1.0
            return A**2 * T * np.exp(1j * s * (theta2 - theta1))
        raise Unsupported(f"phase overlap not defined for {sig.kind}")
    if parameter is Parameter.PULSE_CENTRE:
        if signal.kind is not SignalKind.SINE_GAUSSIAN:
            raise Unsupported("pulse-centre overlap needs a Gaussian pulse")
        nbar = mean_particle_number(signal, theta1, parameter)
        d = np.asarray(theta1) - np.asarray(theta2)
        return 2.0 * nbar * np.exp(-(d**2) / (8.0 * signal.sigma**2))

    # frequency parameter
    sig = signal
    A, phi, T = sig.amplitude, sig.phase, sig.duration
    w1 = np.asarray(theta1, dtype=float)
    w2 = np.asarray(theta2, dtype=float)
    d = w1 - w2
    if sig.kind is SignalKind.WINDOWED_SINUSOID:
        half = 0.5 * A**2 * T
        if sig.window is Window.ZERO_TO_T:
            main = sinc(d * T)
            if many_cycles:
                return half * main
            s = 0.5 * (w1 + w2) * T
            return half * (main + sinc(s) * np.cos(s + 2 * phi))
        main = sinc(0.5 * d * T)
        if many_cycles:
            return half * main
        s = 0.5 * (w1 + w2) * T
        return half * (main + sinc(s) * np.cos(2 * phi))
    if sig.kind is SignalKind.COMPLEX_EXPONENTIAL:
        if sig.window is Window.ZERO_TO_T:
            return A**2 * finite_time_delta(w2 - w1, T)
        return A**2 * T * sinc(0.5 * (w2 - w1) * T)
    if sig.kind is SignalKind.SINE_GAUSSIAN:
        return np.sqrt(np.pi) * A**2 * sig.sigma * np.exp(-(sig.sigma**2) * d**2 / 4.0)
    if sig.kind is SignalKind.LORENTZIAN_DECAY:
        g = sig.gamma
        return 4.0 * A**2 * g / (4.0 * g**2 + d**2)
    raise Unsupported(f"frequency overlap not defined for {sig.kind}")


def l2_inner_product_quadrature(signal, theta1, theta2, parameter=Parameter.FREQUENCY,
                                n_steps=200_001, span=None):
    """Trapezoid cross-check of the closed-form inner product."""
    sig1 = signal.with_parameter(parameter, theta1)
    if span is None:
        if sig1.kind is SignalKind.SINE_GAUSSIAN:
            span = (sig1.t0 - 10 * sig1.sigma, sig1.t0 + 10 * sig1.sigma)
        elif sig1.kind is SignalKind.LORENTZIAN_DECAY:
            span = (sig1.t0 - 40 / sig1.gamma, sig1.t0 + 40 / sig1.gamma)
        else:
            lo, hi = sig1.window_bounds()
            span = (lo, hi)
    t = np.linspace(span[0], span[1], n_steps)
    v1 = evaluate(signal, theta1, t, parameter)
    v2 = evaluate(signal, theta2, t, parameter)
    return complex(np.trapezoid(np.conj(v1) * v2, t))


def qfi(problem, theta, many_cycles=True):
    """Closed-form quantum Fisher information for the supported combinations.

    Raises Unsupported where no closed form exists; the fidelity-based
    estimate in the geometry module covers those cases numerically.
    """
    sig = problem.signal.with_parameter(problem.parameter, theta)
    A, T = sig.amplitude, sig.duration
    enc, par = problem.encoding, problem.parameter
    if enc is Encoding.COHERENT:
        if par is Parameter.FREQUENCY:
            if sig.kind is SignalKind.WINDOWED_SINUSOID:
                if not many_cycles:
                    raise Unsupported("exact sinusoid frequency QFI has no closed form")
                return A**2 * T**3 / (3.0 if sig.window is Window.ZERO_TO_T else 12.0)
            if sig.kind is SignalKind.COMPLEX_EXPONENTIAL:
                return A**2 * T**3 * (2.0 / 3.0 if sig.window is Window.ZERO_TO_T else 1.0 / 6.0)
            if sig.kind is SignalKind.SINE_GAUSSIAN:
                return np.sqrt(np.pi) * A**2 * sig.sigma**3
            if sig.kind is SignalKind.LORENTZIAN_DECAY:
                return A**2 / sig.gamma**3
        elif par in (Parameter.AMPLITUDE, Parameter.DISPLACEMENT):
            return 4.0 * mean_particle_number(sig, 1.0, par, many_cycles)
        elif par is Parameter.PHASE:
            if sig.kind is SignalKind.WINDOWED_SINUSOID:
                if not many_cycles:
                    raise Unsupported("exact sinusoid phase QFI has no closed form")
                return A**2 * T
            if sig.kind in (SignalKind.COMPLEX_EXPONENTIAL, SignalKind.PHASE_ROTATED):
                return 2.0 * A**2 * T
        elif par is Parameter.PULSE_CENTRE:
            if sig.kind is SignalKind.SINE_GAUSSIAN:
                return 2.0 * mean_particle_number(sig, theta, par) / sig.sigma**2
    else:
        if par is Parameter.FREQUENCY:
            if sig.kind is SignalKind.COMPLEX_EXPONENTIAL:
                return T**2 / 3.0
            if sig.kind is SignalKind.WINDOWED_SINUSOID and many_cycles:
                return T**2 * (4.0 / 3.0 if sig.window is Window.ZERO_TO_T else 1.0 / 3.0)
            if sig.kind is SignalKind.SINE_GAUSSIAN:
                return 2.0 * sig.sigma**2
            if sig.kind is SignalKind.LORENTZIAN_DECAY:
                return 2.0 / sig.gamma**2
        elif par is Parameter.PULSE_CENTRE:
            if sig.kind is SignalKind.SINE_GAUSSIAN:
                return 1.0 / sig.sigma**2
    raise Unsupported(f"no closed-form QFI for {enc}/{par}/{sig.kind}")


def prior_fisher_information(prior):
    """Fisher information of a discrete prior, int pi'(theta)^2/pi(theta) dtheta.

    Central differences on the grid, one-sided at the support boundary;
    the integral is restricted to bins with nonzero weight.
    """
    theta = np.asarray(prior.grid, dtype=float)
    w = np.asarray(prior.weights, dtype=float)
    live = w > 0
    th = theta[live]
    pw = w[live]
    if th.size < 3:
        return 0.0
    deriv = np.gradient(pw, th)
    dth = np.gradient(th)
    return float(np.sum(deriv**2 / pw * dth))
