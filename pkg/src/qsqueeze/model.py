"""System parameters and closed-form steady-state moments.

Conventions used throughout the package:

* Quadratures x1 = a + a^dag, x2 = i(a^dag - a), so [x1, x2] = 2i and the
  vacuum has Var(x1) = Var(x2) = 1. A thermal state at occupancy n_th has
  variance 1 + 2*n_th in both quadratures.
* All rates and frequencies are in units of the qubit-oscillator coupling g
  unless a config says otherwise; nothing below depends on that choice.
* The qubit ground-excited splitting is omega_a, the oscillator frequency
  omega_m, the energy decay rate gamma, the bath occupancy n_th.

The dispersive regime omega_a >> omega_m, g gives an effective oscillator
Hamiltonian with a qubit-state-dependent x1^2 term. With the qubit held in
its excited state the x1 quadrature stiffens and its steady-state variance
drops below the thermal value; the closed forms below are the stationary
solution of the damped Gaussian moment flow for that frozen-qubit model.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

__all__ = [
    "SystemParams",
    "SteadyStateMoments",
    "ParameterError",
    "DetuningWarning",
    "validate",
    "steady_state_moments",
    "renormalized_variance",
]

# Advisory threshold: the frozen-qubit reduction assumes the qubit splitting
# dominates the coupling. Below delta = 5 g the reduction is questionable.
DISPERSIVE_DELTA_FACTOR = 5.0


class ParameterError(ValueError):
    """A physically invalid parameter set."""


class DetuningWarning(UserWarning):
    """Parameters are outside the dispersive regime the reduced model assumes."""


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the qubit-oscillator system.

    omega_m : oscillator frequency
    omega_a : qubit splitting
    g       : transverse coupling strength (sigma_x * x1 form)
    gamma   : oscillator energy decay rate
    n_th    : bath thermal occupancy
    """

    omega_m: float
    omega_a: float
    g: float = 1.0
    gamma: float = 0.0
    n_th: float = 0.0

    @property
    def delta(self) -> float:
        """Qubit-oscillator detuning omega_a - omega_m."""
        return self.omega_a - self.omega_m

    @property
    def dispersive(self) -> bool:
        """True when the detuning comfortably dominates the coupling."""
        return self.delta > DISPERSIVE_DELTA_FACTOR * abs(self.g)


def validate(params: SystemParams) -> SystemParams:
    """Check a parameter set, returning it unchanged if acceptable.

    Raises ParameterError naming the offending field. Emits DetuningWarning
    (without failing) when the frozen-qubit reduction is dubious, i.e. when
    delta <= 5 g.
    """
    if not params.omega_m > 0.0:
        raise ParameterError(f"omega_m must be positive, got {params.omega_m}")
    if not params.omega_a > 0.0:
        raise ParameterError(f"omega_a must be positive, got {params.omega_a}")
    if params.g < 0.0:
        raise ParameterError(f"g must be non-negative, got {params.g}")
    if params.gamma < 0.0:
        raise ParameterError(f"gamma must be non-negative, got {params.gamma}")
    if params.n_th < 0.0:
        raise ParameterError(f"n_th must be non-negative, got {params.n_th}")
    for name in ("omega_m", "omega_a", "g", "gamma", "n_th"):
        if not math.isfinite(getattr(params, name)):
            raise ParameterError(f"{name} must be finite, got {getattr(params, name)}")
    if params.g > 0.0 and not params.dispersive:
        warnings.warn(
            f"detuning delta = {params.delta:g} is not large against g = {params.g:g}; "
            "the reduced x1^2 model is unreliable here",
            DetuningWarning,
            stacklevel=2,
        )
    return params


@dataclass(frozen=True)
class SteadyStateMoments:
    """Stationary second moments of the frozen-qubit damped oscillator."""

    var_x1: float
    var_x2: float
    cov_x1x2: float

    @property
    def determinant(self) -> float:
        return self.var_x1 * self.var_x2 - self.cov_x1x2**2

    @property
    def purity(self) -> float:
        """Gaussian purity 1/sqrt(det sigma)."""
        return 1.0 / math.sqrt(self.determinant)


def steady_state_moments(params: SystemParams) -> SteadyStateMoments:
    """Closed-form stationary moments with the qubit frozen in its excited state.

    Solves A sigma + sigma A^T + D = 0 analytically for
    A = 2 Omega H - (gamma/2) I, H = diag(omega_m/2 + 2 g^2/omega_a, omega_m/2),
    D = gamma (2 n_th + 1) I. Requires gamma > 0; an undamped oscillator has
    no stationary state to report.
    """
    validate(params)
    if params.gamma == 0.0:
        raise ParameterError(
            "gamma must be positive: an undamped oscillator has no dissipative steady state"
        )
    g2 = params.g**2
    wm, wa, gam, nth = params.omega_m, params.omega_a, params.gamma, params.n_th
    therm = 1.0 + 2.0 * nth
    denom = 16.0 * g2 * wm + wa * (gam**2 + 4.0 * wm**2)
    var_x1 = therm * (1.0 - 8.0 * g2 * wm / denom)
    var_x2 = therm * (1.0 + (32.0 * g2**2 + 8.0 * g2 * wa * wm) / (wa * denom))
    cov = -4.0 * g2 * gam * therm / denom
    return SteadyStateMoments(var_x1=var_x1, var_x2=var_x2, cov_x1x2=cov)


def renormalized_variance(params: SystemParams) -> float:
    """Stationary Var(x1) divided by the thermal variance 1 + 2 n_th.

    Independent of n_th and strictly below 1 for any g > 0: the squeezing
    survives bath occupancy in relative terms. Requires gamma > 0.
    """
    validate(params)
    if params.gamma == 0.0:
        raise ParameterError(
            "gamma must be positive: an undamped oscillator has no dissipative steady state"
        )
    g2 = params.g**2
    wm, wa, gam = params.omega_m, params.omega_a, params.gamma
    denom = 16.0 * g2 * wm + wa * (gam**2 + 4.0 * wm**2)
    return 1.0 - 8.0 * g2 * wm / denom
