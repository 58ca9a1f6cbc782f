"""Derived quantities: quadrature moments, purity, Wigner functions, decibels.

Wigner values use the displaced-parity form W(alpha) =
(2/pi) Tr[rho D(alpha) P D(alpha)^dag] on a rectangular grid in the complex
plane, with alpha = x + i y. In the quadrature convention of this package
(x1 = a + a^dag) the point (x, y) sits at x1 = 2x, x2 = 2y, so marginal
variances read off a grid must be multiplied by 4 to compare with Var(x1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import TOP_LEVEL_TOL, CutoffError, FockSpace, OperatorSet, displacement_diagonals
from .model import ParameterError

__all__ = [
    "QuadratureMoments",
    "WignerGrid",
    "reduce_to_oscillator",
    "quadrature_moments",
    "purity",
    "gaussian_purity",
    "wigner_grid",
    "to_db",
    "renormalize",
]

@dataclass(frozen=True)
class QuadratureMoments:
    """First and second moments of the two quadratures."""

    mean_x1: float
    mean_x2: float
    var_x1: float
    var_x2: float
    cov_x1x2: float

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.mean_x1, self.mean_x2])

    @property
    def cov(self) -> np.ndarray:
        return np.array(
            [[self.var_x1, self.cov_x1x2], [self.cov_x1x2, self.var_x2]]
        )

    @property
    def occupancy(self) -> float:
        """Mean excitation number implied by the moments."""
        second = self.var_x1 + self.mean_x1**2 + self.var_x2 + self.mean_x2**2
        return 0.25 * (second - 2.0)


def _expect(op: np.ndarray, rho: np.ndarray) -> float:
    return float(np.einsum("ij,ji->", op, rho).real)


def reduce_to_oscillator(rho: np.ndarray, space: FockSpace) -> np.ndarray:
    """Partial trace over the qubit; oscillator-only states pass through."""
    n = space.dim
    if rho.shape[0] == n:
        return rho
    if rho.shape[0] == 2 * n:
        r4 = rho.reshape(2, n, 2, n)
        return r4[0, :, 0, :] + r4[1, :, 1, :]
    raise ParameterError(
        f"state dimension {rho.shape[0]} matches neither the oscillator ({n}) "
        f"nor the joint space ({2 * n})"
    )


def quadrature_moments(rho: np.ndarray, ops: OperatorSet) -> QuadratureMoments:
    """Means, variances, and symmetrized covariance of x1 and x2.

    Accepts oscillator-only or joint states; the joint case traces out the
    qubit first. The covariance is the symmetric one,
    <{x1, x2}>/2 - <x1><x2>.
    """
    osc = reduce_to_oscillator(rho, ops.space)
    x1, x2 = np.asarray(ops.x1), np.asarray(ops.x2)
    m1 = _expect(x1, osc)
    m2 = _expect(x2, osc)
    v1 = _expect(x1 @ x1, osc) - m1 * m1
    v2 = _expect(x2 @ x2, osc) - m2 * m2
    cross = 0.5 * _expect(x1 @ x2 + x2 @ x1, osc) - m1 * m2
    return QuadratureMoments(mean_x1=m1, mean_x2=m2, var_x1=v1, var_x2=v2, cov_x1x2=cross)


def purity(rho: np.ndarray) -> float:
    """Tr[rho^2] for a Hermitian density matrix (squared Frobenius norm)."""
    return float(np.vdot(rho, rho).real)


def gaussian_purity(cov: np.ndarray) -> float:
    """Purity of a Gaussian state from its covariance, 1/sqrt(det sigma)."""
    det = float(np.linalg.det(np.asarray(cov, dtype=float)))
    if det <= 0.0:
        raise ParameterError(f"covariance determinant must be positive, got {det:g}")
    return 1.0 / math.sqrt(det)


@dataclass
class WignerGrid:
    """Wigner values on a rectangular grid; values[j, i] = W(xs[i], ys[j])."""

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray

    def integral(self) -> float:
        """Riemann-sum normalization; 1 for a grid that captures the state."""
        dx = float(self.xs[1] - self.xs[0])
        dy = float(self.ys[1] - self.ys[0])
        return float(self.values.sum() * dx * dy)

    def marginal_x(self) -> np.ndarray:
        """Distribution of the x coordinate, integrated over y."""
        dy = float(self.ys[1] - self.ys[0])
        return self.values.sum(axis=0) * dy

    def variance_x1(self) -> float:
        """Var(x1) of the x-marginal (factor 4 maps alpha-plane to x1)."""
        px = self.marginal_x()
        dx = float(self.xs[1] - self.xs[0])
        norm = float(px.sum() * dx)
        mean = float((px * self.xs).sum() * dx / norm)
        second = float((px * self.xs**2).sum() * dx / norm)
        return 4.0 * (second - mean * mean)


def wigner_grid(
    rho: np.ndarray, xs: np.ndarray, ys: np.ndarray, space: FockSpace
) -> WignerGrid:
    """Evaluate the Wigner function on a grid by displaced parity.

    Joint states are reduced to the oscillator first. W(alpha) equals
    (2/pi) Tr[rho D(2 alpha) Pi] with Pi the number parity, since conjugating
    the parity by a displacement doubles it; that trace touches only
    displacement matrix elements inside the state's support, which are exact
    in the truncated basis, so the grid extent costs no accuracy. The one
    thing that must hold is that the state itself fits the cutoff, checked
    via the top Fock level population; values come out exactly real for a
    Hermitian state.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or ys.ndim != 1 or xs.size < 2 or ys.size < 2:
        raise ParameterError("xs and ys must be 1-d grids with at least two points")
    osc = reduce_to_oscillator(rho, space)
    herm = float(np.max(np.abs(osc - osc.conj().T)))
    if herm > 1e-10:
        raise ParameterError(f"state is not Hermitian (residue {herm:.3g})")
    n = space.cutoff
    top = float(abs(osc[n - 1, n - 1]))
    if top > TOP_LEVEL_TOL:
        raise CutoffError(
            f"top Fock level holds population {top:.3g} > {TOP_LEVEL_TOL:g}; "
            "the cutoff truncates this state too hard for a trustworthy "
            "Wigner evaluation"
        )

    # signed upper diagonals of rho: u[k, d] = (-1)^k rho[k, k+d], zero padded
    sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    u = np.zeros((n, n), dtype=complex)
    for d in range(n):
        u[: n - d, d] = sign[: n - d] * np.diagonal(osc, offset=d)
    ds = np.arange(n)

    values = np.empty((ys.size, xs.size))
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            beta = 2.0 * complex(x, y)
            if beta == 0.0:
                s = float((sign * np.diagonal(osc).real).sum())
            else:
                g = displacement_diagonals(beta, n)
                su = np.einsum("kd,kd->d", u, g)
                phases = (beta / abs(beta)) ** ds
                # Hermitian pairing of the upper and lower triangles of
                # D(beta) makes the trace 2 Re(...) plus the diagonal term
                s = float(su[0].real) + 2.0 * float((phases[1:] * su[1:]).real.sum())
            values[j, i] = (2.0 / math.pi) * s
    return WignerGrid(xs=xs.copy(), ys=ys.copy(), values=values)


def to_db(variance: float) -> float:
    """Variance expressed in decibels, 10 log10(V); V = 1 (vacuum) maps to 0."""
    if variance <= 0.0:
        raise ParameterError(f"variance must be positive, got {variance}")
    return 10.0 * math.log10(variance)


def renormalize(variance: float, n_th: float) -> float:
    """Variance relative to the thermal value 1 + 2 n_th at the same occupancy."""
    if n_th < 0.0:
        raise ParameterError(f"n_th must be non-negative, got {n_th}")
    return variance / (1.0 + 2.0 * n_th)
