"""DS / MVDR / MUSIC spectra, argmax DoA estimation, and diagnostic spectra.

All spectra are linear power over a direction grid; conversion to dB happens
only at presentation time.  Quadratic forms of Hermitian matrices are clipped
at zero after discarding the (tiny) imaginary rounding residue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adaptation import AdaptationMap
from .exceptions import InvalidInput, NumericalFailure
from .geometry import ArrayGeometry, DirectionGrid, steering_matrix
from .hpd import hermitian_eig, hermitize, invert_hpd

_QUAD_IMAG_TOL = 1e-10
_MUSIC_FLOOR = 1e-15  # keeps the pseudo-spectrum finite on exact subspaces


@dataclass(frozen=True)
class Spectrum:
    """Power (linear) per grid direction."""

    grid: DirectionGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.num_points,):
            raise InvalidInput("spectrum length does not match grid")
        if not np.isfinite(vals).all() or (vals < 0).any():
            raise InvalidInput("spectrum values must be finite and nonnegative")
        object.__setattr__(self, "values", vals)


def _hermitian_quadratic(sigma, d_rows: np.ndarray) -> np.ndarray:
    """Real quadratic forms d^H sigma d for each row d of ``d_rows``."""
    q = np.einsum("gm,mn,gn->g", d_rows.conj(), sigma, d_rows)
    scale = max(np.abs(q).max(), 1.0)
    if np.abs(q.imag).max() > _QUAD_IMAG_TOL * scale:
        raise NumericalFailure("quadratic form has a non-negligible imaginary part")
    return np.clip(q.real, 0.0, None)


def ds_power(sigma, geom: ArrayGeometry, angles_deg) -> np.ndarray:
    """Delay-and-sum power d(theta)^H sigma d(theta) at each angle."""
    sigma = hermitize(sigma, tol=1e-9)
    return _hermitian_quadratic(sigma, steering_matrix(geom, angles_deg))


def mvdr_power(sigma_or_inverse, geom: ArrayGeometry, angles_deg,
               input_is_inverse: bool = False) -> np.ndarray:
    """MVDR power 1 / (d^H sigma^{-1} d) at each angle."""
    sigma = hermitize(sigma_or_inverse, tol=1e-9)
    inv = sigma if input_is_inverse else invert_hpd(sigma)
    denom = _hermitian_quadratic(inv, steering_matrix(geom, angles_deg))
    if (denom <= 0).any():
        raise NumericalFailure("MVDR denominator is not positive")
    return 1.0 / denom

def music_power(sigma, geom: ArrayGeometry, angles_deg, signal_dim: int) -> np.ndarray:
    """MUSIC pseudo-power 1 / ||U_N^H d(theta)||^2 at each angle.

    ``U_N`` spans the eigenvectors of the M - signal_dim smallest eigenvalues.
    """
    sigma = hermitize(sigma, tol=1e-9)
    m = sigma.shape[0]
    if not (1 <= signal_dim < m):
        raise InvalidInput(f"signal_dim must be in [1, {m - 1}], got {signal_dim}")
    _, v = hermitian_eig(sigma)
    u_noise = v[:, signal_dim:]
    d = steering_matrix(geom, angles_deg)
    denom = np.abs(d.conj() @ u_noise) ** 2
    denom = np.maximum(denom.sum(axis=1), _MUSIC_FLOOR)
    return 1.0 / denom


def quadratic_term_power(a, geom: ArrayGeometry, angles_deg) -> np.ndarray:
    """|d(theta)^H A d(theta)|^2 for a general square matrix A."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput("A must be square")
    d = steering_matrix(geom, angles_deg)
    return np.abs(np.einsum("gm,mn,gn->g", d.conj(), a, d)) ** 2


def induced_power(amap: AdaptationMap, geom: ArrayGeometry, angles_deg) -> np.ndarray:
    """||E^H d(theta)||^2: the DS spectrum the map induces on white noise."""
    d = steering_matrix(geom, angles_deg)
    return (np.abs(d.conj() @ amap.e) ** 2).sum(axis=1)


def ds_spectrum(sigma, geom: ArrayGeometry, grid: DirectionGrid) -> Spectrum:
    return Spectrum(grid, ds_power(sigma, geom, grid.angles))


def mvdr_spectrum(sigma_or_inverse, geom: ArrayGeometry, grid: DirectionGrid,
                  input_is_inverse: bool = False) -> Spectrum:
    return Spectrum(grid, mvdr_power(sigma_or_inverse, geom, grid.angles, input_is_inverse))


def music_spectrum(sigma, geom: ArrayGeometry, grid: DirectionGrid, signal_dim: int) -> Spectrum:
    return Spectrum(grid, music_power(sigma, geom, grid.angles, signal_dim))


def quadratic_term_spectrum(a, geom: ArrayGeometry, grid: DirectionGrid) -> Spectrum:
    return Spectrum(grid, quadratic_term_power(a, geom, grid.angles))


def induced_spectrum(amap: AdaptationMap, geom: ArrayGeometry, grid: DirectionGrid) -> Spectrum:
    return Spectrum(grid, induced_power(amap, geom, grid.angles))


def estimate_doa(spectrum: Spectrum) -> float:
    """Grid angle of the global spectrum maximum; ties pick the smallest angle."""
    values = spectrum.values
    if values.size == 0:
        raise InvalidInput("empty spectrum")
    return float(spectrum.grid.angles[int(np.argmax(values))])


def output_sir(power_fn, sigma, geom: ArrayGeometry, theta_s: float, theta_i: float) -> float:
    """Spectrum ratio P(theta_s)/P(theta_i) in dB, evaluated at the exact angles.

    ``power_fn(sigma, geom, angles) -> array`` is one of the ``*_power``
    functions (possibly wrapped to bind extra arguments).
    """
    p = power_fn(sigma, geom, np.array([theta_s, theta_i]))
    if p[1] <= 0.0:
        raise NumericalFailure("zero interferer-direction power in output SIR")
    return float(10.0 * np.log10(p[0] / p[1]))
