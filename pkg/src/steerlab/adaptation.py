"""Domain-adaptation maps between the operational and reference domains.

The core object is the linear map taking received snapshots to the reference
(free-space) domain.  Variants:

* ``coral``: E = Sigma_S^{1/2} Sigma_A^{-1/2} (correlation alignment).
* ``parallel-transport``: E = (Sigma_S Sigma_A^{-1})^{1/2}, the affine
  invariant parallel transport on the HPD manifold.  Coincides with coral
  whenever the two matrices commute.
* ``inverse-domain-coral``: same formula fitted on means of inverted
  correlation matrices; the result is applied to Sigma^{-1} (used by MVDR in
  reverberant scenes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import matrix_from_json, matrix_to_json, sample_correlation
from .exceptions import InvalidInput, NumericalFailure
from .hpd import hermitize, invert_hpd, matrix_power_half, matrix_sqrt_of_product

VARIANTS = ("coral", "parallel-transport", "inverse-domain-coral")

# fit-time residual bound on e Sigma_A e^H = Sigma_S (relative Frobenius)
ALIGNMENT_TOL = 1e-8


@dataclass(frozen=True)
class AdaptationMap:
    """Fitted map ``e`` with its provenance matrices."""

    e: np.ndarray
    variant: str
    sigma_s: np.ndarray
    sigma_a: np.ndarray

    @property
    def dim(self) -> int:
        return self.e.shape[0]

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "e": matrix_to_json(self.e),
            "sigma_s": matrix_to_json(self.sigma_s),
            "sigma_a": matrix_to_json(self.sigma_a),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AdaptationMap":
        variant = obj["variant"]
        if variant not in VARIANTS:
            raise InvalidInput(f"unknown map variant {variant!r}")
        return cls(
            e=matrix_from_json(obj["e"]),
            variant=variant,
            sigma_s=matrix_from_json(obj["sigma_s"]),
            sigma_a=matrix_from_json(obj["sigma_a"]),
        )


def fit_map(sigma_s, sigma_a, variant: str = "coral") -> AdaptationMap:
    """Fit the adaptation map from the two mean correlation matrices.

    Both inputs must be HPD of equal dimension.  For the coral and
    parallel-transport variants the fitted map satisfies
    ``e sigma_a e^H = sigma_s`` (checked to 1e-8 relative Frobenius), and
    ``sigma_s == sigma_a`` yields the identity.
    """
    if variant not in VARIANTS:
        raise InvalidInput(f"unknown map variant {variant!r}; expected one of {VARIANTS}")
    sigma_s = hermitize(sigma_s)
    sigma_a = hermitize(sigma_a)
    if sigma_s.shape != sigma_a.shape:
        raise InvalidInput("sigma_s and sigma_a dimensions do not match")
    if variant == "parallel-transport":
        e = matrix_sqrt_of_product(sigma_s, invert_hpd(sigma_a))
    else:
        e = matrix_power_half(sigma_s, 0.5) @ matrix_power_half(sigma_a, -0.5)
    fitted = AdaptationMap(e=e, variant=variant, sigma_s=sigma_s, sigma_a=sigma_a)
    residual = np.linalg.norm(e @ sigma_a @ e.conj().T - sigma_s) / np.linalg.norm(sigma_s)
    if residual > ALIGNMENT_TOL:
        raise NumericalFailure(f"map alignment residual {residual:.3e} exceeds {ALIGNMENT_TOL}")
    return fitted


def adapt_snapshots(amap: AdaptationMap, snapshots):
    """Apply ``z -> E z`` to every snapshot; returns the same container type.

    The sample correlation of the output equals
    ``E @ sample_correlation(input) @ E^H``.
    """
    z = np.asarray(getattr(snapshots, "snapshots", snapshots), dtype=np.complex128)
    if z.ndim != 2 or z.shape[1] != amap.dim:
        raise InvalidInput(f"snapshots of dim {z.shape} do not match map dim {amap.dim}")
    y = z @ amap.e.T
    if hasattr(snapshots, "snapshots"):
        return type(snapshots)(snapshots=y, bin_frequency=snapshots.bin_frequency)
    return y


def adapt_covariance(amap: AdaptationMap, sigma) -> np.ndarray:
    """Conjugate a correlation matrix by the map: ``E sigma E^H``.

    For the inverse-domain variant the input is ``Sigma^{-1}`` and the output
    is the adapted inverse.
    """
    sigma = np.asarray(sigma, dtype=np.complex128)
    if sigma.shape != amap.e.shape:
        raise InvalidInput("sigma dimension does not match map")
    out = amap.e @ sigma @ amap.e.conj().T
    return 0.5 * (out + out.conj().T)


def population_adapted_correlation(amap: AdaptationMap, snapshots) -> np.ndarray:
    """Sample correlation of the adapted snapshots (convenience two-path check)."""
    return sample_correlation(adapt_snapshots(amap, snapshots))
