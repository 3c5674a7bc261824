"""Sample and reference correlation matrices and their means."""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidInput
from .hpd import hermitize


def sample_correlation(snapshots) -> np.ndarray:
    """Sample correlation matrix (1/L) sum_l z(l) z(l)^H of an (L, M) stack.

    Accepts a :class:`~steerlab.scene.SnapshotSet` or a plain array of
    snapshot rows.
    """
    z = np.asarray(getattr(snapshots, "snapshots", snapshots), dtype=np.complex128)
    if z.ndim == 1:
        z = z[None, :]
    if z.ndim != 2 or z.shape[0] < 1:
        raise InvalidInput(f"expected (L, M) snapshots, got shape {z.shape}")
    sigma = (z.T @ z.conj()) / z.shape[0]
    return 0.5 * (sigma + sigma.conj().T)


def reference_correlation(d, eps: float) -> np.ndarray:
    """Rank-one steering correlation ``d d^H + eps I`` (eps > 0 keeps it HPD)."""
    if not (eps > 0):
        raise InvalidInput("eps must be positive")
    d = np.asarray(d, dtype=np.complex128).reshape(-1)
    sigma = np.outer(d, d.conj()) + eps * np.eye(d.size)
    return 0.5 * (sigma + sigma.conj().T)


def mean_correlation(mats) -> np.ndarray:
    """Arithmetic mean of Hermitian matrices of equal dimension."""
    mats = list(mats)
    if not mats:
        raise InvalidInput("mean of an empty set of matrices")
    acc = np.array(mats[0], dtype=np.complex128, copy=True)
    if acc.ndim != 2 or acc.shape[0] != acc.shape[1]:
        raise InvalidInput("matrices must be square")
    for m in mats[1:]:
        m = np.asarray(m)
        if m.shape != acc.shape:
            raise InvalidInput(f"dimension mismatch: {m.shape} vs {acc.shape}")
        acc += m
    return hermitize(acc / len(mats), tol=1e-9)


def matrix_to_json(a) -> dict:
    """JSON-friendly encoding: dimension plus row-major re/im arrays."""
    a = np.asarray(a, dtype=np.complex128)
    return {
        "dim": int(a.shape[0]),
        "re": a.real.tolist(),
        "im": a.imag.tolist(),
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    dim = int(obj["dim"])
    a = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    if a.shape != (dim, dim):
        raise InvalidInput(f"matrix payload shape {a.shape} does not match dim {dim}")
    return a
