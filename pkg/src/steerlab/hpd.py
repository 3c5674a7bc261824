"""Complex Hermitian / HPD matrix algebra.

Eigendecomposition is a cyclic complex Jacobi iteration (one-sided rotations on
the (p, q) plane), which is unconditionally stable for Hermitian input and has
no external solver dependency.  Matrix functions (square root, inverse square
root, inverse, root of an HPD-similar product) are built on top of it.  All
results are re-symmetrized so Hermitian invariants hold exactly.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .exceptions import InvalidInput, NotPSD, NumericalFailure, SingularMatrix

# Jacobi stopping rule: off-diagonal Frobenius mass below OFF_TOL * ||A||_F,
# at most MAX_SWEEPS full sweeps.
OFF_TOL = 1e-14
MAX_SWEEPS = 100

# Relative eigenvalue floor for inverse square roots (inputs are expected to be
# regularized upstream; the floor only guards pathological matrices).
INV_CLAMP = 1e-12

# Condition number limit for explicit inversion.
MAX_CONDITION = 1e14


def hermitize(a, tol: float = 1e-12) -> np.ndarray:
    """Validate that ``a`` is Hermitian within ``tol`` and symmetrize exactly.

    Returns ``(a + a^H) / 2`` as a fresh complex array.  Raises
    :class:`InvalidInput` for non-square, non-finite, or asymmetric input.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise InvalidInput("matrix dimension must be >= 1")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise InvalidInput("matrix has non-finite entries")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.conj().T).max() > tol * scale:
        raise InvalidInput("matrix is not Hermitian within tolerance")
    return 0.5 * (a + a.conj().T)


@numba.njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):  # pragma: no cover - exercised via hermitian_eig
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off2 = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off2 += abs(a[p, q]) ** 2
        if math.sqrt(2.0 * off2) <= tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                w = abs(apq)
                if w <= 1e-300:
                    continue
                ph = apq / w  # e^{i arg(apq)}
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * w)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                sph = s * ph
                sphc = s * np.conj(ph)
                # A <- U^H A U with U[p,p]=c, U[p,q]=s, U[q,p]=-s*conj(ph), U[q,q]=c*conj(ph)
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - sphc * akq
                    a[k, q] = s * akp + c * np.conj(ph) * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - sph * aqk
                    a[q, k] = s * apk + c * ph * aqk
                a[p, p] = complex(a[p, p].real, 0.0)
                a[q, q] = complex(a[q, q].real, 0.0)
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - sphc * vkq
                    v[k, q] = s * vkp + c * np.conj(ph) * vkq
        # loop back for the convergence test
    # did not converge within max_sweeps
    off2 = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            off2 += abs(a[p, q]) ** 2
    if math.sqrt(2.0 * off2) <= tol:
        return max_sweeps
    return -1


def hermitian_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, v)`` with real eigenvalues ``w`` sorted descending (ties keep
    their original order) and unitary ``v`` whose columns are the matching
    eigenvectors, so that ``v @ diag(w) @ v^H`` reconstructs the input.
    """
    a = hermitize(a)
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0].real]), np.ones((1, 1), dtype=np.complex128)
    work = np.ascontiguousarray(a)
    v = np.eye(n, dtype=np.complex128)
    tol = OFF_TOL * max(np.linalg.norm(a), np.finfo(np.float64).tiny)
    sweeps = _jacobi_sweeps(work, v, tol, MAX_SWEEPS)
    if sweeps < 0:
        raise NumericalFailure(f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps")
    w = np.diag(work).real.copy()
    order = np.argsort(-w, kind="stable")
    return w[order], np.ascontiguousarray(v[:, order])


def _rebuild(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    b = (v * w) @ v.conj().T
    return 0.5 * (b + b.conj().T)


def matrix_power_half(a, sign: float) -> np.ndarray:
    """Principal square root (``sign=+0.5``) or inverse square root (``-0.5``).

    The input must be Hermitian PSD; eigenvalues below ``-1e-10 * ||a||_F``
    raise :class:`NotPSD`.  For the inverse root, eigenvalues below the clamp
    floor ``max(w) * 1e-12`` raise :class:`SingularMatrix`.
    """
    if sign not in (0.5, -0.5):
        raise InvalidInput(f"sign must be +0.5 or -0.5, got {sign}")
    a = hermitize(a)
    w, v = hermitian_eig(a)
    norm = max(np.linalg.norm(a), np.finfo(np.float64).tiny)
    if w.min() < -1e-10 * norm:
        raise NotPSD(f"smallest eigenvalue {w.min():.3e} below PSD tolerance")
    if sign == 0.5:
        return _rebuild(v, np.sqrt(np.clip(w, 0.0, None)))
    floor = w.max() * INV_CLAMP
    if w.max() <= 0.0 or w.min() < floor:
        raise SingularMatrix("eigenvalue below clamp floor; matrix is numerically singular")
    return _rebuild(v, 1.0 / np.sqrt(w))


def invert_hpd(a) -> np.ndarray:
    """Inverse of a Hermitian positive definite matrix.

    Raises :class:`SingularMatrix` when the condition number exceeds 1e14.
    """
    a = hermitize(a)
    w, v = hermitian_eig(a)
    if w.min() <= 0.0 or w.max() / w.min() > MAX_CONDITION:
        raise SingularMatrix("matrix condition number exceeds 1e14")
    return _rebuild(v, 1.0 / w)


def matrix_sqrt_of_product(s, a_inv) -> np.ndarray:
    """Principal square root of the product ``s @ a_inv`` of two HPD matrices.

    The product is similar to an HPD matrix, so its principal root ``b``
    (``b @ b == s @ a_inv``, spectrum on the positive real axis) is well
    defined even though it is not Hermitian.  It is computed through the
    congruence ``A^{1/2} (A^{-1/2} S A^{-1/2})^{1/2} A^{-1/2}`` with
    ``A = a_inv^{-1}``, which only requires Hermitian square roots.
    """
    s = hermitize(s)
    a_inv = hermitize(a_inv)
    if s.shape != a_inv.shape:
        raise InvalidInput("matrix dimensions do not match")
    # a_inv = A^{-1}: its square root is A^{-1/2}, its inverse root is A^{1/2}.
    a_m12 = matrix_power_half(a_inv, 0.5)
    a_12 = matrix_power_half(a_inv, -0.5)
    inner = matrix_power_half(a_m12 @ s @ a_m12, 0.5)
    return a_12 @ inner @ a_m12
