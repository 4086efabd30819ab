"""Square-root covariance kernel.

Factors are plain lower-triangular ``ndarray`` objects ``S`` with a strictly
positive diagonal, representing ``S @ S.T``.
"""
import numpy as np
from numba import njit
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dgeqrf

from .errors import DegenerateDeviationError, IndefiniteDowndateError, ParameterError

_EPS = float(np.finfo(float).eps)

__all__ = [
    "chol_update",
    "chol_update_multi",
    "sqrt_from_weighted_deviations",
    "tri_solve",
    "cholesky_lower",
    "canonicalize",
]


@njit(cache=True)
def _lower_copy(S):
    # C-ordered copy of the lower triangle; False if a diagonal entry is not positive
    n = S.shape[0]
    L = np.zeros((n, n))
    ok = True
    for i in range(n):
        for j in range(i + 1):
            L[i, j] = S[i, j]
        if not S[i, i] > 0.0:
            ok = False
    return L, ok


def _as_factor(S):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ParameterError(f"factor must be square, got shape {S.shape}")
    L, ok = _lower_copy(S)
    if not ok:
        raise ParameterError("factor diagonal must be strictly positive")
    return L


@njit(cache=True)
def _sweep_kernel(L, x, sign):
    # in-place rank-one sweep on lower factor L with vector x (already sqrt|w|
    # scaled); returns the failing pivot or -1
    n = L.shape[0]
    for k in range(n):
        lkk = L[k, k]
        xk = x[k]
        r2 = lkk * lkk + sign * xk * xk
        if not r2 > 0.0:
            x[0] = r2
            return k
        r = np.sqrt(r2)
        c = r / lkk
        s = xk / lkk
        L[k, k] = r
        for i in range(k + 1, n):
            lik = (L[i, k] + sign * s * x[i]) / c
            L[i, k] = lik
            x[i] = c * x[i] - s * lik
    return -1


def _sweep(L, x, sign, column=None):
    k = _sweep_kernel(L, x, sign)
    if k >= 0:
        where = f" (column {column})" if column is not None else ""
        raise IndefiniteDowndateError(
            f"indefinite downdate at pivot {k}{where}: hypotenuse^2 = {x[0]:.3e}",
            column=column,
        )
    return L


def chol_update(S, u, w):
    """Rank-one update or downdate of a lower Cholesky factor.

    Parameters
    ----------
    S : (n, n) array_like
        Lower-triangular factor with positive diagonal.
    u : (n,) array_like
        Update direction.
    w : float
        Signed weight; negative means downdate.

    Returns
    -------
    T : (n, n) ndarray
        Factor with ``T @ T.T == S @ S.T + w * outer(u, u)``.

    Raises
    ------
    IndefiniteDowndateError
        If the downdated matrix is not positive definite.
    """
    L = _as_factor(S)
    if w == 0:
        return L
    x = np.sqrt(abs(w)) * np.array(u, dtype=float).reshape(-1)
    if x.shape[0] != L.shape[0]:
        raise ParameterError("update vector length does not match factor")
    return _sweep(L, x, 1.0 if w > 0 else -1.0)


def chol_update_multi(S, U, w):
    """Apply ``chol_update`` for every column of ``U``, left to right.

    The weight ``w`` is shared by all columns. An indefinite downdate reports
    the offending column index in ``IndefiniteDowndateError.column``.
    """
    L = _as_factor(S)
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if w == 0 or U.shape[1] == 0:
        return L
    sign = 1.0 if w > 0 else -1.0
    scale = np.sqrt(abs(w))
    for j in range(U.shape[1]):
        _sweep(L, scale * U[:, j].copy(), sign, column=j)
    return L


def canonicalize(T):
    """Flip column signs so the diagonal of a triangular factor is positive."""
    d = np.diag(T)
    signs = np.where(d < 0, -1.0, 1.0)
    return T * signs


@njit(cache=True)
def _signed_transpose(R):
    # lower factor from the R of a QR, columns flipped to a positive diagonal
    n = R.shape[1]
    T = np.zeros((n, n))
    for j in range(n):
        sgn = -1.0 if R[j, j] < 0 else 1.0
        for i in range(j, n):
            T[i, j] = sgn * R[j, i]
    return T


def sqrt_from_weighted_deviations(D):
    """Lower factor ``T`` with ``T @ T.T == D @ D.T`` via QR of ``D.T``.

    Parameters
    ----------
    D : (n, m) array_like
        Deviation columns already multiplied by the square roots of their
        nonnegative weights; needs ``m >= n``.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim == 1:
        D = D[None, :]
    n, m = D.shape
    if m < n:
        raise DegenerateDeviationError(f"only {m} deviation columns for dimension {n}")
    # Householder QR straight from LAPACK; the wrappers add ~20 us per call
    qr, _, _, info = dgeqrf(D.T)
    if info != 0:
        raise DegenerateDeviationError(f"QR failed (info {info})")
    T = _signed_transpose(qr)
    d = np.diag(T)
    tol = max(n, m) * _EPS * (d.max() if n else 0.0)
    if n and not d.min() > tol:
        raise DegenerateDeviationError(
            f"deviation set is rank deficient (smallest pivot {d.min():.3e})")
    return T


def tri_solve(S, B, side="lower"):
    """Solve ``S X = B`` (``side='lower'``) or ``S.T X = B`` (``'upper-transpose'``)."""
    if side == "lower":
        trans = 0
    elif side == "upper-transpose":
        trans = 1
    else:
        raise ParameterError(f"unknown side {side!r}")
    return solve_triangular(S, B, lower=True, trans=trans, check_finite=False)


def cholesky_lower(P):
    """Lower Cholesky factor of a symmetric matrix; ``LinAlgError`` if not SPD."""
    return np.linalg.cholesky(P)
