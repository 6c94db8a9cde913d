"""Dense complex eigen-kernels.

Householder reduction to upper Hessenberg form, single-shift complex QR
with Wilkinson shifts, and eigenvectors by back substitution on the Schur
factor. Written in the numba-compatible subset of Python; with numba
disabled the batch entry points fall back to LAPACK through numpy.
"""

import numpy as np
from concurrent.futures import ThreadPoolExecutor

from . import _accel
from ._accel import njit, prange

EPS = np.finfo(np.float64).eps
_MAXIT_PER_EIG = 60


@njit(cache=True)
def _hessenberg(A, Z):
    n = A.shape[0]
    v = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        tail2 = 0.0
        for i in range(k + 2, n):
            tail2 += A[i, k].real ** 2 + A[i, k].imag ** 2
        if tail2 == 0.0:
            continue
        x0 = A[k + 1, k]
        ax0 = abs(x0)
        xnorm = np.sqrt(ax0 * ax0 + tail2)
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * xnorm
        m = n - k - 1
        v[0] = x0 - alpha
        for i in range(1, m):
            v[i] = A[k + 1 + i, k]
        vn2 = abs(v[0]) ** 2 + tail2
        beta = 2.0 / vn2
        for j in range(k, n):
            s = 0.0j
            for i in range(m):
                s += np.conj(v[i]) * A[k + 1 + i, j]
            s *= beta
            for i in range(m):
                A[k + 1 + i, j] -= v[i] * s
        for i in range(n):
            s = 0.0j
            for j in range(m):
                s += A[i, k + 1 + j] * v[j]
            s *= beta
            for j in range(m):
                A[i, k + 1 + j] -= s * np.conj(v[j])
        for i in range(n):
            s = 0.0j
            for j in range(m):
                s += Z[i, k + 1 + j] * v[j]
            s *= beta
            for j in range(m):
                Z[i, k + 1 + j] -= s * np.conj(v[j])
        A[k + 1, k] = alpha
        for i in range(k + 2, n):
            A[i, k] = 0.0


@njit(cache=True)
def _givens(x, y):
    ax = abs(x)
    ay = abs(y)
    if ay == 0.0:
        return 1.0, 0.0j
    if ax == 0.0:
        return 0.0, 1.0 + 0.0j
    nrm = np.hypot(ax, ay)
    return ax / nrm, (x / ax) * np.conj(y) / nrm


@njit(cache=True)
def _rotate(H, Z, k, c, s, col_lo, row_hi):
    n = H.shape[0]
    cs = np.conj(s)
    for j in range(col_lo, n):
        t1 = H[k, j]
        t2 = H[k + 1, j]
        H[k, j] = c * t1 + s * t2
        H[k + 1, j] = -cs * t1 + c * t2
    for i in range(row_hi + 1):
        t1 = H[i, k]
        t2 = H[i, k + 1]
        H[i, k] = c * t1 + cs * t2
        H[i, k + 1] = -s * t1 + c * t2
    for i in range(n):
        t1 = Z[i, k]
        t2 = Z[i, k + 1]
        Z[i, k] = c * t1 + cs * t2
        Z[i, k + 1] = -s * t1 + c * t2


@njit(cache=True)
def _schur(H, Z):
    """Reduce Hessenberg ``H`` to upper triangular form in place.

    Returns 0 on success, otherwise 1 + the index of the unconverged row.
    """
    n = H.shape[0]
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += H[i, j].real ** 2 + H[i, j].imag ** 2
    fro = np.sqrt(fro)
    if fro == 0.0:
        return 0
    small = fro * 1e-300
    hi = n - 1
    its = 0
    while hi > 0:
        l = hi
        while l > 0:
            s = abs(H[l - 1, l - 1]) + abs(H[l, l])
            if s == 0.0:
                s = fro
            if abs(H[l, l - 1]) <= EPS * s or abs(H[l, l - 1]) < small:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            hi -= 1
            its = 0
            continue
        if its >= _MAXIT_PER_EIG:
            return hi + 1
        its += 1
        if its % 11 == 10:
            # exceptional shift breaks cycles of the Wilkinson shift
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) * (1.0 + 1.0j)
        else:
            a = H[hi - 1, hi - 1]
            b = H[hi - 1, hi]
            c = H[hi, hi - 1]
            d = H[hi, hi]
            half = 0.5 * (a - d)
            root = np.sqrt(half * half + b * c)
            mu1 = d + half + root
            mu2 = d + half - root
            mu = mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2
        for k in range(l, hi):
            if k == l:
                x = H[l, l] - mu
                y = H[l + 1, l]
            else:
                x = H[k, k - 1]
                y = H[k + 1, k - 1]
            cr, sr = _givens(x, y)
            col_lo = l if k == l else k - 1
            row_hi = k + 2 if k + 2 <= hi else hi
            _rotate(H, Z, k, cr, sr, col_lo, row_hi)
            if k > l:
                H[k + 1, k - 1] = 0.0
    for i in range(1, n):
        for j in range(i):
            H[i, j] = 0.0
    return 0


@njit(cache=True)
def _triangular_vectors(T, Z, V):
    n = T.shape[0]
    fro = 0.0
    for i in range(n):
        for j in range(i, n):
            fro += T[i, j].real ** 2 + T[i, j].imag ** 2
    smin = max(EPS * np.sqrt(fro), 1e-300)
    y = np.empty(n, dtype=np.complex128)
    for k in range(n):
        lam = T[k, k]
        for j in range(n):
            y[j] = 0.0
        y[k] = 1.0
        for j in range(k - 1, -1, -1):
            s = 0.0j
            for m in range(j + 1, k + 1):
                s += T[j, m] * y[m]
            den = T[j, j] - lam
            if abs(den) < smin:
                den = smin
            y[j] = -s / den
        nrm = 0.0
        for i in range(n):
            acc = 0.0j
            for m in range(k + 1):
                acc += Z[i, m] * y[m]
            V[i, k] = acc
            nrm += acc.real ** 2 + acc.imag ** 2
        nrm = np.sqrt(nrm)
        for i in range(n):
            V[i, k] /= nrm


@njit(cache=True)
def eig_one(A):
    """Eigenvalues, unit-norm right eigenvectors and a status code for ``A``."""
    n = A.shape[0]
    H = A.copy()
    Z = np.eye(n, dtype=np.complex128)
    V = np.empty((n, n), dtype=np.complex128)
    w = np.empty(n, dtype=np.complex128)
    _hessenberg(H, Z)
    info = _schur(H, Z)
    if info != 0:
        for i in range(n):
            w[i] = np.nan
        V[:, :] = np.nan
        return w, V, info
    for i in range(n):
        w[i] = H[i, i]
    _triangular_vectors(H, Z, V)
    return w, V, 0


@njit(cache=True)
def _eig_batch_serial(As, w, V, info):
    for p in range(As.shape[0]):
        wp, Vp, ip = eig_one(As[p])
        w[p] = wp
        V[p] = Vp
        info[p] = ip


@njit(cache=True, parallel=True)
def _eig_batch_parallel(As, w, V, info):
    for p in prange(As.shape[0]):
        wp, Vp, ip = eig_one(As[p])
        w[p] = wp
        V[p] = Vp
        info[p] = ip


def _ldexp(z, e):
    return np.ldexp(z.real, e) + 1j * np.ldexp(z.imag, e)


def _div(x, y):
    """``x / y`` for ``|x| <= |y|``, safe when ``y`` is subnormal."""
    _, e = np.frexp(np.abs(y))
    return _ldexp(x, -e) / _ldexp(y, -e)


def eig2_closed(As):
    """Closed-form eigenpairs of a stack of complex symmetric 2x2 matrices.

    Uses ``g = delta + h`` with the branch of ``h = sqrt(delta**2 + w**2)``
    chosen so ``|g|`` is maximal, which keeps both eigenvalues and the
    vectors ``(g, w)`` / ``(-w, g)`` free of cancellation. The first
    eigenpair continues the (0, 0) diagonal entry as the coupling vanishes.
    """
    As = np.asarray(As, dtype=np.complex128)
    a = As[..., 0, 0]
    d = As[..., 1, 1]
    c = As[..., 0, 1]
    delta = 0.5 * (a - d)
    # scale by a power of two before squaring; complex division by a subnormal overflows
    _, e = np.frexp(np.maximum(np.abs(delta), np.abs(c)))
    ds, cs = _ldexp(delta, -e), _ldexp(c, -e)
    hs = np.sqrt(ds * ds + cs * cs)
    flip = (ds.real * hs.real + ds.imag * hs.imag) < 0.0
    h = _ldexp(np.where(flip, -hs, hs), e)
    g = delta + h
    zero = g == 0.0
    gs = np.where(zero, 1.0, g)
    shift = np.where(zero, 0.0, c * _div(c, gs))  # |g| >= |c| by the branch choice
    w = np.stack([a + shift, d - shift], axis=-1)
    v1 = np.stack([np.where(zero, 1.0, g), np.where(zero, 0.0, c)], axis=-1)
    v2 = np.stack([np.where(zero, 0.0, -c), np.where(zero, 1.0, g)], axis=-1)
    V = np.stack([v1, v2], axis=-1)
    V = _div(V, np.abs(V).max(axis=-2, keepdims=True))
    V = V / np.linalg.norm(V, axis=-2, keepdims=True)
    return w, V


def _numpy_eig(As):
    w, V = np.linalg.eig(As)
    return w, V


def eig_batch(As, parallel=False, workers=None):
    """Eigen-decompose a stack ``(P, N, N)`` of complex matrices.

    Returns ``(w, V, info)`` with unit-norm eigenvector columns; ``info[p]``
    is nonzero when the QR sweep failed to converge for matrix ``p``.
    """
    As = np.ascontiguousarray(As, dtype=np.complex128)
    P, n, _ = As.shape
    info = np.zeros(P, dtype=np.int64)
    if n == 1:
        return As[:, :, 0].copy(), np.ones((P, 1, 1), np.complex128), info
    if n == 2:
        w, V = eig2_closed(As)
        return w, V, info
    if _accel.USE_NUMBA:
        w = np.empty((P, n), dtype=np.complex128)
        V = np.empty((P, n, n), dtype=np.complex128)
        if parallel:
            _accel.set_num_threads(workers)
            _eig_batch_parallel(As, w, V, info)
        else:
            _eig_batch_serial(As, w, V, info)
        return w, V, info
    if parallel and P > 1:
        nchunk = workers or 4
        chunks = np.array_split(np.arange(P), nchunk)
        with ThreadPoolExecutor(max_workers=nchunk) as ex:
            parts = list(ex.map(lambda idx: _numpy_eig(As[idx]), chunks))
        w = np.concatenate([p[0] for p in parts])
        V = np.concatenate([p[1] for p in parts])
        return w, V, info
    w, V = _numpy_eig(As)
    return w, V, info
