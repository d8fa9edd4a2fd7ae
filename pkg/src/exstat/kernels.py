"""Hot kernels: permanents, determinants and Kahler-metric evaluation.

All derivative information about ``F = perm(M)`` or ``F = det(M)`` comes from
multilinearity. Row ``i`` of the Gram matrix depends only on ``conj(z_i)`` and
column ``j`` only on ``z_j``, so

* ``d F / d z_j``           = F(M with column j replaced by its z_j-derivative)
* ``d F / d conj(z_i)``     = F(M with row i replaced by its conj(z_i)-derivative)
* ``d2 F / d conj(z_i) d z_j`` = F(M with both replacements, entry (i, j) set to
  the mixed derivative).

Inputs are the diagonally rescaled matrices produced by
:func:`scaled_gram_blocks`; every ratio of F-values is invariant under that
rescaling, so nothing here ever sees a large number.

Each kernel has a numba and a numpy implementation. ``EXSTAT_DISABLE_NUMBA=1``
selects the numpy path at import time.
"""

from __future__ import annotations

import numpy as np

from ._backend import USE_NUMBA, njit

PERMANENT_CAP = 14
FERMION_DET_TOL = 1e-12


def scaled_gram_blocks(z: np.ndarray, two_j: int, gram_only: bool = False):
    """Rescaled Gram matrix and its derivative blocks.

    ``z`` has shape ``(..., N)``. Returns ``(Mt, At, Ct, Dt, log_diag)`` where,
    with ``w_kb = 1 + conj(z_k) z_b`` and ``s_k = (1 + |z_k|^2)^(-j)``:

    * ``Mt[k, b] = w^{2j} s_k s_b``  (unit diagonal)
    * ``At[k, b] = d/d conj(z_k) of w^{2j}``, rescaled
    * ``Ct[k, b] = d/d z_b of w^{2j}``, rescaled
    * ``Dt[k, b] = d2/d conj(z_k) d z_b of w^{2j}``, rescaled
    * ``log_diag[k] = log M_kk = 2j log(1 + |z_k|^2)``
    """
    z = np.asarray(z, dtype=np.complex128)
    n = int(two_j)
    zc = np.conj(z)
    L = np.log1p((z * zc).real)
    shift = 0.5 * n * (L[..., :, None] + L[..., None, :])
    w = 1.0 + zc[..., :, None] * z[..., None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.log(w)
    Mt = _pow_scaled(logw, n, shift)
    if gram_only:
        return Mt, None, None, None, n * L
    if n == 0:
        zero = np.zeros_like(Mt)
        return Mt, zero, zero.copy(), zero.copy(), n * L
    p1 = _pow_scaled(logw, n - 1, shift)
    At = n * z[..., None, :] * p1
    Ct = n * zc[..., :, None] * p1
    Dt = n * p1
    if n >= 2:
        Dt = Dt + n * (n - 1) * (zc[..., :, None] * z[..., None, :]) * _pow_scaled(logw, n - 2, shift)
    return Mt, At, Ct, Dt, n * L


def _pow_scaled(logw, power, shift):
    if power == 0:
        return np.exp(-shift).astype(np.complex128)
    with np.errstate(invalid="ignore", over="ignore"):
        out = np.exp(power * logw - shift)
    # w == 0 (antipodal pair): log is -inf and the power vanishes
    return np.where(np.isfinite(logw.real), out, 0.0)


# ---------------------------------------------------------------------------
# numba path


@njit(cache=True, nogil=True)
def _permanent_nb(a):
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    rowsum = np.zeros(n, dtype=np.complex128)
    total = 0j
    gray = 0
    size = 0
    for k in range(1, 1 << n):
        col = 0
        kk = k
        while (kk & 1) == 0:
            kk >>= 1
            col += 1
        bit = 1 << col
        if gray & bit:
            for i in range(n):
                rowsum[i] -= a[i, col]
            size -= 1
        else:
            for i in range(n):
                rowsum[i] += a[i, col]
            size += 1
        gray ^= bit
        prod = 1.0 + 0j
        for i in range(n):
            prod *= rowsum[i]
        if (n - size) & 1:
            total -= prod
        else:
            total += prod
    return total


@njit(cache=True, nogil=True)
def _determinant_nb(a):
    n = a.shape[0]
    lu = a.copy()
    det = 1.0 + 0j
    for c in range(n):
        piv = c
        best = abs(lu[c, c])
        for r in range(c + 1, n):
            v = abs(lu[r, c])
            if v > best:
                best = v
                piv = r
        if best == 0.0:
            return 0j
        if piv != c:
            for k in range(n):
                tmp = lu[c, k]
                lu[c, k] = lu[piv, k]
                lu[piv, k] = tmp
            det = -det
        d = lu[c, c]
        det *= d
        for r in range(c + 1, n):
            f = lu[r, c] / d
            if f != 0:
                for k in range(c + 1, n):
                    lu[r, k] -= f * lu[c, k]
    return det


@njit(cache=True, nogil=True)
def _F_nb(a, fermion):
    if fermion:
        return _determinant_nb(a)
    return _permanent_nb(a)


@njit(cache=True, nogil=True)
def _derivatives_nb(Mt, At, Ct, Dt, fermion, col, row, mixed):
    """Fill F-values for all single and double replacements; return F(Mt)."""
    n = Mt.shape[0]
    f0 = _F_nb(Mt, fermion)
    work = Mt.copy()
    for j in range(n):
        for k in range(n):
            work[k, j] = Ct[k, j]
        col[j] = _F_nb(work, fermion)
        for k in range(n):
            work[k, j] = Mt[k, j]
    for i in range(n):
        for b in range(n):
            work[i, b] = At[i, b]
        row[i] = _F_nb(work, fermion)
        for j in range(n):
            for k in range(n):
                work[k, j] = Ct[k, j]
            work[i, j] = Dt[i, j]
            mixed[i, j] = _F_nb(work, fermion)
            for k in range(n):
                work[k, j] = Mt[k, j]
            work[i, j] = At[i, j]
        for b in range(n):
            work[i, b] = Mt[i, b]
    return f0


@njit(cache=True, nogil=True)
def _metric_nb(Mt, At, Ct, Dt, fermion):
    n = Mt.shape[0]
    col = np.empty(n, dtype=np.complex128)
    row = np.empty(n, dtype=np.complex128)
    mixed = np.empty((n, n), dtype=np.complex128)
    f0 = _derivatives_nb(Mt, At, Ct, Dt, fermion, col, row, mixed)
    G = np.empty((n, n), dtype=np.complex128)
    grad = np.empty(n, dtype=np.complex128)
    for j in range(n):
        grad[j] = col[j] / f0
    for i in range(n):
        for j in range(n):
            G[i, j] = mixed[i, j] / f0 - row[i] * col[j] / (f0 * f0)
    return f0, grad, G


@njit(cache=True, nogil=True)
def _liouville_batch_nb(Mt, At, Ct, Dt, fermion, det_tol, f0_out, out):
    S = Mt.shape[0]
    n = Mt.shape[1]
    for s in range(S):
        f0 = _F_nb(Mt[s], fermion)
        f0_out[s] = f0
        if fermion and f0.real <= det_tol:
            out[s] = 0.0
            continue
        f0, grad, G = _metric_nb(Mt[s], At[s], Ct[s], Dt[s], fermion)
        # Hermitian symmetrization before the determinant
        for i in range(n):
            for j in range(i, n):
                v = 0.5 * (G[i, j] + np.conj(G[j, i]))
                G[i, j] = v
                G[j, i] = np.conj(v)
        out[s] = _determinant_nb(G).real


# ---------------------------------------------------------------------------
# numpy path

_MASKS: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _ryser_tables(n: int):
    if n not in _MASKS:
        idx = np.arange(1 << n)
        masks = ((idx[:, None] >> np.arange(n)) & 1).astype(np.float64)
        sizes = masks.sum(axis=1)
        signs = np.where((n - sizes) % 2 == 0, 1.0, -1.0)
        _MASKS[n] = (masks, signs)
    return _MASKS[n]


def _permanent_np(a: np.ndarray) -> np.ndarray:
    """Ryser inclusion-exclusion, vectorized over leading batch axes."""
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[-1]
    if n == 0:
        return np.ones(a.shape[:-2], dtype=np.complex128)
    masks, signs = _ryser_tables(n)
    rowsums = a @ masks.T  # (..., n, 2^n)
    return np.prod(rowsums, axis=-2) @ signs


def _F_np(a: np.ndarray, fermion: bool) -> np.ndarray:
    if fermion:
        return np.linalg.det(a)
    return _permanent_np(a)


def _replacement_stack(Mt, At, Ct, Dt):
    """Stack [col-replaced (N), row-replaced (N), both (N*N)] along a new axis."""
    n = Mt.shape[-1]
    batch = Mt.shape[:-2]
    eye = np.eye(n, dtype=bool)
    colsel = eye[:, None, :]  # (j, 1, b): column j mask
    rowsel = eye[:, :, None]  # (i, k, 1): row i mask
    Mb = Mt[..., None, :, :]
    cols = np.where(colsel, Ct[..., None, :, :], Mb)
    rows = np.where(rowsel, At[..., None, :, :], Mb)
    # mixed[i, j]: row i from At, column j from Ct, entry (i, j) from Dt
    rmask = eye[:, None, :, None]  # (i, 1, k, 1)
    cmask = eye[None, :, None, :]  # (1, j, 1, b)
    Mbb = Mt[..., None, None, :, :]
    mixed = np.where(rmask, At[..., None, None, :, :], Mbb)
    mixed = np.where(cmask, Ct[..., None, None, :, :], mixed)
    mixed = np.where(rmask & cmask, Dt[..., None, None, :, :], mixed)
    mixed = mixed.reshape(batch + (n * n, n, n))
    return np.concatenate([cols, rows, mixed], axis=-3)


def _metric_np(Mt, At, Ct, Dt, fermion):
    n = Mt.shape[-1]
    f0 = _F_np(Mt, fermion)
    vals = _F_np(_replacement_stack(Mt, At, Ct, Dt), fermion)
    col = vals[..., :n]
    row = vals[..., n : 2 * n]
    mixed = vals[..., 2 * n :].reshape(vals.shape[:-1] + (n, n))
    f0e = f0[..., None]
    grad = col / f0e
    G = mixed / f0e[..., None] - row[..., :, None] * col[..., None, :] / (f0e * f0e)[..., None]
    return f0, grad, G


def _liouville_batch_np(Mt, At, Ct, Dt, fermion, det_tol):
    f0 = _F_np(Mt, fermion)
    out = np.zeros(Mt.shape[0])
    ok = f0.real > det_tol if fermion else np.ones(Mt.shape[0], dtype=bool)
    if np.any(ok):
        _, _, G = _metric_np(Mt[ok], At[ok], Ct[ok], Dt[ok], fermion)
        G = 0.5 * (G + np.conj(np.swapaxes(G, -1, -2)))
        out[ok] = np.linalg.det(G).real
    return f0, out


# ---------------------------------------------------------------------------
# dispatch


def permanent(a: np.ndarray, use_numba: bool | None = None) -> complex:
    """Permanent of a square matrix by Ryser's formula (Gray-code order)."""
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("permanent needs a square matrix")
    if USE_NUMBA if use_numba is None else use_numba:
        return complex(_permanent_nb(a))
    return complex(_permanent_np(a))


def determinant(a: np.ndarray, use_numba: bool | None = None) -> complex:
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if USE_NUMBA if use_numba is None else use_numba:
        return complex(_determinant_nb(a))
    return complex(np.linalg.det(a))


def metric_blocks(Mt, At, Ct, Dt, fermion: bool, use_numba: bool | None = None):
    """``(F(Mt), d log F / dz, d2 log F / d conj(z_i) dz_j)`` for one configuration."""
    args = [np.ascontiguousarray(x, dtype=np.complex128) for x in (Mt, At, Ct, Dt)]
    if USE_NUMBA if use_numba is None else use_numba:
        f0, grad, G = _metric_nb(*args, bool(fermion))
        return complex(f0), grad, G
    f0, grad, G = _metric_np(*args, bool(fermion))
    return complex(f0), grad, G


def liouville_batch(Mt, At, Ct, Dt, fermion: bool, use_numba: bool | None = None):
    """det of the (unit-hbar) metric for a batch of configurations.

    Returns ``(F(Mt), det G)`` per sample; fermion samples whose rescaled Gram
    determinant is below tolerance get ``det G = 0``.
    """
    args = [np.ascontiguousarray(x, dtype=np.complex128) for x in (Mt, At, Ct, Dt)]
    if USE_NUMBA if use_numba is None else use_numba:
        S = args[0].shape[0]
        f0 = np.empty(S, dtype=np.complex128)
        out = np.empty(S)
        _liouville_batch_nb(*args, bool(fermion), FERMION_DET_TOL, f0, out)
        return f0, out
    return _liouville_batch_np(*args, bool(fermion), FERMION_DET_TOL)


@njit(cache=True, nogil=True)
def _F_batch_nb(Mt, fermion, out):
    for s in range(Mt.shape[0]):
        out[s] = _F_nb(Mt[s], fermion)


def F_batch(Mt, fermion: bool, use_numba: bool | None = None) -> np.ndarray:
    """det or perm of each matrix in a ``(S, N, N)`` stack."""
    Mt = np.ascontiguousarray(Mt, dtype=np.complex128)
    if USE_NUMBA if use_numba is None else use_numba:
        out = np.empty(Mt.shape[0], dtype=np.complex128)
        _F_batch_nb(Mt, bool(fermion), out)
        return out
    return _F_np(Mt, bool(fermion))


# ---------------------------------------------------------------------------
# fermions in the Newton (divided-difference) basis
#
# With phi_k(z) = sqrt(C(2j, k)) z^k the Gram matrix is Phi^H Phi. Replacing
# the columns phi(z_1), ..., phi(z_N) by their divided differences
# phi[z_1..z_m] divides the wedge product by the Vandermonde determinant, so
# det M = |V(z)|^2 det(P^H P) with P holomorphic and of full rank even at
# coincidences. log|V|^2 is pluriharmonic, hence
#     G_ij = < Pperp dP_i R^-1, Pperp dP_j R^-1 >_F,   P = QR,
# a manifestly positive Gram matrix that stays accurate near coincidence.
# Entries of P are complete homogeneous polynomials h_{k-m}(z_1..z_m).


def _binom_sqrt(two_j: int) -> np.ndarray:
    from math import comb

    return np.sqrt(np.array([comb(two_j, k) for k in range(two_j + 1)], dtype=np.float64))


@njit(cache=True, nogil=True)
def _newton_nb(z, two_j, cb, P, dP):
    n = z.shape[0]
    L = two_j + 1
    H = np.zeros(L, dtype=np.complex128)
    D = np.zeros((n, L), dtype=np.complex128)
    H[0] = 1.0
    for m in range(n):
        zm = z[m]
        # H <- h_r(z_0..z_m); D[i] <- dH/dz_i
        for r in range(1, L):
            H[r] = H[r] + zm * H[r - 1]
            for i in range(m + 1):
                D[i, r] = D[i, r] + zm * D[i, r - 1]
                if i == m:
                    D[i, r] += H[r - 1]
        for k in range(L):
            if k >= m:
                P[k, m] = cb[k] * H[k - m]
                for i in range(n):
                    dP[i, k, m] = cb[k] * D[i, k - m]
            else:
                P[k, m] = 0.0
                for i in range(n):
                    dP[i, k, m] = 0.0


@njit(cache=True, nogil=True)
def _fermion_metric_nb(P, dP):
    n = P.shape[1]
    L = P.shape[0]
    # modified Gram-Schmidt, twice for orthogonality: P = Q R
    Q = P.copy()
    R = np.zeros((n, n), dtype=np.complex128)
    for c in range(n):
        for _ in range(2):
            for p in range(c):
                acc = 0j
                for k in range(L):
                    acc += np.conj(Q[k, p]) * Q[k, c]
                R[p, c] += acc
                for k in range(L):
                    Q[k, c] -= acc * Q[k, p]
        nrm = 0.0
        for k in range(L):
            nrm += Q[k, c].real ** 2 + Q[k, c].imag ** 2
        nrm = np.sqrt(nrm)
        R[c, c] = nrm
        for k in range(L):
            Q[k, c] /= nrm
    # Rinv by back substitution
    Rinv = np.zeros((n, n), dtype=np.complex128)
    for c in range(n):
        Rinv[c, c] = 1.0 / R[c, c]
        for r in range(c - 1, -1, -1):
            acc = 0j
            for k in range(r + 1, c + 1):
                acc += R[r, k] * Rinv[k, c]
            Rinv[r, c] = -acc / R[r, r]
    B = np.empty((n, L, n), dtype=np.complex128)
    Y = np.empty((L, n), dtype=np.complex128)
    for i in range(n):
        for c in range(n):
            for k in range(L):
                Y[k, c] = dP[i, k, c]
            for p in range(n):
                acc = 0j
                for k in range(L):
                    acc += np.conj(Q[k, p]) * Y[k, c]
                for k in range(L):
                    Y[k, c] -= acc * Q[k, p]
        for k in range(L):
            for c in range(n):
                acc = 0j
                for p in range(c + 1):
                    acc += Y[k, p] * Rinv[p, c]
                B[i, k, c] = acc
    G = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(i, n):
            acc = 0j
            for k in range(L):
                for c in range(n):
                    acc += np.conj(B[i, k, c]) * B[j, k, c]
            G[i, j] = acc
            G[j, i] = np.conj(acc)
    return G


@njit(cache=True, nogil=True)
def _fermion_batch_nb(z, two_j, cb, f0, det_tol, out):
    S = z.shape[0]
    n = z.shape[1]
    L = two_j + 1
    P = np.empty((L, n), dtype=np.complex128)
    dP = np.empty((n, L, n), dtype=np.complex128)
    for s in range(S):
        if f0[s].real <= det_tol:
            out[s] = 0.0
            continue
        _newton_nb(z[s], two_j, cb, P, dP)
        G = _fermion_metric_nb(P, dP)
        out[s] = _determinant_nb(G).real


def _newton_np(z: np.ndarray, two_j: int):
    """Batched ``P (S, L, N)`` and ``dP (S, N, L, N)``."""
    S, n = z.shape
    L = two_j + 1
    cb = _binom_sqrt(two_j)
    H = np.zeros((S, L), dtype=np.complex128)
    D = np.zeros((S, n, L), dtype=np.complex128)
    H[:, 0] = 1.0
    P = np.zeros((S, L, n), dtype=np.complex128)
    dP = np.zeros((S, n, L, n), dtype=np.complex128)
    for m in range(n):
        zm = z[:, m]
        for r in range(1, L):
            H[:, r] += zm * H[:, r - 1]
            D[:, : m + 1, r] += zm[:, None] * D[:, : m + 1, r - 1]
            D[:, m, r] += H[:, r - 1]
        P[:, m:, m] = cb[m:] * H[:, : L - m]
        dP[:, :, m:, m] = cb[m:] * D[:, :, : L - m]
    return P, dP


def _fermion_metric_np(P, dP):
    q, r = np.linalg.qr(P)
    rinv = np.linalg.inv(r)
    qh = np.conj(np.swapaxes(q, -1, -2))
    X = dP - q[:, None] @ (qh[:, None] @ dP)
    B = X @ rinv[:, None]
    return np.einsum("sikc,sjkc->sij", np.conj(B), B)


# Points far from the origin of the chart make the Newton columns nearly
# parallel even when the particles are well separated on the sphere. Each
# configuration is therefore evaluated in a rotated chart w = R(z) whose pole
# is as far as possible from every particle; the metric is a tensor under
# rotations, G(z) = J^H G(w) J with J = diag(dw_i/dz_i).

_CHART_POLES = np.array(
    [np.inf, 0, 1, -1, 1j, -1j]
    + [s * (1 + t * 1j) / np.sqrt(2) * np.tan(np.arccos(1 / np.sqrt(3)) / 2) ** e
       for s in (1, -1) for t in (1, -1) for e in (1, -1)],
    dtype=np.complex128,
)


def _pole_distance(poles, z):
    """Chordal distance between chart poles (stereographic) and points z."""
    inf = np.isinf(poles)
    pz = np.where(inf, 0.0, poles)
    d = 2 * np.abs(pz - z) / np.sqrt((1 + np.abs(pz) ** 2) * (1 + np.abs(z) ** 2))
    # distance to the north pole itself
    d_inf = 2 / np.sqrt(1 + np.abs(z) ** 2)
    return np.where(inf, d_inf, d)


def best_chart(z: np.ndarray):
    """Rotate configurations ``(..., N)`` away from the chart pole.

    Returns ``(w, dw_dz)``.
    """
    z = np.asarray(z, dtype=np.complex128)
    poles = _CHART_POLES
    d = _pole_distance(poles[:, None, None], z.reshape(1, -1, z.shape[-1])).min(axis=-1)
    zeta = poles[np.argmax(d, axis=0)].reshape(z.shape[:-1] + (1,))
    ident = np.isinf(zeta)
    zf = np.where(ident, 0.0, zeta)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (np.conj(zf) * z + 1) / (zf - z)
        jac = (1 + np.abs(zf) ** 2) / (zf - z) ** 2
    w = np.where(ident, z, w)
    jac = np.where(ident, 1.0 + 0j, jac)
    return w, jac


def fermion_metric(z: np.ndarray, two_j: int, use_numba: bool | None = None) -> np.ndarray:
    """Fermion metric (hbar = 1) at one configuration, via the Newton basis."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    w, jac = best_chart(z)
    w = np.ascontiguousarray(w)
    n = z.size
    if USE_NUMBA if use_numba is None else use_numba:
        L = two_j + 1
        P = np.empty((L, n), dtype=np.complex128)
        dP = np.empty((n, L, n), dtype=np.complex128)
        _newton_nb(w, int(two_j), _binom_sqrt(two_j), P, dP)
        Gw = _fermion_metric_nb(P, dP)
    else:
        P, dP = _newton_np(w[None], int(two_j))
        Gw = _fermion_metric_np(P, dP)[0]
    return np.conj(jac)[:, None] * Gw * jac[None, :]


def fermion_liouville_batch(z: np.ndarray, two_j: int, use_numba: bool | None = None):
    """``(det Mt, det G)`` for fermion samples ``z`` of shape ``(S, N)``."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    Mt = scaled_gram_blocks(z, two_j, gram_only=True)[0]
    f0 = F_batch(Mt, True, use_numba)
    w, jac = best_chart(z)
    w = np.ascontiguousarray(w)
    if USE_NUMBA if use_numba is None else use_numba:
        out = np.empty(z.shape[0])
        _fermion_batch_nb(w, int(two_j), _binom_sqrt(two_j), f0, FERMION_DET_TOL, out)
    else:
        out = np.zeros(z.shape[0])
        ok = f0.real > FERMION_DET_TOL
        if np.any(ok):
            P, dP = _newton_np(w[ok], int(two_j))
            out[ok] = np.linalg.det(_fermion_metric_np(P, dP)).real
    out *= np.prod(np.abs(jac) ** 2, axis=-1)
    return f0, out
