"""Coherent-state geometry of N identical particles in the lowest Landau level.

Conventions (hbar = 1 unless a :class:`FluxSector` says otherwise):

* Gram matrix ``M_ij = (1 + conj(z_i) z_j)^{2j}``
* ``|N|^{-2} = perm M`` (bosons) or ``det M`` (fermions)
* Kahler potential ``K = hbar log |N|^{-2}``
* Berry connection ``A_{z_i} = (i/2) hbar d log|N|^{-2} / d z_i``
* metric ``G_ij = d2 K / d conj(z_i) d z_j`` (Hermitian, positive); the field
  strength is ``f = i G``, the symplectic form ``omega = -f`` and the line
  element ``ds^2 = 2 G dzbar dz``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import FermionDegenerate, PermanentOverCap, StepTooSmall
from .model import BOSON, FERMION, FluxSector, StatisticsKind, as_coords

ANALYTIC = "analytic"
FINITE_DIFFERENCE = "finite_difference"

DEFAULT_FD_STEP = 3e-3
HERMITICITY_TOL = 1e-6


@dataclass(frozen=True)
class GramMatrix:
    """Gram matrix of coherent states, stored as log-magnitude and phase."""

    log_abs: np.ndarray
    phase: np.ndarray
    two_j: int

    @property
    def N(self) -> int:
        return self.log_abs.shape[0]

    def to_complex(self) -> np.ndarray:
        return np.exp(self.log_abs + 1j * self.phase)

    def scaled(self) -> tuple[np.ndarray, np.ndarray]:
        """``(M_ij / sqrt(M_ii M_jj), log M_ii)``; the first has unit diagonal."""
        d = np.diag(self.log_abs).copy()
        Mt = np.exp(self.log_abs - 0.5 * (d[:, None] + d[None, :]) + 1j * self.phase)
        return Mt, d


@dataclass(frozen=True)
class KahlerMetric:
    g_matrix: np.ndarray
    method_tag: str

    @property
    def field_strength(self) -> np.ndarray:
        return 1j * self.g_matrix

    @property
    def symplectic_form(self) -> np.ndarray:
        """Coefficients of ``dzbar_i ^ dz_j`` in omega."""
        return -1j * self.g_matrix

    @property
    def line_element(self) -> np.ndarray:
        """Coefficients of ``dzbar_i dz_j`` in ds^2."""
        return 2.0 * self.g_matrix

    def liouville_density(self) -> float:
        """``2^N det G``: Liouville density w.r.t. prod dx_i dy_i."""
        n = self.g_matrix.shape[0]
        return float(2.0**n * np.linalg.det(self.g_matrix).real)


def gram_matrix(config, flux: FluxSector) -> GramMatrix:
    """Gram matrix in log-domain; ``2j`` is an integer so the power is single-valued."""
    z = as_coords(config)
    w = 1.0 + np.conj(z)[:, None] * z[None, :]
    with np.errstate(divide="ignore"):
        log_abs = flux.two_j * np.log(np.abs(w))
    phase = np.angle(np.exp(1j * flux.two_j * np.angle(w)))
    # keep the hermitian pairs exactly conjugate and the diagonal real
    phase = 0.5 * (phase - phase.T)
    phase[np.abs(np.abs(phase) - math.pi) < 1e-15] = math.pi
    return GramMatrix(log_abs, phase, flux.two_j)


def _check(kind: StatisticsKind, N: int, two_j: int) -> bool:
    stat = kind.geometric()
    if stat == BOSON and N > kernels.PERMANENT_CAP:
        raise PermanentOverCap(f"N={N} bosons exceeds the permanent cap {kernels.PERMANENT_CAP}")
    if stat == FERMION and N > two_j + 1:
        raise FermionDegenerate(f"N={N} fermions exceed the LLL dimension {two_j + 1}")
    return stat == FERMION


def _log_from(f0: complex, log_diag, fermion: bool) -> float:
    if fermion and f0.real <= kernels.FERMION_DET_TOL:
        raise FermionDegenerate(f"Gram determinant {f0.real:.3e} (relative) vanishes")
    return float(np.sum(log_diag) + math.log(f0.real))


def log_norm(gram: GramMatrix, kind: StatisticsKind) -> float:
    """``log perm M`` for bosons, ``log det M`` for fermions."""
    fermion = _check(kind, gram.N, gram.two_j)
    Mt, log_diag = gram.scaled()
    f0 = kernels.F_batch(Mt[None], fermion)[0]
    return _log_from(f0, log_diag, fermion)


def log_norm_batch(z: np.ndarray, flux: FluxSector, kind: StatisticsKind) -> np.ndarray:
    """Vectorized ``log_norm`` over configurations ``z`` of shape ``(S, N)``.

    Degenerate fermion configurations give ``-inf`` rather than raising.
    """
    z = np.asarray(z, dtype=np.complex128)
    fermion = _check(kind, z.shape[-1], flux.two_j)
    Mt, _, _, _, log_diag = kernels.scaled_gram_blocks(z, flux.two_j)
    f0 = kernels.F_batch(Mt, fermion).real
    with np.errstate(divide="ignore", invalid="ignore"):
        out = log_diag.sum(axis=-1) + np.log(f0)
    if fermion:
        out[f0 <= kernels.FERMION_DET_TOL] = -np.inf
    return out


def kahler_potential(config, flux: FluxSector, kind: StatisticsKind) -> float:
    """``K = hbar log|N|^{-2}``, defined up to an additive constant.

    For N coinciding bosons this is ``hbar [log N! + N 2j log(1 + |z|^2)]``.
    """
    return flux.hbar * log_norm(gram_matrix(config, flux), kind)


def _analytic(config, flux, kind):
    z = as_coords(config)
    fermion = _check(kind, z.size, flux.two_j)
    Mt, At, Ct, Dt, log_diag = kernels.scaled_gram_blocks(z, flux.two_j)
    _log_from(kernels.F_batch(Mt[None], fermion)[0], log_diag, fermion)
    _, grad, G = kernels.metric_blocks(Mt, At, Ct, Dt, fermion)
    return grad, G


def berry_connection(config, flux: FluxSector, kind: StatisticsKind) -> np.ndarray:
    """``A_{z_i}`` for every particle; ``A_{zbar_i}`` is its conjugate."""
    grad, _ = _analytic(config, flux, kind)
    return 0.5j * flux.hbar * grad


def metric(
    config,
    flux: FluxSector,
    kind: StatisticsKind,
    method: str = ANALYTIC,
    step: float = DEFAULT_FD_STEP,
) -> KahlerMetric:
    """Kahler metric ``G_ij = d2 K / d conj(z_i) d z_j``.

    ``method="finite_difference"`` differentiates :func:`kahler_potential`
    with 4-point central stencils at steps ``step * min(max(1, |z_i|), 3 d_i)``
    (``d_i`` the distance to the nearest other particle) and
    ``step/2``, combined by Richardson extrapolation.
    """
    if method == ANALYTIC:
        z = as_coords(config)
        _, G = _analytic(z, flux, kind)
        if kind.geometric() == FERMION:
            # same quantity, evaluated in a basis that stays well conditioned
            # as fermions approach each other
            G = kernels.fermion_metric(z, flux.two_j)
        G = flux.hbar * G
    elif method == FINITE_DIFFERENCE:
        G = flux.hbar * _fd_metric(as_coords(config), flux, kind, step)
        scale = max(np.max(np.abs(G)), np.finfo(float).tiny)
        resid = np.max(np.abs(G - G.conj().T)) / scale
        if not np.isfinite(resid) or resid > HERMITICITY_TOL:
            raise StepTooSmall(f"finite-difference metric non-Hermitian (residual {resid:.2e})")
    else:
        raise ValueError(f"unknown metric method {method!r}")
    G = 0.5 * (G + G.conj().T)
    return KahlerMetric(G, method)


def _real_steps(z: np.ndarray, step: float) -> np.ndarray:
    # the potential varies on the scale of |z| far out and of the nearest
    # neighbour separation near coincidences
    scale = np.maximum(1.0, np.abs(z))
    if z.size > 1:
        sep = np.abs(z[:, None] - z[None, :])
        np.fill_diagonal(sep, np.inf)
        scale = np.minimum(scale, 3.0 * sep.min(axis=1))
    h = step * scale
    return np.concatenate([h, h])


def _displace(z: np.ndarray, du: np.ndarray) -> np.ndarray:
    n = z.size
    return z + du[..., :n] + 1j * du[..., n:]


# The two slots of the mixed stencil use different steps, so H is only
# symmetric up to finite-difference error and its asymmetry is a diagnostic.
_SLOT_RATIO = 1.25


def _fd_hessian(z, flux, kind, steps):
    """Real Hessian of log|N|^{-2} in (x_1..x_N, y_1..y_N)."""
    m = 2 * z.size
    Ea = np.diag(steps)
    Eb = _SLOT_RATIO * Ea
    pts = []
    for a in range(m):
        for b in range(m):
            for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                pts.append(sa * Ea[a] + sb * Eb[b])
    vals = log_norm_batch(_displace(z, np.array(pts)), flux, kind)
    if not np.all(np.isfinite(vals)):
        raise FermionDegenerate("finite-difference stencil touched a degenerate configuration")
    vals = vals.reshape(m, m, 4)
    denom = 4 * _SLOT_RATIO * np.outer(steps, steps)
    return (vals[..., 0] - vals[..., 1] - vals[..., 2] + vals[..., 3]) / denom


def _fd_metric(z, flux, kind, step):
    n = z.size
    steps = _real_steps(z, step)
    H1 = _fd_hessian(z, flux, kind, steps)
    H2 = _fd_hessian(z, flux, kind, steps / 2)
    H = (4 * H2 - H1) / 3
    xx, yy = H[:n, :n], H[n:, n:]
    xy, yx = H[:n, n:], H[n:, :n]
    return 0.25 * (xx + yy + 1j * (yx - xy))


def berry_connection_fd(config, flux: FluxSector, kind: StatisticsKind, step: float = 1e-5) -> np.ndarray:
    """Berry connection from central differences of the Kahler potential."""
    z = as_coords(config)
    n = z.size
    m = 2 * n

    def grad(h):
        E = np.diag(h)
        pts = np.concatenate([E, -E])
        v = log_norm_batch(_displace(z, pts), flux, kind)
        return (v[:m] - v[m:]) / (2 * h)

    steps = _real_steps(z, step)
    d = (4 * grad(steps / 2) - grad(steps)) / 3
    dz = 0.5 * (d[:n] - 1j * d[n:])
    return 0.5j * flux.hbar * dz


def single_particle_area(flux: FluxSector) -> float:
    """Single-particle phase-space area in units of h: the flux count 2j.

    Integrating the one-particle Liouville density gives ``h * 2j`` exactly.
    """
    return float(flux.two_j)


def chordal_distance(z1, z2) -> np.ndarray:
    """Chordal distance on the unit sphere between stereographic points."""
    z1 = np.asarray(z1, dtype=np.complex128)
    z2 = np.asarray(z2, dtype=np.complex128)
    return 2 * np.abs(z1 - z2) / np.sqrt((1 + np.abs(z1) ** 2) * (1 + np.abs(z2) ** 2))


def min_chordal_distance(z) -> float:
    z = np.asarray(z, dtype=np.complex128)
    if z.size < 2:
        return math.inf
    d = chordal_distance(z[:, None], z[None, :])
    return float(np.min(d[np.triu_indices(z.size, 1)]))


def rotate(z, theta: float) -> np.ndarray:
    """Rigid sphere rotation by ``theta`` about the x axis, as a Mobius map."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    z = np.asarray(z, dtype=np.complex128)
    return (z * c + s) / (-z * s + c)
