"""Traveling waves ``u(t, s) = U(nu t + s)``.

Substituting the profile into ``L u = d_s^2 g(u)`` and integrating twice in
``xi = nu t + s`` gives the periodic ODE

    -U'' - nu^2 U - a^-2 R U - g(U) + c0 = 0,     R = diag(1, -1),

where the linear integration constant vanishes by periodicity and ``c0``
is the mean of ``g(U)`` (``U`` has zero mean).  On ``cos(j xi) e_c`` the
linear part is ``j^2 - nu^2 - (-1)^c a^-2``.  The branch with label ``l``
bifurcates at ``nu0 = sqrt(1 + (-1)^l a^-2)`` from the mode
``cos(xi) e_c`` with ``c = 1 - l``.

Profiles are even in ``xi``.  For ``c = 0`` the ``y`` component vanishes;
for ``c = 1`` ``x`` has only even and ``y`` only odd harmonics.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.fft as sfft

from . import fourier
from .errors import AmplitudeTooLarge, DegenerateFrequency, NewtonFailed

log = logging.getLogger(__name__)


def nu0(a: float, l: int) -> float:
    """Bifurcation frequency ``sqrt(1 + (-1)^l a^-2)``."""
    if l not in (0, 1):
        raise ValueError("l must be 0 or 1")
    if a <= 0:
        raise DegenerateFrequency(f"distance a must be positive, got {a}")
    radicand = 1.0 + (-1) ** l / (a * a)
    if radicand <= 0:
        raise DegenerateFrequency(f"1 + (-1)^{l} a^-2 = {radicand:.6g} is not positive")
    return math.sqrt(radicand)


def active_component(l: int) -> int:
    return 1 - l


@dataclass(frozen=True)
class TravelConfig:
    N: int = 32
    tol: float = 1e-13
    max_iter: int = 40
    oversample: int = 2
    guard: float = fourier.DEFAULT_GUARD
    chop_rel: float = 64 * np.finfo(float).eps

    def __post_init__(self):
        if self.N < 2 or self.oversample < 2 or self.tol <= 0:
            raise ValueError("need N >= 2, oversample >= 2, tol > 0")

    def replace(self, **changes) -> "TravelConfig":
        return replace(self, **changes)


@dataclass
class TravelProfile:
    """Profile ``U`` as cosine coefficients ``cos_coeffs[c, j]`` (``j = 0..N``)."""

    cos_coeffs: np.ndarray
    nu: float
    a: float
    b: float
    l: int
    residual: float = 0.0
    iterations: int = 0

    @property
    def N(self) -> int:
        return self.cos_coeffs.shape[1] - 1

    @property
    def coeffs(self) -> np.ndarray:
        """Complex coefficients ``(2, 2N+1)`` indexed ``k = -N..N``."""
        half = self.cos_coeffs / 2
        out = np.concatenate([half[:, :0:-1], half[:, :1] * 2, half[:, 1:]], axis=1)
        return out.astype(complex)

    def evaluate(self, xi) -> np.ndarray:
        """``U(xi)`` with shape ``(2, len(xi))``."""
        xi = np.asarray(xi, float)
        basis = np.cos(np.outer(np.arange(self.N + 1), xi))
        return self.cos_coeffs @ basis

    def record(self) -> dict:
        return {"b": self.b, "nu": self.nu, "residual": self.residual, "modes": self.N,
                "iterations": self.iterations}


def fix_mask(l: int, N: int) -> np.ndarray:
    """Admissible cosine modes ``(2, N+1)``: no mean, parity of the isotropy group."""
    j = np.arange(N + 1)
    mask = np.zeros((2, N + 1), bool)
    if active_component(l) == 0:
        mask[0] = j >= 1
    else:
        mask[0] = (j >= 1) & (j % 2 == 0)
        mask[1] = j % 2 == 1
    return mask


def _grid(N, oversample):
    M = fourier.grid_size(N, oversample)
    xi = 2 * np.pi * np.arange(M) / M
    return xi, np.cos(np.outer(xi, np.arange(N + 1)))


def _cos_transform(values, N, chop_rel=0.0):
    """Cosine coefficients ``j = 0..N`` of even real samples on the uniform grid."""
    fhat = sfft.rfft(values, axis=-1, norm="forward").real[..., : N + 1]
    fhat = fhat * np.where(np.arange(N + 1) == 0, 1.0, 2.0)
    return fourier.chop(fhat, chop_rel)


def linear_diagonal(N: int, nu: float, a: float) -> np.ndarray:
    """``j^2 - nu^2 - (-1)^c a^-2`` with shape ``(2, N+1)``."""
    j = np.arange(N + 1, dtype=float)
    a2inv = 1.0 / (a * a)
    return np.stack([j * j - nu * nu - a2inv, j * j - nu * nu + a2inv])


def _g_values(U, a, guard):
    z = U[0] + 1j * U[1]
    G = fourier.nonlinearity_on_grid(z, 1.0 / (a * a), guard)
    return G


def galerkin_residual(cos_coeffs, nu, a, cfg: TravelConfig = TravelConfig()) -> np.ndarray:
    """Cosine coefficients ``j >= 1`` of the ODE residual, shape ``(2, N+1)`` (``j = 0`` zeroed)."""
    N = cos_coeffs.shape[1] - 1
    _, C = _grid(N, cfg.oversample)
    G = _g_values(cos_coeffs @ C.T, a, cfg.guard)
    g = np.stack([_cos_transform(G.real, N), _cos_transform(G.imag, N)])
    g = fourier.chop(g, cfg.chop_rel)
    r = linear_diagonal(N, nu, a) * cos_coeffs - g
    r[:, 0] = 0
    return r


def galerkin_jacobian(cos_coeffs, nu, a, cfg: TravelConfig = TravelConfig()) -> np.ndarray:
    """Derivative of :func:`galerkin_residual` in the coefficients, ``(2(N+1), 2(N+1))``.

    Rows and columns are ordered component-major.  At ``U = 0`` it is
    diagonal with the entries of :func:`linear_diagonal`.
    """
    N = cos_coeffs.shape[1] - 1
    xi, C = _grid(N, cfg.oversample)
    M = len(xi)
    a2inv = 1.0 / (a * a)
    U = cos_coeffs @ C.T
    z = U[0] + 1j * U[1]
    if np.max(np.abs(z)) >= cfg.guard:
        raise AmplitudeTooLarge(f"sup|U| reached the guard {cfg.guard}")
    zb = np.conj(z)
    dG = a2inv * (2 * zb - zb * zb) / (1 - zb) ** 2
    weights = np.where(np.arange(N + 1) == 0, 1.0, 2.0)[:, None] / M
    blocks = [[dG.real, dG.imag], [dG.imag, -dG.real]]
    jac = np.zeros((2 * (N + 1), 2 * (N + 1)))
    for r in range(2):
        for c in range(2):
            jac[r * (N + 1):(r + 1) * (N + 1), c * (N + 1):(c + 1) * (N + 1)] = -(
                weights * (C.T * blocks[r][c]) @ C)
    jac += np.diag(linear_diagonal(N, nu, a).ravel())
    return jac


def solve_profile(b: float, a: float, l: int, cfg: TravelConfig = TravelConfig(),
                  guess: TravelProfile | None = None) -> TravelProfile:
    """Newton on ``(U, nu)`` with the ``cos(xi) e_c`` coefficient held at ``b``."""
    N = cfg.N
    nu_start = nu0(a, l)
    c = active_component(l)
    mask = fix_mask(l, N)
    free = mask.copy()
    free[c, 1] = False
    if guess is None:
        U = np.zeros((2, N + 1))
        nu = nu_start
    else:
        U = np.zeros((2, N + 1))
        n = min(N, guess.N)
        U[:, : n + 1] = guess.cos_coeffs[:, : n + 1]
        nu = guess.nu
    U = np.where(mask, U, 0.0)
    U[c, 1] = b
    if b == 0:
        return TravelProfile(U, nu_start, a, 0.0, l)
    rows = mask.ravel()
    cols = free.ravel()
    for it in range(1, cfg.max_iter + 1):
        r = galerkin_residual(U, nu, a, cfg)
        res = float(np.max(np.abs(r[mask])))
        if res < cfg.tol:
            break
        jac = galerkin_jacobian(U, nu, a, cfg)[np.ix_(rows, cols)]
        dnu = (-2 * nu * U).ravel()[rows]
        system = np.column_stack([jac, dnu])
        try:
            step = np.linalg.solve(system, -r.ravel()[rows])
        except np.linalg.LinAlgError as exc:
            raise NewtonFailed(f"singular Newton system at b={b}") from exc
        flat = U.ravel().copy()
        flat[cols] += step[:-1]
        U = flat.reshape(U.shape)
        nu += step[-1]
        if not np.all(np.isfinite(U)) or not np.isfinite(nu):
            raise NewtonFailed(f"Newton produced non-finite values at b={b}")
    else:
        raise NewtonFailed(f"Newton did not converge at b={b} (residual {res:.3e})")
    profile = TravelProfile(U, float(nu), a, b, l, iterations=it)
    profile.residual = travel_residual(profile)
    return profile


def solve_travel_branch(a: float, l: int, b_grid, cfg: TravelConfig = TravelConfig()) -> list:
    """Profiles along ``b_grid`` (starting at 0), warm-started from the previous point."""
    nu0(a, l)
    grid = [float(b) for b in b_grid]
    if not grid or grid[0] != 0.0:
        raise ValueError("b_grid must start at 0")
    profiles = []
    guess = None
    for b in grid:
        pt = solve_profile(b, a, l, cfg, guess)
        profiles.append(pt)
        guess = pt if b != 0 else None
    return profiles


def travel_residual(profile: TravelProfile, oversample: int = 4) -> float:
    """Sup-norm ODE residual on an oversampled grid, derivatives taken on the grid."""
    N = profile.N
    M = fourier.grid_size(N, oversample)
    xi = 2 * np.pi * np.arange(M) / M
    U = profile.evaluate(xi)
    if not np.any(U):
        return 0.0
    k = sfft.fftfreq(M, 1.0 / M)
    Upp = sfft.ifft(-(k * k) * sfft.fft(U, axis=-1), axis=-1).real
    a2inv = 1.0 / profile.a**2
    G = fourier.nonlinearity_on_grid(U[0] + 1j * U[1], a2inv, 1.0)
    g = np.stack([G.real, G.imag])
    RU = np.stack([U[0], -U[1]])
    r = -Upp - profile.nu**2 * U - a2inv * RU - g + g.mean(axis=-1, keepdims=True)
    return float(np.max(np.abs(r)))


def embed_profile(profile: TravelProfile, K: int):
    """Spatial coefficients of ``w1(0, .)`` and ``w2(0, .)`` plus the drift of ``w2``.

    ``w1 = a (1 - (x + i y)(nu t + s))`` and ``w2 = c t + W(nu t + s)`` with
    ``nu W' = F - c``, ``F = i (w1_ss - 1/conj(w1))`` and ``c`` the mean of ``F``.
    Arrays are indexed ``k = -K..K``.
    """
    if K < profile.N:
        raise ValueError("K must be at least the profile mode count")
    a, nu = profile.a, profile.nu
    pad = np.zeros((2, 2 * K + 1), complex)
    pad[:, K - profile.N: K + profile.N + 1] = profile.coeffs
    w1_hat = -a * (pad[0] + 1j * pad[1])
    w1_hat[K] += a
    M = fourier.grid_size(K, 2)
    k = np.arange(-K, K + 1, dtype=float)
    idx = np.arange(-K, K + 1) % M
    fhat = np.zeros(M, complex)
    fhat[idx] = w1_hat
    w1 = sfft.ifft(fhat, norm="forward")
    F_hat = 1j * (-(k * k) * w1_hat - sfft.fft(1.0 / np.conj(w1), norm="forward")[idx])
    drift = complex(F_hat[K])
    W_hat = np.where(k == 0, 0, F_hat / np.where(k == 0, 1, 1j * k * nu))
    return w1_hat, W_hat, drift


def translated_w1(profile: TravelProfile, K: int, t: float) -> np.ndarray:
    """Exact ``w1(t, .)`` coefficients: the profile shifted by ``nu t``."""
    w1_hat, _, _ = embed_profile(profile, K)
    return w1_hat * np.exp(1j * np.arange(-K, K + 1) * profile.nu * t)
