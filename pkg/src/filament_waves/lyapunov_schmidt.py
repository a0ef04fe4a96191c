"""Standing waves by Lyapunov-Schmidt reduction.

Writing the filament distance as ``w1(t, s) = a (1 - u(nu t, s))`` turns the
distance equation

    d_t^2 w1 = -d_s^4 w1 + d_s^2 (|w1|^-2 w1)

into ``L(a) u = d_s^2 g(u)`` for ``u = (x, y)``, where ``L`` is diagonal
with the eigenvalues of :mod:`filament_waves.lattice` and ``g`` is
:func:`filament_waves.fourier.eval_nonlinearity`.  The kernel projection
``Q`` keeps the sites of the exact kernel set, ``P = I - Q``.  For
``u = v + w`` with ``v = b e_l0 cos(j0 t) cos(k0 s)`` the range part solves
the fixed point ``w = (PLP)^-1 d_s^2 g(v + w)`` and the amplitude ``a``
solves the scalar bifurcation equation ``B(b, a) = 0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
import scipy.fft as sfft

from . import fourier
from .errors import (AmplitudeTooLarge, BranchTruncated, CollisionDetected, ContractionFailed,
                     ResonantSite, RootNotFound, SingularSite)
from .fourier import FourierField, SymmetryClass
from .lattice import BifurcationSite, RationalFrequency, kernel_set, scaled_eigenvalues

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolverConfig:
    s: float = 6.0
    tol: float = 1e-12
    max_iter: int = 200
    oversample: int = 2
    J: int = 64
    K: int = 64
    guard: float = fourier.DEFAULT_GUARD
    # coefficients of g below chop_rel * max|g_hat| are FFT round-off
    chop_rel: float = 64 * _EPS
    reduce_symmetry: bool = True
    secant_tol: float = 1e-12
    secant_bracket: float = 0.1
    secant_max_iter: int = 40
    b_halvings: int = 4
    collision_guard: float = 0.1

    def __post_init__(self):
        if self.s < 6:
            raise ValueError("Sobolev index s must be >= 6")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.oversample < 2:
            raise ValueError("oversample must be >= 2")
        if self.J < 1 or self.K < 1 or self.max_iter < 1:
            raise ValueError("J, K and max_iter must be >= 1")

    def replace(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


def _nu(freq) -> float:
    return float(freq)


def eigenvalue_array(J: int, K: int, freq, a2inv: float) -> np.ndarray:
    """Float eigenvalues with shape ``(2, 2J+1, 2K+1)`` (component first)."""
    j = np.arange(-J, J + 1, dtype=float)[:, None]
    k = np.arange(-K, K + 1, dtype=float)[None, :]
    base = (_nu(freq) * j) ** 2 - k**4
    a2inv = float(a2inv)
    return np.stack([base + a2inv * k * k, base - a2inv * k * k])


def kernel_mask(kernel, J: int, K: int) -> np.ndarray:
    """Boolean mask of the kernel sites plus the mean mode."""
    mask = np.zeros((2, 2 * J + 1, 2 * K + 1), bool)
    mask[:, J, K] = True
    for site in kernel:
        if abs(site.j) <= J and abs(site.k) <= K:
            mask[site.l, site.j + J, site.k + K] = True
    return mask


def apply_L(u: FourierField, freq, a2inv) -> FourierField:
    """``L(a) u``: multiply each site by its eigenvalue."""
    return FourierField(u.coeffs * eigenvalue_array(u.J, u.K, freq, a2inv), u.symmetry)


def _inverse_multiplier(J, K, freq, a2inv, kernel) -> np.ndarray:
    lam = eigenvalue_array(J, K, freq, a2inv)
    mask = kernel_mask(kernel, J, K)
    if isinstance(a2inv, (int, Fraction)) and isinstance(freq, RationalFrequency):
        values, _ = scaled_eigenvalues(freq, Fraction(a2inv), (J, K))
        zero = values == 0
        jj, kk, ll = np.nonzero(zero)
        singular = [(j, k, l) for j, k, l in zip(jj, kk, ll)
                    if not (j == 0 and k == 0) and not mask[l, J + j, K + k]]
    else:
        singular = [tuple(int(i) for i in idx) for idx in np.argwhere((lam == 0) & ~mask)]
        singular = [(j - J, k - K, l) for l, j, k in singular]
    if singular:
        j, k, l = singular[0]
        raise SingularSite(f"site ({j},{k},{l}) has zero eigenvalue outside the kernel")
    k = np.arange(-K, K + 1, dtype=float)[None, None, :]
    return np.where(mask, 0.0, -(k * k) / np.where(mask, 1.0, lam))


def apply_inverse_PLP_ds2(u: FourierField, freq, a2inv, kernel) -> FourierField:
    """``(PLP)^-1 d_s^2 u``: site multiplier ``-k^2 / lambda``, zero on kernel and mean."""
    return FourierField(u.coeffs * _inverse_multiplier(u.J, u.K, freq, a2inv, kernel),
                        u.symmetry)


def site_symmetry(site: BifurcationSite) -> SymmetryClass:
    return SymmetryClass.standing(site.k0, site.l0, site.j0)


def kernel_mode(site: BifurcationSite, J: int, K: int, b: float = 1.0) -> FourierField:
    """``b e_l0 cos(j0 t) cos(k0 s)``."""
    return FourierField.cosine_mode(J, K, site.j0, site.k0, site.l0, b, site_symmetry(site))


@dataclass
class RangeSolution:
    w: FourierField
    iterations: int
    range_residual: float
    g: FourierField = field(repr=False)
    increments: list = field(default_factory=list, repr=False)


class _Problem:
    """Cached operators for one site, truncation and amplitude."""

    def __init__(self, site: BifurcationSite, a: float, cfg: SolverConfig):
        if site.j0 != 1:
            raise ValueError("the standing-wave solver expects j0 = 1 (rescale nu by j0)")
        self.site, self.cfg, self.a = site, cfg, float(a)
        self.a2inv = 1.0 / (self.a * self.a)
        J, K = cfg.J, cfg.K
        cutoff = (max(J, site.cutoff[0]), max(K, site.cutoff[1]))
        kernel = site.kernel if tuple(site.cutoff) == cutoff else kernel_set(
            site.freq, site.a2inv, cutoff)
        self.kernel = kernel
        self.lam = eigenvalue_array(J, K, site.freq, self.a2inv)
        self.inv = _inverse_multiplier(J, K, site.freq, self.a2inv, kernel)
        self.kmask = kernel_mask(kernel, J, K)
        self.ds2 = fourier.diff_multiplier("ds2", J, K)[None]
        self.weights = fourier.sobolev_weights(J, K, cfg.s)
        self.sym = site_symmetry(site)
        self.sym_mask = fourier.symmetry_mask(self.sym, J, K) if cfg.reduce_symmetry else None

    def norm(self, c) -> float:
        return float(np.sqrt(np.sum(np.sum(np.abs(c) ** 2, axis=0) * self.weights)))

    def g(self, u_coeffs) -> np.ndarray:
        u = FourierField(u_coeffs)
        return fourier.eval_nonlinearity(u, self.a2inv, self.cfg.oversample, self.cfg.guard,
                                         self.cfg.chop_rel).coeffs

    def project(self, c):
        return c if self.sym_mask is None else np.where(self.sym_mask, c.real, 0)

    def K_map(self, v, w):
        gc = self.g(v + w)
        return self.project(self.inv * gc), gc

    def range_residual(self, w, gc) -> float:
        r = self.lam * w - self.ds2 * gc
        return self.norm(np.where(self.kmask, 0, r))

    def full_residual(self, u, gc) -> float:
        r = self.lam * u - self.ds2 * gc
        r[:, self.cfg.J, self.cfg.K] = 0
        return self.norm(r)

    def bifurcation(self, b, gc) -> float:
        """``lambda_site(a) b - <d_s^2 g, phi> / <phi, phi>`` with ``phi = e_l0 cos t cos k0 s``."""
        J, K, s = self.cfg.J, self.cfg.K, self.site
        lam = self.lam[s.l0, J + s.j0, K + s.k0]
        proj = sum(gc[s.l0, J + sj, K + sk].real for sj in (s.j0, -s.j0) for sk in (s.k0, -s.k0))
        return float(lam * b + s.k0**2 * proj)


def _solve_range(problem: _Problem, b: float, w0=None) -> RangeSolution:
    cfg = problem.cfg
    v = kernel_mode(problem.site, cfg.J, cfg.K, b).coeffs
    w = np.zeros_like(v) if w0 is None else problem.project(np.array(w0.coeffs))
    if b == 0 and w0 is None:
        zero = FourierField(w, problem.sym)
        return RangeSolution(zero, 1, 0.0, zero, [0.0])
    increments = []
    for it in range(1, cfg.max_iter + 1):
        w_new, gc = problem.K_map(v, w)
        d = problem.norm(w_new - w)
        increments.append(d)
        w = w_new
        if not np.isfinite(d):
            raise ContractionFailed(f"iteration produced non-finite values at b={b}, a={problem.a}")
        if d < cfg.tol:
            break
        if it >= 5 and d > 1e3 * min(increments) and d > increments[-2]:
            raise ContractionFailed(
                f"fixed-point iteration diverging at b={b}, a={problem.a} (increment {d:.3e})")
    else:
        raise ContractionFailed(
            f"no convergence in {cfg.max_iter} iterations at b={b}, a={problem.a} "
            f"(last increment {increments[-1]:.3e})")
    gc = problem.g(v + w)
    res = problem.range_residual(w, gc)
    sym = problem.sym if cfg.reduce_symmetry else None
    return RangeSolution(FourierField(w, sym), it, res, FourierField(gc, sym), increments)


def solve_range(b: float, a: float, site: BifurcationSite, cfg: SolverConfig = SolverConfig(),
                w0: FourierField | None = None) -> RangeSolution:
    """Picard iteration ``w <- (PLP)^-1 d_s^2 g(v + w)`` from ``w = 0`` (or ``w0``).

    Stops when the H^s increment drops below ``cfg.tol``.  Raises
    :class:`ContractionFailed` on divergence or when ``max_iter`` is hit.
    """
    return _solve_range(_Problem(site, a, cfg), float(b), w0)


def bifurcation_value(b: float, a: float, site: BifurcationSite,
                      cfg: SolverConfig = SolverConfig(), w0=None) -> float:
    """Scalar reduced equation ``B(b, a)``; vanishes on the branch."""
    problem = _Problem(site, a, cfg)
    sol = _solve_range(problem, float(b), w0)
    return problem.bifurcation(float(b), sol.g.coeffs)


@dataclass
class BranchPoint:
    b: float
    a: float
    site: BifurcationSite
    v: FourierField
    w: FourierField
    range_residual: float
    full_residual: float
    iterations: int
    B: float = 0.0
    s: float = 6.0

    @property
    def u(self) -> FourierField:
        return self.v + self.w

    @property
    def w_norm(self) -> float:
        return fourier.sobolev_norm(self.w, self.s)

    def record(self) -> dict:
        return {"b": self.b, "a": self.a, "range_residual": self.range_residual,
                "full_residual": self.full_residual, "iterations": self.iterations,
                "w_norm": self.w_norm}


def _time_shift_half(field_: FourierField, j0: int = 1) -> FourierField:
    """``u(t + pi/j0, s)``; maps the branch at ``b`` to the one at ``-b``."""
    j = np.arange(-field_.J, field_.J + 1)[None, :, None]
    return FourierField(field_.coeffs * np.where((j // j0) % 2 == 0, 1.0, -1.0), field_.symmetry)


def _finish_point(problem: _Problem, b, sol: RangeSolution, iterations) -> BranchPoint:
    cfg = problem.cfg
    v = kernel_mode(problem.site, cfg.J, cfg.K, b)
    u = v.coeffs + sol.w.coeffs
    full = problem.full_residual(u, sol.g.coeffs)
    return BranchPoint(b=b, a=problem.a, site=problem.site, v=v, w=sol.w,
                       range_residual=sol.range_residual, full_residual=full,
                       iterations=iterations, B=problem.bifurcation(b, sol.g.coeffs), s=cfg.s)


def solve_branch_point(b: float, a_init: float, site: BifurcationSite,
                       cfg: SolverConfig = SolverConfig(), w0=None) -> BranchPoint:
    """Solve ``B(b, a) = 0`` for ``a`` by the secant method started at ``a_init (1 +- h)``.

    Falls back to Newton steps with a difference quotient when a secant
    step leaves the contraction region.  ``b < 0`` is mapped from ``|b|``
    by the half-period time shift.
    """
    b = float(b)
    if b < 0:
        pt = solve_branch_point(-b, a_init, site, cfg, w0)
        v = kernel_mode(site, cfg.J, cfg.K, b)
        return replace(pt, b=b, v=v, w=_time_shift_half(pt.w, site.j0), B=-pt.B)
    if b == 0:
        problem = _Problem(site, site.a0, cfg)
        sol = _solve_range(problem, 0.0)
        return _finish_point(problem, 0.0, sol, sol.iterations)

    total_iters = 0
    cache = {}

    def f(a):
        nonlocal total_iters
        problem = _Problem(site, a, cfg)
        start = cache.get("w", w0)
        sol = _solve_range(problem, b, start)
        total_iters += sol.iterations
        cache["w"] = sol.w
        value = problem.bifurcation(b, sol.g.coeffs)
        cache[a] = (problem, sol, value)
        return value

    h = cfg.secant_bracket
    a_prev, a_cur = None, None
    while h > 1e-6:
        try:
            a_prev, a_cur = a_init * (1 - h), a_init * (1 + h)
            f_prev, f_cur = f(a_prev), f(a_cur)
            break
        except (ContractionFailed, SingularSite):
            h /= 4
    else:
        raise RootNotFound(f"no admissible secant bracket around a={a_init} at b={b}")

    for _ in range(cfg.secant_max_iter):
        if abs(f_cur) < cfg.secant_tol:
            problem, sol, _ = cache[a_cur]
            return _finish_point(problem, b, sol, total_iters)
        if f_cur == f_prev:
            raise RootNotFound(f"secant stalled at a={a_cur}, B={f_cur:.3e}")
        a_next = a_cur - f_cur * (a_cur - a_prev) / (f_cur - f_prev)
        try:
            f_next = f(a_next)
        except (ContractionFailed, SingularSite):
            # Newton with a difference quotient from the better point
            a_best, f_best = (a_cur, f_cur) if abs(f_cur) <= abs(f_prev) else (a_prev, f_prev)
            delta = 1e-6 * a_best
            slope = (f(a_best + delta) - f_best) / delta
            a_next = a_best - f_best / slope
            f_next = f(a_next)
        a_prev, f_prev, a_cur, f_cur = a_cur, f_cur, a_next, f_next
    raise RootNotFound(f"secant did not converge at b={b} (last |B|={abs(f_cur):.3e})")


@dataclass
class Branch:
    site: BifurcationSite
    points: list
    fits: dict = field(default_factory=dict)

    @property
    def b(self) -> np.ndarray:
        return np.array([p.b for p in self.points])

    @property
    def a(self) -> np.ndarray:
        return np.array([p.a for p in self.points])


def fit_exponent(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x`` over positive pairs."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def branch_fits(branch: Branch) -> dict:
    a0 = branch.site.a0
    b = branch.b
    return {
        "w_norm_exponent": fit_exponent(b, [p.w_norm for p in branch.points]),
        "a_shift_exponent": fit_exponent(b, np.abs(branch.a - a0)),
        "max_range_residual": max((p.range_residual for p in branch.points), default=0.0),
        "max_full_residual": max((p.full_residual for p in branch.points), default=0.0),
    }


def continue_branch(site: BifurcationSite, b_grid, cfg: SolverConfig = SolverConfig()) -> Branch:
    """Sweep ``b_grid`` (starting at 0) with warm starts in ``a`` and ``w``.

    A failed step is retried with half the step, up to ``cfg.b_halvings``
    times; intermediate points join the branch.  When retries run out,
    :class:`BranchTruncated` carries the partial branch.
    """
    if not site.nonresonant:
        raise ResonantSite(f"a0^-2 = {site.a2inv} is resonant (witness {site.witness})",
                           site.witness)
    grid = [float(b) for b in b_grid]
    if not grid or grid[0] != 0.0 or any(b1 <= b0 for b0, b1 in zip(grid, grid[1:])):
        raise ValueError("b_grid must start at 0 and increase strictly")
    branch = Branch(site, [solve_branch_point(0.0, site.a0, site, cfg)])
    for target in grid[1:]:
        last = branch.points[-1]
        step = target - last.b
        failures = 0
        while branch.points[-1].b < target:
            last = branch.points[-1]
            trial = min(last.b + step, target)
            try:
                pt = solve_branch_point(trial, last.a, site, cfg, w0=last.w if last.b else None)
            except (ContractionFailed, RootNotFound, AmplitudeTooLarge) as exc:
                failures += 1
                log.info("step to b=%.6g failed (%s); halving", trial, exc)
                if failures > cfg.b_halvings:
                    branch.fits = branch_fits(branch)
                    raise BranchTruncated(
                        f"branch stopped at b={last.b} before reaching {target}", branch) from exc
                step /= 2
                continue
            branch.points.append(pt)
    branch.fits = branch_fits(branch)
    return branch


@dataclass
class AssembledSolution:
    """Physical fields ``w1`` and ``w2 = drift t + periodic part`` of a standing wave.

    Coefficients are indexed by the rescaled time ``tau = nu t`` (period
    ``2 pi``) and ``s``; physical time runs over ``[0, period)``.
    """

    a: float
    freq: RationalFrequency
    w1_hat: np.ndarray
    drift: complex
    w2_hat: np.ndarray
    b: float = 0.0
    site: BifurcationSite | None = None
    drift_defect: float = 0.0

    @property
    def period(self) -> float:
        return self.freq.period

    @property
    def nu(self) -> float:
        return float(self.freq)

    @property
    def J(self) -> int:
        return (self.w1_hat.shape[0] - 1) // 2

    @property
    def K(self) -> int:
        return (self.w1_hat.shape[1] - 1) // 2

    def _eval(self, coeffs, t, s):
        tau = self.nu * np.asarray(t, float)
        et = np.exp(1j * np.outer(tau, np.arange(-self.J, self.J + 1)))
        es = np.exp(1j * np.outer(np.arange(-self.K, self.K + 1), np.asarray(s, float)))
        return et @ coeffs @ es

    def w1(self, t, s) -> np.ndarray:
        """Complex ``w1`` on the tensor grid ``t x s``."""
        return self._eval(self.w1_hat, t, s)

    def w2(self, t, s) -> np.ndarray:
        return self.drift * np.asarray(t, float)[:, None] + self._eval(self.w2_hat, t, s)

    def w1_at_time(self, t: float) -> np.ndarray:
        """Spatial coefficients of ``w1(t, .)``, indexed ``k = -K..K``."""
        phase = np.exp(1j * self.nu * t * np.arange(-self.J, self.J + 1))
        return phase @ self.w1_hat

    def w2_at_time(self, t: float) -> np.ndarray:
        phase = np.exp(1j * self.nu * t * np.arange(-self.J, self.J + 1))
        out = phase @ self.w2_hat
        out[self.K] += self.drift * t
        return out


def _box_fft(values, J, K):
    nt, ns = values.shape
    fhat = sfft.fft2(values, norm="forward")
    return fhat[np.ix_(np.arange(-J, J + 1) % nt, np.arange(-K, K + 1) % ns)]


def assemble_solution(pt: BranchPoint, collision_guard: float = 0.1,
                      oversample: int = 2) -> AssembledSolution:
    """Build ``w1 = a (1 - u(nu t, s))`` and integrate ``d_t w2 = i (d_s^2 w1 - 1/conj(w1))``.

    The ``t``-mean of the right-hand side is the drift; the remaining modes
    are divided by ``i nu j``.  The integration constant is fixed by giving
    the periodic part zero ``t``-mean.
    """
    return assemble_field(pt.u, pt.a, pt.site, pt.b, collision_guard, oversample)


def assemble_field(u: FourierField, a: float, site: BifurcationSite, b: float = 0.0,
                   collision_guard: float = 0.1, oversample: int = 2) -> AssembledSolution:
    """:func:`assemble_solution` for a bare perturbation field ``u`` at distance ``a``."""
    J, K = u.J, u.K
    freq = site.freq
    nu = float(freq)
    packed = u.coeffs[0] + 1j * u.coeffs[1]
    w1_hat = -a * packed
    w1_hat[J, K] += a

    nt, ns = fourier.grid_size(J, oversample), fourier.grid_size(K, oversample)
    w1_grid = sfft.ifft2(fourier.pack_spectrum(w1_hat, nt, ns), norm="forward")
    min_abs = float(np.min(np.abs(w1_grid)))
    if min_abs < collision_guard * site.a0:
        raise CollisionDetected(f"min|w1| = {min_abs:.3e} below guard")
    k = np.arange(-K, K + 1, dtype=float)[None, :]
    rhs = 1j * (-(k * k) * w1_hat - _box_fft(1.0 / np.conj(w1_grid), J, K))
    drift = complex(rhs[J, K])
    drift_defect = float(np.max(np.abs(np.delete(rhs[J], K))))
    j = np.arange(-J, J + 1, dtype=float)[:, None]
    w2_hat = np.where(j == 0, 0, rhs / np.where(j == 0, 1, 1j * nu * j))
    return AssembledSolution(a=a, freq=freq, w1_hat=w1_hat, drift=drift, w2_hat=w2_hat,
                             b=b, site=site, drift_defect=drift_defect)


def full_residual(sol: AssembledSolution, oversample: int = 3) -> dict:
    """Residual of ``d_t^2 w1 + d_s^4 w1 - d_s^2 (|w1|^-2 w1)`` on an oversampled grid.

    Derivatives are spectral on the grid itself, so the check uses nothing
    from the perturbation algebra.  Returns sup and root-mean-square norms.
    """
    J, K = sol.J, sol.K
    nt, ns = fourier.grid_size(J, oversample), fourier.grid_size(K, oversample)
    fhat = fourier.pack_spectrum(sol.w1_hat, nt, ns)
    jt = sfft.fftfreq(nt, 1.0 / nt)[:, None] * sol.nu
    ks = sfft.fftfreq(ns, 1.0 / ns)[None, :]
    w1 = sfft.ifft2(fhat, norm="forward")
    linear = sfft.ifft2((-(jt * jt) + ks**4) * fhat, norm="forward")
    h = sfft.fft2(1.0 / np.conj(w1), norm="forward")
    nonlinear = sfft.ifft2(-(ks * ks) * h, norm="forward")
    r = linear - nonlinear
    return {"sup": float(np.max(np.abs(r))), "l2": float(np.sqrt(np.mean(np.abs(r) ** 2))),
            "grid": (nt, ns)}


def symmetry_defects(sol: AssembledSolution, n: int = 128) -> dict:
    """Pointwise deviations from the standing-wave symmetries on an ``n x n`` grid.

    Checks ``w1(t,s) = w1(-t,s) = w1(t,-s) = w1(t,s+2pi/k0) = conj w1(t + l0 q pi/p, s)``.
    """
    site = sol.site
    k0, l0 = site.k0, site.l0
    t = sol.period * np.arange(n) / n
    s = 2 * np.pi * np.arange(n) / n
    base = sol.w1(t, s)
    shift = l0 * sol.period / 2
    out = {
        "time_reversal": float(np.max(np.abs(sol.w1(-t, s) - base))),
        "space_reflection": float(np.max(np.abs(sol.w1(t, -s) - base))),
        "space_period": float(np.max(np.abs(sol.w1(t, s + 2 * np.pi / k0) - base))),
        "conjugation_shift": float(np.max(np.abs(np.conj(sol.w1(t + shift, s)) - base))),
    }
    if l0 == 1:
        half = sol.w1(t + sol.period / 2, s)
        out["x_half_period"] = float(np.max(np.abs(half.real - base.real)))
        out["y_half_period"] = float(np.max(np.abs(half.imag + base.imag)))
    return out
