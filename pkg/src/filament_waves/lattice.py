"""Exact spectrum of the linearized standing-wave operator.

The linear operator acting on the Fourier mode ``e_l exp(i(jt + ks))`` has
eigenvalue

    lambda_{j,k,l} = (nu j)^2 - k^4 + (-1)^l a^-2 k^2

with ``nu = p/q`` rational.  Everything here runs on Python integers and
:class:`fractions.Fraction`; a site is in the kernel only when its
eigenvalue is exactly zero.

Kernel and resonance statements are certified inside a finite cutoff box
``|j| <= Jmax, |k| <= Kmax``.  Outside the box the quartic term dominates:
``|lambda| >= k^4 - (nu j)^2 - a^-2 k^2`` is large unless ``|j|`` tracks the
parabola ``(q/p) k^2``, so the default box (64, 32) covers every site of
moderate size near that parabola for the amplitudes produced by
:func:`enumerate_candidates` with small ``k0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import NonPositiveAmplitude

DEFAULT_CUTOFF = (64, 32)

# int64 headroom before switching the vectorized scans to Python integers
_INT64_SAFE = 2**62


@dataclass(frozen=True, order=True)
class RationalFrequency:
    """Frequency ``nu = p/q`` in lowest terms."""

    p: int
    q: int

    def __post_init__(self):
        if not (isinstance(self.p, int) and isinstance(self.q, int)):
            raise TypeError("p and q must be integers")
        if self.p < 1 or self.q < 1:
            raise ValueError(f"p and q must be positive, got p={self.p}, q={self.q}")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"p={self.p} and q={self.q} are not coprime")

    @classmethod
    def from_fraction(cls, value) -> "RationalFrequency":
        value = Fraction(value)
        return cls(value.numerator, value.denominator)

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)

    def __float__(self):
        return self.p / self.q

    def __str__(self):
        return f"{self.p}/{self.q}"

    @property
    def period(self) -> float:
        """Physical period ``2 pi q / p`` of a solution at this frequency."""
        return 2.0 * math.pi * self.q / self.p


class LatticeSite(NamedTuple):
    j: int
    k: int
    l: int

    def __str__(self):
        return f"({self.j},{self.k},{self.l})"


def _check_site(site: LatticeSite):
    if site.l not in (0, 1):
        raise ValueError(f"l must be 0 or 1, got {site.l}")
    if site.j == 0 and site.k == 0:
        raise ValueError("site (0, 0) is excluded from the zero-mean lattice")


def seeded_sites(j0: int, k0: int, l0: int) -> frozenset:
    """The four sites ``(+-j0, +-k0, l0)`` that vanish by construction."""
    return frozenset(LatticeSite(sj * j0, sk * k0, l0) for sj in (1, -1) for sk in (1, -1))


def format_rational(x: Fraction) -> str:
    """Serialize a rational as ``"numerator/denominator"``."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())


@dataclass(frozen=True)
class BifurcationSite:
    freq: RationalFrequency
    j0: int
    k0: int
    l0: int
    a2inv: Fraction
    kernel: frozenset = field(repr=False)
    nonresonant: bool
    cutoff: tuple
    witness: LatticeSite | None = None

    def __post_init__(self):
        expected = amplitude_from_site(self.freq, self.j0, self.k0, self.l0)
        if expected != self.a2inv:
            raise ValueError(f"a2inv={self.a2inv} does not match site value {expected}")
        if not seeded_sites(self.j0, self.k0, self.l0) <= self.kernel:
            raise ValueError("kernel must contain the seeded sites")

    @property
    def p(self) -> int:
        return self.freq.p

    @property
    def q(self) -> int:
        return self.freq.q

    @property
    def a0(self) -> float:
        """Filament distance at the bifurcation point."""
        return 1.0 / math.sqrt(self.a2inv)

    @property
    def minimal_period(self) -> float:
        return self.freq.period

    @property
    def condition_con(self) -> bool:
        """Whether ``(q^2 k^2 - q) k^2 < p^2 j^2 < (q^2 k^2 + q) k^2`` holds.

        Recorded for transparency only; for a positive amplitude it is never
        satisfied (see :func:`exclusion_gap`).
        """
        p, q, j, k = self.freq.p, self.freq.q, self.j0, self.k0
        return (q * q * k * k - q) * k * k < p * p * j * j < (q * q * k * k + q) * k * k


def eigenvalue(site: LatticeSite, freq: RationalFrequency, a2inv) -> Fraction:
    """Exact eigenvalue ``(nu j)^2 - k^4 + (-1)^l a2inv k^2``.

    >>> eigenvalue(LatticeSite(3, 1, 0), RationalFrequency(1, 2), Fraction(3, 4))
    Fraction(2, 1)
    """
    a2inv = Fraction(a2inv)
    if a2inv <= 0:
        raise ValueError("a2inv must be positive")
    _check_site(site)
    j, k, l = site
    sign = 1 if l == 0 else -1
    return freq.value**2 * j * j - k**4 + sign * a2inv * k * k


def amplitude_from_site(freq: RationalFrequency, j0: int, k0: int, l0: int) -> Fraction:
    """Return ``a0^-2 = (-1)^l0 (k0^2 - (p j0 / (q k0))^2)``.

    Raises :class:`NonPositiveAmplitude` when the value is not strictly
    positive.
    """
    if j0 < 1 or k0 < 1:
        raise ValueError("j0 and k0 must be positive")
    if l0 not in (0, 1):
        raise ValueError("l0 must be 0 or 1")
    value = Fraction(k0 * k0) - Fraction(freq.p * j0, freq.q * k0) ** 2
    if l0 == 1:
        value = -value
    if value <= 0:
        raise NonPositiveAmplitude(
            f"site ({j0},{k0},{l0}) at nu={freq} gives a2inv={value} <= 0"
        )
    return value


def kernel_set(freq: RationalFrequency, a2inv, cutoff=DEFAULT_CUTOFF) -> frozenset:
    """All sites in the cutoff box with exactly zero eigenvalue.

    For each ``k`` and ``l`` the condition ``lambda = 0`` fixes
    ``j^2 = (q/p)^2 (k^4 - (-1)^l a2inv k^2)``, so the scan is linear in
    ``Kmax`` and only needs an exact perfect-square test.
    """
    a2inv = Fraction(a2inv)
    if a2inv <= 0:
        raise ValueError("a2inv must be positive")
    jmax, kmax = cutoff
    if jmax < 1 or kmax < 1:
        raise ValueError("cutoff components must be >= 1")
    # j^2 = q^2 k^2 (d k^2 - sign n) / (p^2 d) with a2inv = n/d
    n, d = a2inv.numerator, a2inv.denominator
    den = freq.p * freq.p * d
    sites = set()
    for k in range(1, kmax + 1):
        for l in (0, 1):
            sign = 1 if l == 0 else -1
            num = freq.q * freq.q * k * k * (d * k * k - sign * n)
            if num < 0 or num % den:
                continue
            j2 = num // den
            j = math.isqrt(j2)
            if j * j != j2 or j > jmax:
                continue
            for sj in {j, -j}:
                for sk in (k, -k):
                    sites.add(LatticeSite(sj, sk, l))
    return frozenset(sites)


def _canonical_order(site: LatticeSite):
    return (abs(site.k), abs(site.j), site.l, site.j < 0, site.k < 0)


def is_nonresonant(freq: RationalFrequency, j0: int, k0: int, l0: int,
                   cutoff=DEFAULT_CUTOFF):
    """Check ``N cap (j0 Z x k0 Z x Z2) = {(+-j0, +-k0, l0)}`` inside the cutoff.

    Returns ``(flag, witness)``; the witness is the offending kernel site
    of smallest ``(|k|, |j|, l)``, preferring nonnegative indices.
    """
    a2inv = amplitude_from_site(freq, j0, k0, l0)
    kernel = kernel_set(freq, a2inv, cutoff)
    return _resonance_witness(kernel, j0, k0, l0)


def _resonance_witness(kernel, j0, k0, l0):
    seeded = seeded_sites(j0, k0, l0)
    offending = [s for s in kernel if s.j % j0 == 0 and s.k % k0 == 0 and s not in seeded]
    if not offending:
        return True, None
    return False, min(offending, key=_canonical_order)


def bifurcation_site(freq: RationalFrequency, j0: int, k0: int, l0: int,
                     cutoff=DEFAULT_CUTOFF) -> BifurcationSite:
    """Build a fully annotated :class:`BifurcationSite`."""
    a2inv = amplitude_from_site(freq, j0, k0, l0)
    kernel = kernel_set(freq, a2inv, cutoff)
    flag, witness = _resonance_witness(kernel, j0, k0, l0)
    return BifurcationSite(freq=freq, j0=j0, k0=k0, l0=l0, a2inv=a2inv, kernel=kernel,
                           nonresonant=flag, cutoff=tuple(cutoff), witness=witness)


def enumerate_candidates(q: int, kmax: int, pmax: int, cutoff=DEFAULT_CUTOFF) -> list:
    """Scan ``k0 <= kmax``, ``p <= pmax`` coprime to ``q`` and both ``l0`` with ``j0 = 1``.

    Every combination with a positive amplitude is returned, annotated with
    its kernel and resonance flag, sorted by ``a2inv`` (ties by
    ``(k0, p, l0)``).
    """
    if q < 1 or kmax < 1 or pmax < 1:
        raise ValueError("q, kmax and pmax must be >= 1")
    out = []
    for k0 in range(1, kmax + 1):
        for p in range(1, pmax + 1):
            if math.gcd(p, q) != 1:
                continue
            freq = RationalFrequency(p, q)
            for l0 in (0, 1):
                try:
                    out.append(bifurcation_site(freq, 1, k0, l0, cutoff))
                except NonPositiveAmplitude:
                    continue
    out.sort(key=lambda s: (s.a2inv, s.k0, s.p, s.l0))
    return out


def exclusion_gap(p: int, q: int, j: int, k: int) -> tuple:
    """Return ``(|q^2 k^4 - p^2 j^2|, q k^2 + p j)``.

    Whenever ``p j != q k^2`` the first entry is at least the second, since
    it factors as ``|q k^2 - p j| (q k^2 + p j)`` with an integer first
    factor.  This is why the open interval ``(0, 1/q)`` holds no admissible
    amplitude.
    """
    return abs(q * q * k**4 - p * p * j * j), q * k * k + p * j


@dataclass(frozen=True)
class GapReport:
    min_abs_lambda: Fraction
    argmin_site: LatticeSite
    min_ratio: Fraction
    argmin_ratio_site: LatticeSite
    denominator_bound: int
    cutoff: tuple = DEFAULT_CUTOFF

    def as_dict(self) -> dict:
        return {
            "min_abs_lambda": format_rational(self.min_abs_lambda),
            "argmin_site": list(self.argmin_site),
            "min_ratio": format_rational(self.min_ratio),
            "argmin_ratio_site": list(self.argmin_ratio_site),
            "denominator_bound": self.denominator_bound,
            "cutoff": list(self.cutoff),
        }


def scaled_eigenvalues(freq: RationalFrequency, a2inv, cutoff=DEFAULT_CUTOFF):
    """Integer array ``D * lambda`` over ``0 <= j <= Jmax, 0 <= k <= Kmax, l``.

    Returns ``(values, D)`` with ``values[j, k, l]``.  ``D`` is the least
    common multiple of ``q^2`` and the denominator of ``a2inv``.  The dtype
    falls back to Python integers when int64 could overflow.
    """
    a2inv = Fraction(a2inv)
    jmax, kmax = cutoff
    p, q = freq.p, freq.q
    d = math.lcm(q * q, a2inv.denominator)
    t_coef = p * p * (d // (q * q))
    a_coef = a2inv.numerator * (d // a2inv.denominator)
    bound = t_coef * jmax**2 + d * kmax**4 + abs(a_coef) * kmax**2
    dtype = np.int64 if bound < _INT64_SAFE else object
    j = np.arange(jmax + 1, dtype=dtype)[:, None, None]
    k = np.arange(kmax + 1, dtype=dtype)[None, :, None]
    sign = np.array([1, -1], dtype=dtype)[None, None, :]
    values = t_coef * j * j - d * k**4 + sign * a_coef * k * k
    return values, d


def gap_report(freq: RationalFrequency, a2inv, kernel, cutoff=DEFAULT_CUTOFF) -> GapReport:
    """Exact spectral-gap diagnostics over the non-kernel sites of the box.

    ``min_ratio`` is the computed constant in ``|lambda| >= eps (k^2 + |j|)``.
    Since the eigenvalue depends on ``|j|`` and ``|k|`` only, minimizers are
    reported with nonnegative indices; ties go to the first site in the
    order (j, k, l).
    """
    a2inv = Fraction(a2inv)
    values, d = scaled_eigenvalues(freq, a2inv, cutoff)
    jmax1, kmax1, _ = values.shape
    absval = np.abs(values)
    excluded = np.zeros(values.shape, dtype=bool)
    excluded[0, 0, :] = True
    for s in kernel:
        if abs(s.j) < jmax1 and abs(s.k) < kmax1:
            excluded[abs(s.j), abs(s.k), s.l] = True
    zero_outside = (absval == 0) & ~excluded
    if np.any(zero_outside):
        j, k, l = np.argwhere(zero_outside)[0]
        raise ValueError(f"site ({j},{k},{l}) has zero eigenvalue but is not in the kernel")

    flat_idx = np.flatnonzero(~excluded)
    flat_abs = absval.ravel()[flat_idx]
    i_min = int(np.argmin(flat_abs))
    j, k, l = np.unravel_index(flat_idx[i_min], values.shape)
    min_abs = Fraction(int(flat_abs[i_min]), d)
    argmin = LatticeSite(int(j), int(k), int(l))

    jj, kk, _ = np.indices(values.shape)
    weight = (kk * kk + jj).ravel()[flat_idx]
    approx = flat_abs.astype(float) / weight
    near = np.flatnonzero(approx <= approx.min() * (1 + 1e-9))
    best = None
    for n in near:
        ratio = Fraction(int(flat_abs[n]), d * int(weight[n]))
        if best is None or ratio < best[0]:
            best = (ratio, n)
    j, k, l = np.unravel_index(flat_idx[best[1]], values.shape)

    g = 0
    for x in values.ravel():
        g = math.gcd(g, int(x))
        if g == 1:
            break
    denom = d // math.gcd(d, g)
    return GapReport(min_abs_lambda=min_abs, argmin_site=argmin, min_ratio=best[0],
                     argmin_ratio_site=LatticeSite(int(j), int(k), int(l)),
                     denominator_bound=denom, cutoff=tuple(cutoff))
