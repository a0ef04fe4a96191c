"""Truncated space-time Fourier fields ``u: T^2 -> R^2``.

A :class:`FourierField` stores the coefficients of both real components,
``x_hat[j, k]`` and ``y_hat[j, k]``, densely over ``|j| <= J, |k| <= K``::

    u(t, s) = sum_{j,k} (x_hat, y_hat)[j, k] exp(i (j t + k s))

Pointwise work (products, the nonlinearity) goes through an oversampled
collocation grid.  Both components travel through one complex FFT by
packing ``z = x + i y`` on the grid, whose spectrum is ``x_hat + i y_hat``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import AmplitudeTooLarge

DEFAULT_GUARD = 0.9


@dataclass(frozen=True)
class SymmetryClass:
    """Isotropy type of a field.

    ``standing`` is the fixed-point space of the group generated by
    ``t -> -t``, ``s -> -s``, ``u -> R u(t + l0 pi, s)`` and the shift
    ``(t, s) -> (t + pi, s + pi/k0)``; ``traveling`` holds profiles
    ``U(t + k0 s)`` whose modes lie on the line ``k = k0 j``.
    """

    kind: str = "none"
    k0: int = 1
    l0: int = 0
    j0: int = 1

    def __post_init__(self):
        if self.kind not in ("none", "standing", "traveling"):
            raise ValueError(f"unknown symmetry kind {self.kind!r}")
        if self.k0 < 1 or self.j0 < 1 or self.l0 not in (0, 1):
            raise ValueError("need k0, j0 >= 1 and l0 in {0, 1}")

    @classmethod
    def standing(cls, k0: int, l0: int, j0: int = 1) -> "SymmetryClass":
        return cls("standing", k0, l0, j0)

    @classmethod
    def traveling(cls, l0: int, k0: int = 1) -> "SymmetryClass":
        """Profiles along ``k = k0 j`` whose ``cos`` mode at ``j = 1`` lies in component ``l0``."""
        return cls("traveling", k0, l0, 1)

    def tag(self) -> str:
        if self.kind == "none":
            return "none"
        return f"{self.kind}(k0={self.k0},l0={self.l0},j0={self.j0})"

    @classmethod
    def from_tag(cls, tag: str) -> "SymmetryClass | None":
        if tag in (None, "none"):
            return None
        kind, rest = tag.split("(", 1)
        fields = dict(item.split("=") for item in rest.rstrip(")").split(","))
        return cls(kind, int(fields["k0"]), int(fields["l0"]), int(fields["j0"]))


def grid_size(n: int, oversample: int = 2) -> int:
    """Collocation points for modes ``|m| <= n`` oversampled by ``oversample``.

    The size is even so that aliasing keeps the parity of ``j + k``, which
    the half-period shift of the standing symmetry depends on.
    """
    if oversample < 2:
        raise ValueError("oversample must be >= 2")
    size = sfft.next_fast_len(oversample * (2 * n + 1))
    while size % 2:
        size = sfft.next_fast_len(size + 1)
    return size


class FourierField:
    """Dense coefficient box for an R^2-valued field on the torus."""

    __array_priority__ = 1000

    def __init__(self, coeffs, symmetry: SymmetryClass | None = None):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 3 or coeffs.shape[0] != 2 or coeffs.shape[1] % 2 == 0 \
                or coeffs.shape[2] % 2 == 0:
            raise ValueError(f"coefficients must have shape (2, 2J+1, 2K+1), got {coeffs.shape}")
        self.coeffs = coeffs
        self.coeffs.setflags(write=False)
        self.symmetry = symmetry

    # construction

    @classmethod
    def zeros(cls, J: int, K: int, symmetry=None) -> "FourierField":
        return cls(np.zeros((2, 2 * J + 1, 2 * K + 1), complex), symmetry)

    @classmethod
    def from_modes(cls, J: int, K: int, modes: dict, symmetry=None) -> "FourierField":
        """Set coefficients from ``{(j, k, component): value}``; the caller keeps reality."""
        c = np.zeros((2, 2 * J + 1, 2 * K + 1), complex)
        for (j, k, comp), value in modes.items():
            c[comp, j + J, k + K] = value
        return cls(c, symmetry)

    @classmethod
    def cosine_mode(cls, J: int, K: int, j: int, k: int, comp: int, amplitude=1.0,
                    symmetry=None) -> "FourierField":
        """``amplitude * cos(j t) cos(k s) * e_comp``."""
        c = np.zeros((2, 2 * J + 1, 2 * K + 1), complex)
        for sj in (j, -j):
            for sk in (k, -k):
                c[comp, sj + J, sk + K] += amplitude / 4
        return cls(c, symmetry)

    @classmethod
    def from_grid(cls, values, J: int, K: int, symmetry=None) -> "FourierField":
        """Transform real grid values ``(2, Nt, Ns)`` and truncate to the box."""
        values = np.asarray(values, dtype=float)
        packed = values[0] + 1j * values[1]
        return cls(unpack_spectrum(sfft.fft2(packed, norm="forward"), J, K), symmetry)

    @classmethod
    def from_function(cls, func, J: int, K: int, oversample: int = 2, symmetry=None):
        """Sample ``func(t, s) -> (x, y)`` on the collocation grid."""
        t, s = collocation_grid(J, K, oversample)
        x, y = func(t[:, None], s[None, :])
        shape = (t.size, s.size)
        return cls.from_grid(np.stack([np.broadcast_to(x, shape), np.broadcast_to(y, shape)]),
                             J, K, symmetry)

    # shape and access

    @property
    def J(self) -> int:
        return (self.coeffs.shape[1] - 1) // 2

    @property
    def K(self) -> int:
        return (self.coeffs.shape[2] - 1) // 2

    @property
    def x(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def y(self) -> np.ndarray:
        return self.coeffs[1]

    def coeff(self, j: int, k: int) -> tuple:
        return complex(self.coeffs[0, j + self.J, k + self.K]), \
            complex(self.coeffs[1, j + self.J, k + self.K])

    def mean(self) -> tuple:
        return self.coeff(0, 0)

    def without_mean(self) -> "FourierField":
        c = self.coeffs.copy()
        c[:, self.J, self.K] = 0
        return FourierField(c, self.symmetry)

    def with_symmetry(self, symmetry) -> "FourierField":
        return FourierField(self.coeffs, symmetry)

    def reality_defect(self) -> float:
        """max |c(j,k) - conj c(-j,-k)|; zero for a real field."""
        return float(np.max(np.abs(self.coeffs - np.conj(self.coeffs[:, ::-1, ::-1]))))

    def resized(self, J: int, K: int) -> "FourierField":
        """Zero-pad or truncate to a new box."""
        out = np.zeros((2, 2 * J + 1, 2 * K + 1), complex)
        jm, km = min(J, self.J), min(K, self.K)
        out[:, J - jm:J + jm + 1, K - km:K + km + 1] = \
            self.coeffs[:, self.J - jm:self.J + jm + 1, self.K - km:self.K + km + 1]
        return FourierField(out, self.symmetry)

    def _check_compatible(self, other: "FourierField"):
        if self.coeffs.shape != other.coeffs.shape:
            raise ValueError(f"truncation mismatch: {self.coeffs.shape} vs {other.coeffs.shape}")

    # arithmetic

    def __add__(self, other):
        self._check_compatible(other)
        return FourierField(self.coeffs + other.coeffs, _common(self, other))

    def __sub__(self, other):
        self._check_compatible(other)
        return FourierField(self.coeffs - other.coeffs, _common(self, other))

    def __neg__(self):
        return FourierField(-self.coeffs, self.symmetry)

    def __mul__(self, scalar):
        if isinstance(scalar, FourierField):
            return NotImplemented
        return FourierField(self.coeffs * scalar, self.symmetry)

    __rmul__ = __mul__

    # grid evaluation

    def packed_grid(self, oversample: int = 2) -> np.ndarray:
        nt, ns = grid_size(self.J, oversample), grid_size(self.K, oversample)
        return sfft.ifft2(pack_spectrum(self.coeffs[0] + 1j * self.coeffs[1], nt, ns),
                          norm="forward")

    def to_grid(self, oversample: int = 2) -> np.ndarray:
        """Real values with shape ``(2, Nt, Ns)`` on the collocation grid."""
        z = self.packed_grid(oversample)
        return np.stack([z.real, z.imag])

    def evaluate(self, t, s) -> np.ndarray:
        """Values on the tensor grid ``t x s`` by direct summation, shape (2, nt, ns)."""
        et = np.exp(1j * np.outer(np.asarray(t, float), np.arange(-self.J, self.J + 1)))
        es = np.exp(1j * np.outer(np.arange(-self.K, self.K + 1), np.asarray(s, float)))
        return np.stack([(et @ self.coeffs[c] @ es).real for c in (0, 1)])

    def __repr__(self):
        tag = self.symmetry.tag() if self.symmetry else "none"
        return f"FourierField(J={self.J}, K={self.K}, symmetry={tag})"


def _common(u, v):
    return u.symmetry if u.symmetry == v.symmetry else None


def collocation_grid(J: int, K: int, oversample: int = 2):
    nt, ns = grid_size(J, oversample), grid_size(K, oversample)
    return 2 * np.pi * np.arange(nt) / nt, 2 * np.pi * np.arange(ns) / ns


def pack_spectrum(box: np.ndarray, nt: int, ns: int) -> np.ndarray:
    """Embed a centered ``(2J+1, 2K+1)`` coefficient box into an FFT array."""
    J, K = (box.shape[0] - 1) // 2, (box.shape[1] - 1) // 2
    if nt <= 2 * J or ns <= 2 * K:
        raise ValueError("grid too small for the coefficient box")
    out = np.zeros((nt, ns), complex)
    out[np.ix_(np.arange(-J, J + 1) % nt, np.arange(-K, K + 1) % ns)] = box
    return out


def unpack_spectrum(fhat: np.ndarray, J: int, K: int) -> np.ndarray:
    """Split a packed spectrum ``x_hat + i y_hat`` into both real components."""
    nt, ns = fhat.shape
    jj, kk = np.arange(-J, J + 1), np.arange(-K, K + 1)
    z = fhat[np.ix_(jj % nt, kk % ns)]
    zc = np.conj(fhat[np.ix_(-jj % nt, -kk % ns)])
    return np.stack([(z + zc) / 2, (z - zc) / 2j])


def sobolev_weights(J: int, K: int, s: float) -> np.ndarray:
    j = np.arange(-J, J + 1, dtype=float)[:, None]
    k = np.arange(-K, K + 1, dtype=float)[None, :]
    return (j * j + k * k + 1.0) ** s


def sobolev_norm(u: FourierField, s: float) -> float:
    """``sqrt(sum |u_jk|^2 (j^2 + k^2 + 1)^s)`` over both components."""
    power = np.sum(np.abs(u.coeffs) ** 2, axis=0)
    return float(np.sqrt(np.sum(power * sobolev_weights(u.J, u.K, s))))


def inner(u: FourierField, v: FourierField) -> float:
    """L^2 inner product ``(2 pi)^-2 int u . v`` of two real fields."""
    u._check_compatible(v)
    return float(np.sum(u.coeffs * np.conj(v.coeffs)).real)


def multiply(u: FourierField, v: FourierField, oversample: int = 2) -> FourierField:
    """Componentwise pointwise product ``(x_u x_v, y_u y_v)``, truncated to the box.

    The mean of the product is kept.  With ``oversample >= 2`` the grid
    holds every mode of the product without aliasing into the box.
    """
    u._check_compatible(v)
    gu, gv = u.to_grid(oversample), v.to_grid(oversample)
    return FourierField.from_grid(gu * gv, u.J, u.K)


def chop(coeffs: np.ndarray, rel: float) -> np.ndarray:
    """Zero every coefficient below ``rel`` times the largest magnitude."""
    if rel <= 0:
        return coeffs
    mag = np.abs(coeffs)
    return np.where(mag > rel * mag.max(), coeffs, 0)


def nonlinearity_on_grid(z: np.ndarray, a2inv: float, guard: float = DEFAULT_GUARD):
    """Complex ``a2inv * conj(z)^2 / (1 - conj(z))`` for packed ``z = x + i y``."""
    peak = float(np.max(np.abs(z))) if z.size else 0.0
    if peak >= guard:
        raise AmplitudeTooLarge(f"sup|u| = {peak:.6g} reached the guard {guard}")
    zb = np.conj(z)
    return a2inv * zb * zb / (1.0 - zb)


def eval_nonlinearity(u: FourierField, a2inv: float, oversample: int = 2,
                      guard: float = DEFAULT_GUARD, chop_rel: float = 0.0) -> FourierField:
    """The nonlinearity ``g`` of the perturbation equation, realified.

    With ``ubar = x - i y`` the complex value ``G = a2inv ubar^2 / (1 - ubar)``
    is formed pointwise on the oversampled grid and mapped to the real pair
    ``(Re G, Im G)``.  ``chop_rel`` discards coefficients at the FFT
    round-off floor (relative to the largest one).
    """
    z = u.packed_grid(oversample)
    G = nonlinearity_on_grid(z, float(a2inv), guard)
    coeffs = unpack_spectrum(sfft.fft2(G, norm="forward"), u.J, u.K)
    return FourierField(chop(coeffs, chop_rel), u.symmetry)


_MULTIPLIERS = {
    "ds2": lambda j, k: -(k * k) + 0 * j,
    "ds4": lambda j, k: k**4 + 0 * j,
    "dt2": lambda j, k: -(j * j) + 0 * k,
}


def diff_multiplier(which: str, J: int, K: int) -> np.ndarray:
    if which not in _MULTIPLIERS:
        raise ValueError(f"unknown operator {which!r}; expected one of {sorted(_MULTIPLIERS)}")
    j = np.arange(-J, J + 1, dtype=float)[:, None]
    k = np.arange(-K, K + 1, dtype=float)[None, :]
    return _MULTIPLIERS[which](j, k)


def diff_ops(u: FourierField, which: str) -> FourierField:
    """Apply ``ds2`` (d^2/ds^2), ``ds4`` (d^4/ds^4) or ``dt2`` (d^2/dt^2)."""
    return FourierField(u.coeffs * diff_multiplier(which, u.J, u.K), u.symmetry)


def symmetry_mask(cls: SymmetryClass, J: int, K: int) -> np.ndarray:
    """Boolean ``(2, 2J+1, 2K+1)`` support of the fixed-point space."""
    j = np.arange(-J, J + 1)[:, None]
    k = np.arange(-K, K + 1)[None, :]
    ones = np.ones((2 * J + 1, 2 * K + 1), bool)
    if cls.kind == "none":
        return np.stack([ones, ones])
    if cls.kind == "standing":
        on_lattice = (j % cls.j0 == 0) & (k % cls.k0 == 0)
        mt, ms = j // cls.j0, k // cls.k0
        base = on_lattice & ((mt + ms) % 2 == 0)
        t_index = mt
    else:
        base = k == cls.k0 * j
        t_index = j
    # u = R u(t + l0 pi, s): component c survives when (-1)^(c + l0 * t_index) = 1
    parity = [(cls.l0 * t_index) % 2 == 0, (1 + cls.l0 * t_index) % 2 == 0]
    return np.stack([base & parity[0], base & parity[1]])


def project_symmetry(u: FourierField, cls: SymmetryClass) -> FourierField:
    """Orthogonal projection onto the fixed-point space of ``cls``.

    The generators act diagonally or by index reflection in Fourier space
    and their averaging projectors commute, so the projector is their
    product.
    """
    c = u.coeffs
    if cls.kind == "standing":
        c = 0.5 * (c + c[:, ::-1, :])
        c = 0.5 * (c + c[:, :, ::-1])
    elif cls.kind == "traveling":
        c = 0.5 * (c + c[:, ::-1, ::-1])
    c = np.where(symmetry_mask(cls, u.J, u.K), c, 0)
    return FourierField(c, cls if cls.kind != "none" else None)
