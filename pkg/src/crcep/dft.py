"""Harmonic analysis on the cyclic group Z_2N and the circulant algebra.

Sequences on Z_2N are stored in *symmetric layout*: position ``p`` of an
array of length ``2N`` holds the entry with index ``k = p - N + 1``, so that
``k`` runs over ``-N+1, ..., N``. The FFT kernels use the usual ``0..2N-1``
layout; :func:`to_fft_order` and :func:`from_fft_order` implement the
bijection ``k -> k mod 2N``.

Conventions
-----------
* nodes ``zeta_j = exp(1j * j * pi / N)`` for ``j = -N+1..N``;
* ``dft(g)(zeta_j) = sum_k g_k zeta_j**(-k)``;
* a (block) circulant with coefficients ``M_k`` acts as
  ``(M g)_t = sum_k M_k g_{t-k}``, its symbol is ``sum_k M_k zeta**(-k)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import BandViolationError, DimensionError, SingularSymbolError

__all__ = [
    "DiscreteCircle",
    "Spectrum",
    "BandedCirculant",
    "to_fft_order",
    "from_fft_order",
    "dft",
    "idft",
    "polynomial_on_circle",
    "symbol_of",
    "from_symbol",
    "circ_solve",
    "periodic_position",
]


@dataclass(frozen=True)
class DiscreteCircle:
    """The 2N roots of unity ``zeta_j = exp(i j pi / N)``, ``j = -N+1..N``."""

    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DimensionError(f"N must be a positive integer, got {self.N!r}")

    @property
    def size(self) -> int:
        return 2 * self.N

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.N + 1, self.N + 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.exp(1j * np.pi * self.indices / self.N)

    @property
    def angles(self) -> np.ndarray:
        return np.pi * self.indices / self.N


CircleLike = Union[DiscreteCircle, int]


def _as_circle(circle: CircleLike) -> DiscreteCircle:
    if isinstance(circle, DiscreteCircle):
        return circle
    return DiscreteCircle(int(circle))


def periodic_position(k, N: int):
    """Array position of index ``k`` (any integer, taken mod 2N) in symmetric layout."""
    return (np.asarray(k) + N - 1) % (2 * N)


def to_fft_order(x, N: int) -> np.ndarray:
    """Reorder axis 0 from symmetric layout to FFT layout."""
    return np.roll(np.asarray(x), -(N - 1), axis=0)


def from_fft_order(x, N: int) -> np.ndarray:
    """Reorder axis 0 from FFT layout to symmetric layout."""
    return np.roll(np.asarray(x), N - 1, axis=0)


@dataclass(frozen=True)
class Spectrum:
    """Values of a function on the discrete circle, in symmetric layout.

    ``values`` has shape ``(2N,)`` for scalar spectra, ``(2N, m)`` for vector
    transforms and ``(2N, m, m)`` for matrix-valued symbols.
    """

    values: np.ndarray
    N: int

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape[0] != 2 * self.N:
            raise DimensionError(
                f"spectrum has {v.shape[0]} values, expected 2N = {2 * self.N}"
            )
        object.__setattr__(self, "values", v)

    @property
    def circle(self) -> DiscreteCircle:
        return DiscreteCircle(self.N)

    def at(self, j: int):
        """Value at node ``zeta_j``."""
        return self.values[periodic_position(j, self.N)]

    def is_hermitian_symmetric(self, atol: float = 1e-13) -> bool:
        """``value(-j) == value(j)^*`` for all j (real time sequences)."""
        v = self.values
        flipped = v[periodic_position(-self.circle.indices, self.N)]
        if v.ndim == 3:
            flipped = np.swapaxes(flipped, -1, -2)
        return bool(np.allclose(flipped, np.conj(v), rtol=0.0, atol=atol))


def _check_length(x: np.ndarray, N: int):
    if x.shape[0] != 2 * N:
        raise DimensionError(f"sequence has length {x.shape[0]}, expected 2N = {2 * N}")


def dft(seq, circle: CircleLike) -> Spectrum:
    """Discrete Fourier transform of a sequence indexed ``-N+1..N``.

    Parameters
    ----------
    seq : array_like, shape (2N, ...)
        Scalars, m-vectors or m x m blocks, in symmetric layout.
    circle : DiscreteCircle or int
        The discrete circle (or its half-period N).

    Returns
    -------
    Spectrum
        ``value(zeta_j) = sum_k g_k zeta_j**(-k)``.
    """
    circle = _as_circle(circle)
    x = np.asarray(seq)
    _check_length(x, circle.N)
    values = from_fft_order(np.fft.fft(to_fft_order(x, circle.N), axis=0), circle.N)
    return Spectrum(values, circle.N)


def idft(spec, circle: CircleLike | None = None, real: bool | None = None) -> np.ndarray:
    """Inverse DFT, ``g_k = (1/2N) sum_j zeta_j**k value(zeta_j)``.

    ``real=None`` returns a real array when the spectrum is Hermitian
    symmetric (to 1e-10 relative), complex otherwise.
    """
    if isinstance(spec, Spectrum):
        N, values = spec.N, spec.values
    else:
        if circle is None:
            raise DimensionError("idft of a raw array needs the circle (or N)")
        N = _as_circle(circle).N
        values = np.asarray(spec)
        _check_length(values, N)
    g = from_fft_order(np.fft.ifft(to_fft_order(values, N), axis=0), N)
    if real is None:
        scale = max(np.abs(g).max(initial=0.0), 1.0)
        real = np.abs(g.imag).max(initial=0.0) <= 1e-10 * scale
    return g.real.copy() if real else g


def polynomial_on_circle(coeffs, circle: CircleLike) -> np.ndarray:
    """Evaluate ``sum_{k=0}^n c_k zeta**(-k)`` at every node.

    ``coeffs`` has shape ``(n+1,)`` or ``(n+1, m, m)``; the result has shape
    ``(2N,)`` or ``(2N, m, m)``.
    """
    circle = _as_circle(circle)
    c = np.asarray(coeffs)
    powers = circle.nodes[:, None] ** (-np.arange(c.shape[0]))[None, :]
    return np.tensordot(powers, c, axes=(1, 0))


@dataclass(frozen=True)
class BandedCirculant:
    """Block circulant ``sum_k S^{-k} (x) M_k`` with ``M_k = 0`` for ``|k| > bandwidth``.

    ``blocks[i]`` holds ``M_{i - bandwidth}``; all blocks are ``m x m``.
    Use the :meth:`lower`, :meth:`upper` and :meth:`symmetric` constructors.
    """

    blocks: np.ndarray
    N: int
    orientation: str = "general"

    def __post_init__(self):
        b = np.asarray(self.blocks)
        if b.ndim == 1:
            b = b[:, None, None]
        if b.ndim != 3 or b.shape[1] != b.shape[2] or b.shape[0] % 2 != 1:
            raise DimensionError(f"blocks must have shape (2n+1, m, m), got {b.shape}")
        if (b.shape[0] - 1) // 2 >= self.N:
            raise DimensionError(
                f"bandwidth {(b.shape[0] - 1) // 2} requires N > bandwidth, got N = {self.N}"
            )
        if self.orientation not in ("lower", "upper", "symmetric", "general"):
            raise ValueError(f"unknown orientation {self.orientation!r}")
        object.__setattr__(self, "blocks", b)

    @classmethod
    def _one_sided(cls, coeffs, N, sign, orientation):
        c = np.asarray(coeffs)
        if c.ndim == 1:
            c = c[:, None, None]
        n = c.shape[0] - 1
        blocks = np.zeros((2 * n + 1,) + c.shape[1:], dtype=c.dtype)
        for k in range(n + 1):
            blocks[n + sign * k] = c[k]
        return cls(blocks, N, orientation)

    @classmethod
    def lower(cls, coeffs, N: int) -> "BandedCirculant":
        """``Circ{M_0, M_1, ..., M_n, 0, ..., 0}``."""
        return cls._one_sided(coeffs, N, +1, "lower")

    @classmethod
    def upper(cls, coeffs, N: int) -> "BandedCirculant":
        """Coefficients ``M_0, M_{-1}, ..., M_{-n}`` given in that order."""
        return cls._one_sided(coeffs, N, -1, "upper")

    @classmethod
    def symmetric(cls, coeffs, N: int) -> "BandedCirculant":
        """``M_0..M_n`` with ``M_{-k} = M_k^T``."""
        c = np.asarray(coeffs)
        if c.ndim == 1:
            c = c[:, None, None]
        n = c.shape[0] - 1
        blocks = np.empty((2 * n + 1,) + c.shape[1:], dtype=c.dtype)
        for k in range(n + 1):
            blocks[n + k] = c[k]
            blocks[n - k] = np.swapaxes(c[k], -1, -2).conj()
        return cls(blocks, N, "symmetric")

    @property
    def bandwidth(self) -> int:
        return (self.blocks.shape[0] - 1) // 2

    @property
    def m(self) -> int:
        return self.blocks.shape[1]

    def coefficient(self, k: int) -> np.ndarray:
        if abs(k) > self.bandwidth:
            return np.zeros((self.m, self.m), dtype=self.blocks.dtype)
        return self.blocks[k + self.bandwidth]

    def sequence(self) -> np.ndarray:
        """Coefficients as a length-2N block sequence in symmetric layout."""
        seq = np.zeros((2 * self.N, self.m, self.m), dtype=self.blocks.dtype)
        n = self.bandwidth
        for k in range(-n, n + 1):
            seq[periodic_position(k, self.N)] += self.blocks[k + n]
        return seq

    def symbol(self) -> Spectrum:
        return symbol_of(self)

    def transpose(self) -> "BandedCirculant":
        flipped = np.swapaxes(self.blocks[::-1], -1, -2).conj()
        orient = {"lower": "upper", "upper": "lower"}.get(self.orientation, self.orientation)
        return BandedCirculant(flipped, self.N, orient)

    @property
    def T(self) -> "BandedCirculant":
        return self.transpose()

    def matvec(self, x) -> np.ndarray:
        """Apply the circulant to a block vector via the spectral domain."""
        x = np.asarray(x)
        xb, shape = _as_block_vector(x, self.N, self.m)
        spec = np.einsum("jab,jb->ja", symbol_of(self).values, dft(xb, self.N).values)
        y = idft(spec, self.N, real=np.isrealobj(x) and np.isrealobj(self.blocks))
        return y.reshape(shape)

    def __matmul__(self, other):
        if isinstance(other, BandedCirculant):
            if other.N != self.N:
                raise DimensionError("circulants defined on different circles")
            product = np.einsum("jab,jbc->jac", symbol_of(self).values, symbol_of(other).values)
            return from_symbol(Spectrum(product, self.N), self.bandwidth + other.bandwidth)
        return self.matvec(other)

    def __add__(self, other: "BandedCirculant") -> "BandedCirculant":
        n = max(self.bandwidth, other.bandwidth)
        blocks = np.array([self.coefficient(k) + other.coefficient(k) for k in range(-n, n + 1)])
        orient = self.orientation if self.orientation == other.orientation else "general"
        return BandedCirculant(blocks, self.N, orient)

    def to_dense(self) -> np.ndarray:
        """Assemble the full ``2mN x 2mN`` matrix (test oracles, small N only)."""
        N, m = self.N, self.m
        seq = self.sequence()
        t = np.arange(2 * N)
        diff = t[:, None] - t[None, :]
        blocks = seq[periodic_position(diff, N)]
        return blocks.transpose(0, 2, 1, 3).reshape(2 * N * m, 2 * N * m)


def _as_block_vector(x: np.ndarray, N: int, m: int):
    if x.shape[0] == 2 * N and (x.ndim == 2 and x.shape[1] == m):
        return x, x.shape
    if x.ndim == 1 and x.shape[0] == 2 * N and m == 1:
        return x[:, None], x.shape
    if x.ndim == 1 and x.shape[0] == 2 * N * m:
        return x.reshape(2 * N, m), x.shape
    raise DimensionError(f"vector of shape {x.shape} does not match 2N = {2 * N}, m = {m}")


def symbol_of(circ: BandedCirculant) -> Spectrum:
    """Symbol ``M(zeta) = sum_k M_k zeta**(-k)`` at every node, shape ``(2N, m, m)``."""
    return dft(circ.sequence(), circ.N)


def from_symbol(spec: Spectrum, bandwidth: int, orientation: str = "general",
                rtol: float = 1e-9) -> BandedCirculant:
    """Recover a banded circulant from its symbol.

    Coefficients with ``|k| > bandwidth`` (or ``k < 0`` for ``orientation='lower'``)
    must vanish below ``rtol * max|M_k|``.

    Raises
    ------
    BandViolationError
        If an out-of-band coefficient exceeds the tolerance.
    """
    values = np.asarray(spec.values)
    if values.ndim == 1:
        values = values[:, None, None]
    N = spec.N
    g = idft(values, N)
    k = DiscreteCircle(N).indices
    if orientation == "lower":
        band = (k >= 0) & (k <= bandwidth)
    elif orientation == "upper":
        band = (k <= 0) & (k >= -bandwidth)
    else:
        band = np.abs(k) <= bandwidth
    scale = np.abs(g).max(initial=0.0)
    leak = np.abs(g[~band]).max(initial=0.0)
    if leak > rtol * scale:
        raise BandViolationError(
            f"symbol is not banded to bandwidth {bandwidth}: max leaked coefficient {leak:.3e}",
            max_leak=float(leak),
        )
    blocks = np.array([g[periodic_position(i, N)] for i in range(-bandwidth, bandwidth + 1)])
    if orientation == "symmetric":
        blocks = 0.5 * (blocks + np.swapaxes(blocks[::-1], -1, -2).conj())
    elif orientation == "lower":
        blocks[:bandwidth] = 0.0
    elif orientation == "upper":
        blocks[bandwidth + 1:] = 0.0
    return BandedCirculant(blocks, N, orientation)


def circ_solve(circ: BandedCirculant, rhs, rcond: float = 1e-12) -> np.ndarray:
    """Solve ``circ @ x = rhs`` by node-wise solves in the spectral domain.

    Raises
    ------
    SingularSymbolError
        If the symbol is numerically singular at some node; ``err.node`` is
        the node index ``j``.
    """
    rhs = np.asarray(rhs)
    xb, shape = _as_block_vector(rhs, circ.N, circ.m)
    sym = symbol_of(circ).values
    sv = np.linalg.svd(sym, compute_uv=False)
    scale = sv.max(initial=0.0)
    bad = np.flatnonzero(sv[:, -1] <= rcond * max(scale, np.finfo(float).tiny))
    if bad.size:
        j = int(DiscreteCircle(circ.N).indices[bad[0]])
        raise SingularSymbolError(f"circulant symbol is singular at node j = {j}", node=j)
    xhat = np.linalg.solve(sym, dft(xb, circ.N).values[..., None])[..., 0]
    x = idft(xhat, circ.N, real=np.isrealobj(rhs) and np.isrealobj(circ.blocks))
    return x.reshape(shape)
