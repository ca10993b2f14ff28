"""Algebraic space-time codes: QAM constellations, the 2x2 Golden code and
the 4x4 TAST code, Galois conjugation, coded (relay-side) constellations and
minimum-determinant computation.

Codewords follow the cyclic layout

    row i, col j  =  twist * sigma^i( alpha * x_K ),   K = (j - i) mod 2N,

where the 2N coded elements x_K = sum_m s[K*d+m] * theta^m carry d = 2N
information symbols each, `twist` is gamma (Golden) or phi (TAST) below the
diagonal, and alpha is the Golden shaping unit (absent for TAST).

Encoders return the raw codeword; the average entry energy equals
1 / entry_scale**2 for unit-energy symbols, so transmit chains multiply by
`CodeSpec.entry_scale` to put one unit of energy on each channel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QamConstellation",
    "CodeSpec",
    "CodedElement",
    "Codeword",
    "CodedConstellation",
    "MinDetResult",
    "EnumerationBudgetError",
    "make_qam",
    "golden_code",
    "tast4_code",
    "golden_encode",
    "tast4_encode",
    "galois_conjugate",
    "coded_constellation",
    "min_det",
]

_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class QamConstellation:
    """Square M-QAM with odd-integer raw coordinates, unit average energy."""

    order: int
    raw_points: np.ndarray        # Gaussian integers, row-major by (Re, Im)
    points: np.ndarray            # raw_points * scale
    scale: float                  # normalization factor

    def __len__(self) -> int:
        return self.order

    @property
    def pam_side(self) -> int:
        """Z of the underlying Z-PAM per real dimension (Z = sqrt(M))."""
        return int(round(math.isqrt(self.order)))

    @property
    def pam_levels(self) -> np.ndarray:
        """The odd levels {-(Z-1), ..., Z-1} of one real dimension."""
        z = self.pam_side
        return np.arange(-(z - 1), z, 2)


def make_qam(order: int) -> QamConstellation:
    """Build a normalized square QAM constellation (order in {4, 16, 64})."""
    if order not in (4, 16, 64):
        raise ValueError(f"unsupported constellation order: {order}")
    side = math.isqrt(order)
    levels = np.arange(-(side - 1), side, 2)
    re, im = np.meshgrid(levels, levels, indexing="ij")  # row-major by (Re, Im)
    raw = (re + 1j * im).reshape(-1)
    scale = 1.0 / math.sqrt(float(np.mean(np.abs(raw) ** 2)))
    raw.setflags(write=False)
    points = raw * scale
    points.setflags(write=False)
    return QamConstellation(order=order, raw_points=raw, points=points, scale=scale)


@dataclass(frozen=True)
class CodeSpec:
    """Static description of one algebraic code instance."""

    name: str
    n_relays: int
    theta: complex
    gamma: complex                # layer-separating unit (gamma or phi)
    alpha: complex | None         # Golden shaping unit, None for TAST
    sigma_desc: str
    entry_scale: float            # global scalar giving unit mean entry energy

    @property
    def degree(self) -> int:
        """Field degree d over Q(i); equals 2N for both code families."""
        return 2 * self.n_relays

    @property
    def size(self) -> int:
        """Codeword matrix side 2N."""
        return 2 * self.n_relays

    def sigma_theta(self, k: int) -> complex:
        """Image of theta under sigma^k."""
        k = self._reduce(k)
        if self.name == "golden":
            return self.theta if k == 0 else (1 - _SQRT5) / 2
        return (1j ** k) * self.theta

    def sigma_alpha(self, k: int) -> complex:
        """Image of alpha under sigma^k (1 when the code has no alpha)."""
        if self.alpha is None:
            return 1.0 + 0.0j
        k = self._reduce(k)
        st = self.sigma_theta(k)
        return 1 + 1j - 1j * st

    def conj_basis(self, k: int) -> np.ndarray:
        """Powers sigma^k(theta)^m for m = 0..d-1."""
        st = self.sigma_theta(k)
        return st ** np.arange(self.degree)

    def _reduce(self, k: int) -> int:
        if k < 0:
            raise ValueError(f"conjugation index out of range: {k}")
        return k % self.degree

    def coeff_tensor(self) -> np.ndarray:
        """Complex tensor C of shape (2N, 2N, 4N^2) with entry (i, j) equal
        to C[i, j, :] @ s for the information-symbol vector s."""
        n = self.size
        d = self.degree
        out = np.zeros((n, n, n * d), dtype=complex)
        for i in range(n):
            basis = self.sigma_alpha(i) * self.conj_basis(i)
            for j in range(n):
                k0 = (j - i) % n
                twist = self.gamma if j < i else 1.0
                out[i, j, k0 * d:(k0 + 1) * d] = twist * basis
        out.setflags(write=False)
        return out


def golden_code() -> CodeSpec:
    """The 2x2 Golden code over Q(i, (1+sqrt(5))/2)."""
    theta = (1 + _SQRT5) / 2
    return CodeSpec(
        name="golden",
        n_relays=1,
        theta=complex(theta),
        gamma=1j,
        alpha=1 + 1j - 1j * theta,
        sigma_desc="(1+sqrt5)/2 -> (1-sqrt5)/2",
        entry_scale=5.0 ** -0.5,
    )


def tast4_code() -> CodeSpec:
    """The 4x4 TAST code over the cyclotomic field Q(i, e^{i pi/8})."""
    theta = np.exp(1j * math.pi / 8)
    return CodeSpec(
        name="tast4",
        n_relays=2,
        theta=theta,
        gamma=theta,              # phi = e^{i pi/8}
        alpha=None,
        sigma_desc="theta -> i*theta",
        entry_scale=0.5,
    )


_GOLDEN = golden_code()
_TAST4 = tast4_code()
_COEFFS: dict[str, np.ndarray] = {
    "golden": _GOLDEN.coeff_tensor(),
    "tast4": _TAST4.coeff_tensor(),
}


def coeff_tensor(spec: CodeSpec) -> np.ndarray:
    return _COEFFS.get(spec.name) if spec.name in _COEFFS else spec.coeff_tensor()


@dataclass(frozen=True)
class CodedElement:
    """Element x = sum_m coeffs[m] * theta^m of the ring of integers, with
    Gaussian-integer coefficients (the embedded information symbols)."""

    coeffs: tuple[complex, ...]
    code: CodeSpec

    def __post_init__(self):
        if len(self.coeffs) != self.code.degree:
            raise ValueError(
                f"expected {self.code.degree} coefficients, got {len(self.coeffs)}"
            )

    @property
    def basis_powers(self) -> np.ndarray:
        return self.code.conj_basis(0)

    def value(self) -> complex:
        return complex(np.dot(self.coeffs, self.basis_powers))


def galois_conjugate(x: CodedElement, k: int) -> complex:
    """Value of sigma^k(x); k is reduced modulo the generator order."""
    return complex(np.dot(x.coeffs, x.code.conj_basis(k)))


@dataclass(frozen=True)
class Codeword:
    """A 2N x 2N space-time codeword and the symbols that generated it."""

    matrix: np.ndarray
    source_symbols: np.ndarray
    code: CodeSpec

    @property
    def lines(self) -> tuple[np.ndarray, ...]:
        return tuple(self.matrix[i] for i in range(self.matrix.shape[0]))


def _encode(spec: CodeSpec, symbols) -> Codeword:
    s = np.asarray(symbols, dtype=complex)
    want = spec.size * spec.degree
    if s.shape != (want,):
        raise ValueError(f"{spec.name} expects {want} symbols, got {s.shape}")
    x = np.einsum("ijk,k->ij", coeff_tensor(spec), s)
    return Codeword(matrix=x, source_symbols=s, code=spec)


def golden_encode(symbols) -> Codeword:
    """Encode 4 information symbols into the 2x2 Golden codeword."""
    return _encode(_GOLDEN, symbols)


def tast4_encode(symbols) -> Codeword:
    """Encode 16 information symbols into the 4x4 TAST codeword."""
    return _encode(_TAST4, symbols)


@dataclass(frozen=True)
class CodedConstellation:
    """All M^d values of sigma^conj_index(x) with their generating symbols.

    `values` are in normalized (unit-energy-symbol) units; `coeffs[n]` holds
    the raw Gaussian-integer coordinates of entry n. Entry order is the
    row-major product of the QAM point order, so argmin tie-breaks are
    reproducible.
    """

    values: np.ndarray            # complex, length M^d
    coeffs: np.ndarray            # complex ints, shape (M^d, d)
    conj_index: int
    code: CodeSpec
    qam: QamConstellation

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int) -> tuple[complex, tuple[complex, ...]]:
        return complex(self.values[n]), tuple(self.coeffs[n])

    def element(self, n: int) -> CodedElement:
        return CodedElement(coeffs=tuple(self.coeffs[n]), code=self.code)


def coded_constellation(
    qam: QamConstellation, spec: CodeSpec, conj_index: int = 0
) -> CodedConstellation:
    """Enumerate the relay-side constellation C' of coded elements."""
    d = spec.degree
    if conj_index < 0 or conj_index >= d:
        raise ValueError(f"conjugation index out of range: {conj_index}")
    grids = np.meshgrid(*([qam.raw_points] * d), indexing="ij")
    coeffs = np.stack([g.reshape(-1) for g in grids], axis=1)
    values = coeffs @ spec.conj_basis(conj_index) * qam.scale
    coeffs.setflags(write=False)
    values.setflags(write=False)
    return CodedConstellation(
        values=values, coeffs=coeffs, conj_index=conj_index, code=spec, qam=qam
    )


class EnumerationBudgetError(RuntimeError):
    """Raised when min_det cannot enumerate the difference lattice; carries
    the sampled partial minimum."""

    def __init__(self, message: str, sampled_min: float):
        super().__init__(message)
        self.sampled_min = sampled_min


@dataclass(frozen=True)
class MinDetResult:
    value: float
    exhaustive: bool
    n_differences: int


def _diff_values(qam: QamConstellation) -> np.ndarray:
    """Distinct differences of raw QAM points (even Gaussian integers)."""
    z = qam.pam_side
    levels = np.arange(-2 * (z - 1), 2 * z - 1, 2)
    re, im = np.meshgrid(levels, levels, indexing="ij")
    return (re + 1j * im).reshape(-1)


def _batched_min_absdet(spec: CodeSpec, diffs: np.ndarray) -> float:
    """Min |det(encode(delta))| over rows of `diffs`, skipping the zero row."""
    tensor = coeff_tensor(spec)
    best = math.inf
    chunk = 200_000
    for lo in range(0, diffs.shape[0], chunk):
        block = diffs[lo:lo + chunk]
        mats = np.einsum("ijk,nk->nij", tensor, block)
        dets = np.abs(np.linalg.det(mats))
        nz = block.any(axis=1)
        if nz.any():
            m = dets[nz].min()
            best = min(best, float(m))
    return best


def min_det(
    spec: CodeSpec,
    qam: QamConstellation,
    rng: np.random.Generator | None = None,
    sample_size: int = 1_000_000,
    budget: int = 8_000_000,
) -> MinDetResult:
    """Minimum |det(X - X')| over distinct codewords, on the raw integer
    symbol lattice (scale-free, so the NVD property is comparable across M).

    By linearity the search runs over nonzero symbol differences. The Golden
    code is enumerated exhaustively up to `budget` differences; the TAST
    difference lattice is far too large and is sampled (`sample_size` random
    differences), which only supports a qualitative statement.
    """
    n_sym = spec.size * spec.degree
    per_coord = len(_diff_values(qam))
    total = per_coord ** n_sym
    if total <= budget:
        d1 = _diff_values(qam)
        grids = np.meshgrid(*([d1] * n_sym), indexing="ij")
        diffs = np.stack([g.reshape(-1) for g in grids], axis=1)
        value = _batched_min_absdet(spec, diffs)
        return MinDetResult(value=value, exhaustive=True, n_differences=total - 1)
    rng = rng if rng is not None else np.random.default_rng(0)
    a = rng.integers(0, qam.order, size=(sample_size, n_sym))
    b = rng.integers(0, qam.order, size=(sample_size, n_sym))
    diffs = qam.raw_points[a] - qam.raw_points[b]
    value = _batched_min_absdet(spec, diffs)
    if spec.name == "tast4":
        return MinDetResult(value=value, exhaustive=False, n_differences=sample_size)
    raise EnumerationBudgetError(
        f"enumeration budget exceeded ({total} differences > {budget}); "
        f"sampled minimum {value:.6g}",
        sampled_min=value,
    )
