"""Clifford algebra Cl(p, q) multivectors and gamma-matrix sets.

Basis blades are indexed by bitmask: bit ``k-1`` set means generator ``e_k``
is present, so ``0`` is the scalar blade, ``0b11`` is ``e1 e2`` and so on.
The first ``p`` generators square to +1, the remaining ``q_neg`` to -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from qspinor import kernels

MAX_GENERATORS = 8


@dataclass(frozen=True, order=True)
class Signature:
    p: int
    q_neg: int

    def __post_init__(self):
        if self.p < 0 or self.q_neg < 0:
            raise ValueError(f"signature counts must be non-negative, got ({self.p}, {self.q_neg})")
        if not 1 <= self.n <= MAX_GENERATORS:
            raise ValueError(f"need 1 <= p + q_neg <= {MAX_GENERATORS}, got {self.n}")

    @property
    def n(self) -> int:
        return self.p + self.q_neg

    @property
    def neg_mask(self) -> int:
        """Bitmask of the generators that square to -1."""
        return ((1 << self.n) - 1) & ~((1 << self.p) - 1)

    def square(self, k: int) -> int:
        """Square (+1 or -1) of generator ``e_k`` (1-based)."""
        self._check_index(k)
        return 1 if k <= self.p else -1

    def _check_index(self, k: int) -> None:
        if not 1 <= k <= self.n:
            raise IndexError(f"generator e{k} outside signature {self}")

    def __str__(self):
        return f"Cl({self.p},{self.q_neg})"


DEFAULT_SIGNATURE = Signature(0, 4)


def blade_name(mask: int) -> str:
    if mask == 0:
        return "1"
    return "*".join(f"e{k + 1}" for k in range(MAX_GENERATORS) if mask >> k & 1)


class Multivector:
    """Immutable element of Cl(p, q) stored as a dense blade-coefficient array."""

    __slots__ = ("sig", "_data")

    def __init__(self, sig: Signature, data):
        arr = np.array(data, dtype=np.complex128)
        if arr.shape != (1 << sig.n,):
            raise ValueError(f"expected {1 << sig.n} coefficients for {sig}, got shape {arr.shape}")
        arr.flags.writeable = False
        self.sig = sig
        self._data = arr

    @classmethod
    def from_dict(cls, sig: Signature, coeffs: Mapping[int, complex]) -> "Multivector":
        data = np.zeros(1 << sig.n, dtype=np.complex128)
        for mask, value in coeffs.items():
            if not 0 <= mask < len(data):
                raise ValueError(f"blade mask {mask:#b} outside {sig}")
            data[mask] += value
        return cls(sig, data)

    @classmethod
    def scalar(cls, sig: Signature, value: complex = 1.0) -> "Multivector":
        return cls.from_dict(sig, {0: value})

    @classmethod
    def basis(cls, sig: Signature, k: int) -> "Multivector":
        """The generator ``e_k`` (1-based)."""
        sig._check_index(k)
        return cls.from_dict(sig, {1 << (k - 1): 1.0})

    @classmethod
    def blade(cls, sig: Signature, mask: int, value: complex = 1.0) -> "Multivector":
        return cls.from_dict(sig, {mask: value})

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def coeffs(self) -> dict[int, complex]:
        """Non-zero coefficients keyed by blade bitmask."""
        return {int(i): complex(self._data[i]) for i in np.flatnonzero(self._data)}

    def __getitem__(self, mask: int) -> complex:
        return complex(self._data[mask]) if 0 <= mask < len(self._data) else 0j

    def is_scalar(self) -> bool:
        return not np.any(self._data[1:])

    def single_blade(self) -> int | None:
        """Mask of the only non-zero blade, or None."""
        nz = np.flatnonzero(self._data)
        return int(nz[0]) if len(nz) == 1 else None

    def grade(self, k: int) -> "Multivector":
        keep = np.array([bin(i).count("1") == k for i in range(len(self._data))])
        return Multivector(self.sig, np.where(keep, self._data, 0))

    def reverse(self) -> "Multivector":
        signs = np.array([(-1) ** (g * (g - 1) // 2) for g in _grades(self.sig.n)])
        return Multivector(self.sig, self._data * signs)

    def inverse(self) -> "Multivector":
        """Inverse for elements whose product with their reverse is a scalar (blades, versors)."""
        rev = self.reverse()
        norm = geometric_product(self, rev)
        if not norm.is_scalar() or abs(norm[0]) < 1e-300:
            raise ZeroDivisionError(f"multivector {self} has no simple inverse")
        return rev * (1.0 / norm[0])

    def to_matrix(self) -> np.ndarray:
        gens = generator_matrices(self.sig)
        dim = gens[0].shape[0]
        out = np.zeros((dim, dim), dtype=np.complex128)
        for mask, value in self.coeffs.items():
            out += value * _blade_matrix(self.sig, mask)
        return out

    def _coerce(self, other) -> "Multivector":
        if isinstance(other, Multivector):
            if other.sig != self.sig:
                raise ValueError(f"signature mismatch: {self.sig} vs {other.sig}")
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return Multivector.scalar(self.sig, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Multivector(self.sig, self._data + other._data)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Multivector(self.sig, self._data - other._data)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Multivector(self.sig, other._data - self._data)

    def __neg__(self):
        return Multivector(self.sig, -self._data)

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        if isinstance(other, (int, float, complex, np.number)):
            return Multivector(self.sig, self._data * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return Multivector(self.sig, self._data * other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return Multivector(self.sig, self._data / other)
        if isinstance(other, Multivector):
            return geometric_product(self, other.inverse())
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, Multivector):
            return self.sig == other.sig and np.array_equal(self._data, other._data)
        if isinstance(other, (int, float, complex)):
            return self.is_scalar() and self._data[0] == other
        return NotImplemented

    def __hash__(self):
        return hash((self.sig, self._data.tobytes()))

    def allclose(self, other, atol: float = 1e-12) -> bool:
        other = self._coerce(other)
        return bool(np.allclose(self._data, other._data, rtol=0, atol=atol))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._data)))

    def __repr__(self):
        return f"Multivector({self.sig}, {self})"

    def __str__(self):
        parts = []
        for mask, value in self.coeffs.items():
            coef = value.real if value.imag == 0 else value
            parts.append(f"{coef:g}" if mask == 0 else f"{coef:g}*{blade_name(mask)}")
        return " + ".join(parts) if parts else "0"


@lru_cache(maxsize=None)
def _grades(n: int) -> tuple[int, ...]:
    return tuple(bin(i).count("1") for i in range(1 << n))


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    """Bilinear, associative product with e_k e_k = +/-1 and e_j e_k = -e_k e_j."""
    if a.sig != b.sig:
        raise ValueError(f"signature mismatch: {a.sig} vs {b.sig}")
    return Multivector(a.sig, kernels.gp_dense(a.data, b.data, a.sig.neg_mask))


def generators(sig: Signature) -> list[Multivector]:
    return [Multivector.basis(sig, k) for k in range(1, sig.n + 1)]


_SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_I2 = np.eye(2, dtype=np.complex128)


@lru_cache(maxsize=None)
def _generator_matrices(sig: Signature) -> tuple[np.ndarray, ...]:
    # Jordan-Wigner: pairs (Z..Z sigma_y I..I, Z..Z sigma_x I..I) square to +1
    # and anticommute; generators squaring to -1 get a factor -i, so that in
    # Cl(0, n) the first one is [[0, -1], [1, 0]].
    pairs = (sig.n + 1) // 2
    euclid = []
    for j in range(pairs):
        for pauli in (_SY, _SX):
            mat = np.ones((1, 1), dtype=np.complex128)
            for slot in range(pairs):
                mat = np.kron(mat, _SZ if slot < j else pauli if slot == j else _I2)
            euclid.append(mat)
    out = []
    for k in range(1, sig.n + 1):
        mat = euclid[k - 1] if sig.square(k) == 1 else -1j * euclid[k - 1]
        mat = mat.copy()
        mat.flags.writeable = False
        out.append(mat)
    return tuple(out)


def generator_matrices(sig: Signature) -> list[np.ndarray]:
    """Complex matrix representation of the generators, dimension 2^ceil(n/2)."""
    return list(_generator_matrices(sig))


def _blade_matrix(sig: Signature, mask: int) -> np.ndarray:
    gens = _generator_matrices(sig)
    out = np.eye(gens[0].shape[0], dtype=np.complex128)
    for k in range(sig.n):
        if mask >> k & 1:
            out = out @ gens[k]
    return out


def generator_matrix(sig: Signature, k: int) -> np.ndarray:
    sig._check_index(k)
    return _generator_matrices(sig)[k - 1]


@dataclass(frozen=True)
class GammaSet:
    """Matrices gamma_0.. with {g_mu, g_nu} = 2 eta_{mu nu} I, checked on construction."""

    matrices: tuple[np.ndarray, ...]
    metric: tuple[int, ...]
    label: str = "custom"
    anticommutator_tol: float = field(default=0.0, repr=False, compare=False)

    def __post_init__(self):
        mats = tuple(_readonly(np.array(m, dtype=np.complex128)) for m in self.matrices)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "metric", tuple(int(s) for s in self.metric))
        if not mats:
            raise ValueError("a gamma set needs at least one matrix")
        if len(mats) != len(self.metric):
            raise ValueError("metric length must match number of gamma matrices")
        dim = mats[0].shape
        if len(dim) != 2 or dim[0] != dim[1] or any(m.shape != dim for m in mats):
            raise ValueError("gamma matrices must be square and of equal size")
        defect = anticommutator_defect(mats, self.metric)
        if defect > self.anticommutator_tol:
            raise ValueError(f"gamma set {self.label!r} violates the anticommutator relation (defect {defect:.3g})")

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def __getitem__(self, mu: int) -> np.ndarray:
        return self.matrices[mu]

    def __len__(self):
        return len(self.matrices)

    def upper(self, mu: int) -> np.ndarray:
        """gamma^mu = eta^{mu mu} gamma_mu for a diagonal metric."""
        return self.metric[mu] * self.matrices[mu]

    def __eq__(self, other):
        if not isinstance(other, GammaSet):
            return NotImplemented
        return (
            self.label == other.label
            and self.metric == other.metric
            and all(np.array_equal(a, b) for a, b in zip(self.matrices, other.matrices))
        )

    def __hash__(self):
        return hash((self.label, self.metric, tuple(m.tobytes() for m in self.matrices)))

    @classmethod
    def trivial(cls) -> "GammaSet":
        """The 1x1 set {gamma_0 = 1}, useful for scalar reductions."""
        return cls((np.ones((1, 1)),), (1,), label="trivial")


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def anticommutator_defect(matrices: Sequence[np.ndarray], metric: Sequence[int]) -> float:
    """max |{g_mu, g_nu} - 2 eta_{mu nu} I| over all index pairs."""
    eye = np.eye(matrices[0].shape[0])
    worst = 0.0
    for mu, a in enumerate(matrices):
        for nu, b in enumerate(matrices):
            target = 2 * metric[mu] * eye if mu == nu else 0
            worst = max(worst, float(np.max(np.abs(a @ b + b @ a - target))))
    return worst


def gamma_default() -> GammaSet:
    """Classical Dirac representation, metric (+, -, -, -)."""
    zero = np.zeros((2, 2))
    g0 = np.block([[_I2, zero], [zero, -_I2]])
    spatial = [np.block([[zero, s], [-s, zero]]) for s in (_SX, _SY, _SZ)]
    return GammaSet((g0, *spatial), (1, -1, -1, -1), label="dirac")


def gamma_weyl() -> GammaSet:
    """Chiral (Weyl) representation, metric (+, -, -, -)."""
    zero = np.zeros((2, 2))
    g0 = np.block([[zero, _I2], [_I2, zero]])
    spatial = [np.block([[zero, s], [-s, zero]]) for s in (_SX, _SY, _SZ)]
    return GammaSet((g0, *spatial), (1, -1, -1, -1), label="weyl")


GAMMA_REPRESENTATIONS = {"dirac": gamma_default, "weyl": gamma_weyl, "trivial": GammaSet.trivial}


def gamma_set(label: str) -> GammaSet:
    try:
        return GAMMA_REPRESENTATIONS[label]()
    except KeyError:
        raise ValueError(f"unknown gamma representation {label!r}; known: {sorted(GAMMA_REPRESENTATIONS)}") from None


def spectral_radius(m) -> float:
    """Largest eigenvalue magnitude of a square matrix."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"spectral radius needs a square matrix, got shape {m.shape}")
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(m))))
