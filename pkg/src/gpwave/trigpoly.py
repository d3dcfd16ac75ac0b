"""Sparse trigonometric polynomials on integer 3-vector frequencies.

A polynomial is a finite map q -> c_q with q in Z^3, representing
f(x) = sum_q c_q exp(i<q, x>) on the 2*pi-periodic cell. This is the data
type for the potential, for every iterate of the potential map, and for
periodic parts of the solutions. The norm used throughout is the l1 norm
of the coefficients,

    ||f||_* = sum_q |c_q|,

which is submultiplicative under pointwise products (coefficient
convolution).

Storage is canonical: frequencies sorted lexicographically, no coefficient
stored with modulus exactly zero. Instances are immutable; every operation
returns a new polynomial.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError

IntVec = tuple[int, int, int]

# Half-width of the packed-key coordinate box. Packing frequencies into a
# single int64 gives lexicographic order for free and makes grouping fast.
_PACK_BOUND = 2 ** 20


def _pack(freqs: np.ndarray) -> np.ndarray:
    f = freqs.astype(np.int64)
    if f.size and np.abs(f).max() >= _PACK_BOUND:
        raise ConfigError("frequency components exceed the packing bound")
    base = np.int64(2 * _PACK_BOUND + 1)
    off = np.int64(_PACK_BOUND)
    return ((f[:, 0] + off) * base + (f[:, 1] + off)) * base + (f[:, 2] + off)


def _unpack(keys: np.ndarray) -> np.ndarray:
    base = np.int64(2 * _PACK_BOUND + 1)
    off = np.int64(_PACK_BOUND)
    q2 = keys % base - off
    rest = keys // base
    q1 = rest % base - off
    q0 = rest // base - off
    return np.stack([q0, q1, q2], axis=1)


def _group(freqs: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum values sharing a frequency; output sorted lexicographically."""
    keys = _pack(freqs)
    uniq, inv = np.unique(keys, return_inverse=True)
    acc = np.zeros(len(uniq), dtype=np.complex128)
    np.add.at(acc, inv, vals.astype(np.complex128))
    return _unpack(uniq), acc


class TrigPolynomial:
    """Immutable sparse trigonometric polynomial."""

    __slots__ = ("_freqs", "_coeffs", "_keys")

    def __init__(self, freqs: np.ndarray, coeffs: np.ndarray, *, _canonical: bool = False):
        freqs = np.asarray(freqs, dtype=np.int64).reshape(-1, 3)
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if len(freqs) != len(coeffs):
            raise ConfigError("frequency/coefficient length mismatch")
        if not _canonical:
            freqs, coeffs = _group(freqs, coeffs)
        keep = coeffs != 0
        self._freqs = freqs[keep]
        self._coeffs = coeffs[keep]
        self._keys = _pack(self._freqs)
        self._freqs.setflags(write=False)
        self._coeffs.setflags(write=False)
        self._keys.setflags(write=False)

    # ---------------------------------------------------------------- basics

    @classmethod
    def zero(cls) -> "TrigPolynomial":
        return cls(np.zeros((0, 3), dtype=np.int64), np.zeros(0))

    @classmethod
    def from_dict(cls, data: Mapping[IntVec, complex]) -> "TrigPolynomial":
        if not data:
            return cls.zero()
        freqs = np.array(list(data.keys()), dtype=np.int64)
        coeffs = np.array(list(data.values()), dtype=np.complex128)
        return cls(freqs, coeffs)

    @classmethod
    def constant(cls, value: complex) -> "TrigPolynomial":
        return cls.from_dict({(0, 0, 0): value})

    @property
    def freqs(self) -> np.ndarray:
        return self._freqs

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    def __len__(self) -> int:
        return len(self._coeffs)

    @property
    def support_radius(self) -> float:
        """Largest Euclidean frequency norm over the support (0 if empty)."""
        if not len(self):
            return 0.0
        return float(np.sqrt((self._freqs.astype(float) ** 2).sum(axis=1).max()))

    def get(self, q: IntVec) -> complex:
        key = _pack(np.array([q], dtype=np.int64))[0]
        pos = np.searchsorted(self._keys, key)
        if pos < len(self._keys) and self._keys[pos] == key:
            return complex(self._coeffs[pos])
        return 0.0

    def as_dict(self) -> dict[IntVec, complex]:
        return {tuple(int(x) for x in q): complex(c)
                for q, c in zip(self._freqs, self._coeffs)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrigPolynomial):
            return NotImplemented
        return (len(self) == len(other)
                and np.array_equal(self._freqs, other._freqs)
                and np.array_equal(self._coeffs, other._coeffs))

    def __repr__(self) -> str:
        return f"TrigPolynomial({len(self)} terms, radius {self.support_radius:g})"

    def __getstate__(self):
        return self._freqs.copy(), self._coeffs.copy()

    def __setstate__(self, state):
        freqs, coeffs = state
        self._freqs = freqs
        self._coeffs = coeffs
        self._keys = _pack(freqs)

    # ----------------------------------------------------------------- flags

    def is_mean_free(self) -> bool:
        return self.get((0, 0, 0)) == 0.0

    def is_real_valued(self, tol: float = 0.0) -> bool:
        """True when c(-q) == conj(c(q)) for every stored q (within tol)."""
        refl = self.conjugate_reflect()
        diff = self - refl
        if not len(diff):
            return True
        return float(np.abs(diff._coeffs).max()) <= tol

    # ------------------------------------------------------------ arithmetic

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        if not len(other):
            return self
        if not len(self):
            return other
        freqs = np.concatenate([self._freqs, other._freqs])
        coeffs = np.concatenate([self._coeffs, other._coeffs])
        return TrigPolynomial(freqs, coeffs)

    def __sub__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        return self + other.scale(-1.0)

    def scale(self, factor: complex) -> "TrigPolynomial":
        return TrigPolynomial(self._freqs, self._coeffs * factor, _canonical=True)

    def conjugate_reflect(self) -> "TrigPolynomial":
        """Coefficients of the complex conjugate: q -> conj(c(-q))."""
        return TrigPolynomial(-self._freqs, np.conj(self._coeffs))

    # ------------------------------------------------------------- operations

    def star_norm(self) -> float:
        """l1 norm of the coefficients, summed with exact rounding."""
        if not len(self):
            return 0.0
        return math.fsum(np.abs(self._coeffs).tolist())

    def convolve(self, other: "TrigPolynomial") -> "TrigPolynomial":
        """Coefficient sequence of the pointwise product, (fg)_q = sum_p f_p g_{q-p}."""
        if not len(self) or not len(other):
            return TrigPolynomial.zero()
        freqs = (self._freqs[:, None, :] + other._freqs[None, :, :]).reshape(-1, 3)
        vals = (self._coeffs[:, None] * other._coeffs[None, :]).reshape(-1)
        return TrigPolynomial(freqs, vals)

    def remove_mean(self) -> "TrigPolynomial":
        """Delete the zero-frequency coefficient; all others bit-identical."""
        keep = self._keys != _pack(np.zeros((1, 3), dtype=np.int64))[0]
        if keep.all():
            return self
        return TrigPolynomial(self._freqs[keep], self._coeffs[keep], _canonical=True)

    def mod_squared(self) -> "TrigPolynomial":
        """Coefficients of |f|^2, canonicalized so c(-q) == conj(c(q)) bitwise."""
        raw = self.convolve(self.conjugate_reflect())
        if not len(raw):
            return raw
        freqs = raw._freqs
        coeffs = raw._coeffs.copy()
        keys = raw._keys
        neg_keys = _pack(-freqs)
        pos = np.searchsorted(keys, neg_keys)
        # every -q is present in an exact-arithmetic |f|^2; guard anyway
        has_pair = (pos < len(keys)) & (keys[np.minimum(pos, len(keys) - 1)] == neg_keys)
        zero_key = _pack(np.zeros((1, 3), dtype=np.int64))[0]
        for i in np.nonzero(has_pair)[0]:
            j = pos[i]
            if keys[i] == zero_key:
                coeffs[i] = coeffs[i].real
            elif keys[i] < keys[j]:
                avg = 0.5 * (coeffs[i] + np.conj(coeffs[j]))
                coeffs[i] = avg
                coeffs[j] = np.conj(avg)
        return TrigPolynomial(freqs, coeffs)

    # ------------------------------------------------------------ truncation

    def truncate(self, tol: float) -> "TrigPolynomial":
        """Drop coefficients with modulus <= tol (explicit call only)."""
        keep = np.abs(self._coeffs) > tol
        return TrigPolynomial(self._freqs[keep], self._coeffs[keep], _canonical=True)

    def limit_radius(self, radius: float) -> tuple["TrigPolynomial", float]:
        """Drop frequencies with |q| > radius; return (polynomial, dropped mass)."""
        if not len(self):
            return self, 0.0
        norms = np.sqrt((self._freqs.astype(float) ** 2).sum(axis=1))
        keep = norms <= radius
        if keep.all():
            return self, 0.0
        dropped = math.fsum(np.abs(self._coeffs[~keep]).tolist())
        return TrigPolynomial(self._freqs[keep], self._coeffs[keep], _canonical=True), dropped

    # ---------------------------------------------------------- serialization

    def to_json_obj(self) -> list[dict]:
        return [{"q": [int(x) for x in q], "re": float(c.real), "im": float(c.imag)}
                for q, c in zip(self._freqs, self._coeffs)]

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_obj(), **kwargs)

    @classmethod
    def from_json_obj(cls, obj: Iterable[dict], *, require_real: bool = False,
                      require_mean_free: bool = False) -> "TrigPolynomial":
        freqs, coeffs = [], []
        for rec in obj:
            if set(rec) != {"q", "re", "im"}:
                raise ConfigError(f"bad coefficient record: {rec!r}")
            q = rec["q"]
            if len(q) != 3 or any(int(x) != x for x in q):
                raise ConfigError(f"frequency must be an integer 3-vector: {q!r}")
            if require_mean_free and list(q) == [0, 0, 0]:
                raise ConfigError("zero-frequency entry in a mean-free potential")
            freqs.append([int(x) for x in q])
            coeffs.append(complex(float(rec["re"]), float(rec["im"])))
        if not freqs:
            return cls.zero()
        poly = cls(np.array(freqs, dtype=np.int64), np.array(coeffs))
        if require_real and not poly.is_real_valued():
            raise ConfigError("potential is not real-valued: c(-q) != conj(c(q))")
        return poly

    @classmethod
    def from_json(cls, text: str, **kwargs) -> "TrigPolynomial":
        return cls.from_json_obj(json.loads(text), **kwargs)


def star_norm(f: TrigPolynomial) -> float:
    return f.star_norm()


def convolve(f: TrigPolynomial, g: TrigPolynomial) -> TrigPolynomial:
    return f.convolve(g)


def remove_mean(w: TrigPolynomial) -> TrigPolynomial:
    return w.remove_mean()


def mod_squared(psi: TrigPolynomial) -> TrigPolynomial:
    return psi.mod_squared()


def random_real_potential(rng: np.random.Generator, freq_pairs: list[IntVec],
                          norm: float) -> TrigPolynomial:
    """Random real-valued mean-free polynomial with ||.||_* == norm.

    One complex coefficient is drawn per listed frequency; its mirror at -q
    is the conjugate. Listed frequencies must have a positive leading
    nonzero component so pairs do not collide.
    """
    data: dict[IntVec, complex] = {}
    for q in freq_pairs:
        if q == (0, 0, 0):
            raise ConfigError("zero frequency not allowed")
        c = complex(rng.standard_normal(), rng.standard_normal())
        data[q] = c
        data[tuple(-x for x in q)] = c.conjugate()
    poly = TrigPolynomial.from_dict(data)
    current = poly.star_norm()
    return poly.scale(norm / current) if current else poly
