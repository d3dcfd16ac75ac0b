"""Dual-lattice geometry: basis truncation, momenta, resonance index sets.

Conventions. The periodic cell is [0, 2*pi]^3, so admissible frequencies are
integer 3-vectors and the plane-wave momenta are p_j(t) = t + j with reduced
quasimomentum t in [0,1)^3. Any real wavevector splits uniquely as
kvec = t + j. All resonance tests below use integer inner products <j, q>.

High-momentum runs keep the matrix small by using a displacement ball: the
stored basis indices i are displacements around an integer `center` c (the
unperturbed index), so the true lattice index of ordinal m is c + i_m. All
set constructions accept the center; center == 0 reproduces the plain
origin-ball picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd

import numpy as np

from .errors import BasisTooLarge, ConfigError
from .trigpoly import IntVec, TrigPolynomial

DEFAULT_MAX_BASIS = 200_000


@dataclass(frozen=True)
class QuasiMomentum:
    """Reduced quasimomentum, components in [0, 1)."""

    t: tuple[float, float, float]

    def __post_init__(self):
        if len(self.t) != 3:
            raise ConfigError("quasimomentum must have 3 components")
        if not all(0.0 <= x < 1.0 for x in self.t):
            raise ConfigError(f"quasimomentum components must lie in [0,1): {self.t}")

    @property
    def vec(self) -> np.ndarray:
        return np.array(self.t, dtype=float)


class LatticeBasis:
    """Integer 3-vectors of Euclidean norm <= J_max, sorted lexicographically.

    Closed under negation by construction; `ordinal` inverts `indices`.
    """

    def __init__(self, j_max: float, max_size: int = DEFAULT_MAX_BASIS):
        if j_max < 1:
            raise ConfigError("J_max must be >= 1")
        n = int(math.floor(j_max))
        est = int(4.5 * (j_max + 1) ** 3)
        if est > 4 * max_size:
            raise BasisTooLarge(f"J_max={j_max} would enumerate ~{est} indices")
        rng = np.arange(-n, n + 1)
        grid = np.stack(np.meshgrid(rng, rng, rng, indexing="ij"), axis=-1).reshape(-1, 3)
        keep = (grid ** 2).sum(axis=1) <= j_max ** 2
        idx = grid[keep]
        order = np.lexsort((idx[:, 2], idx[:, 1], idx[:, 0]))
        idx = idx[order]
        if len(idx) > max_size:
            raise BasisTooLarge(f"basis size {len(idx)} exceeds limit {max_size}")
        self.j_max = float(j_max)
        self.indices = idx.astype(np.int64)
        self.indices.setflags(write=False)
        self._ordinal = {tuple(int(x) for x in v): m for m, v in enumerate(idx)}
        self._disp_cache: dict | None = None

    def __len__(self) -> int:
        return len(self.indices)

    def ordinal(self, j: IntVec) -> int:
        try:
            return self._ordinal[tuple(int(x) for x in j)]
        except KeyError:
            raise ConfigError(f"index {j} not in basis (J_max={self.j_max})") from None

    def contains(self, j: IntVec) -> bool:
        return tuple(int(x) for x in j) in self._ordinal

    def displacement_table(self) -> tuple[np.ndarray, np.ndarray]:
        """(diff_freqs, codes): diff_freqs lists every pairwise difference
        i_m - i_j once; codes[m, j] indexes into it. Cached per basis."""
        if self._disp_cache is None:
            diffs = (self.indices[:, None, :] - self.indices[None, :, :]).reshape(-1, 3)
            uniq, inv = np.unique(diffs, axis=0, return_inverse=True)
            n = len(self)
            lookup = {tuple(int(x) for x in q): i for i, q in enumerate(uniq)}
            self._disp_cache = (uniq, inv.reshape(n, n).astype(np.int32), lookup)
        return self._disp_cache[0], self._disp_cache[1]

    def poly_to_diff_values(self, f: TrigPolynomial) -> tuple[np.ndarray, float]:
        """Scatter coefficients onto the difference list; returns (values,
        unreachable mass) where the mass sums coefficients whose frequency is
        not a pairwise difference of basis indices."""
        diff_freqs, _ = self.displacement_table()
        lookup = self._disp_cache[2]
        values = np.zeros(len(diff_freqs), dtype=np.complex128)
        unreachable = 0.0
        if len(f):
            for q, c in zip(f.freqs, f.coeffs):
                i = lookup.get(tuple(int(x) for x in q))
                if i is None:
                    unreachable += abs(c)
                else:
                    values[i] = c
        return values, unreachable


@lru_cache(maxsize=32)
def build_basis(j_max: float, max_size: int = DEFAULT_MAX_BASIS) -> LatticeBasis:
    """Ball of integer vectors with |j| <= J_max."""
    return LatticeBasis(j_max, max_size)


def momentum(j, t: QuasiMomentum) -> tuple[np.ndarray, float]:
    """Momentum p_j(t) = t + j and its squared norm."""
    vec = t.vec + np.asarray(j, dtype=float)
    return vec, float(vec @ vec)


def split_k(kvec) -> tuple[np.ndarray, QuasiMomentum]:
    """Unique decomposition kvec = t + j, t componentwise in [0,1)."""
    kvec = np.asarray(kvec, dtype=float)
    j = np.floor(kvec)
    t = kvec - j
    # floating subtlety: kvec just below an integer can round t up to 1.0
    bump = t >= 1.0
    j[bump] += 1.0
    t[bump] = 0.0
    return j.astype(np.int64), QuasiMomentum(tuple(float(x) for x in t))


def _primitive(q: np.ndarray) -> tuple[IntVec, int]:
    """Primitive generator of the line through q and the multiplier, with the
    generator's sign fixed so its first nonzero component is positive."""
    g = gcd(gcd(abs(int(q[0])), abs(int(q[1]))), abs(int(q[2])))
    base = q // g
    for x in base:
        if x > 0:
            return tuple(int(v) for v in base), g
        if x < 0:
            return tuple(int(-v) for v in base), -g
    raise ConfigError("zero vector has no primitive generator")


def gamma_set(v: TrigPolynomial, r0: float) -> list[IntVec]:
    """Generators of the collinear families covering {q : 0 < |q| < R0}.

    Every nonzero integer q with |q| < R0 is m * q0 for exactly one returned
    q0 and integer m; returned vectors are pairwise non-proportional. Ties
    between q0 and -q0 resolve to the representative whose first nonzero
    component is positive.
    """
    if not v.is_mean_free():
        raise ConfigError("potential must be mean-free")
    if len(v) and v.support_radius >= r0:
        raise ConfigError("potential support must lie strictly inside the R0 ball")
    n = int(math.ceil(r0))
    gens: set[IntVec] = set()
    for a in range(-n, n + 1):
        for b in range(-n, n + 1):
            for c in range(-n, n + 1):
                if a == b == c == 0:
                    continue
                if a * a + b * b + c * c >= r0 * r0:
                    continue
                q0, _ = _primitive(np.array([a, b, c]))
                gens.add(q0)
    return sorted(gens)


def decompose_potential(v: TrigPolynomial, gamma: list[IntVec],
                        r0: float) -> dict[IntVec, TrigPolynomial]:
    """Split V into one-dimensional parts: part[q0] carries the coefficients
    at n * q0. Parts are coefficient-disjoint and sum to V exactly."""
    if not v.is_mean_free():
        raise ConfigError("potential must be mean-free")
    gamma_lookup = set(gamma)
    buckets: dict[IntVec, dict[IntVec, complex]] = {q0: {} for q0 in gamma}
    for q, c in zip(v.freqs, v.coeffs):
        if float(q @ q) >= r0 * r0:
            raise ConfigError(f"support frequency {tuple(q)} outside the R0 ball")
        q0, _ = _primitive(q)
        if q0 not in gamma_lookup:
            raise ConfigError(f"frequency {tuple(q)} matches no generator")
        buckets[q0][tuple(int(x) for x in q)] = complex(c)
    return {q0: TrigPolynomial.from_dict(d) for q0, d in buckets.items()}


def _abs_inner(basis: LatticeBasis, q0: IntVec, center: IntVec) -> np.ndarray:
    j_true = basis.indices + np.asarray(center, dtype=np.int64)
    return np.abs(j_true @ np.asarray(q0, dtype=np.int64))


def pi_set(q0: IntVec, k: float, basis: LatticeBasis, coeff: float,
           center: IntVec = (0, 0, 0)) -> set[int]:
    """Ordinals whose true index satisfies |<j, q0>| < coeff * k^(1/5)."""
    if k <= 1:
        raise ConfigError("k must exceed 1")
    thr = coeff * k ** 0.2
    return set(np.nonzero(_abs_inner(basis, q0, center) < thr)[0].tolist())


def resonance_T(gamma: list[IntVec], k: float, basis: LatticeBasis, coeff: float,
                center: IntVec = (0, 0, 0)) -> set[int]:
    """Ordinals doubly aligned with two distinct generators: some pair
    q != q' has |<j, q>| < coeff * k^(1/5) and |<j, q'>| < coeff * k^(3/5)."""
    if len(gamma) < 2:
        return set()
    thr_narrow = coeff * k ** 0.2
    thr_wide = coeff * k ** 0.6
    inner = np.stack([_abs_inner(basis, q0, center) for q0 in gamma], axis=1)
    narrow = inner < thr_narrow
    wide = inner < thr_wide
    hit = np.zeros(len(basis), dtype=bool)
    for a in range(len(gamma)):
        for b in range(len(gamma)):
            if a != b:
                hit |= narrow[:, a] & wide[:, b]
    return set(np.nonzero(hit)[0].tolist())


@dataclass
class ModelDecomposition:
    """Resonance-aligned split of the potential and its projector supports."""

    gamma: list[IntVec]
    parts: dict[IntVec, TrigPolynomial]
    supports: dict[IntVec, frozenset[int]]
    t_set: frozenset[int]
    k: float
    r0: float
    pi_coefficient: float
    center: IntVec = (0, 0, 0)

    def support_union(self) -> frozenset[int]:
        out: set[int] = set()
        for s in self.supports.values():
            out |= s
        return frozenset(out)

    def to_report_dict(self) -> dict:
        return {
            "k": self.k,
            "r0": self.r0,
            "pi_coefficient": self.pi_coefficient,
            "center": [int(x) for x in self.center],
            "generators": [list(g) for g in self.gamma],
            "support_sizes": {str(list(g)): len(self.supports[g]) for g in self.gamma},
            "t_size": len(self.t_set),
        }


def build_model(v: TrigPolynomial, gamma: list[IntVec], k: float, r0: float,
                basis: LatticeBasis, coeff: float,
                center: IntVec = (0, 0, 0)) -> ModelDecomposition:
    """Assemble the potential parts and the projector supports
    supports[q0] = pi_set(q0) minus the doubly-aligned set."""
    parts = decompose_potential(v, gamma, r0)
    t = resonance_T(gamma, k, basis, coeff, center)
    supports: dict[IntVec, frozenset[int]] = {}
    seen: set[int] = set()
    for q0 in gamma:
        # generators without coefficients contribute no block; their
        # geometric slab is irrelevant and stays out of the projector
        if not len(parts[q0]):
            supports[q0] = frozenset()
            continue
        s = frozenset(pi_set(q0, k, basis, coeff, center) - t)
        if s & seen:
            raise ConfigError("projector supports are not disjoint")
        seen |= s
        supports[q0] = s
    total = TrigPolynomial.zero()
    for q0 in gamma:
        total = total + parts[q0]
    if total != v:
        raise ConfigError("potential parts do not reassemble the input")
    return ModelDecomposition(gamma=list(gamma), parts=parts, supports=supports,
                              t_set=frozenset(t), k=float(k), r0=float(r0),
                              pi_coefficient=float(coeff),
                              center=tuple(int(x) for x in center))
