"""Finite-matrix operator engine and the contour-integral expansion.

The full operator in the plane-wave basis is

    H(t)_{mj} = |t + j_m|^2 delta_{mj} + w_{j_m - j_j},

split as H = H_hat + W_hat where H_hat keeps the diagonal plus the
resonance-aligned blocks P_q V_q P_q. Eigenvalue and spectral-projector
corrections come from circle integrals of resolvent products,

    g_r = (-1)^r/(2 pi i r) Tr oint ((H_hat - z)^-1 W_hat)^r dz,
    G_r = (-1)^(r+1)/(2 pi i) oint ((H_hat - z)^-1 W_hat)^r (H_hat - z)^-1 dz,

evaluated by the equispaced trapezoid rule, which is spectrally accurate
for these analytic integrands. The perturbed eigenvalue is
lam = mu + sum_r g_r (mu the single model eigenvalue inside the circle)
and the projector is E = E_model + sum_r G_r.

Two evaluation modes share one quadrature: `full_matrices=True` forms every
G_r as a dense matrix (needed for operator-norm diagnostics), while the
light mode propagates only vectors, which is what parameter sweeps and the
isoenergetic tracer use. Both produce identical eigenvalues and projector
columns to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (ConfigError, MultipleEigenvaluesInWindow,
                     NoEigenvalueInWindow, ResonantContour, SeriesDiverging)
from .lattice import LatticeBasis, ModelDecomposition, QuasiMomentum
from .trigpoly import IntVec, TrigPolynomial


@dataclass(frozen=True)
class ContourSpec:
    """Integration circle: |z - center| = radius, equispaced nodes."""

    center: float
    radius: float
    nodes: int = 64

    def __post_init__(self):
        if not (0 < self.radius < 1):
            raise ConfigError(f"contour radius must lie in (0,1): {self.radius}")
        if self.nodes < 8 or self.nodes % 2:
            raise ConfigError("contour nodes must be even and >= 8")

    @classmethod
    def for_k(cls, center: float, k: float, delta: float, nodes: int = 64) -> "ContourSpec":
        return cls(center=center, radius=k ** (-1.0 - delta), nodes=nodes)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes z_n and the unit phases exp(i theta_n)."""
        theta = 2.0 * np.pi * np.arange(self.nodes) / self.nodes
        phase = np.exp(1j * theta)
        return self.center + self.radius * phase, phase


@dataclass
class OperatorMatrix:
    """Dense operator in the plane-wave basis."""

    basis: LatticeBasis
    entries: np.ndarray


def norm_one(t) -> float:
    """max over columns i of sum_p |T_{pi}|."""
    m = t.entries if isinstance(t, OperatorMatrix) else np.asarray(t)
    if m.size == 0:
        return 0.0
    return float(np.abs(m).sum(axis=0).max())


def _kvec(t: QuasiMomentum, center: IntVec) -> np.ndarray:
    return t.vec + np.asarray(center, dtype=float)


def _diagonal(t: QuasiMomentum, basis: LatticeBasis, center: IntVec) -> np.ndarray:
    p = _kvec(t, center)[None, :] + basis.indices.astype(float)
    return (p ** 2).sum(axis=1)


def assemble_full(v: TrigPolynomial, t: QuasiMomentum, basis: LatticeBasis,
                  center: IntVec = (0, 0, 0)) -> OperatorMatrix:
    """H(t)_{mj} = |t + center + i_m|^2 delta_{mj} + v_{i_m - i_j}."""
    _, codes = basis.displacement_table()
    values, _ = basis.poly_to_diff_values(v)
    h = values[codes]
    np.fill_diagonal(h, h.diagonal() + _diagonal(t, basis, center))
    return OperatorMatrix(basis=basis, entries=h)


def _block_mask_entries(v_matrix: np.ndarray, model: ModelDecomposition,
                        basis: LatticeBasis) -> np.ndarray:
    """Entries of sum_q P_q V_q P_q, copied bit-exactly from the V matrix."""
    n = len(basis)
    diff_freqs, codes = basis.displacement_table()
    b = np.zeros((n, n), dtype=np.complex128)
    for q0, supp in model.supports.items():
        if not supp:
            continue
        idx = np.array(sorted(supp), dtype=np.int64)
        part_vals, _ = basis.poly_to_diff_values(model.parts[q0])
        sub_codes = codes[np.ix_(idx, idx)]
        b[np.ix_(idx, idx)] += part_vals[sub_codes]
    return b


def assemble_model(v: TrigPolynomial, t: QuasiMomentum, model: ModelDecomposition,
                   basis: LatticeBasis) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Split H = H_hat + W_hat exactly: H_hat carries the diagonal plus the
    support blocks; W_hat is the remainder with zero diagonal."""
    _, codes = basis.displacement_table()
    values, _ = basis.poly_to_diff_values(v)
    m_v = values[codes]
    b = _block_mask_entries(m_v, model, basis)
    h_hat = b.copy()
    np.fill_diagonal(h_hat, h_hat.diagonal() + _diagonal(t, basis, model.center))
    w_hat = m_v - b
    return OperatorMatrix(basis, h_hat), OperatorMatrix(basis, w_hat)


# --------------------------------------------------------------------- model


class ModelOperator:
    """Block-diagonal eigenstructure of the model operator.

    The model matrix is diagonal outside a handful of small coupling blocks,
    so its eigendecomposition is a list of per-block factorizations plus the
    untouched diagonal. Coordinates are positional: coordinate m carries
    eigenvalue lam_hat[m]; inside a block the coordinates enumerate that
    block's eigenvectors.
    """

    def __init__(self, h: np.ndarray, hermitian_tol: float = 1e-10):
        h = np.asarray(h, dtype=np.complex128)
        n = h.shape[0]
        if h.shape != (n, n):
            raise ConfigError("model matrix must be square")
        scale = max(1.0, float(np.abs(h.diagonal()).max()) if n else 1.0)
        if n and float(np.abs(h - h.conj().T).max()) > hermitian_tol * scale:
            raise ConfigError("model matrix is not Hermitian")
        off = h.copy()
        np.fill_diagonal(off, 0.0)
        rows, cols = np.nonzero(off)
        self.n = n
        self.lam = h.diagonal().real.copy()
        self.blocks: list[tuple[np.ndarray, np.ndarray]] = []
        if len(rows):
            parent = np.arange(n)

            def find(a: int) -> int:
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                return a

            for a, b in zip(rows.tolist(), cols.tolist()):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
            groups: dict[int, list[int]] = {}
            for m in set(rows.tolist()) | set(cols.tolist()):
                groups.setdefault(find(m), []).append(m)
            for members in groups.values():
                idx = np.array(sorted(members), dtype=np.int64)
                vals, vecs = np.linalg.eigh(h[np.ix_(idx, idx)])
                self.lam[idx] = vals
                self.blocks.append((idx, vecs))

    # rotations between lattice coordinates and eigen coordinates ------------

    def to_eigen(self, x: np.ndarray) -> np.ndarray:
        y = x.copy()
        for idx, u in self.blocks:
            y[idx] = u.conj().T @ y[idx]
        return y

    def from_eigen(self, y: np.ndarray) -> np.ndarray:
        x = y.copy()
        for idx, u in self.blocks:
            x[idx] = u @ x[idx]
        return x

    def rotate_matrix(self, w: np.ndarray) -> np.ndarray:
        out = w.copy()
        for idx, u in self.blocks:
            out[idx, :] = u.conj().T @ out[idx, :]
        for idx, u in self.blocks:
            out[:, idx] = out[:, idx] @ u
        return out

    def unrotate_matrix(self, w: np.ndarray) -> np.ndarray:
        out = w.copy()
        for idx, u in self.blocks:
            out[idx, :] = u @ out[idx, :]
        for idx, u in self.blocks:
            out[:, idx] = out[:, idx] @ u.conj().T
        return out

    def function_matrix(self, values: np.ndarray) -> np.ndarray:
        """Dense f(H_model) given f at the positional eigenvalues."""
        m = np.diag(values.astype(np.complex128))
        for idx, u in self.blocks:
            m[np.ix_(idx, idx)] = (u * values[idx][None, :]) @ u.conj().T
        return m


# -------------------------------------------------------------------- series


@dataclass
class SpectralSeries:
    """Per-order expansion data around one isolated eigenvalue."""

    j_star: int
    r_max: int
    r_stop: int
    g_terms: np.ndarray          # g_terms[r-1] = g_r, real parts
    g_imag_max: float
    lam: float
    E_col: np.ndarray            # column j_star of the projector
    Ejj: complex
    term_norms: np.ndarray       # per-order projector-term norms
    norm_kind: str               # "matrix" (full ||G_r||_1) or "column"
    mu_inside: float             # model eigenvalue enclosed by the contour
    p_sq_jstar: float            # unperturbed diagonal at j_star
    m_star: int                  # positional eigen-coordinate inside
    G_terms: list[np.ndarray] | None = None
    E: np.ndarray | None = None

    def to_json_obj(self) -> dict:
        return {
            "j_star": int(self.j_star),
            "lambda": float(self.lam),
            "g_terms": [float(x) for x in self.g_terms],
            "term_norms": [float(x) for x in self.term_norms],
            "diagnostics": {
                "r_stop": int(self.r_stop),
                "norm_kind": self.norm_kind,
                "g_imag_max": float(self.g_imag_max),
                "mu_inside": float(self.mu_inside),
                "p_sq_jstar": float(self.p_sq_jstar),
                "Ejj": [float(self.Ejj.real), float(self.Ejj.imag)],
            },
        }


def _contour_checks(lam_hat: np.ndarray, contour: ContourSpec, guard: float) -> int:
    dist_to_circle = np.abs(np.abs(lam_hat - contour.center) - contour.radius)
    if float(dist_to_circle.min()) < guard * contour.radius:
        raise ResonantContour(
            f"model eigenvalue within {guard:.0%} of the integration circle")
    inside = np.nonzero(np.abs(lam_hat - contour.center) < contour.radius)[0]
    if len(inside) != 1:
        raise ResonantContour(
            f"contour encloses {len(inside)} model eigenvalues (need exactly 1)")
    return int(inside[0])


def series_terms(h_hat, w_hat, contour: ContourSpec, j_star: int, r_max: int, *,
                 full_matrices: bool = True, guard: float = 0.1,
                 tiny_term: float = 1e-14,
                 model_op: ModelOperator | None = None) -> SpectralSeries:
    """Quadrature evaluation of the eigenvalue/projector correction orders.

    Requires exactly one model eigenvalue strictly inside the circle with a
    clearance of `guard * radius`; raises ResonantContour otherwise. Raises
    SeriesDiverging when per-order norms stop decaying or the corrected
    eigenvalue escapes the circle.
    """
    h = h_hat.entries if isinstance(h_hat, OperatorMatrix) else np.asarray(h_hat)
    w = w_hat.entries if isinstance(w_hat, OperatorMatrix) else np.asarray(w_hat)
    if r_max < 2:
        raise ConfigError("r_max must be >= 2")
    n = h.shape[0]
    op = model_op if model_op is not None else ModelOperator(h)
    m_star = _contour_checks(op.lam, contour, guard)
    mu = float(op.lam[m_star])
    p_sq = float(h[j_star, j_star].real)

    w_eig = op.rotate_matrix(w)
    z, phase = contour.points()
    nq = contour.nodes
    rho = contour.radius
    d = 1.0 / (op.lam[:, None] - z[None, :])          # (n, nq) resolvent diag
    a = d[m_star, :].copy()
    d_s = d.copy()
    d_s[m_star, :] = 0.0

    e_js = np.zeros(n, dtype=np.complex128)
    e_js[j_star] = 1.0
    e_js_eig = op.to_eigen(e_js)

    g_complex = np.zeros(r_max, dtype=np.complex128)
    col_terms = np.zeros((r_max, n), dtype=np.complex128)
    g_mats: list[np.ndarray] | None = None

    if full_matrices:
        g_acc = np.zeros((r_max, n, n), dtype=np.complex128)
        tr_acc = np.zeros((r_max, nq), dtype=np.complex128)
        for i_node in range(nq):
            mz = d[:, i_node][:, None] * w_eig
            t_pow = mz
            for r in range(1, r_max + 1):
                if r > 1:
                    t_pow = t_pow @ mz
                tr_acc[r - 1, i_node] = np.trace(t_pow)
                g_acc[r - 1] += phase[i_node] * (t_pow * d[:, i_node][None, :])
        for r in range(1, r_max + 1):
            g_complex[r - 1] = ((-1) ** r) * (rho / (r * nq)) * (phase * tr_acc[r - 1]).sum()
        g_mats = []
        for r in range(1, r_max + 1):
            g_eig = ((-1) ** (r + 1)) * (rho / nq) * g_acc[r - 1]
            g_mats.append(op.unrotate_matrix(g_eig))
        # projector column from the accumulated matrices
        for r in range(r_max):
            col_terms[r] = g_mats[r][:, j_star]
    else:
        # eigenvalue chains: s[i, j, node] = <u, W (R W)^j (S W)^i u>
        s = np.zeros((r_max, r_max, nq), dtype=np.complex128)
        z_chain = np.zeros((n, nq), dtype=np.complex128)
        z_chain[m_star, :] = 1.0
        for i in range(r_max):
            x = z_chain
            y = None
            for j in range(r_max - i):
                y = w_eig @ x
                s[i, j, :] = y[m_star, :]
                if j == 0:
                    z_next = d_s * y
                x = d * y
            z_chain = z_next
        for r in range(1, r_max + 1):
            p_sum = np.zeros(nq, dtype=np.complex128)
            for i in range(r):
                p_sum += s[i, r - 1 - i, :]
            g_complex[r - 1] = ((-1) ** r) * (rho / (r * nq)) * (phase * a * p_sum).sum()
        # projector column chains: x_r = (R W)^r R e_js
        x = d * e_js_eig[:, None]
        for r in range(1, r_max + 1):
            x = d * (w_eig @ x)
            col_eig = ((-1) ** (r + 1)) * (rho / nq) * (phase * x).sum(axis=1)
            col_terms[r - 1] = op.from_eigen(col_eig)

    term_norms = np.abs(col_terms).sum(axis=1)
    if full_matrices and g_mats is not None:
        term_norms = np.array([norm_one(g) for g in g_mats])
        norm_kind = "matrix"
    else:
        norm_kind = "column"

    # early stop once a term falls below the floor
    r_stop = r_max
    for r in range(1, r_max + 1):
        if term_norms[r - 1] < tiny_term and abs(g_complex[r - 1]) < tiny_term:
            r_stop = r
            break

    tail = term_norms[:r_stop]
    if len(tail) >= 6:
        if tail[-1] > tail[-6] and tail[-1] > 100 * tiny_term:
            raise SeriesDiverging(
                f"projector term norms not decaying: {tail[-6]:.3e} -> {tail[-1]:.3e}")

    g_used = g_complex[:r_stop]
    shift = complex(g_used.sum())
    lam = mu + shift.real
    if abs(lam - contour.center) >= (1.0 - guard) * contour.radius:
        raise SeriesDiverging("corrected eigenvalue escapes the integration circle")

    e_col = np.zeros(n, dtype=np.complex128)
    e_col[:] = col_terms[:r_stop].sum(axis=0)
    # model projector contribution: Q (e_m* e_m*^H) Q^H applied to e_js
    base = np.zeros(n, dtype=np.complex128)
    base[m_star] = e_js_eig[m_star]
    e_col += op.from_eigen(base)

    e_full = None
    if full_matrices and g_mats is not None:
        base_mat = np.zeros((n, n), dtype=np.complex128)
        base_mat[m_star, m_star] = 1.0
        e_full = op.unrotate_matrix(base_mat)
        for r in range(r_stop):
            e_full = e_full + g_mats[r]
        e_col = e_full[:, j_star].copy()

    return SpectralSeries(
        j_star=int(j_star), r_max=int(r_max), r_stop=int(r_stop),
        g_terms=g_complex.real.copy(),
        g_imag_max=float(np.abs(g_complex.imag[:r_stop]).max()),
        lam=float(lam), E_col=e_col, Ejj=complex(e_col[j_star]),
        term_norms=term_norms, norm_kind=norm_kind, mu_inside=mu, p_sq_jstar=p_sq,
        m_star=int(m_star), G_terms=g_mats if full_matrices else None, E=e_full)


# -------------------------------------------------------------------- oracle


def oracle_eigenpair(h, window: tuple[float, float]) -> tuple[float, np.ndarray]:
    """Dense Hermitian eigendecomposition; returns the unique eigenvalue in
    `window` and its rank-1 projector."""
    m = h.entries if isinstance(h, OperatorMatrix) else np.asarray(h)
    vals, vecs = np.linalg.eigh(m)
    lo, hi = window
    hits = np.nonzero((vals >= lo) & (vals <= hi))[0]
    if len(hits) == 0:
        raise NoEigenvalueInWindow(f"no eigenvalue in [{lo}, {hi}]")
    if len(hits) > 1:
        raise MultipleEigenvaluesInWindow(f"{len(hits)} eigenvalues in [{lo}, {hi}]")
    v = vecs[:, hits[0]]
    return float(vals[hits[0]]), np.outer(v, v.conj())


# ------------------------------------------------------------ FD gradient


def central_gradient(f: Callable[[np.ndarray], float], x0: np.ndarray,
                     step: float) -> np.ndarray:
    """Second-order central finite-difference gradient."""
    x0 = np.asarray(x0, dtype=float)
    grad = np.zeros(3)
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = step
        grad[axis] = (f(x0 + e) - f(x0 - e)) / (2.0 * step)
    return grad


def gradient_check(lambda_of_t: Callable[[np.ndarray], float], t0: np.ndarray,
                   step: float, kvec0: np.ndarray) -> tuple[np.ndarray, float]:
    """FD gradient of the eigenvalue map t -> lam(t) and its deviation from
    the free-dispersion value 2 p(t) = 2 (t + j)."""
    grad = central_gradient(lambda_of_t, np.asarray(t0, dtype=float), step)
    deviation = float(np.linalg.norm(grad - 2.0 * np.asarray(kvec0, dtype=float)))
    return grad, deviation


# ------------------------------------------------------- norm diagnostics


def resolvent_half_norm(op: ModelOperator, contour: ContourSpec,
                        samples: int = 8) -> float:
    """max over sampled circle points of ||(H_hat - z)^(-1/2)||_1."""
    z, _ = contour.points()
    take = z[:: max(1, len(z) // samples)]
    best = 0.0
    for zz in take:
        m = op.function_matrix(1.0 / np.sqrt(op.lam - zz))
        best = max(best, norm_one(m))
    return best


def sandwich_norms(op: ModelOperator, w_hat, contour: ContourSpec,
                   samples: int = 8) -> tuple[float, float]:
    """max over sampled circle points of ||B0||_1 and ||B0^3||_1 for the
    symmetrized product B0 = (H_hat-z)^(-1/2) W (H_hat-z)^(-1/2)."""
    w = w_hat.entries if isinstance(w_hat, OperatorMatrix) else np.asarray(w_hat)
    if not np.abs(w).sum():
        return 0.0, 0.0
    w_eig = op.rotate_matrix(w)
    z, _ = contour.points()
    take = z[:: max(1, len(z) // samples)]
    n1 = n3 = 0.0
    for zz in take:
        s = 1.0 / np.sqrt(op.lam - zz)
        b_eig = (s[:, None] * w_eig) * s[None, :]
        n1 = max(n1, norm_one(op.unrotate_matrix(b_eig)))
        b3 = b_eig @ b_eig @ b_eig
        n3 = max(n3, norm_one(op.unrotate_matrix(b3)))
    return n1, n3
