"""Fixed-point construction of quasi-periodic states of the cubic equation.

The nonlinear problem

    -Lap u + V u + sigma |u|^2 u = lam u,   u = A e^{i<kvec, x>} psi-part,

is solved by iterating the potential map

    M(W) = V + sigma |u_{W~}|^2,      W_0 = V + sigma |A|^2,

where W~ is W with its mean removed and u_{W~} is the eigenfunction of the
linear operator -Lap + W~ obtained from the contour expansion around the
isolated level at k^2. The map contracts when sigma |A|^2 < k^(-1-6 delta);
the geometric ratio is bounded by 2^6 sigma |A|^2 k^(1+5 delta). At the
fixed point,

    lam = lam_{W~} + sigma |A|^2 E_jj,    u = A e^{i<kvec,x>} (1 + u~),

with E_jj the diagonal projector entry at the carrying index. An
independent damped-Newton solve of the truncated coefficient system plus a
phase gauge provides the verification oracle.

The resonance-aligned blocks of the model operator are built from V once
and reused for every iterate: only the remainder W_hat = W~ - blocks
changes from step to step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigError, GPWaveError, IndexDrift, NewtonDiverged,
                     NotConverged, SupportOverflow)
from .lattice import (LatticeBasis, ModelDecomposition, QuasiMomentum,
                      build_basis, build_model, gamma_set, split_k)
from .linop import (ContourSpec, ModelOperator, OperatorMatrix, SpectralSeries,
                    assemble_model, norm_one, series_terms)
from .nonres import NonResReport, check_nonresonance, find_admissible_t, spectral_window
from .trigpoly import IntVec, TrigPolynomial


@dataclass
class GPEConfig:
    """Everything one nonlinear run needs; immutable by convention."""

    v: TrigPolynomial
    sigma: float
    a: complex
    k: float
    delta: float
    t: QuasiMomentum
    j_star: IntVec
    basis: LatticeBasis
    model: ModelDecomposition
    contour: ContourSpec
    r_max: int = 12
    max_iters: int = 50
    fp_tol: float | None = None          # default 1e-12 * ||V||_*
    cutoff: float | None = None          # default 4 * R0
    enforce_smallness: bool = True
    strict_support: bool = False
    full_diagnostics: bool = True
    guard: float = 0.1
    fit_const: float = 10.0
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0 / 200.0):
            raise ConfigError(f"delta must lie in (0, 1/200): {self.delta}")
        if self.k <= 1.0:
            raise ConfigError("k must exceed 1")
        kvec = self.t.vec + np.asarray(self.j_star, dtype=float)
        if abs(float(np.linalg.norm(kvec)) - self.k) > 1e-8 * self.k:
            raise ConfigError("k inconsistent with |t + j_star|")
        disp = tuple(int(a - b) for a, b in zip(self.j_star, self.model.center))
        if not self.basis.contains(disp):
            raise ConfigError("j_star displacement not contained in the basis")
        if self.fp_tol is None:
            self.fp_tol = 1e-12 * self.v.star_norm()
        if self.cutoff is None:
            self.cutoff = 4.0 * self.model.r0
        if self.cutoff < self.model.r0:
            raise ConfigError("cutoff must be at least R0")
        small = abs(self.sigma) * abs(self.a) ** 2
        if small >= self.smallness_bound:
            msg = (f"|sigma||A|^2 = {small:.3e} not below the smallness bound "
                   f"k^(-1-6 delta) = {self.smallness_bound:.3e}")
            if self.enforce_smallness:
                raise ConfigError(msg)
            self.warnings.append(msg)

    # ------------------------------------------------------------- derived

    @property
    def kvec(self) -> np.ndarray:
        return self.t.vec + np.asarray(self.j_star, dtype=float)

    @property
    def js_ordinal(self) -> int:
        disp = tuple(int(a - b) for a, b in zip(self.j_star, self.model.center))
        return self.basis.ordinal(disp)

    @property
    def window(self) -> tuple[float, float]:
        return spectral_window(self.k, self.delta)

    @property
    def smallness_bound(self) -> float:
        return self.k ** (-1.0 - 6.0 * self.delta)

    @property
    def contraction_bound(self) -> float:
        return 64.0 * abs(self.sigma) * abs(self.a) ** 2 * self.k ** (1.0 + 5.0 * self.delta)

    @property
    def gamma_exponent(self) -> float:
        """Derived smallness exponent: |sigma||A|^2 = lam^(-gamma)."""
        small = abs(self.sigma) * abs(self.a) ** 2
        if small == 0.0:
            return math.inf
        return -math.log(small) / math.log(self.k ** 2)

    def w0(self) -> TrigPolynomial:
        """Iteration seed W_0 = V + sigma |A|^2."""
        const = self.sigma * abs(self.a) ** 2
        if const == 0.0:
            return self.v
        return self.v + TrigPolynomial.constant(const)


def config_for_direction(v: TrigPolynomial, sigma: float, a: complex, nu, k: float,
                         delta: float, *, j_max: float, r0: float,
                         coeff: float = 1.0, nodes: int = 64, r_max: int = 12,
                         max_iters: int = 50, fp_tol: float | None = None,
                         cutoff: float | None = None, attempts: int = 12,
                         guard: float = 0.1, fit_const: float = 10.0,
                         full_diagnostics: bool = True, seed: int = 0,
                         enforce_smallness: bool = True,
                         basis: LatticeBasis | None = None,
                         norm_samples: int = 8
                         ) -> tuple[GPEConfig, NonResReport]:
    """Locate an admissible quasimomentum near direction nu and assemble the
    run configuration around it."""
    basis = basis if basis is not None else build_basis(j_max)
    t, center, report = find_admissible_t(
        nu, k, v, delta, attempts, basis=basis, r0=r0, coeff=coeff, nodes=nodes,
        guard=guard, fit_const=fit_const, seed=seed, norm_samples=norm_samples)
    kvec = t.vec + np.asarray(center, dtype=float)
    center_val = float(kvec @ kvec)
    k_eff = float(np.sqrt(center_val))
    model = build_model(v, gamma_set(v, r0), k_eff, r0, basis, coeff, center)
    contour = ContourSpec.for_k(center_val, k_eff, delta, nodes)
    cfg = GPEConfig(v=v, sigma=sigma, a=a, k=k_eff, delta=delta, t=t,
                    j_star=center, basis=basis, model=model, contour=contour,
                    r_max=r_max, max_iters=max_iters, fp_tol=fp_tol,
                    cutoff=cutoff, guard=guard, fit_const=fit_const,
                    full_diagnostics=full_diagnostics,
                    enforce_smallness=enforce_smallness)
    return cfg, report


class Workspace:
    """Per-config cache: model split, block entries, eigenstructure."""

    def __init__(self, cfg: GPEConfig):
        self.cfg = cfg
        h_hat, w_hat0 = assemble_model(cfg.v, cfg.t, cfg.model, cfg.basis)
        self.h_hat = h_hat
        self.w_hat0 = w_hat0
        self.op = ModelOperator(h_hat.entries)
        # block entries of the model: H_hat minus its free diagonal
        diag = np.zeros_like(h_hat.entries)
        np.fill_diagonal(diag, h_hat.entries.diagonal())
        self.block = h_hat.entries - diag
        self.v_matrix = w_hat0.entries + self.block

    def w_hat_for(self, w_tilde: TrigPolynomial) -> tuple[np.ndarray, float]:
        """Remainder matrix W_hat = Mat(W~) - blocks; also the coefficient
        mass of W~ that the truncated basis cannot represent."""
        _, codes = self.cfg.basis.displacement_table()
        values, unreachable = self.cfg.basis.poly_to_diff_values(w_tilde)
        return values[codes] - self.block, unreachable

    def solve(self, w_tilde: TrigPolynomial, *,
              full: bool | None = None) -> tuple[SpectralSeries, float]:
        """Contour expansion for the potential W~ around the carrying level."""
        cfg = self.cfg
        w_hat, unreachable = self.w_hat_for(w_tilde)
        series = series_terms(self.h_hat.entries, w_hat, cfg.contour,
                              cfg.js_ordinal, cfg.r_max,
                              full_matrices=cfg.full_diagnostics if full is None else full,
                              guard=cfg.guard, model_op=self.op)
        return series, unreachable


@dataclass
class MapStep:
    """One application of the potential map."""

    w_next: TrigPolynomial
    lambda_w: float
    psi: TrigPolynomial
    series: SpectralSeries
    dropped_mass: float        # cutoff truncation of the new potential
    unreachable_mass: float    # W~ coefficients beyond the basis reach


def psi_from_column(col: np.ndarray, a: complex, basis: LatticeBasis,
                    js_ordinal: int) -> TrigPolynomial:
    """Periodic part of the eigenfunction: coefficient at displacement
    q = j_m - j_star is A * E[m, j_star]."""
    freqs = basis.indices - basis.indices[js_ordinal]
    return TrigPolynomial(freqs, a * col)


def map_M(w: TrigPolynomial, cfg: GPEConfig, ws: Workspace | None = None) -> MapStep:
    """One step W -> V + sigma |u_{W~}|^2 with support truncation at the
    configured cutoff radius."""
    ws = ws if ws is not None else Workspace(cfg)
    w_tilde = w.remove_mean()
    series, unreachable = ws.solve(w_tilde)
    # the spectral window tracks the operator with the mean kept
    lam_full = series.lam + complex(w.get((0, 0, 0))).real
    lo, hi = cfg.window
    if not (lo <= lam_full <= hi):
        raise IndexDrift(
            f"eigenvalue {lam_full} left the window [{lo}, {hi}]")
    psi = psi_from_column(series.E_col, cfg.a, cfg.basis, cfg.js_ordinal)
    w_raw = cfg.v + psi.mod_squared().scale(cfg.sigma)
    w_next, dropped = w_raw.limit_radius(cfg.cutoff)
    if dropped and cfg.strict_support:
        raise SupportOverflow(
            f"mod-squared support exceeded cutoff {cfg.cutoff}; "
            f"dropped mass {dropped:.3e}")
    return MapStep(w_next=w_next, lambda_w=series.lam, psi=psi, series=series,
                   dropped_mass=dropped, unreachable_mass=unreachable)


@dataclass
class IterationStep:
    m: int
    diff_norm: float
    ratio: float
    lambda_m: float
    proj_diff: float


@dataclass
class FixedPointReport:
    """Trajectory of the potential iteration."""

    steps: list[IterationStep]
    converged: bool
    w_final: TrigPolynomial
    contraction_bound: float
    dropped_mass_total: float
    unreachable_mass_total: float
    final_step: MapStep | None = None

    def to_json_obj(self) -> dict:
        return {
            "converged": self.converged,
            "contraction_bound": self.contraction_bound,
            "dropped_mass_total": self.dropped_mass_total,
            "unreachable_mass_total": self.unreachable_mass_total,
            "steps": [{"m": s.m, "diff_norm": s.diff_norm, "ratio": s.ratio,
                       "lambda_m": s.lambda_m, "proj_diff": s.proj_diff}
                      for s in self.steps],
        }

    def csv_rows(self) -> list[list]:
        rows = [["m", "diff_norm", "ratio", "lambda_m", "proj_diff"]]
        for s in self.steps:
            rows.append([s.m, s.diff_norm, s.ratio, s.lambda_m, s.proj_diff])
        return rows


def _proj_diff(curr: SpectralSeries, prev: SpectralSeries | None) -> float:
    if prev is None:
        return float("nan")
    if curr.E is not None and prev.E is not None:
        return norm_one(curr.E - prev.E)
    return float(np.abs(curr.E_col - prev.E_col).sum())


def iterate(cfg: GPEConfig, ws: Workspace | None = None) -> FixedPointReport:
    """Run the potential iteration from W_0 until the successive difference
    falls below fp_tol (star norm) or max_iters is exhausted."""
    ws = ws if ws is not None else Workspace(cfg)
    w_prev = cfg.w0()
    steps: list[IterationStep] = []
    prev_series: SpectralSeries | None = None
    prev_diff = float("nan")
    dropped_total = 0.0
    unreachable_total = 0.0
    converged = False
    w_final = w_prev
    last_step: MapStep | None = None

    for m in range(1, cfg.max_iters + 1):
        try:
            step = map_M(w_prev, cfg, ws)
        except GPWaveError as exc:
            raise type(exc)(f"step {m}: {exc}") from exc
        diff = (step.w_next - w_prev).star_norm()
        ratio = diff / prev_diff if (m > 1 and prev_diff > 0) else float("nan")
        steps.append(IterationStep(m=m, diff_norm=diff, ratio=ratio,
                                   lambda_m=step.lambda_w,
                                   proj_diff=_proj_diff(step.series, prev_series)))
        dropped_total += step.dropped_mass
        unreachable_total += step.unreachable_mass
        prev_series = step.series
        prev_diff = diff
        w_final = step.w_next
        last_step = step
        if diff <= cfg.fp_tol:
            converged = True
            break
        w_prev = step.w_next

    return FixedPointReport(steps=steps, converged=converged, w_final=w_final,
                            contraction_bound=cfg.contraction_bound,
                            dropped_mass_total=dropped_total,
                            unreachable_mass_total=unreachable_total,
                            final_step=last_step)


@dataclass
class SolutionRecord:
    """Converged state and its verification data."""

    u_tilde: TrigPolynomial
    psi: TrigPolynomial
    lam: float
    lambda_w: float
    ejj: complex
    residual_star: float
    residual_inside: float
    residual_outside: float
    bound_checks: dict[str, tuple[float, float, bool]]
    dropped_mass_total: float
    unreachable_mass_total: float
    series: SpectralSeries | None = None

    def to_json_obj(self) -> dict:
        return {
            "lambda": self.lam,
            "lambda_w": self.lambda_w,
            "Ejj": [self.ejj.real, self.ejj.imag],
            "residual_star": self.residual_star,
            "residual_inside": self.residual_inside,
            "residual_outside": self.residual_outside,
            "u_tilde_star_norm": self.u_tilde.star_norm(),
            "bound_checks": {name: {"value": v, "bound": b, "passed": p}
                             for name, (v, b, p) in self.bound_checks.items()},
            "dropped_mass_total": self.dropped_mass_total,
            "unreachable_mass_total": self.unreachable_mass_total,
            "u_tilde": self.u_tilde.to_json_obj(),
            "psi": self.psi.to_json_obj(),
        }


def residual_parts(psi: TrigPolynomial, lam: float, cfg: GPEConfig
                   ) -> tuple[float, float, float]:
    """Coefficient-space defect of the cubic equation at (psi, lam), split
    into rows the truncated operator enforces (inside) and spill rows
    (outside). Row q reads

        (|kvec + q|^2 - lam) psi_q + (V psi)_q + sigma (|psi|^2 psi)_q.

    Convolutions are exact (no truncation), so the outside part measures the
    basis-truncation error honestly. Values are star norms divided by |A|.
    """
    kvec = cfg.kvec
    if len(psi):
        p = kvec[None, :] + psi.freqs.astype(float)
        kin_coeffs = ((p ** 2).sum(axis=1) - lam) * psi.coeffs
        kin = TrigPolynomial(psi.freqs, kin_coeffs)
    else:
        kin = TrigPolynomial.zero()
    full = kin + cfg.v.convolve(psi) + psi.mod_squared().convolve(psi).scale(cfg.sigma)
    scale = abs(cfg.a)
    if scale == 0.0:
        raise ConfigError("residual undefined for A = 0")
    inside = outside = 0.0
    js_disp = cfg.basis.indices[cfg.js_ordinal]
    for q, c in zip(full.freqs, full.coeffs):
        row = tuple(int(x) for x in (q + js_disp))
        if cfg.basis.contains(row):
            inside += abs(c)
        else:
            outside += abs(c)
    return inside / scale, outside / scale, (inside + outside) / scale


def residual(sol: "SolutionRecord", cfg: GPEConfig) -> float:
    """Total truncated-system defect (star norm over the enlarged frequency
    set, normalized by |A|)."""
    return residual_parts(sol.psi, sol.lam, cfg)[2]


def assemble_solution(report: FixedPointReport, cfg: GPEConfig,
                      ws: Workspace | None = None) -> SolutionRecord:
    """Final spectral solve at the converged potential and bound bookkeeping."""
    if not report.converged:
        raise NotConverged("fixed-point iteration did not converge")
    if cfg.a == 0:
        raise ConfigError("solution assembly needs a nonzero amplitude A")
    ws = ws if ws is not None else Workspace(cfg)
    series, unreachable = ws.solve(report.w_final.remove_mean())
    ejj = series.Ejj
    lam = series.lam + cfg.sigma * abs(cfg.a) ** 2 * ejj.real
    psi = psi_from_column(series.E_col, cfg.a, cfg.basis, cfg.js_ordinal)
    u_tilde = psi.scale(1.0 / cfg.a) - TrigPolynomial.constant(1.0)

    k, delta = cfg.k, cfg.delta
    small = abs(cfg.sigma) * abs(cfg.a) ** 2
    p_sq = series.p_sq_jstar
    checks: dict[str, tuple[float, float, bool]] = {}
    val = u_tilde.star_norm()
    bnd = k ** (-1.0 + 8.0 * delta)
    checks["u_tilde_norm"] = (val, bnd, val <= bnd)
    val = abs(lam - p_sq - cfg.sigma * abs(cfg.a) ** 2)
    bnd = (k ** (-1.0 + 72.0 * delta) + small) * k ** (-1.0 + 8.0 * delta)
    checks["lambda_leading"] = (val, bnd, val <= cfg.fit_const * bnd)
    val = abs(series.lam - p_sq)
    bnd = k ** (-2.0 + 80.0 * delta)
    checks["lambda_w_shift"] = (val, bnd, val <= cfg.fit_const * bnd)

    inside, outside, total = residual_parts(psi, lam, cfg)
    return SolutionRecord(
        u_tilde=u_tilde, psi=psi, lam=float(lam), lambda_w=float(series.lam),
        ejj=ejj, residual_star=total, residual_inside=inside,
        residual_outside=outside, bound_checks=checks,
        dropped_mass_total=report.dropped_mass_total + unreachable,
        unreachable_mass_total=report.unreachable_mass_total,
        series=series)


def solve_direction(cfg: GPEConfig) -> tuple[SolutionRecord, FixedPointReport]:
    """Convenience: iterate then assemble."""
    ws = Workspace(cfg)
    report = iterate(cfg, ws)
    sol = assemble_solution(report, cfg, ws)
    return sol, report


# ------------------------------------------------------------------- oracle


def _psi_lookup_array(psi: TrigPolynomial, freqs: np.ndarray) -> np.ndarray:
    """Coefficients of psi at the given frequencies (0 where absent)."""
    out = np.zeros(len(freqs), dtype=np.complex128)
    table = psi.as_dict()
    for i, q in enumerate(freqs):
        out[i] = table.get(tuple(int(x) for x in q), 0.0)
    return out


def oracle_newton(sol: SolutionRecord, cfg: GPEConfig, *, max_iters: int = 40,
                  tol_scale: float = 1e-13
                  ) -> tuple[TrigPolynomial, float, float]:
    """Independent damped-Newton solve of the truncated coefficient system.

    Unknowns are all psi coefficients on the basis displacements plus lam;
    the extra real equation pins the phase of the carrying coefficient to
    the initial guess. Returns (psi, lam, distance-to-initial-guess).
    """
    basis = cfg.basis
    n = len(basis)
    js = cfg.js_ordinal
    disp = basis.indices - basis.indices[js]
    diff_freqs, codes = basis.displacement_table()
    diag = ((cfg.kvec[None, :] + disp.astype(float)) ** 2).sum(axis=1)
    v_vals, _ = basis.poly_to_diff_values(cfg.v)
    v_mat = v_vals[codes]
    mask = np.sqrt((diff_freqs.astype(float) ** 2).sum(axis=1))[codes] <= cfg.cutoff

    c = np.zeros(n, dtype=np.complex128)
    psi_dict = sol.psi.as_dict()
    for m in range(n):
        c[m] = psi_dict.get(tuple(int(x) for x in disp[m]), 0.0)
    lam = sol.lam
    a0 = complex(c[js])
    if a0 == 0:
        raise NewtonDiverged("carrying coefficient vanishes; no gauge anchor")
    scale = max(1.0, float(np.abs(diag).max())) * max(abs(cfg.a), 1e-300)

    def g_matrix(cvec: np.ndarray) -> np.ndarray:
        psi_c = TrigPolynomial(disp, cvec)
        g, _ = psi_c.mod_squared().limit_radius(cfg.cutoff)
        g_vals, _ = basis.poly_to_diff_values(g)
        return g_vals[codes]

    def f_complex(cvec: np.ndarray, lam_val: float) -> np.ndarray:
        w_mat = v_mat + cfg.sigma * g_matrix(cvec)
        return (diag - lam_val) * cvec + w_mat @ cvec

    def residual_stack(cvec: np.ndarray, lam_val: float) -> np.ndarray:
        fc = f_complex(cvec, lam_val)
        gauge = (np.conj(a0) * cvec[js]).imag
        return np.concatenate([fc.real, fc.imag, [gauge]])

    def jacobian(cvec: np.ndarray, lam_val: float) -> np.ndarray:
        psi_c = TrigPolynomial(disp, cvec)
        g_mat = g_matrix(cvec)
        # linear and antilinear blocks of the derivative of the cubic term
        m1 = np.zeros((n, n), dtype=np.complex128)
        a_mat = np.zeros((n, n), dtype=np.complex128)
        for s in range(n):
            minus = _psi_lookup_array(psi_c, disp[s][None, :] - diff_freqs)
            plus = _psi_lookup_array(psi_c, disp[s][None, :] + diff_freqs)
            m1[:, s] = ((np.conj(minus)[codes] * mask) * cvec[None, :]).sum(axis=1)
            a_mat[:, s] = ((plus[codes] * mask) * cvec[None, :]).sum(axis=1)
        lin = np.diag(diag - lam_val) + v_mat + cfg.sigma * (g_mat + m1)
        ant = cfg.sigma * a_mat
        top = np.hstack([(lin + ant).real, -(lin - ant).imag, -cvec.real[:, None]])
        bot = np.hstack([(lin + ant).imag, (lin - ant).real, -cvec.imag[:, None]])
        gauge = np.zeros(2 * n + 1)
        gauge[js] = np.conj(a0).imag
        gauge[n + js] = np.conj(a0).real
        return np.vstack([top, bot, gauge[None, :]])

    f = residual_stack(c, lam)
    for _ in range(max_iters):
        if np.abs(f).max() <= tol_scale * scale:
            break
        j = jacobian(c, lam)
        try:
            dx = np.linalg.solve(j, -f)
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged(f"singular Jacobian: {exc}") from exc
        step = 1.0
        norm0 = float(np.abs(f).max())
        for _ in range(30):
            c_try = c + step * (dx[:n] + 1j * dx[n:2 * n])
            lam_try = lam + step * dx[2 * n]
            f_try = residual_stack(c_try, lam_try)
            if float(np.abs(f_try).max()) < norm0:
                c, lam, f = c_try, lam_try, f_try
                break
            step *= 0.5
        else:
            raise NewtonDiverged("damping failed to reduce the residual")
    else:
        if np.abs(f).max() > tol_scale * scale * 100:
            raise NewtonDiverged(
                f"no convergence after {max_iters} iterations "
                f"(residual {np.abs(f).max():.3e})")

    psi_o = TrigPolynomial(disp, c)
    distance = (psi_o - sol.psi).star_norm() + abs(lam - sol.lam)
    return psi_o, float(lam), float(distance)


# ----------------------------------------------------- eigenvalue map in t


def linear_lambda_at(cfg: GPEConfig, w_tilde: TrigPolynomial,
                     t_offset: np.ndarray) -> float:
    """Eigenvalue of -Lap + W~ at the shifted quasimomentum t + offset,
    holding the carrying lattice index fixed. Used by gradient checks and
    the isoenergetic radius solver's linear control runs."""
    kvec = cfg.kvec + np.asarray(t_offset, dtype=float)
    center, t = split_k(kvec)
    center = tuple(int(x) for x in center)
    k_eff = float(np.linalg.norm(kvec))
    model = build_model(cfg.v, cfg.model.gamma, k_eff, cfg.model.r0, cfg.basis,
                        cfg.model.pi_coefficient, center)
    h_hat, _ = assemble_model(cfg.v, t, model, cfg.basis)
    op = ModelOperator(h_hat.entries)
    _, codes = cfg.basis.displacement_table()
    values, _ = cfg.basis.poly_to_diff_values(w_tilde)
    diag = np.zeros_like(h_hat.entries)
    np.fill_diagonal(diag, h_hat.entries.diagonal())
    w_hat = values[codes] - (h_hat.entries - diag)
    js_ord = cfg.basis.ordinal(tuple(int(a - b) for a, b in zip(cfg.j_star, center)))
    contour = ContourSpec.for_k(float(kvec @ kvec), k_eff, cfg.delta,
                                cfg.contour.nodes)
    series = series_terms(h_hat.entries, w_hat, contour, js_ord, cfg.r_max,
                          full_matrices=False, guard=cfg.guard, model_op=op)
    return series.lam
