"""Isoenergetic-surface tracing and direction-set measure estimation.

For a fixed energy lam and amplitude A, the surface is the set of
wavevectors kappa * nu whose nonlinear eigenvalue equals lam. Along every
admissible direction nu the radius kappa is the unique root of

    f(kappa) = lam(kappa * nu, A) - lam

inside I = [k - k^(-2-2 delta), k + k^(-2-2 delta)], k = sqrt(lam). Each
evaluation of f runs the full potential-map pipeline at kvec = kappa * nu.
Newton steps use the leading dispersion slope f' ~ 2 kappa (the eigenvalue
gradient is 2 kvec to high order), with bisection as the safeguard. The
deviation h = kappa - sqrt(lam - sigma |A|^2) measures the distortion from
the free sphere; failed directions are holes in the surface.

Direction grids: a deterministic spherical Fibonacci lattice for surface
traces, seeded uniform sphere sampling for measure estimates.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GPWaveError, NoRootInInterval
from .gpfix import GPEConfig, Workspace, assemble_solution, iterate
from .lattice import LatticeBasis, build_basis, build_model, gamma_set, split_k
from .linop import ContourSpec
from .nonres import find_admissible_t
from .trigpoly import TrigPolynomial

OMEGA2 = 4.0 * math.pi


@dataclass(frozen=True)
class IsoConfig:
    """Shared parameters for radius solves along many directions."""

    v: TrigPolynomial
    sigma: float
    delta: float
    j_max: float
    r0: float
    coeff: float = 1.0
    nodes: int = 32
    r_max: int = 8
    max_iters: int = 30
    fp_tol: float | None = None
    cutoff: float | None = None
    attempts: int = 8
    newton_tol: float = 1e-10
    max_newton: int = 12
    max_bisect: int = 60
    guard: float = 0.1
    fit_const: float = 10.0
    interval_scale: float = 1.0
    workers: int = 1
    norm_samples: int = 4
    enforce_smallness: bool = True


@dataclass
class IsoSample:
    """Radius solve along one direction."""

    nu: tuple[float, float, float]
    kappa: float
    h: float
    grad_h: tuple[float, float]
    passed: bool
    newton_residual: float
    reason: str = ""

    def csv_row(self) -> list:
        return [self.nu[0], self.nu[1], self.nu[2], self.kappa, self.h,
                self.grad_h[0], self.grad_h[1], self.passed, self.newton_residual]


@dataclass
class MeasureEstimate:
    """Monte-Carlo estimate of the admissible direction fraction."""

    lam: float
    samples: int
    pass_fraction: float
    surface_area_estimate: float
    confidence_halfwidth: float

    def to_json_obj(self) -> dict:
        return {"lambda": self.lam, "samples": self.samples,
                "pass_fraction": self.pass_fraction,
                "surface_area_estimate": self.surface_area_estimate,
                "confidence_halfwidth": self.confidence_halfwidth}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, **kw)


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic, nearly uniform direction lattice on the unit sphere."""
    if n < 1:
        raise ConfigError("need at least one direction")
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    theta = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=1)


def _pipeline_lambda(kvec: np.ndarray, a: complex, cfg: IsoConfig,
                     basis: LatticeBasis, gamma) -> float:
    """Nonlinear eigenvalue at one wavevector: model split, potential-map
    iteration, final assembly. Contour isolation and window guards run
    inside; any violation raises and marks the direction as a hole."""
    center, t = split_k(kvec)
    center = tuple(int(x) for x in center)
    k_eff = float(np.linalg.norm(kvec))
    model = build_model(cfg.v, gamma, k_eff, cfg.r0, basis, cfg.coeff, center)
    contour = ContourSpec.for_k(float(kvec @ kvec), k_eff, cfg.delta, cfg.nodes)
    run = GPEConfig(v=cfg.v, sigma=cfg.sigma, a=a, k=k_eff, delta=cfg.delta,
                    t=t, j_star=center, basis=basis, model=model,
                    contour=contour, r_max=cfg.r_max, max_iters=cfg.max_iters,
                    fp_tol=cfg.fp_tol, cutoff=cfg.cutoff,
                    enforce_smallness=cfg.enforce_smallness,
                    full_diagnostics=False, guard=cfg.guard,
                    fit_const=cfg.fit_const)
    ws = Workspace(run)
    report = iterate(run, ws)
    sol = assemble_solution(report, run, ws)
    return sol.lam


def solve_kappa(lam: float, a: complex, nu, cfg: IsoConfig) -> IsoSample:
    """Root of lam(kappa * nu, A) = lam inside the dispersion interval.

    The direction must first pass the admissibility search at k = sqrt(lam);
    afterwards each Newton evaluation relies on the pipeline's own contour
    and window guards. Newton uses the dispersion slope 2 kappa; if an
    iterate leaves the interval, a sign check plus bisection takes over.
    """
    nu = np.asarray(nu, dtype=float)
    nu = nu / np.linalg.norm(nu)
    k = math.sqrt(lam)
    basis = build_basis(cfg.j_max)
    find_admissible_t(nu, k, cfg.v, cfg.delta, cfg.attempts, basis=basis,
                      r0=cfg.r0, coeff=cfg.coeff, nodes=cfg.nodes,
                      guard=cfg.guard, fit_const=cfg.fit_const,
                      norm_samples=cfg.norm_samples)
    gamma = gamma_set(cfg.v, cfg.r0)
    width = cfg.interval_scale * k ** (-2.0 - 2.0 * cfg.delta)
    lo, hi = k - width, k + width
    k_free = math.sqrt(max(lam - cfg.sigma * abs(a) ** 2, 0.0))
    x = min(max(k_free, lo), hi)
    inner_tol = max(1e-12, 4.0 * np.finfo(float).eps * lam)

    def f(kap: float) -> float:
        return _pipeline_lambda(kap * nu, a, cfg, basis, gamma) - lam

    fx = f(x)
    for _ in range(cfg.max_newton):
        if abs(fx) <= inner_tol:
            break
        x_new = x - fx / (2.0 * x)
        if not (lo <= x_new <= hi):
            f_lo, f_hi = f(lo), f(hi)
            if f_lo == 0.0:
                x, fx = lo, 0.0
                break
            if f_hi == 0.0:
                x, fx = hi, 0.0
                break
            if f_lo * f_hi > 0:
                raise NoRootInInterval(
                    f"no sign change over [{lo}, {hi}]: f={f_lo:.3e}, {f_hi:.3e}")
            a_, b_, fa = lo, hi, f_lo
            for _ in range(cfg.max_bisect):
                mid = 0.5 * (a_ + b_)
                fm = f(mid)
                if abs(fm) <= inner_tol:
                    break
                if fa * fm <= 0:
                    b_ = mid
                else:
                    a_, fa = mid, fm
            x, fx = mid, fm
            break
        x = x_new
        fx = f(x)

    return IsoSample(nu=tuple(float(u) for u in nu), kappa=float(x),
                     h=float(x - k_free), grad_h=(float("nan"), float("nan")),
                     passed=bool(abs(fx) <= cfg.newton_tol),
                     newton_residual=float(abs(fx)))


def _solve_kappa_task(args) -> IsoSample:
    lam, a, nu, cfg = args
    try:
        return solve_kappa(lam, a, nu, cfg)
    except GPWaveError as exc:
        return IsoSample(nu=tuple(float(u) for u in np.asarray(nu, float)
                                  / np.linalg.norm(nu)),
                         kappa=float("nan"), h=float("nan"),
                         grad_h=(float("nan"), float("nan")), passed=False,
                         newton_residual=float("nan"),
                         reason=f"{type(exc).__name__}: {exc}")


def _run_samples(lam: float, a: complex, directions: np.ndarray,
                 cfg: IsoConfig) -> list[IsoSample]:
    tasks = [(lam, a, nu, cfg) for nu in directions]
    if cfg.workers <= 1 or len(tasks) < 4:
        return [_solve_kappa_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_solve_kappa_task, tasks, chunksize=8))


def _tangent_basis(nu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pick = np.array([1.0, 0.0, 0.0]) if abs(nu[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(nu, pick)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(nu, e1)


def _fill_gradients(samples: list[IsoSample], neighbors: int = 6) -> None:
    """Least-squares tangential gradient of h from nearby passing samples."""
    passing = [i for i, s in enumerate(samples) if s.passed]
    if len(passing) < 4:
        return
    dirs = np.array([samples[i].nu for i in passing])
    hs = np.array([samples[i].h for i in passing])
    for row, i in enumerate(passing):
        nu = dirs[row]
        cosang = dirs @ nu
        order = np.argsort(-cosang)
        picked = [j for j in order if j != row][:neighbors]
        if len(picked) < 3:
            continue
        e1, e2 = _tangent_basis(nu)
        rows, rhs = [], []
        for j in picked:
            d = dirs[j] - nu
            rows.append([d @ e1, d @ e2])
            rhs.append(hs[j] - hs[row])
        sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
        samples[i].grad_h = (float(sol[0]), float(sol[1]))


def trace_surface(lam: float, a: complex, directions, cfg: IsoConfig) -> list[IsoSample]:
    """Radius solve along every direction; failures become holes. Tangential
    gradients of h are filled by local fits among passing neighbors."""
    directions = np.asarray(directions, dtype=float)
    samples = _run_samples(lam, a, directions, cfg)
    _fill_gradients(samples)
    return samples


def estimate_measure(lam: float, a: complex, samples: int, seed: int,
                     cfg: IsoConfig) -> MeasureEstimate:
    """Seeded uniform-sphere Monte Carlo of the passing-direction fraction.

    The surface-area plug-in uses omega_2 * mean(kappa^2) over passing
    samples; the tangential-distortion metric correction is second order in
    the gradient bound and is deliberately ignored.
    """
    if samples < 100:
        raise ConfigError("need at least 100 samples")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((samples, 3))
    norms = np.linalg.norm(dirs, axis=1)
    while (norms < 1e-12).any():
        bad = norms < 1e-12
        dirs[bad] = rng.standard_normal((int(bad.sum()), 3))
        norms = np.linalg.norm(dirs, axis=1)
    dirs /= norms[:, None]
    out = _run_samples(lam, a, dirs, cfg)
    passed = [s for s in out if s.passed]
    frac = len(passed) / samples
    area = OMEGA2 * float(np.mean([s.kappa ** 2 for s in passed])) if passed else float("nan")
    half = 1.96 * math.sqrt(max(frac * (1.0 - frac), 0.0) / samples)
    return MeasureEstimate(lam=float(lam), samples=int(samples),
                           pass_fraction=float(frac),
                           surface_area_estimate=float(area),
                           confidence_halfwidth=float(half))
