"""Operational membership test for the non-resonant momentum set.

The construction needs, at a candidate wavevector kvec = t + j*, that

  * exactly one unperturbed level |kvec + i|^2 lies in the spectral window
    [k^2 - k^(-1-delta), k^2 + k^(-1-delta)], with a safe margin to the next;
  * the same holds for the model operator, and its spectrum keeps a guard
    distance from the integration circle;
  * the symmetrized resolvent products stay within their power-law bounds
    ||B0||_1 < C k^(2 delta), ||B0^3||_1 < C k^(-1/5 + 21 delta), and
    max_z ||(H_hat - z)^(-1/2)||_1 < C k^((1+delta)/2).

These are exactly the hypotheses the expansion and the fixed-point argument
consume downstream, so their conjunction serves as the admissibility
surrogate. The absolute constants are not pinned by theory at finite k;
checks run with a single fitted multiplier (default 10). Failures are data,
not errors: every margin is reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NoAdmissiblePoint
from .lattice import (LatticeBasis, ModelDecomposition, QuasiMomentum,
                      build_model, gamma_set, split_k)
from .linop import (ContourSpec, ModelOperator, assemble_model,
                    resolvent_half_norm, sandwich_norms)
from .trigpoly import IntVec, TrigPolynomial

GOLDEN = 0.6180339887498949


def spectral_window(k: float, delta: float) -> tuple[float, float]:
    half = k ** (-1.0 - delta)
    return k * k - half, k * k + half


@dataclass
class NonResReport:
    """Margins of every admissibility check at one quasimomentum."""

    k: float
    delta: float
    window: tuple[float, float]
    unique_unperturbed: bool
    margin_unperturbed: float     # distance of second-nearest level to window
    unique_model: bool
    margin_model: float
    contour_clearance: float      # min dist of model spectrum to circle / radius
    normA: float
    normA_bound: float
    normA3: float
    normA3_bound: float
    resolvent_half_norm: float
    resolvent_half_bound: float
    guard: float
    fit_const: float
    passed: bool

    def margin_min(self) -> float:
        return min(self.margin_unperturbed, self.margin_model)

    def to_json_obj(self) -> dict:
        return {
            "k": self.k, "delta": self.delta,
            "window": list(self.window),
            "unique_unperturbed": self.unique_unperturbed,
            "margin_unperturbed": self.margin_unperturbed,
            "unique_model": self.unique_model,
            "margin_model": self.margin_model,
            "contour_clearance": self.contour_clearance,
            "normA": self.normA, "normA_bound": self.normA_bound,
            "normA3": self.normA3, "normA3_bound": self.normA3_bound,
            "resolvent_half_norm": self.resolvent_half_norm,
            "resolvent_half_bound": self.resolvent_half_bound,
            "guard": self.guard, "fit_const": self.fit_const,
            "passed": self.passed,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, **kw)


def _window_margins(levels: np.ndarray, window: tuple[float, float]) -> tuple[bool, float]:
    """(exactly one level inside, distance of second-nearest level to window)."""
    lo, hi = window
    below = np.maximum(lo - levels, 0.0)
    above = np.maximum(levels - hi, 0.0)
    dist = below + above
    inside = int((dist == 0.0).sum())
    order = np.sort(dist)
    margin = float(order[1]) if len(order) > 1 else float("inf")
    return inside == 1, margin


def check_nonresonance(v: TrigPolynomial, t: QuasiMomentum, k: float, delta: float,
                       model: ModelDecomposition, basis: LatticeBasis, *,
                       nodes: int = 64, guard: float = 0.1,
                       fit_const: float = 10.0, norm_samples: int = 8,
                       model_op: ModelOperator | None = None) -> NonResReport:
    """Evaluate every admissibility margin at kvec = t + model.center."""
    kvec = t.vec + np.asarray(model.center, dtype=float)
    center_val = float(kvec @ kvec)
    k_eff = float(np.sqrt(center_val))
    if abs(k_eff - k) > 1e-8 * max(1.0, k):
        raise ConfigError(f"k={k} inconsistent with |t + center|={k_eff}")
    if spectral_window(k, delta)[0] <= 0:
        raise ConfigError("spectral window touches zero; k too small")

    window = spectral_window(k_eff, delta)
    h_hat, w_hat = assemble_model(v, t, model, basis)
    op = model_op if model_op is not None else ModelOperator(h_hat.entries)

    unperturbed = h_hat.entries.diagonal().real
    uu, mu_margin = _window_margins(unperturbed, window)
    um, mm_margin = _window_margins(op.lam, window)

    contour = ContourSpec.for_k(center_val, k_eff, delta, nodes)
    dist_circle = np.abs(np.abs(op.lam - contour.center) - contour.radius)
    clearance = float(dist_circle.min() / contour.radius)

    half = resolvent_half_norm(op, contour, norm_samples)
    n1, n3 = sandwich_norms(op, w_hat, contour, norm_samples)
    b_half = k_eff ** (0.5 * (1.0 + delta))
    b_1 = k_eff ** (2.0 * delta)
    b_3 = k_eff ** (-0.2 + 21.0 * delta)

    passed = (uu and um and clearance >= guard
              and n1 <= fit_const * b_1
              and n3 <= fit_const * b_3
              and half <= fit_const * b_half)
    return NonResReport(
        k=k_eff, delta=delta, window=window,
        unique_unperturbed=uu, margin_unperturbed=mu_margin,
        unique_model=um, margin_model=mm_margin,
        contour_clearance=clearance,
        normA=n1, normA_bound=b_1, normA3=n3, normA3_bound=b_3,
        resolvent_half_norm=half, resolvent_half_bound=b_half,
        guard=guard, fit_const=fit_const, passed=passed)


def find_admissible_t(nu, k: float, v: TrigPolynomial, delta: float,
                      attempts: int, *, basis: LatticeBasis, r0: float,
                      coeff: float = 1.0, nodes: int = 64, guard: float = 0.1,
                      fit_const: float = 10.0, seed: int = 0,
                      norm_samples: int = 8
                      ) -> tuple[QuasiMomentum, IntVec, NonResReport]:
    """Locate a passing quasimomentum near direction nu.

    Tries kvec = k * nu first, then perturbs the modulus within
    [k - k^(-2-2*delta), k + k^(-2-2*delta)] by golden-ratio steps. Returns
    the first passing (t, j*, report); raises NoAdmissiblePoint otherwise.
    """
    if attempts < 1:
        raise ConfigError("attempts must be >= 1")
    nu = np.asarray(nu, dtype=float)
    nu = nu / np.linalg.norm(nu)
    gamma = gamma_set(v, r0)
    width = k ** (-2.0 - 2.0 * delta)
    last = None
    for i in range(attempts):
        if i == 0:
            k_i = k
        else:
            frac = (i * GOLDEN + seed * GOLDEN ** 2) % 1.0
            k_i = k + width * (2.0 * frac - 1.0)
        kvec = k_i * nu
        j_star, t = split_k(kvec)
        center = tuple(int(x) for x in j_star)
        k_eff = float(np.linalg.norm(kvec))
        try:
            model = build_model(v, gamma, k_eff, r0, basis, coeff, center)
            report = check_nonresonance(v, t, k_eff, delta, model, basis,
                                        nodes=nodes, guard=guard,
                                        fit_const=fit_const,
                                        norm_samples=norm_samples)
        except ConfigError:
            continue
        last = report
        if report.passed:
            return t, center, report
    detail = f"; last margins: {last.to_json()}" if last is not None else ""
    raise NoAdmissiblePoint(f"no admissible point near nu={nu.tolist()} "
                            f"after {attempts} attempts{detail}")
