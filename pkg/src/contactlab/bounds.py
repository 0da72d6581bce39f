"""Tightness-radius lower bounds and criteria.

The ct_K family, the convexity bound, the weak-compatibility bound
ct_K^{-1}(m_g), the geometric bound with constants A and B, the Reeb-tube
bound, the nonpositive-curvature criterion K <= -m_g^2 and the
quasi-geodesic criterion |nabla_N N| < sqrt(K), plus the radial Hessian
comparison check used by the acceptance suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import contact
from .errors import (ConsistencyError, InsufficientData, OutOfRange,
                     RequiresCompatible)
from .manifold import EvalContext
from .tensor import DEFAULT_FD, FDConfig, gradient, hessian

__all__ = [
    "CurvatureData", "BoundReport", "ct", "ct_inverse",
    "bound_main", "bound_weak", "bound_geometric", "bound_reeb_tube",
    "criterion_hyperbolic", "criterion_quasi_geodesic", "hessian_lower_check",
    "curvature_from_known",
]


@dataclass(frozen=True)
class CurvatureData:
    """Curvature inputs with per-field provenance
    (user | sampled | catalog)."""

    K_upper: float | None = None       # sec(M) <= K_upper
    sec_abs_max: float | None = None
    ric_reeb_min: float | None = None
    A_override: float | None = None    # e.g. totally geodesic disks force A=0
    provenance: dict = field(default_factory=dict)


def curvature_from_known(spec, provenance: str = "catalog") -> CurvatureData:
    known = spec.known
    prov = {}
    for key in ("sec_upper", "sec_abs_max", "ric_reeb_min"):
        if getattr(known, key) is not None:
            prov[key] = provenance
    return CurvatureData(K_upper=known.sec_upper,
                         sec_abs_max=known.sec_abs_max,
                         ric_reeb_min=known.ric_reeb_min,
                         provenance=prov)


@dataclass
class BoundReport:
    theorem: str
    inputs: dict
    value: float | None = None           # radius; math.inf allowed
    verdict: str | None = None           # holds | fails | insufficient-data |
                                         # inapplicable (criteria only)
    derivation: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def as_dict(self):
        return {
            "theorem": self.theorem,
            "inputs": self.inputs,
            "value": ("infinity" if self.value == math.inf else self.value),
            "verdict": self.verdict,
            "derivation": self.derivation,
            "warnings": self.warnings,
        }


# --- the ct family ---------------------------------------------------------

def ct(K_signed: float, r: float) -> float:
    """sqrt(K) cot(sqrt(K) r), 1/r, or sqrt(|K|) coth(sqrt(|K|) r)."""
    if r <= 0:
        raise OutOfRange("ct is defined for r > 0")
    if K_signed > 0:
        s = math.sqrt(K_signed)
        if r >= math.pi / (2 * s):
            raise OutOfRange(
                f"r={r:.6g} is not below pi/(2 sqrt(K))={math.pi/(2*s):.6g}")
        return s / math.tan(s * r)
    if K_signed == 0:
        return 1.0 / r
    s = math.sqrt(-K_signed)
    return s / math.tanh(s * r)


def ct_inverse(K_signed: float, y: float) -> float:
    """Unique r with ct(K, r) = y, or +infinity on the ill-defined range."""
    if y < 0:
        raise OutOfRange("ct_inverse needs y >= 0")
    if K_signed < 0:
        s = math.sqrt(-K_signed)
        if y <= s:
            return math.inf
        # ct(K, r) = s coth(s r) = y  =>  r = atanh(s / y) / s
        return math.atanh(s / y) / s
    if y == 0:
        return math.inf
    if K_signed == 0:
        return 1.0 / y
    # K > 0: ct decreases from +inf to 0 on (0, pi/(2 sqrt K)); bisect.
    s = math.sqrt(K_signed)
    hi = math.pi / (2 * s)
    lo = hi * 1e-18
    while ct(K_signed, lo) < y:
        lo *= 0.5
    a, b = lo, hi
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        if ct(K_signed, mid) > y:
            a = mid
        else:
            b = mid
        if (b - a) <= 1e-12 * b:
            break
    return 0.5 * (a + b)


# --- bounds ----------------------------------------------------------------

def _inp(value, provenance):
    return {"value": ("infinity" if value == math.inf else value),
            "provenance": provenance}


def bound_main(ctx: EvalContext, curv: CurvatureData, inj, conv,
               compat: contact.CompatClass) -> BoundReport:
    """Convexity-radius bound for compatible metrics: the best of conv(g),
    inj (nonpositive curvature) and min(inj, pi/(2 sqrt K)) (sec <= K > 0)."""
    if not contact.compat_at_least(compat, "Compatible"):
        raise RequiresCompatible(
            f"classification is {compat.cls}; the convexity bound needs a "
            "Compatible metric")
    rep = BoundReport("main", {})
    K = curv.K_upper
    candidates = []
    if conv is not None:
        rep.inputs["conv"] = _inp(conv, "user")
        candidates.append(conv)
        rep.derivation.append(f"convexity radius bound: {conv}")
    if K is not None:
        rep.inputs["K"] = _inp(K, curv.provenance.get("sec_upper", "user"))
        if K <= 0 and inj is not None:
            candidates.append(inj)
            rep.derivation.append(
                f"nonpositive curvature: bound equals inj = {inj}")
        elif K > 0 and inj is not None:
            val = min(inj, math.pi / (2 * math.sqrt(K)))
            candidates.append(val)
            rep.derivation.append(
                f"sec <= {K} > 0: min(inj, pi/(2 sqrt K)) = {val}")
    if inj is not None:
        rep.inputs["inj"] = _inp(inj, "user")
    if not candidates:
        raise InsufficientData(
            "need conv, or inj together with a curvature upper bound")
    rep.value = max(candidates)
    rep.derivation.append(f"value = best available bound = {rep.value}")
    return rep


def bound_weak(ctx: EvalContext, curv: CurvatureData, conv,
               region, grid, fd: FDConfig = DEFAULT_FD,
               m_g: float | None = None) -> BoundReport:
    """min(ct_K^{-1}(m_g), conv) for weakly compatible metrics."""
    rep = BoundReport("weak", {})
    if curv.K_upper is None:
        raise InsufficientData("need a sectional curvature upper bound K")
    if m_g is None:
        est = contact.m_g_estimate(ctx, region, grid, fd)
        m_g = est["m_g"]
        rep.inputs["m_g"] = _inp(m_g, "sampled")
        rep.derivation.append(
            f"m_g sampled on {est['n_points']} grid points, "
            f"argmax at {est['argmax']}")
    else:
        rep.inputs["m_g"] = _inp(m_g, "user")
    rep.inputs["K"] = _inp(curv.K_upper, curv.provenance.get("sec_upper", "user"))
    radius = ct_inverse(curv.K_upper, m_g)
    rep.derivation.append(f"ct_inverse(K, m_g) = {radius}")
    if conv is not None:
        rep.inputs["conv"] = _inp(conv, "user")
        rep.value = min(radius, conv)
    else:
        rep.warnings.append("conv not supplied; using ct_inverse term alone")
        rep.value = radius
    return rep


def _constants_ab(curv: CurvatureData, theta: float, rep: BoundReport):
    if curv.ric_reeb_min is None:
        raise InsufficientData("need min Ric(R_alpha)")
    if curv.A_override is not None:
        A = curv.A_override
        rep.inputs["A"] = _inp(A, curv.provenance.get("A", "catalog"))
        rep.derivation.append(f"A override (totally geodesic disks): A = {A}")
    else:
        if curv.sec_abs_max is None:
            raise InsufficientData("need max |sec|")
        A = 4.0 / 3.0 * curv.sec_abs_max
        rep.inputs["A"] = _inp(A, curv.provenance.get("sec_abs_max", "user"))
        rep.derivation.append(f"A = 4/3 max|sec| = {A}")
    radicand = theta * theta / 4.0 - 0.5 * curv.ric_reeb_min
    if radicand < -1e-6:
        raise ConsistencyError(
            f"B radicand {radicand:.3e} is negative beyond sampling noise; "
            "inputs are inconsistent (the radicand equals |h|^2 >= 0)")
    if radicand < 0:
        rep.warnings.append(
            f"clamped tiny negative B radicand {radicand:.3e} to 0")
        radicand = 0.0
    B = theta / 2.0 + math.sqrt(radicand)
    rep.inputs["B"] = _inp(B, "derived")
    rep.inputs["theta_prime"] = _inp(theta, "sampled")
    rep.inputs["ric_reeb_min"] = _inp(
        curv.ric_reeb_min, curv.provenance.get("ric_reeb_min", "user"))
    rep.derivation.append(f"B = theta'/2 + sqrt(theta'^2/4 - Ric_min/2) = {B}")
    return A, B


def bound_geometric(ctx: EvalContext, curv: CurvatureData, inj,
                    region, grid, fd: FDConfig = DEFAULT_FD,
                    compat: contact.CompatClass | None = None,
                    theta: float | None = None) -> BoundReport:
    """min{inj/2, pi/(2 sqrt K), 2/(sqrt(2A + B^2) + B)}."""
    if compat is None:
        compat = contact.classify_compatibility(ctx, region, grid, tol=1e-3, fd=fd)
    if not contact.compat_at_least(compat, "Compatible"):
        raise RequiresCompatible(
            f"classification is {compat.cls}; the geometric bound needs a "
            "Compatible metric")
    rep = BoundReport("geometric", {})
    if theta is None:
        pts = contact.grid_points(region, grid)
        pts = pts[ctx.in_domain(pts)]
        theta = float(np.mean(contact.theta_prime(ctx, pts, fd)))
    A, B = _constants_ab(curv, theta, rep)
    candidates = [2.0 / (math.sqrt(2.0 * A + B * B) + B)]
    rep.derivation.append(f"2/(sqrt(2A+B^2)+B) = {candidates[0]}")
    if inj is not None:
        rep.inputs["inj"] = _inp(inj, "user")
        candidates.append(inj / 2.0)
    else:
        rep.warnings.append("inj not supplied; inj/2 term skipped")
    K = curv.K_upper
    if K is not None and K > 0:
        rep.inputs["K"] = _inp(K, curv.provenance.get("sec_upper", "user"))
        candidates.append(math.pi / (2.0 * math.sqrt(K)))
    rep.value = min(candidates)
    if rep.value > 2.0 / theta + 1e-12:
        rep.warnings.append("bound exceeds 2/theta'; check inputs")
    rep.derivation.append(f"value = min of terms = {rep.value}")
    return rep


def bound_reeb_tube(ctx: EvalContext, curv: CurvatureData, inj_gamma,
                    region, grid, fd: FDConfig = DEFAULT_FD,
                    compat: contact.CompatClass | None = None,
                    theta: float | None = None) -> BoundReport:
    """Radius below which a tube around a Reeb orbit is the standard
    contact solid torus."""
    if inj_gamma is None:
        raise InsufficientData("need inj_gamma (normal injectivity radius "
                               "of the orbit), a user input")
    if compat is None:
        compat = contact.classify_compatibility(ctx, region, grid, tol=1e-3, fd=fd)
    if not contact.compat_at_least(compat, "Compatible"):
        raise RequiresCompatible(
            f"classification is {compat.cls}; the tube bound needs a "
            "Compatible metric")
    rep = BoundReport("reeb-tube", {})
    if theta is None:
        pts = contact.grid_points(region, grid)
        pts = pts[ctx.in_domain(pts)]
        theta = float(np.mean(contact.theta_prime(ctx, pts, fd)))
    A, B = _constants_ab(curv, theta, rep)
    rep.inputs["inj_gamma"] = _inp(inj_gamma, "user")
    rep.value = min(2.0 / (math.sqrt(2.0 * A + B * B) + B), inj_gamma)
    rep.derivation.append(
        f"value = min(2/(sqrt(2A+B^2)+B), inj_gamma) = {rep.value}; below "
        "this radius the tube embeds in (S^1 x D^2, ker(d phi + r^2 d theta))")
    return rep


# --- criteria --------------------------------------------------------------

def criterion_hyperbolic(ctx: EvalContext, curv: CurvatureData,
                         region, grid, fd: FDConfig = DEFAULT_FD,
                         complete: bool = False,
                         m_g: float | None = None) -> BoundReport:
    """Universal tightness criterion K <= -m_g^2 (non-strict) for complete
    nonpositively curved metrics; completeness is user-asserted."""
    rep = BoundReport("hyperbolic-criterion", {})
    if curv.K_upper is None:
        rep.verdict = "insufficient-data"
        return rep
    if m_g is None:
        m_g = contact.m_g_estimate(ctx, region, grid, fd)["m_g"]
        rep.inputs["m_g"] = _inp(m_g, "sampled")
    else:
        rep.inputs["m_g"] = _inp(m_g, "user")
    rep.inputs["K"] = _inp(curv.K_upper, curv.provenance.get("sec_upper", "user"))
    rep.inputs["complete"] = _inp(complete, "user")
    # non-strict inequality, with slack for sampling noise in m_g
    slack = 1e-6 * (1.0 + abs(curv.K_upper))
    ok = curv.K_upper <= -(m_g * m_g) + slack
    rep.verdict = "holds" if ok else "fails"
    rep.derivation.append(
        f"K = {curv.K_upper} vs -m_g^2 = {-(m_g*m_g)}: {rep.verdict}")
    if not complete:
        rep.warnings.append("completeness not asserted; conclusion "
                            "requires a complete metric")
    return rep


def criterion_quasi_geodesic(ctx: EvalContext, curv: CurvatureData,
                             region, grid, fd: FDConfig = DEFAULT_FD,
                             closed: bool = False) -> BoundReport:
    """|nabla_N N| < sqrt(K0) (strict) under sec <= -K0 < 0."""
    rep = BoundReport("quasi-geodesic-criterion", {})
    if curv.K_upper is None:
        rep.verdict = "insufficient-data"
        return rep
    rep.inputs["K"] = _inp(curv.K_upper, curv.provenance.get("sec_upper", "user"))
    rep.inputs["closed"] = _inp(closed, "user")
    if curv.K_upper >= 0:
        rep.verdict = "inapplicable"
        rep.derivation.append("needs a negative curvature upper bound")
        return rep
    k0 = -curv.K_upper
    pts = contact.grid_points(region, grid)
    pts = pts[ctx.in_domain(pts)]
    acc = contact.nabla_n_n(ctx, pts, fd)
    g = ctx.metric(pts)
    worst = float(np.max(np.sqrt(np.einsum("...ij,...i,...j->...", g, acc, acc))))
    rep.inputs["max_nabla_N_N"] = _inp(worst, "sampled")
    ok = worst < math.sqrt(k0)
    rep.verdict = "holds" if ok else "fails"
    rep.derivation.append(
        f"max |nabla_N N| = {worst} vs sqrt(K0) = {math.sqrt(k0)}: {rep.verdict}")
    if not closed:
        rep.warnings.append("closedness not asserted; conclusion requires "
                            "a closed manifold")
    return rep


# --- Hessian comparison ----------------------------------------------------

def hessian_lower_check(ctx: EvalContext, center, r: float, samples: int,
                        K: float, dist_fn, seed: int = 0,
                        fd: FDConfig = DEFAULT_FD):
    """Min over sampled unit tangents v perpendicular to grad(r) of
    Hess(r)(v, v) - ct_K(r), on specs with a closed-form distance oracle.

    The comparison inequality predicts slack >= 0, with equality in
    constant curvature.
    """
    from .geodesic import exp_map  # local import: geodesic builds on contact

    center = np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    g0 = ctx.metric(center)
    chol = np.linalg.cholesky(np.linalg.inv(g0))

    def dist_field(q):
        return dist_fn(center, q)

    slacks = []
    target = ct(K, r)
    for _ in range(samples):
        raw = rng.normal(size=3)
        v0 = chol @ raw
        v0 = v0 / np.sqrt(g0 @ v0 @ v0)
        q = exp_map(ctx, center, r * v0, fd=fd)
        grad_r = gradient(ctx, dist_field, q, fd)
        gq = ctx.metric(q)
        nr = grad_r / np.sqrt(gq @ grad_r @ grad_r)
        w = chol @ rng.normal(size=3)
        w = w - (gq @ w @ nr) * nr
        w = w / np.sqrt(gq @ w @ w)
        val = hessian(ctx, dist_field, q, w, w, fd)
        slacks.append(float(val) - target)
    return {
        "min_slack": min(slacks),
        "max_slack": max(slacks),
        "ct_K": target,
        "samples": samples,
    }
