"""Pointwise Riemannian tensor calculus on a chart via finite differences.

Everything is batched: points have shape (..., 3) and all operations
broadcast over the leading axes.  Scalar/vector/covector "field handles"
are plain callables mapping points to arrays, which lets covariant
derivatives and exterior derivatives difference them on FD stencils.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePlane, DomainViolation
from .manifold import EvalContext

__all__ = [
    "FDConfig", "FrameXi",
    "metric_at", "inverse_metric_at", "christoffel", "riemann",
    "sectional", "ricci_dir", "d_oneform", "hodge_star_2form",
    "cov_deriv", "lie_bracket", "gradient", "hessian", "cross",
]

# Permutation symbol, eps[i,j,k] = sign of (i j k).
_EPS = np.zeros((3, 3, 3))
for _i, _j, _k, _s in ((0, 1, 2, 1), (1, 2, 0, 1), (2, 0, 1, 1),
                       (0, 2, 1, -1), (2, 1, 0, -1), (1, 0, 2, -1)):
    _EPS[_i, _j, _k] = _s


@dataclass(frozen=True)
class FDConfig:
    """Central finite-difference configuration.

    order is 2 or 4; richardson combines evaluations at h and h/2 for one
    extra convergence order pair (used for acceptance-quality runs).
    """

    h: float = 1e-4
    order: int = 4
    richardson: bool = False

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("FD step must be positive")
        if self.order not in (2, 4):
            raise ValueError("FD order must be 2 or 4")


DEFAULT_FD = FDConfig()

_D1 = {
    2: ((-1, 1), (-0.5, 0.5)),
    4: ((-2, -1, 1, 2), (1 / 12, -8 / 12, 8 / 12, -1 / 12)),
}
_D2 = {
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    4: ((-2, -1, 0, 1, 2), (-1 / 12, 16 / 12, -30 / 12, 16 / 12, -1 / 12)),
}


def _guard_stencil(ctx: EvalContext, p, radius):
    """The stencil must stay inside the domain (step < boundary gap / 4)."""
    if not ctx.spec.domain:
        return
    p = np.asarray(p, dtype=float)
    for i in range(3):
        for side in (-1.0, 1.0):
            q = p.copy()
            q[..., i] += side * 4.0 * radius
            if not np.all(ctx.in_domain(q)):
                raise DomainViolation(
                    "FD stencil too close to the domain boundary of "
                    f"{ctx.spec.name!r}; reduce the step")


def _axis_diff(f, p, i, h, order):
    offs, wts = _D1[order]
    e = np.zeros(3)
    e[i] = 1.0
    acc = None
    for o, w in zip(offs, wts):
        term = w * np.asarray(f(p + (o * h) * e))
        acc = term if acc is None else acc + term
    return acc / h


def _axis_diff2(f, p, i, h, order):
    offs, wts = _D2[order]
    e = np.zeros(3)
    e[i] = 1.0
    acc = None
    for o, w in zip(offs, wts):
        term = w * np.asarray(f(p + (o * h) * e))
        acc = term if acc is None else acc + term
    return acc / (h * h)


def _axis_diff_mixed(f, p, i, j, h, order):
    offs, wts = _D1[order]
    ei = np.zeros(3)
    ei[i] = 1.0
    ej = np.zeros(3)
    ej[j] = 1.0
    acc = None
    for oi, wi in zip(offs, wts):
        for oj, wj in zip(offs, wts):
            term = (wi * wj) * np.asarray(f(p + (oi * h) * ei + (oj * h) * ej))
            acc = term if acc is None else acc + term
    return acc / (h * h)


def _richardson(diff, fd: FDConfig):
    """Evaluate ``diff(h)`` with optional Richardson extrapolation."""
    if not fd.richardson:
        return diff(fd.h)
    coarse = diff(fd.h)
    fine = diff(fd.h / 2)
    k = 2 ** fd.order
    return (k * fine - coarse) / (k - 1)


def partial(f, p, i, fd: FDConfig = DEFAULT_FD):
    """d/dx_i of an arbitrary field handle (central difference)."""
    return _richardson(lambda h: _axis_diff(f, p, i, h, fd.order), fd)


def jacobian(f, p, fd: FDConfig = DEFAULT_FD):
    """All three partials, stacked on a new leading -2 axis: out[..., i, :]."""
    cols = [partial(f, p, i, fd) for i in range(3)]
    return np.stack(cols, axis=-2) if np.ndim(cols[0]) else np.stack(cols, axis=-1)


# --- metric level ----------------------------------------------------------

def metric_at(ctx: EvalContext, p):
    ctx.check_domain(p)
    return ctx.metric_spd(p)


def inverse_metric_at(ctx: EvalContext, p):
    ctx.check_domain(p)
    return ctx.inverse_metric(p)


def christoffel(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD):
    """Levi-Civita symbols Gamma[..., l, i, j] (symmetric in i, j)."""
    p = np.asarray(p, dtype=float)
    _guard_stencil(ctx, p, (2 if fd.order == 4 else 1) * fd.h)
    ginv = ctx.inverse_metric(p)
    dg = np.stack([_richardson(lambda h, k=k: _axis_diff(ctx.metric, p, k, h, fd.order), fd)
                   for k in range(3)], axis=-3)  # dg[..., k, i, j]
    # Gamma^l_ij = 1/2 g^{lm} (d_i g_jm + d_j g_im - d_m g_ij)
    bracket = (np.einsum("...ijm->...mij", dg)
               + np.einsum("...jim->...mij", dg)
               - dg)
    return 0.5 * np.einsum("...lm,...mij->...lij", ginv, bracket)


def riemann(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD):
    """Covariant curvature tensor R[..., i, j, k, l] = <R(e_i,e_j) e_k, e_l>."""
    p = np.asarray(p, dtype=float)
    gamma = christoffel(ctx, p, fd)
    dgamma = np.stack(
        [_richardson(lambda h, k=k: _axis_diff(
            lambda q: christoffel(ctx, q, fd), p, k, h, fd.order), fd)
         for k in range(3)], axis=-4)  # dgamma[..., a, l, i, j] = d_a Gamma^l_ij
    r_up = (np.einsum("...iljk->...lijk", dgamma)
            - np.einsum("...jlik->...lijk", dgamma)
            + np.einsum("...lim,...mjk->...lijk", gamma, gamma)
            - np.einsum("...ljm,...mik->...lijk", gamma, gamma))
    g = ctx.metric(p)
    return np.einsum("...lm,...mijk->...ijkl", g, r_up)


def sectional(ctx: EvalContext, p, u, v, fd: FDConfig = DEFAULT_FD):
    """Sectional curvature of span(u, v); sign pinned so hyperbolic space
    gives -1 (verified on the catalog)."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    g = ctx.metric(p)
    uu = np.einsum("...ij,...i,...j->...", g, u, u)
    vv = np.einsum("...ij,...i,...j->...", g, v, v)
    uv = np.einsum("...ij,...i,...j->...", g, u, v)
    denom = uu * vv - uv * uv
    if np.any(denom < 1e-10):
        raise DegeneratePlane("u and v are (numerically) linearly dependent")
    r = riemann(ctx, p, fd)
    num = np.einsum("...ijkl,...i,...j,...k,...l->...", r, u, v, v, u)
    return num / denom


def _complete_onb(ctx: EvalContext, p, w):
    """Two unit vectors completing unit w to a g-orthonormal basis (batched,
    deterministic pivoting by residual size, stable tie order)."""
    p = np.asarray(p, dtype=float)
    g = ctx.metric(p)
    w = np.asarray(w, dtype=float)
    w = w / np.sqrt(np.einsum("...ij,...i,...j->...", g, w, w))[..., None]
    cands = np.broadcast_to(np.eye(3), p.shape[:-1] + (3, 3)).copy()
    proj = np.einsum("...ij,...ci,...j->...c", g, cands, w)
    resid = cands - proj[..., None] * w[..., None, :]
    norms = np.sqrt(np.einsum("...ij,...ci,...cj->...c", g, resid, resid))
    order = np.argsort(-norms, axis=-1, kind="stable")
    pick = np.take_along_axis(resid, order[..., :2, None], axis=-2)
    e1 = pick[..., 0, :]
    e1 = e1 / np.sqrt(np.einsum("...ij,...i,...j->...", g, e1, e1))[..., None]
    e2 = pick[..., 1, :]
    e2 = e2 - np.einsum("...ij,...i,...j->...", g, e2, e1)[..., None] * e1
    e2 = e2 / np.sqrt(np.einsum("...ij,...i,...j->...", g, e2, e2))[..., None]
    return e1, e2


def ricci_dir(ctx: EvalContext, p, w, fd: FDConfig = DEFAULT_FD):
    """Ricci curvature of a unit direction: sum of the two sectional
    curvatures over an orthonormal completion (completion-independent)."""
    e1, e2 = _complete_onb(ctx, p, w)
    r = riemann(ctx, p, fd)

    def sec(u, v):
        g = ctx.metric(p)
        uu = np.einsum("...ij,...i,...j->...", g, u, u)
        vv = np.einsum("...ij,...i,...j->...", g, v, v)
        uv = np.einsum("...ij,...i,...j->...", g, u, v)
        num = np.einsum("...ijkl,...i,...j,...k,...l->...", r, u, v, v, u)
        return num / (uu * vv - uv * uv)

    return sec(w, e1) + sec(w, e2)


# --- exterior calculus -----------------------------------------------------

def d_oneform(ctx: EvalContext, alpha_field, p, fd: FDConfig = DEFAULT_FD):
    """(d alpha)_{ij} = d_i alpha_j - d_j alpha_i (no 1/2 factor)."""
    p = np.asarray(p, dtype=float)
    _guard_stencil(ctx, p, (2 if fd.order == 4 else 1) * fd.h)
    da = np.stack([partial(alpha_field, p, i, fd) for i in range(3)], axis=-2)
    return da - np.swapaxes(da, -1, -2)


def hodge_star_2form(ctx: EvalContext, F, p):
    """Hodge star of a 2-form for the orientation dx^dy^dz > 0:
    (*F)_i = 1/2 sqrt(det g) eps_{ijk} g^{ja} g^{kb} F_{ab}."""
    p = np.asarray(p, dtype=float)
    ctx.check_domain(p)
    ginv = ctx.inverse_metric(p)
    f_up = np.einsum("...ja,...kb,...ab->...jk", ginv, ginv, np.asarray(F, dtype=float))
    return 0.5 * ctx.sqrt_det_g(p)[..., None] * np.einsum("ijk,...jk->...i", _EPS, f_up)


def hodge_star_1form(ctx: EvalContext, a, p):
    """Hodge star of a 1-form: (*a)_{jk} = sqrt(det g) eps_{ijk} g^{im} a_m."""
    p = np.asarray(p, dtype=float)
    ginv = ctx.inverse_metric(p)
    a_up = np.einsum("...im,...m->...i", ginv, np.asarray(a, dtype=float))
    return ctx.sqrt_det_g(p)[..., None, None] * np.einsum("ijk,...i->...jk", _EPS, a_up)


def cross(ctx: EvalContext, p, u, v):
    """g-cross product: g-orthogonal to u and v with norm = area(u, v)."""
    p = np.asarray(p, dtype=float)
    w_cov = ctx.sqrt_det_g(p)[..., None] * np.einsum(
        "ijk,...i,...j->...k", _EPS, np.asarray(u, float), np.asarray(v, float))
    return np.einsum("...lk,...k->...l", ctx.inverse_metric(p), w_cov)


# --- derivatives of fields -------------------------------------------------

def _as_field(X):
    if callable(X):
        return X
    vec = np.asarray(X, dtype=float)

    def const_field(q):
        q = np.asarray(q, dtype=float)
        return np.broadcast_to(vec, q.shape[:-1] + (3,))

    return const_field


def cov_deriv(ctx: EvalContext, X, Y, p, fd: FDConfig = DEFAULT_FD):
    """(nabla_X Y)^k = X^i d_i Y^k + Gamma^k_ij X^i Y^j at p.

    X may be a field handle or a plain vector (only its value at p enters);
    Y must be evaluable on the FD stencil around p.
    """
    p = np.asarray(p, dtype=float)
    Xf, Yf = _as_field(X), _as_field(Y)
    x0, y0 = Xf(p), Yf(p)
    dY = np.stack([partial(Yf, p, i, fd) for i in range(3)], axis=-2)  # [..., i, k]
    gamma = christoffel(ctx, p, fd)
    return (np.einsum("...i,...ik->...k", x0, dY)
            + np.einsum("...kij,...i,...j->...k", gamma, x0, y0))


def lie_bracket(X, Y, p, fd: FDConfig = DEFAULT_FD):
    """[X, Y]^k = X^i d_i Y^k - Y^i d_i X^k (chart coordinates)."""
    p = np.asarray(p, dtype=float)
    Xf, Yf = _as_field(X), _as_field(Y)
    dY = np.stack([partial(Yf, p, i, fd) for i in range(3)], axis=-2)
    dX = np.stack([partial(Xf, p, i, fd) for i in range(3)], axis=-2)
    return (np.einsum("...i,...ik->...k", Xf(p), dY)
            - np.einsum("...i,...ik->...k", Yf(p), dX))


def gradient(ctx: EvalContext, f, p, fd: FDConfig = DEFAULT_FD):
    """g-gradient of a scalar field handle."""
    p = np.asarray(p, dtype=float)
    _guard_stencil(ctx, p, (2 if fd.order == 4 else 1) * fd.h)
    df = np.stack([partial(f, p, i, fd) for i in range(3)], axis=-1)
    return np.einsum("...ij,...j->...i", ctx.inverse_metric(p), df)


def hessian(ctx: EvalContext, f, p, u=None, v=None, fd: FDConfig = DEFAULT_FD):
    """Covariant Hessian: H_ij = d_i d_j f - Gamma^k_ij d_k f.

    With u, v supplied returns the contraction H(u, v); otherwise the
    matrix (..., 3, 3).
    """
    p = np.asarray(p, dtype=float)
    _guard_stencil(ctx, p, 2 * (2 if fd.order == 4 else 1) * fd.h)
    df = np.stack([partial(f, p, i, fd) for i in range(3)], axis=-1)
    d2 = np.empty(p.shape[:-1] + (3, 3))
    for i in range(3):
        d2[..., i, i] = _richardson(
            lambda h, i=i: _axis_diff2(f, p, i, h, fd.order), fd)
        for j in range(i + 1, 3):
            d2[..., i, j] = _richardson(
                lambda h, i=i, j=j: _axis_diff_mixed(f, p, i, j, h, fd.order), fd)
            d2[..., j, i] = d2[..., i, j]
    gamma = christoffel(ctx, p, fd)
    h_mat = d2 - np.einsum("...kij,...k->...ij", gamma, df)
    if u is None and v is None:
        return h_mat
    return np.einsum("...ij,...i,...j->...", h_mat,
                     np.asarray(u, float), np.asarray(v, float))


@dataclass(frozen=True)
class FrameXi:
    """Orthonormal frame (u, v, n) with u, v spanning the contact plane,
    n the unit normal, and (u, v, n) positively oriented."""

    u: np.ndarray
    v: np.ndarray
    n: np.ndarray
    pivots: np.ndarray  # coordinate indices used for the projection, (..., 2)
