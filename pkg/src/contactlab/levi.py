"""Levi forms on hypersurfaces of the symplectization R x M.

The almost complex structure J rotates the contact plane by a quarter
turn (J w = n x w there) and pairs the symplectization direction with the
unit normal of the plane: J dt = n, J n = -dt.  For a t-independent
function f the 1-form df o J has t-independent components, which keeps
the exterior derivative a purely spatial finite-difference stencil plus
the dt terms.

levi_identity_residual checks, with both sides computed independently,

    L(v, v) = Hess f(v, v) + Hess f(Jv, Jv)
              - |grad f| <n_S, grad ln rho - (grad ln theta')^perp> |v|^2

which loses its third term exactly when rho and theta' are constant.
"""

from __future__ import annotations

import numpy as np

from .contact import _dual_unit, contact_point_data, reeb_field, theta_prime
from .errors import DegenerateKernel
from .manifold import EvalContext
from .tensor import DEFAULT_FD, FDConfig, cross, gradient, hessian, partial

__all__ = ["j_apply", "complex_tangency_sample", "levi_form",
           "levi_rhs_terms", "levi_identity_residual"]


def _normal(ctx, q, fd):
    return contact_point_data(ctx, q, fd).n


def j_apply(ctx: EvalContext, p, vt, vx, fd: FDConfig = DEFAULT_FD):
    """J applied to the 4-vector vt dt + vx; returns (wt, wx)."""
    p = np.asarray(p, dtype=float)
    vx = np.asarray(vx, dtype=float)
    n = _normal(ctx, p, fd)
    g = ctx.metric(p)
    c = np.einsum("...ij,...i,...j->...", g, vx, n)
    xi_part = vx - c[..., None] * n
    wx = cross(ctx, p, n, xi_part) + np.asarray(vt)[..., None] * n
    return -c, wx


def _eta_components(ctx, f, q, fd):
    """(df o J) at spatial points q: (eta_t, eta_x) with eta_t = df(n)
    and eta_i = df(n x e_i)."""
    q = np.asarray(q, dtype=float)
    df = gradient_cov(ctx, f, q, fd)
    n = _normal(ctx, q, fd)
    eta_t = np.einsum("...i,...i->...", df, n)
    basis = np.broadcast_to(np.eye(3), q.shape[:-1] + (3, 3))
    nxe = np.stack([cross(ctx, q, n, basis[..., k, :]) for k in range(3)],
                   axis=-2)
    eta_x = np.einsum("...i,...ki->...k", df, nxe)
    return eta_t, eta_x


def gradient_cov(ctx, f, q, fd):
    """Plain partial derivatives of f (the covector df)."""
    return np.stack([partial(f, q, i, fd) for i in range(3)], axis=-1)


def complex_tangency_sample(ctx: EvalContext, f, p, t: float, rng_seed: int,
                            fd: FDConfig = DEFAULT_FD):
    """A random unit vector v with df(v) = 0 and df(Jv) = 0, from the
    2-dimensional common kernel on the symplectization tangent space.

    Returns (vt, vx); raises DegenerateKernel when df and df o J fail to
    be independent (e.g. f locally constant)."""
    p = np.asarray(p, dtype=float)
    df = gradient_cov(ctx, f, p, fd)
    eta_t, eta_x = _eta_components(ctx, f, p, fd)
    rows = np.stack([np.concatenate([[0.0], df]),
                     np.concatenate([[eta_t], eta_x])])
    _, s, vh = np.linalg.svd(rows)
    if s[0] < 1e-14 or s[1] < 1e-10 * s[0]:
        raise DegenerateKernel(
            "df and df o J are linearly dependent; the level set of f is "
            "not a hypersurface with well-defined complex tangencies here")
    rng = np.random.default_rng(rng_seed)
    coef = rng.normal(size=2)
    v4 = coef[0] * vh[2] + coef[1] * vh[3]
    vt, vx = v4[0], v4[1:]
    g = ctx.metric(p)
    norm = np.sqrt(vt * vt + np.einsum("ij,i,j->", g, vx, vx))
    return vt / norm, vx / norm


def levi_form(ctx: EvalContext, f, p, t: float, v, fd: FDConfig = DEFAULT_FD):
    """L(v, v) = -d(df o J)(v, Jv) for v = (vt, vx) on R x M."""
    p = np.asarray(p, dtype=float)
    vt, vx = v
    wt, wx = j_apply(ctx, p, vt, vx, fd)

    # D[a][b] = d_a eta_b over 4 indices, index 0 = t; eta is t-independent
    # so row 0 vanishes, but the dt-column (derivatives of eta_t) does not.
    d_eta_t = np.stack(
        [partial(lambda q: _eta_components(ctx, f, q, fd)[0], p, i, fd)
         for i in range(3)])
    d_eta_x = np.stack(
        [partial(lambda q: _eta_components(ctx, f, q, fd)[1], p, i, fd)
         for i in range(3)])  # d_eta_x[i, j] = d_i eta_j
    D = np.zeros((4, 4))
    D[1:, 0] = d_eta_t
    D[1:, 1:] = d_eta_x
    A = np.concatenate([[vt], vx])
    B = np.concatenate([[wt], wx])
    d_eta = D - D.T
    return -float(A @ d_eta @ B)


def levi_rhs_terms(ctx: EvalContext, f, p, v, fd: FDConfig = DEFAULT_FD):
    """The three right-hand-side terms of the comparison identity."""
    p = np.asarray(p, dtype=float)
    vt, vx = v
    wt, wx = j_apply(ctx, p, vt, vx, fd)
    # Hessian on the product metric dt^2 + g of a t-independent f: the
    # spatial Hessian of the spatial part (dt directions are flat).
    h_vv = float(hessian(ctx, f, p, vx, vx, fd))
    h_jj = float(hessian(ctx, f, p, wx, wx, fd))

    g = ctx.metric(p)
    grad_f = gradient(ctx, f, p, fd)
    gf_norm = float(np.sqrt(np.einsum("ij,i,j->", g, grad_f, grad_f)))
    n_sigma = grad_f / gf_norm

    def ln_rho(q):
        R = reeb_field(ctx, q, fd)
        gq = ctx.metric(q)
        return 0.5 * np.log(np.einsum("...ij,...i,...j->...", gq, R, R))

    def ln_theta(q):
        return np.log(theta_prime(ctx, q, fd))

    grad_lr = gradient(ctx, ln_rho, p, fd)
    grad_lt = gradient(ctx, ln_theta, p, fd)
    n_hat, _ = _dual_unit(ctx, p)
    lt_perp = np.einsum("ij,i,j->", g, grad_lt, n_hat) * n_hat
    m_vec = grad_lr - lt_perp
    v_norm2 = float(vt * vt + np.einsum("ij,i,j->", g, vx, vx))
    correction = gf_norm * float(
        np.einsum("ij,i,j->", g, n_sigma, m_vec)) * v_norm2
    return {"hess_vv": h_vv, "hess_jvjv": h_jj, "correction": correction}


def levi_identity_residual(ctx: EvalContext, f, p, t: float, v,
                           fd: FDConfig = DEFAULT_FD):
    """|L(v,v) - (Hess f(v,v) + Hess f(Jv,Jv) - correction)|."""
    lhs = levi_form(ctx, f, p, t, v, fd)
    terms = levi_rhs_terms(ctx, f, p, v, fd)
    rhs = terms["hess_vv"] + terms["hess_jvjv"] - terms["correction"]
    return abs(lhs - rhs)
