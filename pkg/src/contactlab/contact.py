"""Contact-metric invariants: Reeb field, rho, theta', compatibility
classification, second fundamental form of the contact plane field, mean
curvature, nabla_n n, the h endomorphism and the m_g estimate.

Conventions match the tensor module: d of a 1-form carries no 1/2 factor,
orientation is coordinate order with alpha wedge d(alpha) > 0 required, and
J rotates the contact plane by +pi/2 (J u = v on a positively oriented
orthonormal frame (u, v, n)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (ConsistencyError, NegativeOrientation, NotContactPoint,
                     NotInXi)
from .manifold import EvalContext
from .tensor import (DEFAULT_FD, FDConfig, FrameXi, cov_deriv, d_oneform,
                     gradient, lie_bracket, partial)

__all__ = [
    "ContactPointData", "CompatClass",
    "reeb_field", "theta_prime", "weak_compat_defect", "classify_compatibility",
    "contact_point_data", "frame_xi", "make_frame_fields",
    "second_fundamental_form", "mean_curvature", "extrinsic_curvature",
    "nabla_n_n", "h_endomorphism", "m_g_estimate", "grid_points",
]


@dataclass(frozen=True)
class ContactPointData:
    R_alpha: np.ndarray
    rho: np.ndarray          # |R_alpha|_g
    n: np.ndarray            # unit normal to the contact plane
    theta_prime: np.ndarray  # rotation speed
    rho_alpha: np.ndarray    # |alpha|_g
    defect: np.ndarray       # weak-compatibility defect in [0, 1]


@dataclass(frozen=True)
class CompatClass:
    cls: str                 # NotContact | ContactOnly | WeaklyCompatible |
                             # Compatible | StronglyCompatible
    tol: float
    max_defect: float
    rho_deviation: float     # max |rho - 1|
    theta_spread: float      # relative spread (max-min)/max of theta'
    theta_one_deviation: float
    n_points: int


_ORDER = ["NotContact", "ContactOnly", "WeaklyCompatible",
          "Compatible", "StronglyCompatible"]


def _curl_vector(ctx: EvalContext, p, fd):
    """w = (F_yz, F_zx, F_xy) for F = d(alpha); ker(iota_w F), metric-free."""
    F = d_oneform(ctx, ctx.alpha_cov, p, fd)
    return np.stack([F[..., 1, 2], F[..., 2, 0], F[..., 0, 1]], axis=-1)


def wedge_coeff(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD):
    """Coefficient c in alpha wedge d(alpha) = c dx^dy^dz."""
    p = np.asarray(p, dtype=float)
    w = _curl_vector(ctx, p, fd)
    return np.einsum("...i,...i->...", ctx.alpha_cov(p), w)


def reeb_field(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD):
    """Reeb vector field R with d(alpha)(R, .) = 0 and alpha(R) = 1."""
    p = np.asarray(p, dtype=float)
    ctx.check_domain(p)
    w = _curl_vector(ctx, p, fd)
    aw = np.einsum("...i,...i->...", ctx.alpha_cov(p), w)
    if np.any(np.abs(aw) < 1e-10):
        raise NotContactPoint(
            "alpha wedge d(alpha) vanishes at a sampled point of "
            f"{ctx.spec.name!r}")
    if np.any(aw < 0):
        raise NegativeOrientation(ctx.spec.name)
    return w / aw[..., None]


def _dual_unit(ctx: EvalContext, p):
    """Unit g-dual of alpha, and |alpha|_g."""
    a = ctx.alpha_cov(p)
    dual = np.einsum("...ij,...j->...i", ctx.inverse_metric(p), a)
    norm = np.sqrt(np.einsum("...i,...i->...", a, dual))
    return dual / norm[..., None], norm


def theta_prime(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD):
    """Rotation speed theta' from alpha wedge d(alpha) = theta' |alpha|^2 vol_g."""
    p = np.asarray(p, dtype=float)
    ctx.check_domain(p)
    coeff = wedge_coeff(ctx, p, fd)
    if np.any(np.abs(coeff) < 1e-10):
        raise NotContactPoint(f"not a contact point of {ctx.spec.name!r}")
    if np.any(coeff < 0):
        raise NegativeOrientation(ctx.spec.name)
    _, anorm = _dual_unit(ctx, p)
    return coeff / (anorm ** 2 * ctx.sqrt_det_g(p))


def weak_compat_defect(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD):
    """|component of R orthogonal to the alpha-dual| / |R|, in [0, 1];
    zero exactly when the Reeb field is g-orthogonal to the contact plane."""
    p = np.asarray(p, dtype=float)
    R = reeb_field(ctx, p, fd)
    n_dual, _ = _dual_unit(ctx, p)
    g = ctx.metric(p)
    along = np.einsum("...ij,...i,...j->...", g, R, n_dual)
    perp = R - along[..., None] * n_dual
    return (np.sqrt(np.einsum("...ij,...i,...j->...", g, perp, perp))
            / np.sqrt(np.einsum("...ij,...i,...j->...", g, R, R)))


def contact_point_data(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD,
                       weak_tol: float = 1e-4) -> ContactPointData:
    p = np.asarray(p, dtype=float)
    R = reeb_field(ctx, p, fd)
    g = ctx.metric(p)
    rho = np.sqrt(np.einsum("...ij,...i,...j->...", g, R, R))
    n_dual, anorm = _dual_unit(ctx, p)
    defect = weak_compat_defect(ctx, p, fd)
    n = np.where((defect < weak_tol)[..., None], R / rho[..., None], n_dual)
    return ContactPointData(R_alpha=R, rho=rho, n=n,
                            theta_prime=theta_prime(ctx, p, fd),
                            rho_alpha=anorm, defect=defect)


def grid_points(region, grid):
    """Inclusive rectangular grid over region ((x0,x1),(y0,y1),(z0,z1));
    a degenerate axis (x0 == x1 or n == 1) collapses to its midpoint."""
    axes = []
    for (lo, hi), n in zip(region, grid):
        if n <= 1 or lo == hi:
            axes.append(np.array([(lo + hi) / 2.0]))
        else:
            axes.append(np.linspace(lo, hi, n))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def classify_compatibility(ctx: EvalContext, region, grid,
                           tol: float = 1e-4,
                           fd: FDConfig = DEFAULT_FD) -> CompatClass:
    pts = grid_points(region, grid)
    keep = ctx.in_domain(pts)
    pts = pts[keep]
    try:
        data = contact_point_data(ctx, pts, fd)
    except NotContactPoint:
        return CompatClass("NotContact", tol, np.nan, np.nan, np.nan, np.nan,
                           int(pts.shape[0]))
    max_defect = float(np.max(data.defect))
    rho_dev = float(np.max(np.abs(data.rho - 1.0)))
    th = data.theta_prime
    spread = float((np.max(th) - np.min(th)) / np.max(th))
    one_dev = float(np.max(np.abs(th - 1.0)))
    if max_defect >= tol:
        cls = "ContactOnly"
    elif rho_dev >= tol or spread >= tol:
        cls = "WeaklyCompatible"
    elif one_dev >= tol:
        cls = "Compatible"
    else:
        cls = "StronglyCompatible"
    return CompatClass(cls, tol, max_defect, rho_dev, spread, one_dev,
                       int(pts.shape[0]))


def compat_at_least(c: CompatClass, level: str) -> bool:
    return _ORDER.index(c.cls) >= _ORDER.index(level)


# --- frames ----------------------------------------------------------------

def _pivots_at(ctx: EvalContext, p, fd):
    """Indices of the two coordinate fields with the largest contact-plane
    components at p (stable order)."""
    R = reeb_field(ctx, p, fd)
    a = ctx.alpha_cov(p)
    g = ctx.metric(p)
    eye = np.broadcast_to(np.eye(3), np.shape(R)[:-1] + (3, 3))
    proj = eye - a[..., :, None] * R[..., None, :]
    norms = np.sqrt(np.einsum("...ij,...ci,...cj->...c", g, proj, proj))
    return np.argsort(-norms, axis=-1, kind="stable")[..., :2]


def _frame_from_pivots(ctx: EvalContext, q, pivots, fd):
    """Orthonormal (u, v, n) at q using frozen pivot indices (batched)."""
    R = reeb_field(ctx, q, fd)
    a = ctx.alpha_cov(q)
    g = ctx.metric(q)
    eye = np.broadcast_to(np.eye(3), np.shape(R)[:-1] + (3, 3))
    proj = eye - a[..., :, None] * R[..., None, :]
    u = np.take_along_axis(proj, pivots[..., 0:1, None], axis=-2)[..., 0, :]
    v = np.take_along_axis(proj, pivots[..., 1:2, None], axis=-2)[..., 0, :]
    u = u / np.sqrt(np.einsum("...ij,...i,...j->...", g, u, u))[..., None]
    v = v - np.einsum("...ij,...i,...j->...", g, v, u)[..., None] * u
    v = v / np.sqrt(np.einsum("...ij,...i,...j->...", g, v, v))[..., None]
    n, _ = _dual_unit(ctx, q)
    # enforce positive orientation in coordinate order
    det = np.linalg.det(np.stack([u, v, n], axis=-2))
    v = np.where((det < 0)[..., None], -v, v)
    return u, v, n


def frame_xi(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD) -> FrameXi:
    """Positively oriented orthonormal frame (u, v, n) with u, v in the
    contact plane and n its unit normal."""
    p = np.asarray(p, dtype=float)
    pivots = _pivots_at(ctx, p, fd)
    u, v, n = _frame_from_pivots(ctx, p, pivots, fd)
    return FrameXi(u=u, v=v, n=n, pivots=pivots)


def make_frame_fields(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD):
    """Smooth local frame field handles (U, V, N) with pivots frozen at p,
    safe to difference on FD stencils around p."""
    p = np.asarray(p, dtype=float)
    pivots = _pivots_at(ctx, p, fd)

    def U(q):
        return _frame_from_pivots(ctx, q, pivots, fd)[0]

    def V(q):
        return _frame_from_pivots(ctx, q, pivots, fd)[1]

    def N(q):
        return _frame_from_pivots(ctx, q, pivots, fd)[2]

    return U, V, N


def _check_in_xi(ctx, p, vecs):
    a = ctx.alpha_cov(p)
    for w in vecs:
        pairing = np.abs(np.einsum("...i,...i->...", a, w))
        scale = np.maximum(1.0, np.sqrt(np.einsum("...i,...i->...", a, a))
                           * np.sqrt(np.einsum("...i,...i->...", w, w)))
        if np.any(pairing > 1e-8 * scale):
            raise NotInXi("vector is not tangent to the contact plane")


# --- second fundamental form ----------------------------------------------

def second_fundamental_form(ctx: EvalContext, p, u, v,
                            fd: FDConfig = DEFAULT_FD,
                            strategy: str = "projected"):
    """II(u, v) = 1/2 <nabla_u V + nabla_v U, n> for tangent extensions U, V
    of u, v.  strategy 'projected' extends along the orthonormal frame
    field; 'frozen' projects the constant coefficient vectors pointwise
    (used to test extension independence)."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_in_xi(ctx, p, (u, v))
    n_field = make_frame_fields(ctx, p, fd)[2]
    n0 = n_field(p)
    g = ctx.metric(p)

    if strategy == "projected":
        U, V, _ = make_frame_fields(ctx, p, fd)
        u1, v1 = U(p), V(p)
        # coefficients of u, v in the orthonormal frame at p
        cu = np.stack([np.einsum("...ij,...i,...j->...", g, u, u1),
                       np.einsum("...ij,...i,...j->...", g, u, v1)], axis=-1)
        cv = np.stack([np.einsum("...ij,...i,...j->...", g, v, u1),
                       np.einsum("...ij,...i,...j->...", g, v, v1)], axis=-1)

        def ext(coef):
            def field(q):
                return (coef[..., 0:1] * U(q) + coef[..., 1:2] * V(q))
            return field

        Ue, Ve = ext(cu), ext(cv)
    elif strategy == "frozen":
        def ext(vec):
            def field(q):
                aq = ctx.alpha_cov(q)
                Rq = reeb_field(ctx, q, fd)
                pairing = np.einsum("...i,...i->...", aq, vec)
                return vec - pairing[..., None] * Rq
            return field

        Ue, Ve = ext(u), ext(v)
    else:
        raise ValueError(f"unknown extension strategy {strategy!r}")

    dv = cov_deriv(ctx, u, Ve, p, fd)
    du = cov_deriv(ctx, v, Ue, p, fd)
    return 0.5 * np.einsum("...ij,...i,...j->...", g, dv + du, n0)


def _divergence(ctx: EvalContext, X, p, fd):
    """div X = (1/sqrt g) d_i (sqrt g X^i)."""
    def comp(i):
        def field(q):
            return ctx.sqrt_det_g(q) * X(q)[..., i]
        return field

    total = sum(partial(comp(i), p, i, fd) for i in range(3))
    return total / ctx.sqrt_det_g(p)


def mean_curvature(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD,
                   cross_check: bool = True):
    """H = 1/2 tr II of the contact plane field; cross-checked against
    -1/2 div(n) (the two must agree to 1e-4)."""
    p = np.asarray(p, dtype=float)
    U, V, N = make_frame_fields(ctx, p, fd)
    u, v = U(p), V(p)
    h_ii = (second_fundamental_form(ctx, p, u, u, fd)
            + second_fundamental_form(ctx, p, v, v, fd))
    h = 0.5 * h_ii
    if cross_check:
        h_div = -0.5 * _divergence(ctx, N, p, fd)
        if np.any(np.abs(h - h_div) > 1e-4):
            raise ConsistencyError(
                "mean curvature from II and from -div(n)/2 disagree by "
                f"{float(np.max(np.abs(h - h_div))):.3e} (tolerance 1e-4)")
    return h


def extrinsic_curvature(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD):
    """Determinant of II on an orthonormal frame of the contact plane."""
    p = np.asarray(p, dtype=float)
    U, V, _ = make_frame_fields(ctx, p, fd)
    u, v = U(p), V(p)
    a = second_fundamental_form(ctx, p, u, u, fd)
    b = second_fundamental_form(ctx, p, u, v, fd)
    c = second_fundamental_form(ctx, p, v, v, fd)
    return a * c - b * b


def nabla_n_n(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD):
    """Covariant acceleration of the normalized Reeb field."""
    p = np.asarray(p, dtype=float)

    def N(q):
        R = reeb_field(ctx, q, fd)
        g = ctx.metric(q)
        return R / np.sqrt(np.einsum("...ij,...i,...j->...", g, R, R))[..., None]

    return cov_deriv(ctx, N, N, p, fd)


# --- h endomorphism --------------------------------------------------------

@dataclass(frozen=True)
class HEndo:
    matrix: np.ndarray   # h on the (u, v) frame, shape (..., 2, 2)
    norm: np.ndarray     # largest |eigenvalue|
    heuristic: bool      # defect exceeded the weak-compatibility tolerance


def h_endomorphism(ctx: EvalContext, p, fd: FDConfig = DEFAULT_FD) -> HEndo:
    """h = 1/2 Lie_R phi restricted to the contact plane, via
    h(v) = 1/2 ([R, phi(V)] - phi([R, V]))."""
    p = np.asarray(p, dtype=float)
    heuristic = bool(np.any(weak_compat_defect(ctx, p, fd) > 1e-4))
    U, V, _ = make_frame_fields(ctx, p, fd)

    def Rf(q):
        return reeb_field(ctx, q, fd)

    def phi_field(X):
        """phi of a field handle: J applied to the xi-component."""
        def field(q):
            g = ctx.metric(q)
            uq, vq = U(q), V(q)
            Rq = reeb_field(ctx, q, fd)
            aq = ctx.alpha_cov(q)
            x = X(q)
            xi_part = x - np.einsum("...i,...i->...", aq, x)[..., None] * Rq
            c1 = np.einsum("...ij,...i,...j->...", g, xi_part, uq)
            c2 = np.einsum("...ij,...i,...j->...", g, xi_part, vq)
            return c1[..., None] * vq - c2[..., None] * uq
        return field

    def h_of(X):
        term1 = lie_bracket(Rf, phi_field(X), p, fd)
        bracket = lie_bracket(Rf, X, p, fd)
        term2 = phi_field(lambda q, b=bracket: np.broadcast_to(
            b, np.shape(q)[:-1] + (3,)))(p)
        return 0.5 * (term1 - term2)

    g = ctx.metric(p)
    u0, v0 = U(p), V(p)
    hu, hv = h_of(U), h_of(V)
    mat = np.stack([
        np.stack([np.einsum("...ij,...i,...j->...", g, hu, u0),
                  np.einsum("...ij,...i,...j->...", g, hv, u0)], axis=-1),
        np.stack([np.einsum("...ij,...i,...j->...", g, hu, v0),
                  np.einsum("...ij,...i,...j->...", g, hv, v0)], axis=-1),
    ], axis=-2)
    eig = np.linalg.eigvals(mat)
    norm = np.max(np.abs(eig), axis=-1)
    return HEndo(matrix=mat, norm=norm, heuristic=heuristic)


# --- m_g -------------------------------------------------------------------

def _mg_fields(ctx: EvalContext, pts, fd):
    def ln_rho(q):
        R = reeb_field(ctx, q, fd)
        g = ctx.metric(q)
        return 0.5 * np.log(np.einsum("...ij,...i,...j->...", g, R, R))

    def ln_theta(q):
        return np.log(theta_prime(ctx, q, fd))

    grad_lr = gradient(ctx, ln_rho, pts, fd)
    grad_lt = gradient(ctx, ln_theta, pts, fd)
    n_hat, _ = _dual_unit(ctx, pts)
    g = ctx.metric(pts)
    lt_perp = np.einsum("...ij,...i,...j->...", g, grad_lt, n_hat)[..., None] * n_hat
    diff = grad_lr - lt_perp
    f1 = np.sqrt(np.einsum("...ij,...i,...j->...", g, diff, diff))

    acc = nabla_n_n(ctx, pts, fd)
    acc_norm2 = np.einsum("...ij,...i,...j->...", g, acc, acc)
    H = mean_curvature(ctx, pts, fd, cross_check=False)
    f2 = np.sqrt(acc_norm2 + 4.0 * H * H)
    return f1, f2


def m_g_estimate(ctx: EvalContext, region, grid, fd: FDConfig = DEFAULT_FD):
    """Grid maximum of |grad ln rho - (grad ln theta')^perp|, with the
    second characterization sqrt(|nabla_n n|^2 + 4 H^2) as a cross-check.

    Returns a dict with m_g, both per-formula maxima, the argmax point
    (first in lexicographic grid order on ties) and the worst pointwise
    discrepancy between the two formulas.
    """
    pts = grid_points(region, grid)
    pts = pts[ctx.in_domain(pts)]
    f1, f2 = _mg_fields(ctx, pts, fd)
    i = int(np.argmax(f1))
    return {
        "m_g": float(f1[i]),
        "by_formula1": float(np.max(f1)),
        "by_formula2": float(np.max(f2)),
        "argmax": [float(c) for c in pts[i]],
        "max_formula_discrepancy": float(np.max(np.abs(f1 - f2))),
        "n_points": int(pts.shape[0]),
    }
