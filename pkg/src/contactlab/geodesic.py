"""Geodesic shooting, the exponential map, Jacobi fields and geodesic
sphere charts.

Everything integrates with fixed-step RK4 so runs are bit-reproducible;
batches of initial conditions are advanced together, which is what makes
building a whole sphere chart a single vectorized integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import contact
from .errors import DomainError, DomainViolation, LeftDomain, OutOfRange
from .manifold import EvalContext
from .tensor import (DEFAULT_FD, FDConfig, _complete_onb, christoffel, cross,
                     riemann)

__all__ = ["GeodesicState", "SphereChart", "shoot", "exp_map", "flow_reeb",
           "sphere_chart", "jacobi_field", "sphere_tangent_frame",
           "transversality_margin"]

DEFAULT_ODE_H = 1e-3


@dataclass(frozen=True)
class GeodesicState:
    position: np.ndarray
    velocity: np.ndarray
    t: float
    energy_drift: float   # max ||v|_g - |v_0|_g| over saved steps, per unit t


def _geodesic_rhs(ctx, fd):
    def rhs(x, v):
        gamma = christoffel(ctx, x, fd)
        return v, -np.einsum("...lij,...i,...j->...l", gamma, v, v)
    return rhs


def _rk4(rhs, x, v, h, n_steps, watch=None):
    """Advance (x, v) by n_steps of size h; watch(x, k) is called per step."""
    for k in range(n_steps):
        k1x, k1v = rhs(x, v)
        k2x, k2v = rhs(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
        k3x, k3v = rhs(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
        k4x, k4v = rhs(x + h * k3x, v + h * k3v)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if watch is not None:
            watch(x, k)
    return x, v


def _steps(T, h):
    return max(1, int(math.ceil(abs(T) / h - 1e-12)))


def shoot(ctx: EvalContext, p, v, T: float, fd: FDConfig = DEFAULT_FD,
          ode_h: float = DEFAULT_ODE_H, unit_check: bool = True) -> GeodesicState:
    """Geodesic through p with initial unit velocity v, evaluated at
    arclength T."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    speed0 = ctx.norm(p, v)
    if unit_check and np.any(np.abs(speed0 - 1.0) > 1e-10):
        raise OutOfRange("shoot needs a g-unit initial velocity")
    n = _steps(T, ode_h)
    h = T / n
    has_domain = bool(ctx.spec.domain)
    exit_t = [None]

    def watch(x, k):
        if has_domain and exit_t[0] is None and not np.all(ctx.in_domain(x)):
            exit_t[0] = (k + 1) * h

    try:
        x1, v1 = _rk4(_geodesic_rhs(ctx, fd), p, v, h, n, watch)
    except (DomainError, DomainViolation) as exc:
        # the RHS became unevaluable before the per-step watch could see
        # the crossing: the ray reached the boundary region
        raise LeftDomain(f"geodesic reached the domain boundary: {exc}") \
            from None
    if exit_t[0] is not None:
        raise LeftDomain(exit_t[0])
    drift = float(np.max(np.abs(ctx.norm(x1, v1) - speed0))) / max(abs(T), 1e-30)
    return GeodesicState(position=x1, velocity=v1, t=T, energy_drift=drift)


def exp_map(ctx: EvalContext, p, w, fd: FDConfig = DEFAULT_FD,
            ode_h: float = DEFAULT_ODE_H):
    """exp_p(w): follow the geodesic with initial velocity w for unit time."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    T = float(np.max(ctx.norm(p, w)))
    if T == 0.0:
        return p.copy()
    # integrate in t with velocity w (not normalized) so batches with
    # different |w| stay a single integration
    n = _steps(T, ode_h)
    try:
        x1, _ = _rk4(_geodesic_rhs(ctx, fd), p, w, 1.0 / n, n)
    except (DomainError, DomainViolation) as exc:
        raise LeftDomain(f"geodesic reached the domain boundary: {exc}") \
            from None
    if bool(ctx.spec.domain) and not np.all(ctx.in_domain(x1)):
        raise LeftDomain(T)
    return x1


def flow_reeb(ctx: EvalContext, p, T: float, fd: FDConfig = DEFAULT_FD,
              ode_h: float = DEFAULT_ODE_H):
    """Flow of the Reeb field for time T; returns (position, R_alpha there)."""
    p = np.asarray(p, dtype=float)

    def rhs(x, dummy):
        R = contact.reeb_field(ctx, x, fd)
        return R, np.zeros_like(R)

    n = _steps(T, ode_h)
    x1, _ = _rk4(rhs, p, np.zeros_like(p), T / n, n)
    return x1, contact.reeb_field(ctx, x1, fd)


# --- Jacobi fields ---------------------------------------------------------

def _jacobi_rhs(ctx, fd):
    """State (x, v, J, W) with W the covariant derivative of J along x."""
    def rhs(x, v, J, W):
        gamma = christoffel(ctx, x, fd)
        r = riemann(ctx, x, fd)
        ginv = ctx.inverse_metric(x)
        acc = -np.einsum("...lij,...i,...j->...l", gamma, v, v)
        # J'' = -R(J, v) v = R(v, J) v; components <R(v,J)v, e_l> raised
        rv_cov = np.einsum("...ijkl,...i,...j,...k->...l", r, v, J, v)
        rv = np.einsum("...lm,...m->...l", ginv, rv_cov)
        dJ = W - np.einsum("...lij,...i,...j->...l", gamma, v, J)
        dW = rv - np.einsum("...lij,...i,...j->...l", gamma, v, W)
        return v, acc, dJ, dW
    return rhs


def _rk4_jacobi(rhs, x, v, J, W, h, n_steps):
    for _ in range(n_steps):
        k1 = rhs(x, v, J, W)
        k2 = rhs(x + 0.5 * h * k1[0], v + 0.5 * h * k1[1],
                 J + 0.5 * h * k1[2], W + 0.5 * h * k1[3])
        k3 = rhs(x + 0.5 * h * k2[0], v + 0.5 * h * k2[1],
                 J + 0.5 * h * k2[2], W + 0.5 * h * k2[3])
        k4 = rhs(x + h * k3[0], v + h * k3[1], J + h * k3[2], W + h * k3[3])
        x = x + (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        v = v + (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        J = J + (h / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        W = W + (h / 6.0) * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    return x, v, J, W


def jacobi_field(ctx: EvalContext, p, v, w0, w0_prime, T: float,
                 fd: FDConfig = DEFAULT_FD, ode_h: float = DEFAULT_ODE_H):
    """J(T) along the unit-speed geodesic from (p, v), with initial value
    w0 and initial covariant derivative w0_prime."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(ctx.norm(p, v) - 1.0) > 1e-10):
        raise OutOfRange("jacobi_field needs a g-unit geodesic velocity")
    J = np.asarray(w0, dtype=float)
    W = np.asarray(w0_prime, dtype=float)
    n = _steps(T, ode_h)
    _, _, J1, _ = _rk4_jacobi(_jacobi_rhs(ctx, fd), p, v, J, W, T / n, n)
    return J1


# --- sphere charts ---------------------------------------------------------

class SphereChart:
    """Geodesic sphere of radius r about p, parametrized by equiangular
    (phi, psi) on the unit tangent sphere at p.

    The poles phi=0, pi are aligned with +-n(p) (the foliation
    singularities for weakly compatible specs); phi samples are
    cell-centered so nothing is evaluated exactly at a pole.  Endpoint
    positions and outgoing velocities are cached on the grid and
    interpolated with bivariate splines, periodic in psi.
    """

    def __init__(self, ctx, center, r, n_phi, n_psi, basis,
                 phi, psi, positions, velocities, fd, ode_h):
        self.ctx = ctx
        self.center = center
        self.r = r
        self.n_phi = n_phi
        self.n_psi = n_psi
        self.basis = basis             # rows e1, e2, e3 = n(p)
        self.phi = phi                 # (n_phi,) cell-centered in (0, pi)
        self.psi = psi                 # (n_psi,) in [0, 2 pi)
        self.positions = positions     # (n_phi, n_psi, 3)
        self.velocities = velocities   # (n_phi, n_psi, 3), outgoing gamma'(r)
        self.fd = fd
        self.ode_h = ode_h
        self._pos_spl = self._splines(positions)
        self._vel_spl = self._splines(velocities)

    def _splines(self, grid_vals):
        pad = 4
        psi_ext = np.concatenate([self.psi[-pad:] - 2 * np.pi, self.psi,
                                  self.psi[:pad] + 2 * np.pi])
        vals_ext = np.concatenate(
            [grid_vals[:, -pad:], grid_vals, grid_vals[:, :pad]], axis=1)
        kx = min(3, self.n_phi - 1)
        return [RectBivariateSpline(self.phi, psi_ext, vals_ext[..., c],
                                    kx=kx, ky=3)
                for c in range(3)]

    def _eval(self, splines, phi, psi, dphi=0, dpsi=0):
        phi = np.asarray(phi, dtype=float)
        psi = np.mod(np.asarray(psi, dtype=float), 2 * np.pi)
        out = np.stack([s(phi, psi, dx=dphi, dy=dpsi, grid=False)
                        for s in splines], axis=-1)
        return out

    def position(self, phi, psi):
        return self._eval(self._pos_spl, phi, psi)

    def velocity(self, phi, psi):
        """Outgoing geodesic velocity gamma'(r); by the Gauss lemma this is
        r times... the outward normal direction to the sphere."""
        return self._eval(self._vel_spl, phi, psi)

    def tangent_phi(self, phi, psi):
        return self._eval(self._pos_spl, phi, psi, dphi=1)

    def tangent_psi(self, phi, psi):
        return self._eval(self._pos_spl, phi, psi, dpsi=1)

    def direction(self, phi, psi):
        """Initial unit velocity at the center for chart point (phi, psi)."""
        phi = np.asarray(phi, dtype=float)[..., None]
        psi = np.asarray(psi, dtype=float)[..., None]
        e1, e2, e3 = self.basis
        return (np.sin(phi) * (np.cos(psi) * e1 + np.sin(psi) * e2)
                + np.cos(phi) * e3)


def sphere_chart(ctx: EvalContext, p, r: float, grid=(32, 64),
                 fd: FDConfig = DEFAULT_FD,
                 ode_h: float = DEFAULT_ODE_H) -> SphereChart:
    """Build the geodesic sphere S_p(r) on an equiangular grid by one
    batched integration of all rays."""
    p = np.asarray(p, dtype=float)
    n_phi, n_psi = grid
    data = contact.contact_point_data(ctx, p, fd)
    g0 = ctx.metric(p)
    e3 = data.n / np.sqrt(g0 @ data.n @ data.n)
    e1, e2 = _complete_onb(ctx, p, e3)
    basis = (e1, e2, e3)

    phi = (np.arange(n_phi) + 0.5) * np.pi / n_phi
    psi = np.arange(n_psi) * 2 * np.pi / n_psi
    PHI, PSI = np.meshgrid(phi, psi, indexing="ij")
    dirs = (np.sin(PHI)[..., None] * (np.cos(PSI)[..., None] * e1
                                      + np.sin(PSI)[..., None] * e2)
            + np.cos(PHI)[..., None] * e3)
    starts = np.broadcast_to(p, dirs.shape).copy()
    state = shoot(ctx, starts, dirs, r, fd, ode_h, unit_check=False)
    return SphereChart(ctx, p, r, n_phi, n_psi, basis, phi, psi,
                       state.position, state.velocity, fd, ode_h)


def sphere_tangent_frame(chart: SphereChart, phi, psi):
    """(e1, e2, n_S) at a chart point: a g-orthonormal tangent basis built
    from the two coordinate Jacobi fields, and the outward unit normal
    gamma'(r) (Gauss lemma)."""
    ctx = chart.ctx
    scalar = np.isscalar(phi) or np.asarray(phi).ndim == 0
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    p = np.broadcast_to(chart.center, phi.shape + (3,))
    v = chart.direction(phi, psi)
    b1, b2, b3 = chart.basis
    # d(direction)/dphi and /dpsi: Jacobi initial derivatives, J(0) = 0
    sp, cp = np.sin(phi)[..., None], np.cos(phi)[..., None]
    ss, cs = np.sin(psi)[..., None], np.cos(psi)[..., None]
    dv_phi = cp * (cs * b1 + ss * b2) - sp * b3
    dv_psi = sp * (-ss * b1 + cs * b2)
    J0 = np.zeros_like(v)
    rhs = _jacobi_rhs(ctx, chart.fd)
    n = _steps(chart.r, chart.ode_h)
    h = chart.r / n
    x1, v1, j_phi, _ = _rk4_jacobi(rhs, p, v, J0, dv_phi, h, n)
    _, _, j_psi, _ = _rk4_jacobi(rhs, p, v, J0, dv_psi, h, n)
    g = ctx.metric(x1)

    def unit(w):
        return w / np.sqrt(np.einsum("...ij,...i,...j->...", g, w, w))[..., None]

    e1 = unit(j_phi)
    e2 = j_psi - np.einsum("...ij,...i,...j->...", g, j_psi, e1)[..., None] * e1
    e2 = unit(e2)
    nS = unit(v1)
    if scalar:
        return e1[0], e2[0], nS[0]
    return e1, e2, nS


# --- Reeb tube transversality ----------------------------------------------

def transversality_margin(ctx: EvalContext, p, t_range, r: float,
                          grid=(16, 8, 16), fd: FDConfig = DEFAULT_FD,
                          ode_h: float = DEFAULT_ODE_H):
    """min over a tube around the Reeb orbit through p of
    1 - |<R_alpha, e> - 1|, where e is the unit normal of the geodesic
    disks transverse to the orbit.

    A positive margin certifies (at the sampled resolution) that the
    contact structure stays transverse to the disks of the tube.
    """
    p = np.asarray(p, dtype=float)
    t0, t1 = t_range
    nt, ns, na = grid
    ts = np.linspace(t0, t1, nt)

    # orbit of the Reeb field plus parallel transport of a normal frame
    def rhs(x, w):
        R = contact.reeb_field(ctx, x, fd)
        gamma = christoffel(ctx, x, fd)
        dw = -np.einsum("...lij,...i,...mj->...ml", gamma, R, w)
        return R, dw

    R0 = contact.reeb_field(ctx, p, fd)
    u0 = R0 / ctx.norm(p, R0)
    w1, w2 = _complete_onb(ctx, p, u0)
    centers = [p]
    frames = [np.stack([w1, w2])]
    axis_dirs = [u0]
    x, W = p, np.stack([w1, w2])
    for i in range(nt - 1):
        h = (ts[i + 1] - ts[i])
        n = _steps(h, ode_h)

        def rk(x, W, step):
            k1 = rhs(x, W)
            k2 = rhs(x + 0.5 * step * k1[0], W + 0.5 * step * k1[1])
            k3 = rhs(x + 0.5 * step * k2[0], W + 0.5 * step * k2[1])
            k4 = rhs(x + step * k3[0], W + step * k3[1])
            return (x + (step / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                    W + (step / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))

        for _ in range(n):
            x, W = rk(x, W, h / n)
        centers.append(x)
        frames.append(W)
        R = contact.reeb_field(ctx, x, fd)
        axis_dirs.append(R / ctx.norm(x, R))
    centers = np.stack(centers)
    frames = np.stack(frames)
    axis_dirs = np.stack(axis_dirs)

    if r == 0.0:
        R = contact.reeb_field(ctx, centers, fd)
        val = np.einsum("...ij,...i,...j->...", ctx.metric(centers), R, axis_dirs)
        return float(np.min(1.0 - np.abs(val - 1.0)))

    # geodesic disks: batched exp over (t, s, angle)
    s_vals = np.linspace(r / ns, r, ns)
    ang = np.arange(na) * 2 * np.pi / na
    S, A = np.meshgrid(s_vals, ang, indexing="ij")
    u = (np.cos(A)[..., None] * frames[:, None, None, 0, :]
         + np.sin(A)[..., None] * frames[:, None, None, 1, :])
    w = S[None, ..., None] * u
    starts = np.broadcast_to(centers[:, None, None, :], w.shape).copy()
    n = _steps(r, ode_h)
    pts, _ = _rk4(_geodesic_rhs(ctx, fd), starts, w, 1.0 / n, n)

    # disk tangents by FD in the parameters, then the g-normal e
    ds = np.gradient(pts, s_vals, axis=1)
    dpsi_ang = ang[1] - ang[0]
    da = (np.roll(pts, -1, axis=2) - np.roll(pts, 1, axis=2)) / (2 * dpsi_ang)
    e = cross(ctx, pts, ds, da)
    nrm = ctx.norm(pts, e)
    e = e / nrm[..., None]
    # orient each disk normal along the orbit direction
    sign = np.sign(np.einsum("...ij,...i,...j->...", ctx.metric(pts), e,
                             np.broadcast_to(axis_dirs[:, None, None, :],
                                             pts.shape)))
    sign = np.where(sign == 0, 1.0, sign)
    e = e * sign[..., None]
    R = contact.reeb_field(ctx, pts, fd)
    val = np.einsum("...ij,...i,...j->...", ctx.metric(pts), R, e)
    return float(np.min(1.0 - np.abs(val - 1.0)))
