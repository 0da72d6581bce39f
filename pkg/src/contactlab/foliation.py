"""Characteristic foliations of geodesic spheres.

The restriction of the contact form to a sphere chart gives a 1-form
beta = beta_phi dphi + beta_psi dpsi on the parameter rectangle.  The
foliation is directed by the vector field X with iota_X (dphi^dpsi) = beta,
i.e. X = (beta_psi, -beta_phi), which is tangent to ker(beta) by
construction and fixes the orientation convention used for classifying
closed leaves.  Singularities are located by the winding number of beta
over grid cells (plus a ring test at the two chart poles) and signed by
the local d(beta) coefficient.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfRange
from .geodesic import DEFAULT_ODE_H, SphereChart, sphere_chart
from .manifold import EvalContext
from .tensor import DEFAULT_FD, FDConfig

__all__ = [
    "Singularity", "Leaf", "FoliationTrace", "ClosedLeafRecord",
    "char_line_field", "find_singularities", "trace_foliation",
    "detect_closed_leaves", "classify_sphere", "tau_scan",
    "export_csv", "export_svg",
]

HIT_SINGULARITY = "hit-singularity"
CLOSED = "closed"
LEFT_RESOLUTION = "left-resolution"
STIFF = "stiff"


@dataclass(frozen=True)
class Singularity:
    phi: float
    psi: float
    sign: int          # +1 or -1, from d(beta) against dphi^dpsi


@dataclass
class Leaf:
    points: np.ndarray        # (N, 2) in (phi, psi)
    positions: np.ndarray     # (N, 3) ambient
    alpha_residual: np.ndarray  # (N,) relative tangency residual
    end_state: str            # hit-singularity | closed | left-resolution | stiff
    net_dpsi: float           # unwrapped psi advance over the polyline


@dataclass
class FoliationTrace:
    chart: SphereChart
    leaves: list
    singularities: list
    warnings: list = field(default_factory=list)


@dataclass(frozen=True)
class ClosedLeafRecord:
    phi: float
    psi: float
    residual: float
    orientation: str          # west-to-east | east-to-west


# --- the restricted form and line field ------------------------------------

def _beta(chart: SphereChart, phi, psi):
    """beta components, chart tangents, position and the relative size of
    alpha restricted to the sphere (the singularity measure)."""
    ctx = chart.ctx
    pos = chart.position(phi, psi)
    t_phi = chart.tangent_phi(phi, psi)
    t_psi = chart.tangent_psi(phi, psi)
    a = ctx.alpha_cov(pos)
    b_phi = np.einsum("...i,...i->...", a, t_phi)
    b_psi = np.einsum("...i,...i->...", a, t_psi)
    g = ctx.metric(pos)
    anorm = np.sqrt(np.einsum(
        "...ij,...i,...j->...", np.linalg.inv(g), a, a))

    def unit(w):
        n = np.sqrt(np.einsum("...ij,...i,...j->...", g, w, w))
        return w / n[..., None], n

    u1, n1 = unit(t_phi)
    raw = t_psi - np.einsum("...ij,...i,...j->...", g, t_psi, u1)[..., None] * u1
    u2, _ = unit(raw)
    rel = np.sqrt(np.einsum("...i,...i->...", a, u1) ** 2
                  + np.einsum("...i,...i->...", a, u2) ** 2) / anorm
    return {"pos": pos, "t_phi": t_phi, "t_psi": t_psi,
            "b_phi": b_phi, "b_psi": b_psi, "rel": rel}


def char_line_field(chart: SphereChart, phi, psi, sigma_tol: float = 1e-3):
    """Direction of the foliation at a chart point.

    Returns a dict with ``singular`` (bool mask), the param-space direction
    (dphi, dpsi) of X normalized to unit ambient speed, and the ambient
    tangent vector.
    """
    f = _beta(chart, phi, psi)
    x_phi, x_psi = f["b_psi"], -f["b_phi"]
    amb = x_phi[..., None] * f["t_phi"] + x_psi[..., None] * f["t_psi"]
    g = chart.ctx.metric(f["pos"])
    speed = np.sqrt(np.einsum("...ij,...i,...j->...", g, amb, amb))
    safe = np.where(speed > 0, speed, 1.0)
    return {
        "singular": f["rel"] < sigma_tol,
        "param_dir": np.stack([x_phi, x_psi], axis=-1) / safe[..., None],
        "ambient": amb / safe[..., None],
        "rel": f["rel"],
    }


def _mu_sign(chart, phi, psi, delta=1e-3):
    """Sign of (d beta)(d_phi, d_psi) near (phi, psi)."""
    bp = _beta(chart, np.array([phi + delta, phi - delta]),
               np.array([psi, psi]))["b_psi"]
    bf = _beta(chart, np.array([phi, phi]),
               np.array([psi + delta, psi - delta]))["b_phi"]
    mu = (bp[0] - bp[1]) / (2 * delta) - (bf[0] - bf[1]) / (2 * delta)
    return 1 if mu > 0 else -1


def find_singularities(chart: SphereChart):
    """Singularities of alpha restricted to the sphere: interior ones by
    per-cell winding of beta, the two poles by a ring winding test in
    local coordinates u = phi cos psi, v = phi sin psi."""
    PHI, PSI = np.meshgrid(chart.phi, chart.psi, indexing="ij")
    f = _beta(chart, PHI, PSI)
    b_phi, b_psi = f["b_phi"], f["b_psi"]
    theta = np.arctan2(b_psi, b_phi)

    def wrap(d):
        return (d + np.pi) % (2 * np.pi) - np.pi

    # interior cells; psi wraps
    t00 = theta[:-1, :]
    t10 = theta[1:, :]
    t11 = np.roll(theta[1:, :], -1, axis=1)
    t01 = np.roll(theta[:-1, :], -1, axis=1)
    winding = (wrap(t10 - t00) + wrap(t11 - t10)
               + wrap(t01 - t11) + wrap(t00 - t01)) / (2 * np.pi)
    out = []
    ii, jj = np.nonzero(np.abs(winding) > 0.5)
    for i, j in zip(ii.tolist(), jj.tolist()):
        cphi = 0.5 * (chart.phi[i] + chart.phi[i + 1])
        psi_j = chart.psi[j]
        psi_j1 = chart.psi[(j + 1) % chart.n_psi]
        if psi_j1 < psi_j:
            psi_j1 += 2 * np.pi
        cpsi = 0.5 * (psi_j + psi_j1) % (2 * np.pi)
        out.append(Singularity(float(cphi), float(cpsi),
                               _mu_sign(chart, float(cphi), float(cpsi))))

    # poles, via the winding of beta along the nearest ring
    for pole_phi, row, flip in ((0.0, 0, 1.0), (math.pi, chart.n_phi - 1, -1.0)):
        psi_r = chart.psi
        scale = chart.phi[row] if row == 0 else math.pi - chart.phi[row]
        bu = flip * b_phi[row] * np.cos(psi_r) - b_psi[row] * np.sin(psi_r) / scale
        bv = flip * b_phi[row] * np.sin(psi_r) + b_psi[row] * np.cos(psi_r) / scale
        th = np.arctan2(bv, bu)
        w = np.sum(wrap(np.diff(np.concatenate([th, th[:1]])))) / (2 * np.pi)
        if abs(w) > 0.5:
            mu = np.mean([
                _mu_sign(chart, float(chart.phi[row]), float(ps))
                for ps in psi_r[:: max(1, chart.n_psi // 8)]])
            out.append(Singularity(pole_phi, 0.0, 1 if mu > 0 else -1))
    return out


# --- tracing ---------------------------------------------------------------

def _step_batch(chart, state, h, ref, sigma_tol):
    """One RK4 step of the unit-speed line field for a batch of points;
    each stage is sign-aligned with ref."""
    def fdir(phi, psi):
        d = char_line_field(chart, phi, psi, sigma_tol)["param_dir"]
        flip = np.sum(d * ref, axis=-1) < 0
        return np.where(flip[..., None], -d, d)

    phi, psi = state[..., 0], state[..., 1]
    k1 = fdir(phi, psi)
    k2 = fdir(phi + 0.5 * h * k1[..., 0], psi + 0.5 * h * k1[..., 1])
    k3 = fdir(phi + 0.5 * h * k2[..., 0], psi + 0.5 * h * k2[..., 1])
    k4 = fdir(phi + h * k3[..., 0], psi + h * k3[..., 1])
    delta = (h[..., None] / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return state + delta, k1


def _near_singularity(chart, phi, psi, sings, radius):
    hit = phi < radius
    hit |= phi > math.pi - radius
    for s in sings:
        if s.phi in (0.0, math.pi):
            continue
        dpsi = np.abs((psi - s.psi + np.pi) % (2 * np.pi) - np.pi)
        d = np.sqrt((phi - s.phi) ** 2 + (np.sin(s.phi) * dpsi) ** 2)
        hit |= d < radius
    return hit


def default_seeds(chart: SphereChart, n_phi: int = 9, n_psi: int = 4):
    phis = np.linspace(math.pi / (n_phi + 1), math.pi, n_phi, endpoint=False)
    psis = np.arange(n_psi) * 2 * np.pi / n_psi
    P, S = np.meshgrid(phis, psis, indexing="ij")
    return np.stack([P.ravel(), S.ravel()], axis=-1)


def trace_foliation(chart: SphereChart, seeds=None, steps: int = 4000,
                    step_size: float | None = None,
                    sigma_tol: float = 1e-3) -> FoliationTrace:
    """Trace the foliation from the given (phi, psi) seeds.

    Direction signs propagate along each leaf (a line field has no global
    sign); traces end in a singularity ball, on closure, or at the step
    budget.  A leaf whose direction turns more than 90 degrees in one step
    after 4 step halvings is flagged stiff.
    """
    if seeds is None:
        seeds = default_seeds(chart)
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    m = len(seeds)
    if step_size is None:
        step_size = 0.25 * math.pi / chart.n_phi * chart.r
    # the field is unit-ambient-speed, so param steps are arclength steps
    h_amb = step_size
    sings = find_singularities(chart)
    ball = 2.0 * math.pi / chart.n_phi
    min_closure_len = math.pi * chart.r

    state = seeds.copy()
    init = char_line_field(chart, state[..., 0], state[..., 1], sigma_tol)
    ref = init["param_dir"]
    active = ~init["singular"]
    status = np.array([LEFT_RESOLUTION] * m, dtype=object)
    status[~active] = HIT_SINGULARITY
    arclen = np.zeros(m)
    paths = [[state[i].copy()] for i in range(m)]
    net_dpsi = np.zeros(m)

    for _ in range(steps):
        if not np.any(active):
            break
        idx = np.nonzero(active)[0]
        sub = state[idx]
        sub_ref = ref[idx]
        h = np.full(len(idx), h_amb)
        done = np.zeros(len(idx), dtype=bool)
        new = sub.copy()
        new_dir = sub_ref.copy()
        for _attempt in range(5):
            todo = ~done
            if not np.any(todo):
                break
            cand, k1 = _step_batch(chart, sub[todo], h[todo],
                                   sub_ref[todo], sigma_tol)
            d_end = char_line_field(chart, cand[..., 0], cand[..., 1],
                                    sigma_tol)["param_dir"]
            flip = np.sum(d_end * k1, axis=-1) < 0
            d_end = np.where(flip[..., None], -d_end, d_end)
            ok = np.sum(d_end * k1, axis=-1) > 0.0
            sel = np.nonzero(todo)[0]
            good = sel[ok]
            new[good] = cand[ok]
            new_dir[good] = d_end[ok]
            done[good] = True
            h[sel[~ok]] *= 0.5
        stiff = ~done
        # commit
        dpsi_inc = ((new[..., 1] - sub[..., 1] + np.pi) % (2 * np.pi)) - np.pi
        net_dpsi[idx] += np.where(stiff, 0.0, dpsi_inc)
        arclen[idx] += np.where(stiff, 0.0, h)
        state[idx] = np.where(stiff[..., None], sub, new)
        ref[idx] = np.where(stiff[..., None], sub_ref, new_dir)
        for a, i in enumerate(idx.tolist()):
            if stiff[a]:
                status[i] = STIFF
                active[i] = False
                continue
            paths[i].append(state[i].copy())
        # termination checks
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            continue
        phi_a, psi_a = state[idx, 0], state[idx, 1]
        hit = _near_singularity(chart, phi_a, psi_a, sings, ball)
        d0phi = phi_a - seeds[idx, 0]
        d0psi = ((psi_a - seeds[idx, 1] + np.pi) % (2 * np.pi)) - np.pi
        close = (np.sqrt(d0phi ** 2 + d0psi ** 2) < max(1e-4, 0.6 * h_amb))
        close &= arclen[idx] > min_closure_len
        for a, i in enumerate(idx.tolist()):
            if hit[a]:
                status[i] = HIT_SINGULARITY
                active[i] = False
            elif close[a]:
                status[i] = CLOSED
                active[i] = False

    leaves = []
    for i in range(m):
        pts = np.array(paths[i])
        pos = chart.position(pts[:, 0], pts[:, 1])
        # tangency of the vertex direction itself (unit ambient speed)
        tang = char_line_field(chart, pts[:, 0], pts[:, 1],
                               sigma_tol)["ambient"]
        a = chart.ctx.alpha_cov(pos)
        g = chart.ctx.metric(pos)
        anorm = np.sqrt(np.einsum(
            "...ij,...i,...j->...", np.linalg.inv(g), a, a))
        res = np.abs(np.einsum("...i,...i->...", a, tang)) / anorm
        leaves.append(Leaf(points=pts, positions=pos, alpha_residual=res,
                           end_state=str(status[i]), net_dpsi=float(net_dpsi[i])))
    return FoliationTrace(chart=chart, leaves=leaves, singularities=sings)


# --- closed leaves via the return map --------------------------------------

def _advance_to_return(chart, phi0, psi0, sigma_tol, step_size, max_steps):
    """Follow leaves eastward from (phi0_i, psi0) until the unwrapped psi
    advance reaches +-2 pi; returns the first-return phi (nan if the leaf
    dies at a pole or stalls)."""
    phi0 = np.atleast_1d(np.asarray(phi0, dtype=float))
    m = len(phi0)
    state = np.stack([phi0, np.full(m, psi0)], axis=-1)
    ref = np.broadcast_to(np.array([0.0, 1.0]), (m, 2)).copy()
    d = char_line_field(chart, state[..., 0], state[..., 1], sigma_tol)
    flip = d["param_dir"][..., 1] < 0
    ref = np.where(flip[..., None], -ref, ref)  # keep initial eastward sense
    ref = d["param_dir"] * np.where(flip[..., None], -1.0, 1.0)
    cum = np.zeros(m)
    result = np.full(m, np.nan)
    active = ~d["singular"]
    h = np.full(m, step_size)
    ball = 1.0 * math.pi / chart.n_phi

    for _ in range(max_steps):
        if not np.any(active):
            break
        idx = np.nonzero(active)[0]
        new, k1 = _step_batch(chart, state[idx], h[idx], ref[idx], sigma_tol)
        d_end = char_line_field(chart, new[..., 0], new[..., 1],
                                sigma_tol)["param_dir"]
        flip = np.sum(d_end * k1, axis=-1) < 0
        d_end = np.where(flip[..., None], -d_end, d_end)
        inc = ((new[..., 1] - state[idx, 1] + np.pi) % (2 * np.pi)) - np.pi
        prev = cum[idx].copy()
        cum[idx] += inc
        crossed = np.abs(cum[idx]) >= 2 * np.pi
        for a, i in enumerate(idx.tolist()):
            if crossed[a]:
                t = ((2 * np.pi - abs(prev[a]))
                     / max(abs(cum[i]) - abs(prev[a]), 1e-30))
                result[i] = state[i, 0] + t * (new[a, 0] - state[i, 0])
                active[i] = False
        state[idx] = new
        ref[idx] = d_end
        phi_a = state[idx, 0]
        dead = (phi_a < ball) | (phi_a > math.pi - ball)
        for a, i in enumerate(idx.tolist()):
            if dead[a] and active[i]:
                active[i] = False
    return result


def detect_closed_leaves(trace, transversal: float = 0.0,
                         n_seeds: int = 33, sigma_tol: float = 1e-3,
                         closure_tol: float = 1e-4,
                         max_steps: int = 20000):
    """Closed leaves from the Poincare first-return map on the meridian
    psi = transversal, fixed points refined by bisection."""
    chart = trace.chart if isinstance(trace, FoliationTrace) else trace
    step_size = 0.25 * math.pi / chart.n_phi * chart.r
    margin = 2.0 * math.pi / chart.n_phi
    phis = np.linspace(margin, math.pi - margin, n_seeds)
    returned = _advance_to_return(chart, phis, transversal, sigma_tol,
                                  step_size, max_steps)
    f = returned - phis
    records = []
    for j in range(n_seeds - 1):
        fa, fb = f[j], f[j + 1]
        if not (np.isfinite(fa) and np.isfinite(fb)):
            continue
        if fa == 0.0:
            root, resid = phis[j], 0.0
        elif fa * fb < 0:
            a, b = phis[j], phis[j + 1]
            va = fa
            root, resid = None, None
            for _ in range(60):
                mid = 0.5 * (a + b)
                fm = _advance_to_return(chart, [mid], transversal, sigma_tol,
                                        step_size, max_steps)[0] - mid
                if not np.isfinite(fm):
                    break
                if abs(fm) < closure_tol:
                    root, resid = mid, abs(fm)
                    break
                if va * fm < 0:
                    b = mid
                else:
                    a, va = mid, fm
                if b - a < 1e-12:
                    root, resid = mid, abs(fm)
                    break
            if root is None:
                continue
        else:
            continue
        if any(abs(r.phi - root) < margin for r in records):
            continue
        x_psi = char_line_field(chart, np.array([root]),
                                np.array([transversal]),
                                sigma_tol)["param_dir"][0, 1]
        orient = "west-to-east" if x_psi > 0 else "east-to-west"
        records.append(ClosedLeafRecord(float(root), float(transversal),
                                        float(resid), orient))
    return records


def classify_sphere(trace: FoliationTrace, closed_leaves=None):
    """Simple: exactly one singularity of each sign.  Almost horizontal:
    every closed leaf runs west to east (the orientation of the boundary
    of the disk containing the north pole); unknown when a leaf was
    flagged stiff or the grid is too coarse to trust."""
    chart = trace.chart
    signs = [s.sign for s in trace.singularities]
    simple = (signs.count(1) == 1 and signs.count(-1) == 1)
    diagnostics = []
    if chart.n_phi < 8 or chart.n_psi < 16:
        diagnostics.append(
            f"grid {chart.n_phi}x{chart.n_psi} too coarse for a reliable "
            "closed-leaf orientation call")
    if any(leaf.end_state == STIFF for leaf in trace.leaves):
        diagnostics.append("at least one leaf flagged stiff")
    if diagnostics:
        return {"simple": simple, "almost_horizontal": "unknown",
                "diagnostics": diagnostics}
    if closed_leaves is None:
        closed_leaves = detect_closed_leaves(trace)
    almost = all(r.orientation == "west-to-east" for r in closed_leaves)
    return {"simple": simple, "almost_horizontal": almost,
            "diagnostics": diagnostics}


# --- radius scan -----------------------------------------------------------

def tau_scan(ctx: EvalContext, center, r_min: float, r_max: float,
             r_steps: int = 10, grid=(64, 128), fd: FDConfig = DEFAULT_FD,
             ode_h: float = DEFAULT_ODE_H, sigma_tol: float = 1e-3,
             compatible: bool | None = None):
    """Smallest sphere radius carrying a closed leaf, by coarse scan and
    bisection to 1e-3 (r_max - r_min); None when no scanned sphere has one.

    The closed-leaf detector certifies nothing by itself on metrics that
    are only weakly compatible, hence the heuristic flag.
    """
    if r_min >= r_max:
        raise OutOfRange("need r_min < r_max")
    center = np.asarray(center, dtype=float)

    probes = []

    def has_closed(r):
        chart = sphere_chart(ctx, center, r, grid, fd, ode_h)
        recs = detect_closed_leaves(chart, sigma_tol=sigma_tol)
        probes.append({"r": r, "closed_leaves": len(recs)})
        return len(recs) > 0

    radii = np.linspace(r_min, r_max, r_steps)
    first = None
    for i, r in enumerate(radii):
        if has_closed(float(r)):
            first = i
            break
    result = {
        "tau_estimate": None,
        "first_closed_leaf_radius": None,
        "probes": probes,
        "heuristic": not bool(compatible),
    }
    if first is None:
        return result
    if first == 0:
        result["tau_estimate"] = float(r_min)
        result["first_closed_leaf_radius"] = float(r_min)
        result["warning"] = "closed leaf already present at r_min"
        return result
    a, b = float(radii[first - 1]), float(radii[first])
    tol = 1e-3 * (r_max - r_min)
    while b - a > tol:
        mid = 0.5 * (a + b)
        if has_closed(mid):
            b = mid
        else:
            a = mid
    est = 0.5 * (a + b)
    result["tau_estimate"] = est
    result["first_closed_leaf_radius"] = est
    return result


# --- export ----------------------------------------------------------------

def export_csv(trace: FoliationTrace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["leaf_id", "step", "phi", "psi", "x", "y", "z",
                    "alpha_residual"])
        for lid, leaf in enumerate(trace.leaves):
            for k in range(len(leaf.points)):
                w.writerow([lid, k,
                            f"{leaf.points[k, 0]:.9g}",
                            f"{leaf.points[k, 1] % (2 * math.pi):.9g}",
                            f"{leaf.positions[k, 0]:.9g}",
                            f"{leaf.positions[k, 1]:.9g}",
                            f"{leaf.positions[k, 2]:.9g}",
                            f"{leaf.alpha_residual[k]:.3g}"])


def export_svg(trace: FoliationTrace, path, closed_leaves=None):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for lid, leaf in enumerate(trace.leaves):
        pts = leaf.points
        psi = pts[:, 1] % (2 * math.pi)
        # split polylines at the psi wrap seam
        jumps = np.nonzero(np.abs(np.diff(psi)) > math.pi)[0]
        start = 0
        color = "tab:red" if leaf.end_state == CLOSED else "tab:blue"
        lw = 1.8 if leaf.end_state == CLOSED else 0.7
        for j in list(jumps) + [len(psi) - 1]:
            ax.plot(psi[start:j + 1], pts[start:j + 1, 0],
                    color=color, lw=lw)
            start = j + 1
    for s in trace.singularities:
        ax.plot([s.psi], [s.phi], marker="o", ms=9, mfc="white",
                mec="black", ls="none")
        ax.annotate("+" if s.sign > 0 else chr(0x2212), (s.psi, s.phi),
                    ha="center", va="center", fontsize=8)
    if closed_leaves:
        for r in closed_leaves:
            ax.axhline(r.phi, color="tab:red", lw=0.8, ls="--", alpha=0.6)
    ax.set_xlim(0, 2 * math.pi)
    ax.set_ylim(math.pi, 0)
    ax.set_xlabel("psi")
    ax.set_ylabel("phi")
    ax.set_title(f"characteristic foliation, r = {trace.chart.r:g}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
