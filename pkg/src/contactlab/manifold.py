"""Manifold spec documents and the evaluation context.

A ManifoldSpec is the JSON-described coordinate chart: three coordinates, a
symmetric 3x3 matrix of metric coefficient expressions, three contact-form
coefficient expressions, optional strict-inequality domain constraints and
optional known global data (injectivity radius, convexity radius, curvature
bounds).

EvalContext compiles the expressions once and is the single gateway for all
pointwise evaluation.  Points are numpy arrays of shape (..., 3) so every
caller can batch over grids for free.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import exprlang
from .errors import DomainViolation, NotSPD, SchemaError
from .exprlang import Expr, eval_expr, free_variables, parse_expr

__all__ = ["KnownData", "ManifoldSpec", "EvalContext", "load_spec"]

_KNOWN_KEYS = {"inj_radius", "conv_radius", "sec_upper", "sec_abs_max", "ric_reeb_min"}


@dataclass(frozen=True)
class KnownData:
    """Optional user-asserted global quantities; None means not supplied."""

    inj_radius: float | None = None     # math.inf for "infinity"
    conv_radius: float | None = None
    sec_upper: float | None = None      # the K of sec(M) <= K
    sec_abs_max: float | None = None
    ric_reeb_min: float | None = None


@dataclass(frozen=True)
class ManifoldSpec:
    name: str
    coords: tuple[str, str, str]
    domain: tuple[Expr, ...]
    domain_src: tuple[str, ...]
    constants: dict[str, float]
    metric: tuple[tuple[Expr, ...], ...]       # full symmetric 3x3
    metric_src: tuple[tuple[str, ...], ...]    # upper-triangle source text
    alpha: tuple[Expr, Expr, Expr]
    alpha_src: tuple[str, str, str]
    known: KnownData = field(default_factory=KnownData)

    def document(self) -> dict:
        """Re-emit the JSON document (inverse of load_spec up to formatting)."""
        known = {}
        for key in sorted(_KNOWN_KEYS):
            val = getattr(self.known, key)
            if val is not None:
                known[key] = "infinity" if val == math.inf else val
        doc = {
            "name": self.name,
            "coords": list(self.coords),
            "domain": list(self.domain_src),
            "constants": dict(self.constants),
            "metric": [list(row) for row in self.metric_src],
            "alpha": list(self.alpha_src),
        }
        if known:
            doc["known"] = known
        return doc

    def sha256(self) -> str:
        blob = json.dumps(self.document(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _known_value(key, raw):
    if raw == "infinity":
        return math.inf
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise SchemaError(f"known.{key} must be a number or \"infinity\"")
    if key in ("inj_radius", "conv_radius") and raw <= 0:
        raise SchemaError(f"known.{key} must be positive")
    if key == "sec_abs_max" and raw < 0:
        raise SchemaError("known.sec_abs_max must be nonnegative")
    return float(raw)


def load_spec(doc) -> ManifoldSpec:
    """Parse and validate a manifold spec JSON document (bytes, str or dict)."""
    if isinstance(doc, (bytes, bytearray)):
        doc = doc.decode("utf-8")
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("top level must be a JSON object")

    for key in ("name", "coords", "metric", "alpha"):
        if key not in doc:
            raise SchemaError(f"missing required key {key!r}")

    name = doc["name"]
    if not isinstance(name, str) or not name:
        raise SchemaError("name must be a non-empty string")

    coords = doc["coords"]
    if not (isinstance(coords, list) and len(coords) == 3
            and all(isinstance(c, str) for c in coords)):
        raise SchemaError("coords must be a list of 3 identifiers")
    if len(set(coords)) != 3:
        raise SchemaError("coords must be pairwise distinct")

    constants = doc.get("constants", {})
    if not isinstance(constants, dict):
        raise SchemaError("constants must be an object")
    for cname, cval in constants.items():
        if cname in coords:
            raise SchemaError(f"constant {cname!r} shadows a coordinate")
        if isinstance(cval, bool) or not isinstance(cval, (int, float)):
            raise SchemaError(f"constant {cname!r} must be a number")
    constants = {k: float(v) for k, v in constants.items()}
    allowed = set(coords) | set(constants)

    def parse_checked(src, what):
        if not isinstance(src, str):
            raise SchemaError(f"{what} must be an expression string")
        expr = parse_expr(src)
        unknown = free_variables(expr) - allowed
        if unknown:
            raise SchemaError(
                f"{what} references undeclared names {sorted(unknown)}")
        return expr

    raw_metric = doc["metric"]
    if not (isinstance(raw_metric, list) and len(raw_metric) == 3
            and all(isinstance(row, list) and len(row) == 3 for row in raw_metric)):
        raise SchemaError("metric must be a 3x3 matrix of expression strings")
    metric_src = []
    metric = []
    for i in range(3):
        row_src, row = [], []
        for j in range(3):
            src = raw_metric[i][j]
            if i > j:
                upper = raw_metric[j][i]
                if src not in ("", upper):
                    raise SchemaError(
                        f"metric[{i}][{j}] must equal metric[{j}][{i}] "
                        "textually or be omitted as \"\"")
                src = upper
            row_src.append(raw_metric[i][j])
            row.append(parse_checked(src, f"metric[{min(i, j)}][{max(i, j)}]"))
        metric_src.append(tuple(row_src))
        metric.append(tuple(row))

    raw_alpha = doc["alpha"]
    if not (isinstance(raw_alpha, list) and len(raw_alpha) == 3):
        raise SchemaError("alpha must be a list of 3 expression strings")
    alpha = tuple(parse_checked(s, f"alpha[{i}]") for i, s in enumerate(raw_alpha))

    raw_domain = doc.get("domain", [])
    if not isinstance(raw_domain, list):
        raise SchemaError("domain must be a list of expression strings")
    domain = tuple(parse_checked(s, f"domain[{i}]") for i, s in enumerate(raw_domain))

    raw_known = doc.get("known", {})
    if not isinstance(raw_known, dict):
        raise SchemaError("known must be an object")
    extra = set(raw_known) - _KNOWN_KEYS
    if extra:
        raise SchemaError(f"unknown keys in known: {sorted(extra)}")
    known = KnownData(**{k: _known_value(k, v) for k, v in raw_known.items()})

    return ManifoldSpec(
        name=name,
        coords=tuple(coords),
        domain=domain,
        domain_src=tuple(raw_domain),
        constants=constants,
        metric=tuple(metric),
        metric_src=tuple(metric_src),
        alpha=alpha,
        alpha_src=tuple(raw_alpha),
        known=known,
    )


class EvalContext:
    """Compiled evaluation gateway for one ManifoldSpec.

    All methods accept points of shape (..., 3) and broadcast; scalars in
    the expressions are expanded to the batch shape.
    """

    def __init__(self, spec: ManifoldSpec):
        self.spec = spec
        self.coords = spec.coords
        self._consts = dict(spec.constants)
        compiled = {}

        def compile_(expr):
            if expr not in compiled:
                compiled[expr] = exprlang.compile_expr(
                    expr, spec.coords, spec.constants)
            return compiled[expr]

        self._metric_fns = [[compile_(spec.metric[i][j]) for j in range(3)]
                            for i in range(3)]
        self._alpha_fns = [compile_(a) for a in spec.alpha]
        self._domain_fns = [compile_(d) for d in spec.domain]

    # -- raw evaluation -----------------------------------------------------

    def _eval(self, fn, p, shape):
        value = fn(p[..., 0], p[..., 1], p[..., 2])
        return np.broadcast_to(np.asarray(value, dtype=float), shape)

    def in_domain(self, p):
        """Boolean mask: all strict domain constraints satisfied."""
        p = np.asarray(p, dtype=float)
        ok = np.ones(p.shape[:-1], dtype=bool)
        for fn in self._domain_fns:
            try:
                val = self._eval(fn, p, p.shape[:-1])
            except Exception:
                return np.zeros(p.shape[:-1], dtype=bool)
            ok &= val > 0
        return ok

    def check_domain(self, p):
        if not np.all(self.in_domain(p)):
            raise DomainViolation(
                f"point outside the declared domain of spec {self.spec.name!r}")

    def metric(self, p):
        """Metric matrix, shape (..., 3, 3)."""
        p = np.asarray(p, dtype=float)
        shape = p.shape[:-1]
        g = np.empty(shape + (3, 3))
        for i in range(3):
            for j in range(i, 3):
                g[..., i, j] = self._eval(self._metric_fns[i][j], p, shape)
                g[..., j, i] = g[..., i, j]
        return g

    def metric_spd(self, p):
        """Metric matrix with an SPD check (Cholesky)."""
        g = self.metric(p)
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise NotSPD(
                f"metric of {self.spec.name!r} is not positive definite "
                "at a sampled point") from None
        return g

    def inverse_metric(self, p):
        return np.linalg.inv(self.metric_spd(p))

    def alpha_cov(self, p):
        """Contact form components (covector), shape (..., 3)."""
        p = np.asarray(p, dtype=float)
        shape = p.shape[:-1]
        a = np.empty(shape + (3,))
        for i in range(3):
            a[..., i] = self._eval(self._alpha_fns[i], p, shape)
        return a

    # -- small conveniences used all over -----------------------------------

    def sqrt_det_g(self, p):
        return np.sqrt(np.linalg.det(self.metric(p)))

    def inner(self, p, u, v):
        g = self.metric(p)
        return np.einsum("...ij,...i,...j->...", g, u, v)

    def norm(self, p, u):
        return np.sqrt(np.maximum(self.inner(p, u, u), 0.0))
