"""Built-in chart documents with reference values.

Each entry bundles a ManifoldSpec, a map of named expected quantities
tagged with their provenance ("exact" for closed forms, "computed" for
values frozen from high-resolution runs of this package, "quoted" for
figures taken from the literature as stated), and a default region/grid
for global sampling.

Conventions worth noting:

* Cylindrically symmetric data is stored in Cartesian form.  The Bessel
  entry writes b(r)/r^2 (x dy - y dx) with b = r J1(r), whose Cartesian
  coefficients are smooth across the axis; the stored expressions guard
  the removable 0/0 at r = 0 with r = sqrt(x^2 + y^2 + 1e-40), an error
  far below every tolerance in use.
* The round 3-sphere comes as two stereographic charts (from the south
  and north poles); there is no atlas logic, each chart is its own spec.
* k defaults to 2 on the flat 3-torus (so theta' = 2) and 1 elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownEntry
from .manifold import ManifoldSpec, load_spec

__all__ = ["CatalogEntry", "catalog_list", "catalog_get"]


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    spec: ManifoldSpec
    reference: dict
    region: tuple
    grid: tuple
    A_override: float | None = None


_IDENTITY = [["1", "0", "0"], ["", "1", "0"], ["", "", "1"]]

_BESSEL_R = "sqrt(x^2 + y^2 + 1e-40)"

_DOCS = {
    "t3-flat": {
        "name": "t3-flat",
        "coords": ["x", "y", "z"],
        "constants": {"k": 2},
        "metric": _IDENTITY,
        "alpha": ["cos(k*z)", "-sin(k*z)", "0"],
        "known": {"inj_radius": 3.141592653589793,
                  "conv_radius": 1.5707963267948966,
                  "sec_upper": 0.0, "sec_abs_max": 0.0, "ric_reeb_min": 0.0},
    },
    "h3-upper-half": {
        "name": "h3-upper-half",
        "coords": ["x", "y", "z"],
        "domain": ["z"],
        "constants": {"k": 1},
        "metric": [["1/z^2", "0", "0"], ["", "1/z^2", "0"], ["", "", "1/z^2"]],
        "alpha": ["cos(k*z)", "-sin(k*z)", "0"],
        "known": {"inj_radius": "infinity", "conv_radius": "infinity",
                  "sec_upper": -1.0, "sec_abs_max": 1.0, "ric_reeb_min": -2.0},
    },
    "h3-curl": {
        "name": "h3-curl",
        "coords": ["x", "y", "z"],
        "domain": ["z"],
        "constants": {"k": 1},
        "metric": [["1/z^2", "0", "0"], ["", "1/z^2", "0"], ["", "", "1/z^2"]],
        "alpha": ["cos(k*ln(z))", "-sin(k*ln(z))", "0"],
        "known": {"inj_radius": "infinity", "conv_radius": "infinity",
                  "sec_upper": -1.0, "sec_abs_max": 1.0, "ric_reeb_min": -2.0},
    },
    "r-x-h2": {
        "name": "r-x-h2",
        "coords": ["t", "x", "y"],
        "domain": ["y"],
        "metric": [["1", "0", "0"], ["", "1/y^2", "0"], ["", "", "1/y^2"]],
        "alpha": ["sqrt(y)", "1/sqrt(y)", "0"],
        "known": {"inj_radius": "infinity", "conv_radius": "infinity",
                  "sec_upper": 0.0, "sec_abs_max": 1.0, "ric_reeb_min": -0.5},
    },
    "r3-bessel-ot": {
        "name": "r3-bessel-ot",
        "coords": ["x", "y", "z"],
        "metric": _IDENTITY,
        "alpha": [f"-y * besselJ1({_BESSEL_R}) / {_BESSEL_R}",
                  f"x * besselJ1({_BESSEL_R}) / {_BESSEL_R}",
                  f"besselJ0({_BESSEL_R})"],
        "known": {"inj_radius": "infinity", "conv_radius": "infinity",
                  "sec_upper": 0.0, "sec_abs_max": 0.0, "ric_reeb_min": 0.0},
    },
    "s3-round": {
        "name": "s3-round",
        "coords": ["x", "y", "z"],
        "metric": [["4/(1+x^2+y^2+z^2)^2", "0", "0"],
                   ["", "4/(1+x^2+y^2+z^2)^2", "0"],
                   ["", "", "4/(1+x^2+y^2+z^2)^2"]],
        "alpha": ["4*(x*z - y)/(1+x^2+y^2+z^2)^2",
                  "4*(x + y*z)/(1+x^2+y^2+z^2)^2",
                  "-2*(x^2 + y^2 - z^2 - 1)/(1+x^2+y^2+z^2)^2"],
        "known": {"inj_radius": 3.141592653589793,
                  "conv_radius": 1.5707963267948966,
                  "sec_upper": 1.0, "sec_abs_max": 1.0, "ric_reeb_min": 2.0},
    },
    "s3-round-north": {
        "name": "s3-round-north",
        "coords": ["x", "y", "z"],
        "metric": [["4/(1+x^2+y^2+z^2)^2", "0", "0"],
                   ["", "4/(1+x^2+y^2+z^2)^2", "0"],
                   ["", "", "4/(1+x^2+y^2+z^2)^2"]],
        "alpha": ["4*(y - x*z)/(1+x^2+y^2+z^2)^2",
                  "-4*(x + y*z)/(1+x^2+y^2+z^2)^2",
                  "2*(x^2 + y^2 - z^2 - 1)/(1+x^2+y^2+z^2)^2"],
        "known": {"inj_radius": 3.141592653589793,
                  "conv_radius": 1.5707963267948966,
                  "sec_upper": 1.0, "sec_abs_max": 1.0, "ric_reeb_min": 2.0},
    },
    "r3-sasakian": {
        "name": "r3-sasakian",
        "coords": ["x", "y", "z"],
        "metric": [["(1 + y^2)/4", "0", "-y/4"],
                   ["", "1/4", "0"],
                   ["", "", "1/4"]],
        "alpha": ["-y/2", "0", "1/2"],
        "known": {"inj_radius": 3.141592653589793,
                  "sec_upper": 1.0, "sec_abs_max": 3.0, "ric_reeb_min": 2.0},
    },
    "r3-flat-darboux": {
        "name": "r3-flat-darboux",
        "coords": ["x", "y", "z"],
        "metric": [["(1 + y^2 + z^2)/4", "z/4", "-y/4"],
                   ["", "1/4", "0"],
                   ["", "", "1/4"]],
        "alpha": ["-y/2", "0", "1/2"],
        "known": {"inj_radius": "infinity", "conv_radius": "infinity",
                  "sec_upper": 0.0, "sec_abs_max": 0.0, "ric_reeb_min": 0.0},
    },
}

_PI = 3.141592653589793


def _exact(value, tol=None):
    d = {"value": value, "provenance": "exact"}
    if tol is not None:
        d["tol"] = tol
    return d


def _computed(value, tol):
    return {"value": value, "provenance": "computed", "tol": tol}


_META = {
    "t3-flat": {
        "region": ((0.0, 6.283185307179586),) * 3,
        "grid": (5, 5, 9),
        "reference": {
            "theta_prime": _exact(2.0),
            "rho": _exact(1.0),
            "m_g": _exact(0.0),
            "main_bound": _exact(_PI),
            "geometric_bound": _exact(0.5),
            "A": _exact(0.0),
            "B": _exact(2.0),
        },
    },
    "h3-upper-half": {
        "region": ((-1.0, 1.0), (-1.0, 1.0), (0.5, 2.0)),
        "grid": (5, 5, 9),
        "reference": {
            "rho_expr": _exact("1/z"),
            "theta_prime_expr": _exact("k*z"),
            "m_g": _exact(1.0),
            "sec": _exact(-1.0),
            "hyperbolic_criterion": _exact("holds"),
        },
    },
    "h3-curl": {
        "region": ((-1.0, 1.0), (-1.0, 1.0), (0.5, 2.0)),
        "grid": (5, 5, 9),
        "reference": {
            "theta_prime": _exact(1.0),
            "sec": _exact(-1.0),
        },
    },
    "r-x-h2": {
        "region": ((-1.0, 1.0), (-1.0, 1.0), (0.5, 2.0)),
        "grid": (5, 5, 9),
        "reference": {
            "theta_prime": _exact(0.5),
            "rho_expr": _exact("(2*y)^(-0.5)"),
            "m_g": _exact(0.5),
            "weak_bound": _exact(2.0),
        },
    },
    "r3-bessel-ot": {
        "region": ((-3.0, 3.0), (-3.0, 3.0), (-1.0, 1.0)),
        "grid": (41, 41, 3),
        "reference": {
            "theta_prime": _exact(1.0),
            "delta_expr": _exact(
                "besselJ0(r)^2 + besselJ1(r)^2 (squared alpha-norm)"),
            "weak_bound": {"value": 0.15, "provenance": "quoted",
                           "tol": 0.02},
            "weak_bound_computed": _computed(2.2793, 0.01),
            "m_g": _computed(0.43870, 0.001),
            "first_closed_leaf": _computed(3.8317, 0.02),
        },
    },
    "s3-round": {
        "region": ((-0.6, 0.6),) * 3,
        "grid": (5, 5, 5),
        "reference": {
            "theta_prime": _exact(2.0),
            "rho": _exact(1.0),
            "sec": _exact(1.0),
            "main_bound": _exact(1.5707963267948966),
            "geometric_bound": _exact(1.0),
        },
    },
    "s3-round-north": {
        "region": ((-0.6, 0.6),) * 3,
        "grid": (5, 5, 5),
        "reference": {
            "theta_prime": _exact(2.0),
            "rho": _exact(1.0),
            "sec": _exact(1.0),
        },
    },
    "r3-sasakian": {
        "region": ((-1.0, 1.0),) * 3,
        "grid": (5, 5, 5),
        "reference": {
            "theta_prime": _exact(2.0),
            "rho": _exact(1.0),
            "sec_values": _exact([1.0, -3.0]),
            "A": _exact(4.0),
            "B": _exact(1.0),
            "geometric_bound": _exact(0.5),
        },
    },
    "r3-flat-darboux": {
        "region": ((-1.0, 1.0),) * 3,
        "grid": (5, 5, 5),
        "reference": {
            "theta_prime": _exact(2.0),
            "rho": _exact(1.0),
            "A": _exact(0.0),
            "B": _exact(2.0),
            "geometric_bound": _exact(0.5),
            "h_norm": _exact(1.0),
        },
    },
}

# totally geodesic disks through every point and plane: A = 0 despite
# max |sec| = 1
_A_OVERRIDE = {"s3-round": 0.0, "s3-round-north": 0.0}


def catalog_list():
    return sorted(_DOCS)


def catalog_get(name: str) -> CatalogEntry:
    try:
        doc = _DOCS[name]
    except KeyError:
        raise UnknownEntry(
            f"no catalog entry {name!r}; available: {', '.join(catalog_list())}"
        ) from None
    meta = _META[name]
    return CatalogEntry(
        name=name,
        spec=load_spec(doc),
        reference=meta["reference"],
        region=meta["region"],
        grid=meta["grid"],
        A_override=_A_OVERRIDE.get(name),
    )
