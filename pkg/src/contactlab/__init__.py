"""Numerical toolkit for contact forms paired with Riemannian metrics on
3-manifold charts: invariants, tightness-radius bounds, geodesic sphere
foliations and identity verification."""

__version__ = "0.1.0"

from .bounds import (BoundReport, CurvatureData, bound_geometric, bound_main,
                     bound_reeb_tube, bound_weak, criterion_hyperbolic,
                     criterion_quasi_geodesic, ct, ct_inverse,
                     hessian_lower_check)
from .catalog import CatalogEntry, catalog_get, catalog_list
from .contact import (CompatClass, ContactPointData, classify_compatibility,
                      contact_point_data, extrinsic_curvature, frame_xi,
                      h_endomorphism, m_g_estimate, mean_curvature,
                      nabla_n_n, reeb_field, second_fundamental_form,
                      theta_prime, weak_compat_defect)
from .errors import ContactLabError
from .exprlang import eval_expr, parse_expr, to_string
from .foliation import (ClosedLeafRecord, FoliationTrace, char_line_field,
                        classify_sphere, detect_closed_leaves, tau_scan,
                        trace_foliation)
from .geodesic import (GeodesicState, SphereChart, exp_map, jacobi_field,
                       shoot, sphere_chart, sphere_tangent_frame,
                       transversality_margin)
from .levi import complex_tangency_sample, levi_form, levi_identity_residual
from .manifold import EvalContext, ManifoldSpec, load_spec
from .tensor import (FDConfig, christoffel, cov_deriv, d_oneform, gradient,
                     hessian, hodge_star_2form, lie_bracket, ricci_dir,
                     riemann, sectional)

__all__ = [name for name in dir() if not name.startswith("_")]
