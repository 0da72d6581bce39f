import numpy as np
import pytest

from contactlab.catalog import catalog_get, catalog_list
from contactlab.contact import contact_point_data, weak_compat_defect
from contactlab.errors import UnknownEntry
from contactlab.manifold import EvalContext
from contactlab.tensor import sectional

RNG = np.random.default_rng(31)

EXPECTED = [
    "h3-curl", "h3-upper-half", "r-x-h2", "r3-bessel-ot", "r3-flat-darboux",
    "r3-sasakian", "s3-round", "s3-round-north", "t3-flat",
]


def _sample(entry, n=25):
    lo = np.array([a for a, _ in entry.region])
    hi = np.array([b for _, b in entry.region])
    return lo + RNG.uniform(0.05, 0.95, (n, 3)) * (hi - lo)


def test_list_is_sorted_and_complete():
    assert catalog_list() == EXPECTED


def test_unknown_entry():
    with pytest.raises(UnknownEntry):
        catalog_get("flat-t4")


@pytest.mark.parametrize("name", EXPECTED)
def test_entries_load_and_are_weakly_compatible(name):
    entry = catalog_get(name)
    assert entry.name == entry.spec.name == name
    ctx = EvalContext(entry.spec)
    pts = _sample(entry)
    pts = pts[ctx.in_domain(pts)]
    assert len(pts) > 0
    assert weak_compat_defect(ctx, pts).max() < 1e-6


@pytest.mark.parametrize("name", EXPECTED)
def test_reference_theta_prime_and_rho(name):
    entry = catalog_get(name)
    ctx = EvalContext(entry.spec)
    ref = entry.reference
    pts = _sample(entry, 10)
    pts = pts[ctx.in_domain(pts)]
    data = contact_point_data(ctx, pts)
    # for every weakly compatible entry, rho * |alpha| = 1
    np.testing.assert_allclose(data.rho * data.rho_alpha, 1.0, atol=1e-8)
    if name == "h3-upper-half":
        np.testing.assert_allclose(data.theta_prime / pts[:, 2], 1.0,
                                   atol=1e-6)
        np.testing.assert_allclose(data.rho * pts[:, 2], 1.0, atol=1e-7)
    elif name == "h3-curl":
        # the log-twist profile makes the rotation speed constant
        np.testing.assert_allclose(data.theta_prime, 1.0, atol=1e-6)
        np.testing.assert_allclose(data.rho * pts[:, 2], 1.0, atol=1e-7)
    elif name == "r-x-h2":
        np.testing.assert_allclose(data.theta_prime, 0.5, atol=1e-6)
    elif name == "r3-bessel-ot":
        np.testing.assert_allclose(data.theta_prime, 1.0, atol=1e-6)
    else:
        np.testing.assert_allclose(data.theta_prime,
                                   ref["theta_prime"]["value"], atol=1e-5)
        np.testing.assert_allclose(data.rho, 1.0, atol=1e-6)


@pytest.mark.parametrize("name,K", [("h3-upper-half", -1.0), ("h3-curl", -1.0),
                                    ("s3-round", 1.0), ("s3-round-north", 1.0),
                                    ("t3-flat", 0.0), ("r3-bessel-ot", 0.0)])
def test_constant_curvature_entries(name, K):
    entry = catalog_get(name)
    ctx = EvalContext(entry.spec)
    pts = _sample(entry, 8)
    pts = pts[ctx.in_domain(pts)]
    u = RNG.normal(size=pts.shape)
    v = RNG.normal(size=pts.shape)
    np.testing.assert_allclose(sectional(ctx, pts, u, v), K, atol=1e-5)


def test_sasakian_designated_planes():
    entry = catalog_get("r3-sasakian")
    ctx = EvalContext(entry.spec)
    p = np.array([0.2, -0.3, 0.1])
    data = contact_point_data(ctx, p)
    xi_dir = data.R_alpha / np.linalg.norm(data.R_alpha)
    # any plane containing the Reeb direction has curvature 1
    u = RNG.normal(size=3)
    assert abs(float(sectional(ctx, p, xi_dir, u)) - 1.0) < 1e-4
    # the contact plane itself has curvature -3
    from contactlab.contact import frame_xi
    fr = frame_xi(ctx, p)
    assert abs(float(sectional(ctx, p, fr.u, fr.v)) + 3.0) < 1e-4


def test_a_override_only_on_spheres():
    for name in EXPECTED:
        entry = catalog_get(name)
        if name.startswith("s3-"):
            assert entry.A_override == 0.0
        else:
            assert entry.A_override is None


def test_export_documents_round_trip():
    from contactlab.manifold import load_spec
    for name in EXPECTED:
        spec = catalog_get(name).spec
        assert load_spec(spec.document()) == spec
