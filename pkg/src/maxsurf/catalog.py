"""Closed-form model surfaces: helicoid, Lorentzian catenoid, Enneper E1/E2,
planes, plus negative-control fixtures.

Each model bundles its parametrization, Weierstrass data, implicit equation
(where one exists), a conformal chart for verification fixtures, an entire
graph sampler (where the surface is a graph over the plane), and the known
facts used as test anchors.

Sign conventions: the catenoid's height form is stored as phi3 = -i dz / z.
The +i dz/z normalization integrates to the mirror copy -Y(m,s)
(equivalently Y(1/m, s)); the sign flip makes integrate_immersion agree with
the parametrization Y pointwise at the same parameter.  The surface is the
same point set either way.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import DomainError, UnsupportedError
from .lorentz import LorentzVec
from .weierstrass import ComplexMap, ParamDomain, WeierstrassData


@dataclass
class SurfaceModel:
    name: str
    param: Callable                      # (U, V) -> (..., 3), vectorized
    range_check: Callable                # (U, V) -> None or raises DomainError
    known: dict = field(default_factory=dict)
    weierstrass_factory: Optional[Callable] = None   # (bounds, resolution) -> WeierstrassData
    implicit: Optional[Callable] = None  # (..., 3) -> residual
    chart: Optional[Callable] = None     # conformal chart (U, V) -> (..., 3)
    chart_gauss: Optional[Callable] = None           # (U, V) -> complex g on the chart
    chart_factor: Optional[Callable] = None          # (U, V) -> conformal factor on the chart
    graph: Optional[Callable] = None     # entire graph sampler (X1, X2) -> u
    boundary_gauss: Optional[Callable] = None        # trace parameter -> g values
    default_domain: Optional[tuple] = None           # (kind, bounds)

    def weierstrass(self, bounds=None, resolution=(128, 128)) -> WeierstrassData:
        if self.weierstrass_factory is None:
            raise UnsupportedError(f"model {self.name!r} has no Weierstrass data")
        if bounds is None:
            bounds = self.default_domain[1]
        return self.weierstrass_factory(bounds, resolution)


def eval_param(model: SurfaceModel, u, v) -> LorentzVec:
    """Closed-form parametrization at a single parameter point."""
    model.range_check(u, v)
    p = model.param(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    return LorentzVec(float(p[..., 0]), float(p[..., 1]), float(p[..., 2]))


def param_grid(model: SurfaceModel, U, V):
    """Vectorized parametrization; same range rules as eval_param."""
    model.range_check(U, V)
    return model.param(np.asarray(U, dtype=float), np.asarray(V, dtype=float))


def eval_implicit(model: SurfaceModel, p):
    """Residual of the model's implicit equation at p (vectorized)."""
    if model.implicit is None:
        raise UnsupportedError(f"model {model.name!r} has no implicit form")
    a = p.array() if isinstance(p, LorentzVec) else np.asarray(p, dtype=float)
    return model.implicit(a)


def known_facts(model: SurfaceModel) -> dict:
    return dict(model.known)


# ---------------------------------------------------------------------------
# model definitions
# ---------------------------------------------------------------------------

def _stack(x1, x2, t):
    return np.stack(np.broadcast_arrays(np.asarray(x1, dtype=float),
                                        np.asarray(x2, dtype=float),
                                        np.asarray(t, dtype=float)), axis=-1)


def _no_check(u, v):
    return None


# -- helicoid ---------------------------------------------------------------

def _helicoid_param(u, v):
    return _stack(np.cosh(v) * np.cos(u), np.cosh(v) * np.sin(u), u)


def _helicoid_check(u, v):
    if np.any(np.asarray(v) < 0):
        raise DomainError("helicoid parametrized over the closed upper half plane v >= 0")


def _helicoid_weierstrass(bounds, resolution):
    def forms(z):
        z = np.asarray(z, dtype=complex)
        return -np.sin(z), np.cos(z), np.full_like(z, -1j)

    return WeierstrassData(
        g=ComplexMap(lambda z: np.exp(1j * z), derivative=lambda z: 1j * np.exp(1j * z),
                     label="exp(iz)"),
        f=ComplexMap(lambda z: np.full_like(np.asarray(z, dtype=complex), -1j), label="-i"),
        domain=ParamDomain("upper-half-rectangle", tuple(bounds), tuple(resolution)),
        basepoint=0.0 + 0.0j, base_image=LorentzVec(1.0, 0.0, 0.0),
        mirror="conjugate", phi_forms=forms, label="helicoid")


HELICOID = SurfaceModel(
    name="helicoid",
    param=_helicoid_param,
    range_check=_helicoid_check,
    weierstrass_factory=_helicoid_weierstrass,
    chart=_helicoid_param,
    chart_gauss=lambda u, v: np.exp(1j * (u + 1j * v)),
    chart_factor=lambda u, v: np.sinh(np.asarray(v, dtype=float)) ** 2,
    boundary_gauss=lambda s: np.exp(1j * np.asarray(s, dtype=float)),
    default_domain=("upper-half-rectangle", (-np.pi, np.pi, 0.0, 2.0)),
    known={
        "rotation_number": np.inf,
        "singular_set": "boundary v = 0 (lightlike helix)",
        "implicit_scale": None,
    },
)


# -- Lorentzian catenoid ----------------------------------------------------

def _catenoid_param(m, s):
    m = np.asarray(m, dtype=float)
    return _stack((1 - m ** 2) / (2 * m) * np.sin(s),
                  (m ** 2 - 1) / (2 * m) * np.cos(s),
                  np.log(m))


def _catenoid_check(m, s):
    if np.any(np.asarray(m) <= 0):
        raise DomainError("catenoid requires modulus m > 0")


def _catenoid_weierstrass(bounds, resolution):
    def forms(z):
        z = np.asarray(z, dtype=complex)
        return -0.5j * (1.0 / z ** 2 - 1.0), 0.5 * (1.0 / z ** 2 + 1.0), -1j / z

    return WeierstrassData(
        g=ComplexMap(lambda z: np.asarray(z, dtype=complex),
                     derivative=lambda z: np.ones_like(np.asarray(z, dtype=complex)), label="z"),
        f=ComplexMap(lambda z: -1j / np.asarray(z, dtype=complex), label="-i/z"),
        domain=ParamDomain("annulus-sector", tuple(bounds), tuple(resolution)),
        basepoint=1.0 + 0.0j, base_image=LorentzVec(0.0, 0.0, 0.0),
        mirror=None, phi_forms=forms, label="catenoid")


def catenoid_graph(x1, x2):
    """Entire catenoid graph u = arcsinh(|x|); conelike vertex at the origin."""
    return np.arcsinh(np.hypot(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)))


CATENOID = SurfaceModel(
    name="catenoid",
    param=_catenoid_param,
    range_check=_catenoid_check,
    weierstrass_factory=_catenoid_weierstrass,
    implicit=lambda p: p[..., 0] ** 2 + p[..., 1] ** 2 - np.sinh(p[..., 2]) ** 2,
    chart=lambda x, s: _stack(-np.sinh(x) * np.sin(s), np.sinh(x) * np.cos(s), x),
    chart_gauss=lambda x, s: np.exp(np.asarray(x, dtype=float) + 1j * np.asarray(s, dtype=float)),
    chart_factor=lambda x, s: np.broadcast_to(np.sinh(np.asarray(x, dtype=float)) ** 2,
                                              np.broadcast(x, s).shape).copy(),
    graph=catenoid_graph,
    default_domain=("annulus-sector", (0.4, 2.5, -np.pi, np.pi)),
    known={
        "rotation_number": None,
        "singular_set": "circle |z| = 1; image is the single point O",
        "implicit_scale": 1.0,
    },
)


# -- Enneper E1 ---------------------------------------------------------------

def _e1_param(m, s):
    m = np.asarray(m, dtype=float)
    return _stack(-m ** 2 * np.cos(2 * s),
                  (3 * m * np.cos(s) - m ** 3 * np.cos(3 * s)) / 3.0,
                  -(m * (3 * np.cos(s) + m ** 2 * np.cos(3 * s))) / 3.0)


def _enneper_check(m, s):
    if np.any(np.asarray(m) < 0):
        raise DomainError("Enneper models require modulus m >= 0")


def _moebius_g(z):
    z = np.asarray(z, dtype=complex)
    return (z - 1j) / (z + 1j)


def _e1_weierstrass(bounds, resolution):
    def forms(z):
        z = np.asarray(z, dtype=complex)
        return -2.0 * z, 1.0 - z ** 2, 1j * (z ** 2 + 1)

    return WeierstrassData(
        g=ComplexMap(_moebius_g, derivative=lambda z: 2j / (np.asarray(z, dtype=complex) + 1j) ** 2,
                     label="(z-i)/(z+i)"),
        f=ComplexMap(lambda z: 1j * (np.asarray(z, dtype=complex) ** 2 + 1), label="i(z^2+1)"),
        domain=ParamDomain("annulus-sector", tuple(bounds), tuple(resolution)),
        basepoint=1.0 + 0.0j, base_image=LorentzVec(-1.0, 2.0 / 3.0, -4.0 / 3.0),
        mirror="conjugate", phi_forms=forms, label="enneper1")


def _e1_implicit(p):
    x, y, t = p[..., 0], p[..., 1], p[..., 2]
    return 32 * (y - t) ** 3 - 3 * (y + t) + 24 * (y - t) * x


def _e1_chart(u, v):
    z = np.asarray(u, dtype=float) + 1j * np.asarray(v, dtype=float)
    return _stack(np.real(-z ** 2), np.real(z - z ** 3 / 3), np.real(-(z ** 3 / 3 + z)))


E1 = SurfaceModel(
    name="enneper1",
    param=_e1_param,
    range_check=_enneper_check,
    weierstrass_factory=_e1_weierstrass,
    implicit=_e1_implicit,
    chart=_e1_chart,
    chart_gauss=lambda u, v: _moebius_g(np.asarray(u, float) + 1j * np.asarray(v, float)),
    chart_factor=lambda u, v: _enneper_chart_factor(np.asarray(u, float) + 1j * np.asarray(v, float)),
    boundary_gauss=lambda x: _moebius_g(np.asarray(x, dtype=float)),
    default_domain=("annulus-sector", (0.05, 2.0, 0.0, np.pi)),
    known={
        "rotation_number": 2 * np.pi,
        "singular_set": "real axis; image is the boundary curve",
        "implicit_scale": 0.125,
    },
)


def _enneper_chart_factor(z):
    g = _moebius_g(z)
    mod = np.abs(g)
    return 0.25 * (1.0 / mod - mod) ** 2 * np.abs(z ** 2 + 1) ** 2


# -- Enneper E2 ---------------------------------------------------------------

def _e2_param(m, s):
    m = np.asarray(m, dtype=float)
    return _stack(m ** 2 * np.sin(2 * s),
                  (-3 * m * np.sin(s) + m ** 3 * np.sin(3 * s)) / 3.0,
                  (3 * m * np.sin(s) + m ** 3 * np.sin(3 * s)) / 3.0)


def _e2_weierstrass(bounds, resolution):
    def forms(z):
        z = np.asarray(z, dtype=complex)
        return -2j * z, -1j * (z ** 2 - 1), -(z ** 2 + 1)

    return WeierstrassData(
        g=ComplexMap(_moebius_g, derivative=lambda z: 2j / (np.asarray(z, dtype=complex) + 1j) ** 2,
                     label="(z-i)/(z+i)"),
        f=ComplexMap(lambda z: -(np.asarray(z, dtype=complex) ** 2 + 1), label="-(z^2+1)"),
        domain=ParamDomain("annulus-sector", tuple(bounds), tuple(resolution)),
        basepoint=1.0 + 0.0j, base_image=LorentzVec(0.0, 0.0, 0.0),
        mirror=None, phi_forms=forms, label="enneper2")


def _e2_implicit(p):
    x1, x2, t = p[..., 0], p[..., 1], p[..., 2]
    s = x2 - t
    return 3 * s ** 2 - 0.25 * s ** 4 + 3 * x1 ** 2 + 6 * s * t


def _e2_chart(u, v):
    z = np.asarray(u, dtype=float) + 1j * np.asarray(v, dtype=float)
    return _stack(np.real(-1j * z ** 2), np.real(-1j * (z ** 3 / 3 - z)),
                  np.real(-1j * (z ** 3 / 3 + z)))


def e2_graph(x1, x2):
    """Entire Enneper graph: height above (x1, x2).

    Solves the quartic s^4 + 12 s^2 - 24 x2 s - 12 x1^2 = 0 for its most
    negative root s = x2 - u; the singular lightlike ray sits over
    {x1 = 0, x2 >= 0} where u = x2.
    """
    sigma = _kernels.e2_sigma(x1, x2)
    return np.asarray(x2, dtype=float) - sigma


E2 = SurfaceModel(
    name="enneper2",
    param=_e2_param,
    range_check=_enneper_check,
    weierstrass_factory=_e2_weierstrass,
    implicit=_e2_implicit,
    chart=_e2_chart,
    chart_gauss=lambda u, v: _moebius_g(np.asarray(u, float) + 1j * np.asarray(v, float)),
    chart_factor=lambda u, v: _enneper_chart_factor(np.asarray(u, float) + 1j * np.asarray(v, float)),
    boundary_gauss=lambda x: _moebius_g(np.asarray(x, dtype=float)),
    graph=e2_graph,
    default_domain=("annulus-sector", (0.05, 2.0, 0.0, np.pi)),
    known={
        "rotation_number": 2 * np.pi,
        "singular_set": "real axis; image is the origin",
        "singular_ray": "open lightlike half line x1 = x2 - t = 0, t > 0",
        "implicit_scale": 1.0,
    },
)


# -- planes -------------------------------------------------------------------

_PLANE_G = 0.2 + 0.0j  # constant Gauss chart value; normal st_inv(0.2)


def _plane_param(u, v):
    # conformal chart of the spacelike plane t = (5/13) x2 through O
    return _stack(-2.4 * np.asarray(v, float), -2.6 * np.asarray(u, float),
                  -np.asarray(u, float))


def _plane_weierstrass(bounds, resolution):
    c = _PLANE_G

    def f_const(z):
        return np.full_like(np.asarray(z, dtype=complex), 1j)

    return WeierstrassData(
        g=ComplexMap(lambda z: np.full_like(np.asarray(z, dtype=complex), c), label="0.2"),
        f=ComplexMap(f_const, label="i"),
        domain=ParamDomain("rectangle", tuple(bounds), tuple(resolution)),
        basepoint=0.0 + 0.0j, base_image=LorentzVec(0.0, 0.0, 0.0),
        mirror=None, label="plane")


PLANE = SurfaceModel(
    name="plane",
    param=_plane_param,
    range_check=_no_check,
    weierstrass_factory=_plane_weierstrass,
    chart=_plane_param,
    chart_gauss=lambda u, v: np.full(np.broadcast(u, v).shape, _PLANE_G, dtype=complex),
    chart_factor=lambda u, v: np.full(np.broadcast(u, v).shape,
                                      0.25 * (1 / 0.2 - 0.2) ** 2),
    graph=lambda x1, x2: (5.0 / 13.0) * np.asarray(x2, dtype=float),
    default_domain=("rectangle", (-1.0, 1.0, -1.0, 1.0)),
    known={
        "rotation_number": None,
        "singular_set": "empty",
        "implicit_scale": None,
    },
)


TIMELIKE_PLANE = SurfaceModel(
    name="timelike-plane-fixture",
    param=lambda u, v: _stack(u, v, 1.25 * np.asarray(v, dtype=float)),
    range_check=_no_check,
    graph=lambda x1, x2: 1.25 * np.asarray(x2, dtype=float),
    known={"singular_set": "not spacelike anywhere (negative control)"},
)


LIGHTLIKE_PLANE = SurfaceModel(
    name="lightlike-plane-fixture",
    param=lambda u, v: _stack(u, v, np.asarray(v, dtype=float)),
    range_check=_no_check,
    graph=lambda x1, x2: np.asarray(x2, dtype=float),
    known={"singular_set": "entirely lightlike (PS limit graph)"},
)


SPHERE = SurfaceModel(
    name="sphere-fixture",
    param=lambda u, v: _stack(np.sin(v) * np.cos(u), np.sin(v) * np.sin(u), np.cos(v)),
    range_check=_no_check,
    known={"singular_set": "Euclidean sphere cap, not maximal (negative control)"},
)


def lightcone_graph(x1, x2):
    """Upper light cone graph u = |x|."""
    return np.hypot(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))


REGISTRY = {
    "helicoid": HELICOID,
    "catenoid": CATENOID,
    "enneper1": E1,
    "enneper2": E2,
    "plane": PLANE,
}

FIXTURES = {
    "timelike-plane-fixture": TIMELIKE_PLANE,
    "lightlike-plane-fixture": LIGHTLIKE_PLANE,
    "sphere-fixture": SPHERE,
}

GRAPH_SAMPLERS = {
    "catenoid": catenoid_graph,
    "enneper2": e2_graph,
    "plane": PLANE.graph,
    "lightcone": lightcone_graph,
    "zero-plane": lambda x1, x2: np.zeros(np.broadcast(x1, x2).shape),
    "lightlike-plane-fixture": LIGHTLIKE_PLANE.graph,
}


def get_model(name: str) -> SurfaceModel:
    if name in REGISTRY:
        return REGISTRY[name]
    if name in FIXTURES:
        return FIXTURES[name]
    raise DomainError(f"unknown model {name!r}; registered: "
                      f"{sorted(REGISTRY) + sorted(FIXTURES)}")


def sample_chart(model: SurfaceModel, bounds, resolution):
    """SampledImmersion built from the model's conformal chart closed form."""
    from .weierstrass import SampledImmersion

    if model.chart is None:
        raise UnsupportedError(f"model {model.name!r} has no conformal chart")
    kind = "rectangle"
    dom = ParamDomain(kind, tuple(bounds), tuple(resolution))
    U, V = dom.grid()
    pts = model.chart(U, V)
    gauss = model.chart_gauss(U, V) if model.chart_gauss else None
    lam = model.chart_factor(U, V) if model.chart_factor else None
    uax, vax = dom.axes()
    return SampledImmersion(domain=dom, u=uax, v=vax, points=pts,
                            gauss=gauss, conformal_factor=lam)
