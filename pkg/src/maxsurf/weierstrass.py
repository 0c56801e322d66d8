"""Weierstrass representation machinery.

A maximal immersion is recovered from data (g, phi3 = f dz) by

    X = base + Re \\int (phi1, phi2, i phi3),
    phi1 = (1/g - g)/2 * phi3,   phi2 = i (1/g + g)/2 * phi3.

Integration runs along L-shaped grid paths (horizontal then vertical in
parameter space) with adaptive Gauss-Kronrod (G7,K15) quadrature per grid
edge; holomorphy makes the result path-independent, which the test suite
checks rather than assumes.

The conjugate immersion swaps f -> -i*f, i.e. X* = (Im I1, Im I2, Re I3)
for the same holomorphic antiderivatives; it pairs the Lorentzian helicoid
with the catenoid covering and Enneper E1 with E2.

Conformal factor: ds^2 = lambda |dz|^2 with lambda = (1/|g|-|g|)^2 |f|^2 / 4
(constant fixed against the helicoid closed form; see tests).  The singular
set S_X is exactly {|g| = 1}, where lambda vanishes.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DomainError, PoleError, QuadratureError
from .lorentz import LorentzVec

# (G7, K15) Gauss-Kronrod pair on [-1, 1]
_K15_X = np.array([
    -0.9914553711208126, -0.9491079123427585, -0.8648644233597691,
    -0.7415311855993944, -0.5860872354676911, -0.4058451513773972,
    -0.2077849550078985, 0.0, 0.2077849550078985, 0.4058451513773972,
    0.5860872354676911, 0.7415311855993944, 0.8648644233597691,
    0.9491079123427585, 0.9914553711208126,
])
_K15_W = np.array([
    0.02293532201052922, 0.06309209262997855, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278, 0.2044329400752989,
    0.1903505780647854, 0.1690047266392679, 0.1406532597155259,
    0.1047900103222502, 0.06309209262997855, 0.02293532201052922,
])
_G7_W = np.array([
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694, 0.3818300505051189, 0.2797053914892767,
    0.1294849661688697,
])
_G7_IDX = np.array([1, 3, 5, 7, 9, 11, 13])

POLE_LO = 1e-9
POLE_HI = 1e9
QUAD_TOL = 1e-10
_MAX_REFINE = 14


@dataclass
class ComplexMap:
    """Complex-function evaluator, vectorized over numpy arrays.

    ``derivative`` is optional; when given it should match a central
    finite-difference estimate of ``fn`` (tested, not trusted).
    """

    fn: Callable
    derivative: Optional[Callable] = None
    label: str = ""

    def __call__(self, z):
        return self.fn(z)


@dataclass
class ParamDomain:
    """Sampling rectangle in parameter space.

    kind 'rectangle' / 'upper-half-rectangle': z = u + i v over
    [u0,u1] x [v0,v1].  kind 'annulus-sector': z = u * exp(i v) with u the
    modulus in [u0,u1], v the angle in [v0,v1].
    """

    kind: str
    bounds: tuple
    resolution: tuple

    def __post_init__(self):
        if self.kind not in ("rectangle", "upper-half-rectangle", "annulus-sector"):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        u0, u1, v0, v1 = self.bounds
        if not (u0 < u1 and v0 < v1):
            raise DomainError("domain bounds must be ordered")
        if self.kind == "upper-half-rectangle" and v0 < 0:
            raise DomainError("upper-half-rectangle requires v >= 0")
        if self.kind == "annulus-sector" and u0 <= 0:
            raise DomainError("annulus-sector requires positive modulus")
        nu, nv = self.resolution
        if nu < 2 or nv < 2:
            raise DomainError("resolution must be >= 2 in each direction")

    def axes(self):
        u0, u1, v0, v1 = self.bounds
        nu, nv = self.resolution
        return np.linspace(u0, u1, nu), np.linspace(v0, v1, nv)

    def grid(self):
        u, v = self.axes()
        return np.meshgrid(u, v, indexing="ij")

    def to_z(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.kind == "annulus-sector":
            return u * np.exp(1j * v)
        return u + 1j * v

    def param_of_z(self, z):
        """Inverse chart for locating the basepoint; principal branch."""
        z = complex(z)
        if self.kind == "annulus-sector":
            return abs(z), np.angle(z)
        return z.real, z.imag


@dataclass
class WeierstrassData:
    """Gauss map g and height form phi3 = f dz over a sampling domain.

    ``phi_forms``, when supplied, evaluates (phi1, phi2, phi3) per unit dz
    directly; catalog models use it to integrate across removable
    singularities of the raw (1/g - g) f expression (e.g. g and phi3
    vanishing together), which would otherwise trip the pole guard.
    """

    g: ComplexMap
    f: ComplexMap
    domain: ParamDomain
    basepoint: complex = 0.0 + 0.0j
    base_image: LorentzVec = field(default_factory=lambda: LorentzVec(0.0, 0.0, 0.0))
    mirror: Optional[str] = None  # 'conjugate' (z -> conj z) | 'inversion' (z -> 1/conj z)
    phi_forms: Optional[Callable] = None
    label: str = ""

    def __post_init__(self):
        if self.mirror not in (None, "conjugate", "inversion"):
            raise ConfigError(f"mirror must be 'conjugate' or 'inversion', got {self.mirror!r}")


@dataclass
class SampledImmersion:
    """Grid sample of an immersion with Gauss map and conformal factor."""

    domain: ParamDomain
    u: np.ndarray            # (nu,)
    v: np.ndarray            # (nv,)
    points: np.ndarray       # (nu, nv, 3)
    gauss: Optional[np.ndarray] = None       # (nu, nv) complex
    conformal_factor: Optional[np.ndarray] = None  # (nu, nv)

    @property
    def shape(self):
        return self.points.shape[:2]

    def spacing(self):
        return self.u[1] - self.u[0], self.v[1] - self.v[0]


def _check_pole(gv):
    mod = np.abs(gv)
    if np.any(mod < POLE_LO) or np.any(mod > POLE_HI) or np.any(~np.isfinite(gv)):
        raise PoleError("Gauss map has a zero/pole on the evaluation set")


def phi_components(data: WeierstrassData, z):
    """(phi1, phi2, phi3) per unit dz at z; PoleError at zeros/poles of g."""
    z = np.asarray(z, dtype=complex)
    if data.phi_forms is not None:
        p1, p2, p3 = data.phi_forms(z)
        return (np.asarray(p1, dtype=complex), np.asarray(p2, dtype=complex),
                np.asarray(p3, dtype=complex))
    gv = np.asarray(data.g(z), dtype=complex)
    _check_pole(gv)
    f3 = np.asarray(data.f(z), dtype=complex)
    phi1 = 0.5 * (1.0 / gv - gv) * f3
    phi2 = 0.5j * (1.0 / gv + gv) * f3
    return phi1, phi2, f3


def _segment_weights(data, p0u, p0v, p1u, p1v, conjugate=False):
    """GK15 integral of (phi1, phi2, i phi3) dz over parameter segments.

    Segments are straight in parameter space; returns (integral (n,3),
    error (n,)) where error is the (K15-G7) estimate maxed over components.
    """
    dom = data.domain
    s = 0.5 * (_K15_X + 1.0)            # (15,)
    du = (p1u - p0u)[:, None]
    dv = (p1v - p0v)[:, None]
    uu = p0u[:, None] + s[None, :] * du
    vv = p0v[:, None] + s[None, :] * dv
    if dom.kind == "annulus-sector":
        phase = np.exp(1j * vv)
        z = uu * phase
        dz = (du + 1j * uu * dv) * phase
    else:
        z = uu + 1j * vv
        dz = (du + 1j * dv) * np.ones_like(s)[None, :]
    phi1, phi2, phi3 = phi_components(data, z)
    f = -1j * phi3 if conjugate else phi3
    if conjugate:
        phi1, phi2 = -1j * phi1, -1j * phi2
    integrand = np.stack([phi1 * dz, phi2 * dz, 1j * f * dz], axis=-1)  # (n,15,3)
    k15 = 0.5 * np.einsum("k,nkc->nc", _K15_W, integrand)
    g7 = 0.5 * np.einsum("k,nkc->nc", _G7_W, integrand[:, _G7_IDX, :])
    err = np.abs(k15 - g7).max(axis=-1)
    return k15, err


def _integrate_segments(data, p0u, p0v, p1u, p1v, tol=QUAD_TOL, conjugate=False):
    """Adaptively refined segment integrals (vectorized work-list)."""
    total = np.zeros((len(p0u), 3), dtype=complex)
    idx = np.arange(len(p0u))
    segs = (p0u.copy(), p0v.copy(), p1u.copy(), p1v.copy(), idx)
    for depth in range(_MAX_REFINE + 1):
        a_u, a_v, b_u, b_v, owner = segs
        if len(owner) == 0:
            return total
        vals, err = _segment_weights(data, a_u, a_v, b_u, b_v, conjugate=conjugate)
        ok = err <= tol
        np.add.at(total, owner[ok], vals[ok])
        bad = ~ok
        if not bad.any():
            return total
        mu = 0.5 * (a_u[bad] + b_u[bad])
        mv = 0.5 * (a_v[bad] + b_v[bad])
        segs = (np.concatenate([a_u[bad], mu]), np.concatenate([a_v[bad], mv]),
                np.concatenate([mu, b_u[bad]]), np.concatenate([mv, b_v[bad]]),
                np.concatenate([owner[bad], owner[bad]]))
    raise QuadratureError(f"quadrature tolerance {tol} not reached after {_MAX_REFINE} refinements")


def _integrate_grid(data: WeierstrassData, tol=QUAD_TOL, conjugate=False, order="hv"):
    """Cumulative path integrals of (phi1, phi2, i phi3) to every grid node.

    Edge integrals are batched: one adaptive-quadrature call covers the
    anchor line, one covers all perpendicular grid lines.  Each node's
    value depends only on its own L-path, so the evaluation order is
    immaterial (columns are embarrassingly parallel).
    """
    dom = data.domain
    uax, vax = dom.axes()
    nu, nv = len(uax), len(vax)
    bu, bv = dom.param_of_z(data.basepoint)
    ia = int(np.argmin(np.abs(uax - bu)))
    ja = int(np.argmin(np.abs(vax - bv)))
    anchor = _integrate_segments(
        data, np.array([bu]), np.array([bv]),
        np.array([uax[ia]]), np.array([vax[ja]]), tol, conjugate)[0]

    if order not in ("hv", "vh"):
        raise DomainError(f"order must be 'hv' or 'vh', got {order!r}")
    U, V = np.meshgrid(uax, vax, indexing="ij")
    if order == "hv":
        row = _cumline(data, uax, np.full(nu, vax[ja]), ia, tol, conjugate)  # (nu,3)
        p0u, p1u = U[:, :-1], U[:, 1:]
        p0v, p1v = V[:, :-1], V[:, 1:]
        edges = _integrate_segments(data, p0u.ravel(), p0v.ravel(),
                                    p1u.ravel(), p1v.ravel(), tol, conjugate)
        edges = edges.reshape(nu, nv - 1, 3)
        cols = np.zeros((nu, nv, 3), dtype=complex)
        np.cumsum(edges, axis=1, out=cols[:, 1:])
        cols -= cols[:, ja:ja + 1, :]
        acc = row[:, None, :] + cols
    else:
        col = _cumline(data, np.full(nv, uax[ia]), vax, ja, tol, conjugate)  # (nv,3)
        p0u, p1u = U[:-1, :], U[1:, :]
        p0v, p1v = V[:-1, :], V[1:, :]
        edges = _integrate_segments(data, p0u.ravel(), p0v.ravel(),
                                    p1u.ravel(), p1v.ravel(), tol, conjugate)
        edges = edges.reshape(nu - 1, nv, 3)
        rows = np.zeros((nu, nv, 3), dtype=complex)
        np.cumsum(edges, axis=0, out=rows[1:, :])
        rows -= rows[ia:ia + 1, :, :]
        acc = col[None, :, :] + rows
    return acc + anchor[None, None, :]


def _cumline(data, us, vs, k0, tol, conjugate):
    """Cumulative integrals along one grid line, zero at index k0."""
    edge = _integrate_segments(data, us[:-1], vs[:-1], us[1:], vs[1:], tol, conjugate)
    out = np.zeros((len(us), 3), dtype=complex)
    np.cumsum(edge, axis=0, out=out[1:])
    return out - out[k0]


def conformal_factor(data: WeierstrassData, z):
    """lambda with ds^2 = lambda |dz|^2:  (1/|g| - |g|)^2 |f|^2 / 4."""
    z = np.asarray(z, dtype=complex)
    gv = np.asarray(data.g(z), dtype=complex)
    _check_pole(gv)
    mod = np.abs(gv)
    lam = 0.25 * (1.0 / mod - mod) ** 2 * np.abs(np.asarray(data.f(z), dtype=complex)) ** 2
    return float(lam) if lam.ndim == 0 else lam


def integrate_immersion(data: WeierstrassData, tol=QUAD_TOL, order="hv") -> SampledImmersion:
    """Sample X = base + Re \\int (phi1, phi2, i phi3) over the domain grid."""
    acc = _integrate_grid(data, tol=tol, conjugate=False, order=order)
    uax, vax = data.domain.axes()
    U, V = data.domain.grid()
    Z = data.domain.to_z(U, V)
    gv = np.asarray(data.g(Z), dtype=complex)
    pts = np.real(acc) + data.base_image.array()[None, None, :]
    return SampledImmersion(domain=data.domain, u=uax, v=vax, points=pts,
                            gauss=gv, conformal_factor=conformal_factor(data, Z))


def conjugate_immersion(data: WeierstrassData, tol=QUAD_TOL,
                        base_image: Optional[LorentzVec] = None) -> SampledImmersion:
    """Conjugate surface: the immersion of the rotated data (g, -i phi3).

    Componentwise X* = (Im I1, Im I2, Re I3) for the antiderivatives
    I_k of (phi1, phi2, phi3); the third coordinate integrates Re phi3.
    Applying the operation twice reproduces -X up to translation.
    """
    acc = _integrate_grid(data, tol=tol, conjugate=True, order="hv")
    uax, vax = data.domain.axes()
    U, V = data.domain.grid()
    Z = data.domain.to_z(U, V)
    gv = np.asarray(data.g(Z), dtype=complex)
    base = base_image if base_image is not None else LorentzVec(0.0, 0.0, 0.0)
    pts = np.real(acc) + base.array()[None, None, :]
    return SampledImmersion(domain=data.domain, u=uax, v=vax, points=pts,
                            gauss=gv, conformal_factor=conformal_factor(data, Z))


def conjugate_data(data: WeierstrassData) -> WeierstrassData:
    """Weierstrass data of the conjugate surface: f -> -i f."""
    f = data.f
    forms = None
    if data.phi_forms is not None:
        def forms(z, _pf=data.phi_forms):
            p1, p2, p3 = _pf(z)
            return -1j * np.asarray(p1, complex), -1j * np.asarray(p2, complex), \
                -1j * np.asarray(p3, complex)
    return WeierstrassData(
        g=data.g,
        f=ComplexMap(lambda z, _f=f: -1j * np.asarray(_f(z), dtype=complex),
                     label=f"-i*({f.label or 'f'})"),
        domain=data.domain, basepoint=data.basepoint,
        base_image=LorentzVec(0.0, 0.0, 0.0), mirror=None, phi_forms=forms,
        label=f"conjugate({data.label})")


def mirror_residual(data: WeierstrassData, samples=None):
    """Symmetry defect of the mirror involution J.

    Returns (max |conj(g(z)) * g(J(z)) - 1|, max |f(J(z)) * J'(z) + conj(f(z))|)
    over the sample set; both vanish exactly when the data extends by
    Schwarz reflection across the lightlike boundary.
    """
    if data.mirror is None:
        raise ConfigError("mirror involution not configured for this data")
    if samples is None:
        U, V = data.domain.grid()
        samples = data.domain.to_z(U, V).ravel()
    z = np.asarray(samples, dtype=complex)
    if data.mirror == "conjugate":
        jz = np.conj(z)
        jp = np.ones_like(z)
    else:
        if np.any(z == 0):
            raise DomainError("inversion mirror undefined at z = 0")
        jz = 1.0 / np.conj(z)
        jp = -1.0 / np.conj(z) ** 2
    gv = np.asarray(data.g(z), dtype=complex)
    gj = np.asarray(data.g(jz), dtype=complex)
    res_g = float(np.abs(np.conj(gv) * gj - 1.0).max())
    fv = np.asarray(data.f(z), dtype=complex)
    fj = np.asarray(data.f(jz), dtype=complex)
    res_f = float(np.abs(fj * jp + np.conj(fv)).max())
    return res_g, res_f


@dataclass
class SingularComponent:
    """One connected component of the sampled singular set |g| = 1."""

    indices: np.ndarray   # (k, 2) grid indices
    params: np.ndarray    # (k, 2) parameter coordinates (u, v)


def singular_scan(imm: SampledImmersion, tol=1e-8):
    """Grid nodes with ||g| - 1| <= tol, grouped into connected components."""
    if imm.gauss is None:
        raise ConfigError("immersion carries no Gauss map samples")
    mask = np.abs(np.abs(imm.gauss) - 1.0) <= tol
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    out = []
    for k in range(1, n + 1):
        ii, jj = np.nonzero(labels == k)
        params = np.stack([imm.u[ii], imm.v[jj]], axis=1)
        out.append(SingularComponent(indices=np.stack([ii, jj], axis=1), params=params))
    return out


def _fmt(x):
    return repr(float(x))


def export_obj(imm: SampledImmersion, path):
    """Wavefront OBJ: grid vertices plus quad faces."""
    nu, nv = imm.shape
    lines = []
    for i in range(nu):
        for j in range(nv):
            p = imm.points[i, j]
            lines.append(f"v {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}")
    for i in range(nu - 1):
        for j in range(nv - 1):
            a = i * nv + j + 1
            b = (i + 1) * nv + j + 1
            lines.append(f"f {a} {b} {b + 1} {a + 1}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def export_csv(imm: SampledImmersion, path, singular_tol=None):
    """CSV with columns u, v, x1, x2, t, re_g, im_g, lambda.

    With ``singular_tol`` a trailing 0/1 ``singular`` column flags nodes
    with ||g| - 1| <= singular_tol.
    """
    nu, nv = imm.shape
    gauss = imm.gauss if imm.gauss is not None else np.zeros((nu, nv), dtype=complex)
    lam = imm.conformal_factor if imm.conformal_factor is not None else np.zeros((nu, nv))
    header = "u,v,x1,x2,t,re_g,im_g,lambda"
    if singular_tol is not None:
        header += ",singular"
        flags = np.abs(np.abs(gauss) - 1.0) <= singular_tol
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i in range(nu):
            for j in range(nv):
                p = imm.points[i, j]
                row = [_fmt(imm.u[i]), _fmt(imm.v[j]), _fmt(p[0]), _fmt(p[1]),
                       _fmt(p[2]), _fmt(gauss[i, j].real), _fmt(gauss[i, j].imag),
                       _fmt(lam[i, j])]
                if singular_tol is not None:
                    row.append(str(int(flags[i, j])))
                fh.write(",".join(row) + "\n")
