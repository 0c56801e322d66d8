"""Minkowski R^3_1 linear algebra.

Metric convention: <(x1,x2,t),(y1,y2,s)> = x1*y1 + x2*y2 - t*s.  Points and
vectors are either ``LorentzVec`` instances or numpy arrays with a trailing
axis of length 3; every function here accepts both and is vectorized over
leading axes.

Classification tolerances are relative: a squared norm counts as zero when
|norm2| <= tol * scale^2 with scale = max(1, Euclidean norm).  Blow-down
sequences span many orders of magnitude, so an absolute cutoff would
misclassify rescaled vectors.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class LorentzVec:
    """Point/vector of R^3_1 in model units."""

    x1: float
    x2: float
    t: float

    def __iter__(self):
        return iter((self.x1, self.x2, self.t))

    def __add__(self, other):
        o = as_array(other)
        return LorentzVec(self.x1 + o[0], self.x2 + o[1], self.t + o[2])

    def __sub__(self, other):
        o = as_array(other)
        return LorentzVec(self.x1 - o[0], self.x2 - o[1], self.t - o[2])

    def __mul__(self, c):
        return LorentzVec(c * self.x1, c * self.x2, c * self.t)

    __rmul__ = __mul__

    def __neg__(self):
        return LorentzVec(-self.x1, -self.x2, -self.t)

    def array(self):
        return np.array([self.x1, self.x2, self.t], dtype=float)


class CausalClass(Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"


class ConeRegion(Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


class ConeHalf(Enum):
    UPPER = "upper"
    LOWER = "lower"
    NONE = "none"


def as_array(v):
    """LorentzVec or array-like -> float array with trailing axis 3."""
    if isinstance(v, LorentzVec):
        return v.array()
    a = np.asarray(v, dtype=float)
    if a.shape[-1] != 3:
        raise DomainError(f"expected trailing axis of length 3, got shape {a.shape}")
    return a


def inner(a, b):
    """Lorentzian inner product <a,b> = a1*b1 + a2*b2 - a_t*b_t."""
    a = as_array(a)
    b = as_array(b)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]


def norm2(v):
    """Squared Lorentzian norm <v,v>; negative for timelike vectors."""
    return inner(v, v)


def euclid_norm(v):
    a = as_array(v)
    return np.sqrt(a[..., 0] ** 2 + a[..., 1] ** 2 + a[..., 2] ** 2)


def _scale2(v):
    return np.maximum(1.0, euclid_norm(v)) ** 2


def classify(v, tol=DEFAULT_TOL):
    """Causal trichotomy. The zero vector is spacelike by convention."""
    if tol < 0:
        raise DomainError("tol must be >= 0")
    n2 = norm2(v)
    cut = tol * _scale2(v)
    if np.ndim(n2) == 0:
        if abs(n2) <= cut:
            return CausalClass.SPACELIKE if euclid_norm(v) == 0.0 else CausalClass.LIGHTLIKE
        return CausalClass.SPACELIKE if n2 > 0 else CausalClass.TIMELIKE
    out = np.where(n2 > cut, CausalClass.SPACELIKE,
                   np.where(n2 < -cut, CausalClass.TIMELIKE, CausalClass.LIGHTLIKE))
    out = np.where((np.abs(n2) <= cut) & (euclid_norm(v) == 0.0), CausalClass.SPACELIKE, out)
    return out


@dataclass(frozen=True)
class ConeQuery:
    """Light cone C_vertex, optionally restricted to one half ('upper'/'lower')."""

    vertex: LorentzVec
    sign: str = "full"

    def __post_init__(self):
        if self.sign not in ("full", "upper", "lower"):
            raise DomainError(f"sign must be full/upper/lower, got {self.sign!r}")

    def contains(self, p, tol=DEFAULT_TOL):
        region, half = cone_side(self, p, tol)
        on_cone = region is ConeRegion.BOUNDARY
        if self.sign == "full":
            return on_cone
        return on_cone and (half.value == self.sign or half is ConeHalf.NONE)


def cone_side(q, p, tol=DEFAULT_TOL):
    """Side of the light cone C_vertex that p falls on.

    Returns (ConeRegion, ConeHalf): interior iff norm2(p - vertex) < -cut,
    exterior iff > cut, else boundary; upper/lower by the sign of the
    t-difference (NONE when it vanishes within tolerance).
    """
    d = as_array(p) - as_array(q.vertex)
    n2 = norm2(d)
    cut = tol * _scale2(d)
    if n2 < -cut:
        region = ConeRegion.INTERIOR
    elif n2 > cut:
        region = ConeRegion.EXTERIOR
    else:
        region = ConeRegion.BOUNDARY
    dt = d[..., 2]
    scale = max(1.0, abs(float(dt)))
    if dt > tol * scale:
        half = ConeHalf.UPPER
    elif dt < -tol * scale:
        half = ConeHalf.LOWER
    else:
        half = ConeHalf.NONE
    return region, half


def st(n, tol=1e-9):
    """Stereographic chart of the hyperboloid H^2 = {<x,x> = -1}.

    st((x1,x2,t)) = x2/(t-1) + i*x1/(1-t); maps the lower sheet H^2_- into
    the open unit disc.  Raises DomainError off the hyperboloid or at the
    north pole t=1.
    """
    a = as_array(n)
    n2 = norm2(a)
    if np.any(np.abs(n2 + 1.0) > tol * _scale2(a)):
        raise DomainError("st requires a point on the hyperboloid <n,n> = -1")
    t = a[..., 2]
    if np.any(np.abs(t - 1.0) <= tol):
        raise DomainError("st undefined at t = 1")
    w = a[..., 1] / (t - 1.0) + 1j * a[..., 0] / (1.0 - t)
    return complex(w) if np.ndim(w) == 0 else w


def st_inv(w, tol=1e-9):
    """Inverse of st; |w| < 1 lands on the lower sheet H^2_-.

    Algebraic inversion of the forward chart: with r2 = |w|^2,
    t = (1 + r2)/(r2 - 1), x1 = Im(w)*(1 - t), x2 = Re(w)*(t - 1).
    Raises DomainError on the unit circle.
    """
    w = np.asarray(w, dtype=complex)
    r2 = w.real ** 2 + w.imag ** 2
    if np.any(np.abs(r2 - 1.0) <= tol):
        raise DomainError("st_inv undefined on |w| = 1")
    t = (1.0 + r2) / (r2 - 1.0)
    x1 = w.imag * (1.0 - t)
    x2 = w.real * (t - 1.0)
    if w.ndim == 0:
        return LorentzVec(float(x1), float(x2), float(t))
    return np.stack([x1, x2, t], axis=-1)


def st0(v, tol=DEFAULT_TOL):
    """Boundary chart on the punctured light cone C_0.

    st0((v1,v2,v3)) = v2/v3 - i*v1/v3, a unimodular complex number; it is
    the radial limit of st along lightlike directions.
    """
    a = as_array(v)
    n2 = norm2(a)
    if np.any(np.abs(n2) > tol * _scale2(a)) or np.any(euclid_norm(a) == 0.0):
        raise DomainError("st0 requires a nonzero lightlike vector")
    v3 = a[..., 2]
    if np.any(v3 == 0.0):
        raise DomainError("st0 undefined when the t-component vanishes")
    w = a[..., 1] / v3 - 1j * a[..., 0] / v3
    return complex(w) if np.ndim(w) == 0 else w
