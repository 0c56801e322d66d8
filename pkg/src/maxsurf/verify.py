"""Differential-geometric checkers for sampled surfaces.

All checks consume a SampledImmersion (closed-form chart samples or
integrated Weierstrass grids) and return a CheckReport.  Derivatives are
central finite differences on the parameter grid; fundamental forms use
the Lorentzian inner product and the timelike unit normal from the
Lorentzian cross product of the tangents.

Mean-curvature convention: H = (E*g22 - 2*F*g12 + G*g11) / (2*(E*G - F^2))
with first form (E, F, G) and second form (g11, g12, g22) = (<X_uu, N>,
<X_uv, N>, <X_vv, N>), N the future/past timelike unit normal from
X_u x X_v (sign of H flips with the normal; all tests are zero-level, so
the convention only needs to be reproducible).

Nodes within ``exclusion_band`` cells of the singular set (vanishing
conformal factor) are excluded: the immersion degenerates there by design.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import DegenerateError, DomainError, HypothesisError
from .weierstrass import SampledImmersion

FACTOR_TOL = 1e-10


@dataclass
class CheckReport:
    name: str
    max_violation: float
    location: Optional[tuple]
    passed: bool
    tolerance_used: float
    details: dict = field(default_factory=dict)

    def as_json(self):
        return json.dumps({
            "name": self.name,
            "max_violation": self.max_violation,
            "location": None if self.location is None else list(self.location),
            "passed": bool(self.passed),
            "tolerance_used": self.tolerance_used,
            **({"details": self.details} if self.details else {}),
        }, sort_keys=True)


def _lor(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]


def _cross_lorentz(a, b):
    """Lorentzian cross product: <a x b, c> = det(a, b, c)."""
    return np.stack([
        a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
        a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
        -(a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]),
    ], axis=-1)


def _derivatives(imm: SampledImmersion):
    X = imm.points
    hu, hv = imm.spacing()
    Xu = (X[2:, 1:-1] - X[:-2, 1:-1]) / (2 * hu)
    Xv = (X[1:-1, 2:] - X[1:-1, :-2]) / (2 * hv)
    Xuu = (X[2:, 1:-1] - 2 * X[1:-1, 1:-1] + X[:-2, 1:-1]) / hu ** 2
    Xvv = (X[1:-1, 2:] - 2 * X[1:-1, 1:-1] + X[1:-1, :-2]) / hv ** 2
    Xuv = (X[2:, 2:] - X[2:, :-2] - X[:-2, 2:] + X[:-2, :-2]) / (4 * hu * hv)
    return Xu, Xv, Xuu, Xuv, Xvv


def _included_interior(imm: SampledImmersion, exclusion_band=2):
    """Interior-node mask (trimmed to the derivative stencil) minus a band
    around the sampled singular set."""
    nu, nv = imm.shape
    inc = np.ones((nu - 2, nv - 2), dtype=bool)
    if imm.conformal_factor is not None:
        sing = imm.conformal_factor <= FACTOR_TOL
        if sing.any():
            sing = ndimage.binary_dilation(sing, iterations=exclusion_band,
                                           structure=np.ones((3, 3), bool))
        inc &= ~sing[1:-1, 1:-1]
    return inc


def _argmax_location(imm, values, mask):
    vals = np.where(mask, values, -np.inf)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    return (float(imm.u[i + 1]), float(imm.v[j + 1]))


def mean_curvature(imm: SampledImmersion, tol=1e-6, exclusion_band=2) -> CheckReport:
    """max |H| over included interior nodes; O(h^2) in the grid spacing."""
    Xu, Xv, Xuu, Xuv, Xvv = _derivatives(imm)
    inc = _included_interior(imm, exclusion_band)
    if not inc.any():
        raise DomainError("no interior nodes left after singular-band exclusion")
    E = _lor(Xu, Xu)
    F = _lor(Xu, Xv)
    G = _lor(Xv, Xv)
    det = E * G - F ** 2
    if np.any((det <= 0) & inc):
        i, j = np.unravel_index(np.argmin(np.where(inc, det, np.inf)), det.shape)
        raise DegenerateError(
            f"induced metric not spacelike at (u,v)=({imm.u[i+1]:.6g},{imm.v[j+1]:.6g})")
    N = _cross_lorentz(Xu, Xv)
    nn = _lor(N, N)
    N = N / np.sqrt(-np.where(inc, nn, -1.0))[..., None]
    g11 = _lor(Xuu, N)
    g12 = _lor(Xuv, N)
    g22 = _lor(Xvv, N)
    H = (E * g22 - 2 * F * g12 + G * g11) / (2 * det)
    maxH = float(np.abs(H[inc]).max())
    return CheckReport("mean_curvature", maxH, _argmax_location(imm, np.abs(H), inc),
                       maxH <= tol, tol, {"nodes_checked": int(inc.sum())})


def spacelike_check(imm: SampledImmersion, tol=0.0, exclusion_band=2) -> CheckReport:
    """E > 0 and EG - F^2 > 0 at included nodes (violation = worst defect)."""
    Xu, Xv, *_ = _derivatives(imm)
    inc = _included_interior(imm, exclusion_band)
    if not inc.any():
        raise DomainError("no interior nodes left after singular-band exclusion")
    E = _lor(Xu, Xu)
    F = _lor(Xu, Xv)
    G = _lor(Xv, Xv)
    det = E * G - F ** 2
    viol = np.maximum(-E, -det)
    worst = float(viol[inc].max())
    return CheckReport("spacelike", worst, _argmax_location(imm, viol, inc),
                       worst <= tol, tol,
                       {"excluded_nodes": int((~inc).sum()), "nodes_checked": int(inc.sum())})


def superharmonicity_check(imm: SampledImmersion, eps=1e-2, tol=1e-8,
                           exclusion_band=2) -> CheckReport:
    """Delta log<X,X> <= tol with the intrinsic (conformal) Laplacian.

    Requires <X,X> >= eps on all nodes (HypothesisError otherwise) and a
    conformal chart with its factor stored on the immersion.  Also
    cross-checks the identity Delta h = -4 <X,N>^2 / <X,X>^2; the residual
    is reported in details (O(h^2)).
    """
    if imm.conformal_factor is None:
        raise DomainError("superharmonicity needs the conformal factor grid")
    X = imm.points
    xx = _lor(X, X)
    if np.any(xx < eps):
        raise HypothesisError(f"<X,X> < eps={eps} on the patch (min {xx.min():.3g})")
    hu, hv = imm.spacing()
    if abs(hu - hv) > 1e-12 * max(hu, hv):
        raise DomainError("conformal Laplacian needs equal grid spacings")
    hfield = np.log(xx)
    lap = (hfield[2:, 1:-1] + hfield[:-2, 1:-1] + hfield[1:-1, 2:] + hfield[1:-1, :-2]
           - 4 * hfield[1:-1, 1:-1]) / hu ** 2
    lam = imm.conformal_factor[1:-1, 1:-1]
    inc = _included_interior(imm, exclusion_band)
    inc &= lam > FACTOR_TOL
    if not inc.any():
        raise DomainError("no usable interior nodes")
    intrinsic = lap / np.where(inc, lam, 1.0)
    worst = float(intrinsic[inc].max())

    Xu, Xv, *_ = _derivatives(imm)
    N = _cross_lorentz(Xu, Xv)
    nn = _lor(N, N)
    N = N / np.sqrt(-np.where(inc, nn, -1.0))[..., None]
    xn = _lor(X[1:-1, 1:-1], N)
    rhs = -4.0 * xn ** 2 / xx[1:-1, 1:-1] ** 2
    ident = float(np.abs((intrinsic - rhs))[inc].max())
    return CheckReport("superharmonicity", worst, _argmax_location(imm, intrinsic, inc),
                       worst <= tol, tol,
                       {"identity_residual": ident, "min_xx": float(xx.min())})


def ps_pair_check(pairs, tol=1e-12) -> CheckReport:
    """min over pairs of <p - q, p - q>; passes iff >= -tol (PS property)."""
    from .lorentz import LorentzVec

    def arr(p):
        return p.array() if isinstance(p, LorentzVec) else np.asarray(p, dtype=float)

    vals = []
    for p, q in pairs:
        d = arr(p) - arr(q)
        vals.append(d[0] ** 2 + d[1] ** 2 - d[2] ** 2)
    vals = np.asarray(vals)
    worst = float(vals.min())
    k = int(np.argmin(vals))
    return CheckReport("ps_pairs", -worst, (float(k), 0.0), worst >= -tol, tol,
                       {"pairs_checked": len(vals)})
