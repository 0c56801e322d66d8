"""Asymptotic and scaling analysis of PS graphs.

Rotation numbers measure the total turning of the boundary Gauss trace;
tau measures gauge closeness to the light cone via
tau+(r) = 1 - min u/r on the circle |x| = r; blow-ups/blow-downs resample
lambda * G over a fixed annulus and the limit is classified as a plane or
half light cone by least squares.

Limit estimation convention: tau values are lim sup / lim inf at
r -> infinity.  Reports estimate them by the max/min over the largest
quartile of (log-spaced) sampled radii and carry the largest radius used
plus a Richardson-style trend flag; circle sampling density is a knob
(default 720), snapped to a fixed global angular lattice so that sub-wedge
samples are genuine subsets (monotonicity then holds exactly).
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (DomainError, MonotonicityError, ShortArcError, UnwrapError)
from .lorentz import LorentzVec


@dataclass
class BoundaryCurve:
    """Lightlike boundary lift Gamma(s) = (gamma(s), s) with |gamma'| = 1."""

    theta: Callable
    s_range: tuple
    s: np.ndarray
    gamma: np.ndarray       # complex samples
    Gamma: np.ndarray       # (n, 3) lifts


def gamma_from_theta(theta, s_range, n):
    """gamma(s) = 1 + i * integral_0^s exp(i theta(x)) dx, lifted by t = s.

    theta must be nondecreasing on the sampled range (MonotonicityError
    otherwise).  Quadrature: per-interval 15-point Gauss-Kronrod on the
    cumulative integral, anchored at x = 0.
    """
    s0, s1 = s_range
    if not (s0 < s1):
        raise DomainError("s_range must be an increasing interval")
    if n < 2:
        raise DomainError("need at least 2 samples")
    s = np.linspace(s0, s1, n)
    th = np.asarray(theta(s), dtype=float)
    if np.any(np.diff(th) < -1e-12):
        raise MonotonicityError("theta decreases on the sampled range")
    from .weierstrass import _K15_W, _K15_X  # shared GK table

    def segments(a, b):
        """GK15 integrals of exp(i theta) over each [a_k, b_k]."""
        mid = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * _K15_X[None, :]
        vals = np.exp(1j * np.asarray(theta(mid), dtype=float))
        return 0.5 * (b - a) * (vals * _K15_W[None, :]).sum(axis=1)

    cum = np.zeros(n, dtype=complex)
    cum[1:] = np.cumsum(segments(s[:-1], s[1:]))
    # shift the anchor from s0 to x = 0: I(s) = cum(s) + integral_0^{s0}
    if s0 <= 0.0 <= s1:
        nodes = np.linspace(s0, 0.0, max(2, int(np.ceil(n * (0.0 - s0) / (s1 - s0))) + 1))
    else:
        nodes = np.linspace(s0, 0.0, n)
    base = segments(nodes[:-1], nodes[1:]).sum()   # integral from s0 to 0
    gamma = 1.0 + 1j * (cum + (-base))
    Gamma = np.stack([gamma.real, gamma.imag, s], axis=1)
    return BoundaryCurve(theta=theta, s_range=(s0, s1), s=s, gamma=gamma, Gamma=Gamma)


@dataclass
class RotationReport:
    raw_change: float
    value: float
    divergent: bool
    rate: Optional[float]
    s_range: tuple
    extrapolated: bool

    def as_dict(self):
        return {
            "value": None if self.divergent else self.value,
            "divergent": self.divergent,
            "rate": self.rate,
            "raw_change": self.raw_change,
            "range": list(self.s_range),
            "extrapolated": self.extrapolated,
        }


DIVERGENCE_CAP = 6 * math.pi


def rotation_number(trace, s=None, cap=DIVERGENCE_CAP):
    """Total change of the Gauss-trace angle along the boundary.

    trace: BoundaryCurve (uses its theta samples) or an array of complex
    Gauss-map values with parameter array s.  Angles are unwrapped by
    nearest-branch continuation; an adjacent jump above 0.9 pi raises
    UnwrapError (under-resolution).

    The raw change over a finite window underestimates the limit by O(1/R)
    for Moebius-type traces, so when the inner-half window agrees to within
    2% the report carries the Richardson value 2*D(R) - D(R/2) instead;
    changes beyond ``cap`` that keep growing linearly are flagged divergent
    with their growth rate.
    """
    if isinstance(trace, BoundaryCurve):
        s = trace.s
        th = np.asarray(trace.theta(s), dtype=float)
    else:
        g = np.asarray(trace)
        if s is None:
            raise DomainError("parameter array s required for a gauss trace")
        s = np.asarray(s, dtype=float)
        if np.iscomplexobj(g):
            raw = np.angle(g)
            d = np.diff(raw)
            d = (d + np.pi) % (2 * np.pi) - np.pi
            if np.any(np.abs(d) > 0.9 * np.pi):
                raise UnwrapError("angle jump above 0.9*pi between samples; refine the trace")
            th = np.concatenate([[raw[0]], raw[0] + np.cumsum(d)])
        else:
            th = np.asarray(g, dtype=float)
    raw_change = float(th[-1] - th[0])
    span = float(s[-1] - s[0])
    n = len(s)
    q = max(2, n // 4)
    tail_slope = float((th[-1] - th[-q]) / (s[-1] - s[-q]))
    global_slope = raw_change / span if span else 0.0
    if abs(raw_change) > cap and abs(tail_slope) > 0.5 * abs(global_slope):
        return RotationReport(raw_change=raw_change, value=math.inf, divergent=True,
                              rate=global_slope, s_range=(float(s[0]), float(s[-1])),
                              extrapolated=False)
    # inner half window (shrink both ends toward the middle)
    lo = int(round(0.25 * (n - 1)))
    hi = int(round(0.75 * (n - 1)))
    half_change = float(th[hi] - th[lo])
    if abs(raw_change - half_change) <= 0.02 * max(abs(raw_change), 1e-300):
        value = 2.0 * raw_change - half_change
        return RotationReport(raw_change=raw_change, value=value, divergent=False,
                              rate=None, s_range=(float(s[0]), float(s[-1])),
                              extrapolated=True)
    return RotationReport(raw_change=raw_change, value=raw_change, divergent=False,
                          rate=None, s_range=(float(s[0]), float(s[-1])),
                          extrapolated=False)


# ---------------------------------------------------------------------------
# tau measures
# ---------------------------------------------------------------------------

@dataclass
class TauReport:
    radii: np.ndarray
    tau_plus_r: np.ndarray
    tau_minus_r: np.ndarray
    tau_plus: float
    tau_minus: float
    tau0_plus: float
    tau0_minus: float
    tau: float
    tau0: float
    wedge: Optional[tuple]
    circle_samples: int
    largest_radius: float
    trend: float   # |tau+(r_max) - tau+(r_next)|; small = converged

    def as_dict(self):
        return {
            "radii": [float(r) for r in self.radii],
            "tau_plus_r": [float(t) for t in self.tau_plus_r],
            "tau_minus_r": [float(t) for t in self.tau_minus_r],
            "tau_plus": self.tau_plus, "tau_minus": self.tau_minus,
            "tau0_plus": self.tau0_plus, "tau0_minus": self.tau0_minus,
            "tau": self.tau, "tau0": self.tau0,
            "wedge": list(self.wedge) if self.wedge else None,
            "circle_samples": self.circle_samples,
            "largest_radius": self.largest_radius,
            "trend": self.trend,
        }


def _wedge_angles(wedge, n):
    """Angles on the fixed lattice {2 pi k / n} inside the wedge."""
    if wedge is None:
        return 2 * np.pi * np.arange(n) / n
    a, b = wedge
    if not (b > a):
        raise DomainError("wedge must be an increasing angle interval")
    step = 2 * np.pi / n
    k0 = int(np.ceil(a / step - 1e-12))
    k1 = int(np.floor(b / step + 1e-12))
    if k1 < k0:
        raise DomainError("wedge too narrow for the angular lattice; raise circle_samples")
    return step * np.arange(k0, k1 + 1)


def tau_measures(sampler, radii, wedge=None, circle_samples=720) -> TauReport:
    """tau+/-(r) profiles and their tail estimates.

    sampler: vectorized u(x1, x2) defined on the sampled circles.
    tau+(r) = 1 - min u/r, tau-(r) = 1 + max u/r (the latter is tau+ of the
    reflected graph -G).  Tail lim sup/lim inf estimates use the largest
    quartile of the radii.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise DomainError("radii must be positive")
    order = np.argsort(radii)
    radii = radii[order]
    phi = _wedge_angles(wedge, circle_samples)
    tp = np.empty(len(radii))
    tm = np.empty(len(radii))
    for k, r in enumerate(radii):
        u = np.asarray(sampler(r * np.cos(phi), r * np.sin(phi)), dtype=float)
        tp[k] = 1.0 - u.min() / r
        tm[k] = 1.0 + u.max() / r
    q = max(1, len(radii) // 4)
    tail_p = tp[-q:]
    tail_m = tm[-q:]
    tau_plus = float(tail_p.max())
    tau0_plus = float(tail_p.min())
    tau_minus = float(tail_m.max())
    tau0_minus = float(tail_m.min())
    trend = float(abs(tp[-1] - tp[-2])) if len(radii) >= 2 else 0.0
    return TauReport(radii=radii, tau_plus_r=tp, tau_minus_r=tm,
                     tau_plus=tau_plus, tau_minus=tau_minus,
                     tau0_plus=tau0_plus, tau0_minus=tau0_minus,
                     tau=min(tau_plus, tau_minus), tau0=min(tau0_plus, tau0_minus),
                     wedge=wedge, circle_samples=circle_samples,
                     largest_radius=float(radii[-1]), trend=trend)


# ---------------------------------------------------------------------------
# blow-up / blow-down
# ---------------------------------------------------------------------------

@dataclass
class BlownGraph:
    scale: float
    r: np.ndarray        # (n_r,)
    phi: np.ndarray      # (n_phi,)
    u: np.ndarray        # (n_r, n_phi)


def blow_scale(sampler, scales, region, n_r=48, n_phi=256, domain_radius=None):
    """Rescaled copies u_lambda(y) = lambda * u(y / lambda) on an annulus.

    region = (a, b) with 0 < a < b; DomainError when y/lambda leaves the
    sampler's declared domain radius.
    """
    a, b = region
    if not (0 < a < b):
        raise DomainError("region must be an annulus 0 < a < b")
    r = np.linspace(a, b, n_r)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    out = []
    for lam in scales:
        if lam <= 0:
            raise DomainError("scales must be positive")
        if domain_radius is not None and b / lam > domain_radius:
            raise DomainError(f"scale {lam} needs sampler radius {b / lam} > {domain_radius}")
        R, PHI = np.meshgrid(r, phi, indexing="ij")
        u = lam * np.asarray(sampler((R / lam) * np.cos(PHI), (R / lam) * np.sin(PHI)),
                             dtype=float)
        out.append(BlownGraph(scale=float(lam), r=r, phi=phi, u=u))
    return out


@dataclass
class LimitFit:
    kind: str            # spacelike_plane | lightlike_plane | light_cone_upper |
                         # light_cone_lower | undetermined
    params: Optional[np.ndarray]   # plane normal (a, b, 1) or cone vertex (0,0,0)
    residual: float

    def as_dict(self):
        key = "vertex" if self.kind.startswith("light_cone") else "normal"
        return {"kind": self.kind,
                key: None if self.params is None else [float(x) for x in self.params],
                "residual": self.residual}


PLANE_RESIDUAL_FRACTION = 0.02
LIGHTLIKE_NORM_TOL = 0.05


def classify_limit(blown, region, plane_fraction=PLANE_RESIDUAL_FRACTION) -> LimitFit:
    """Classify the limit of a blow-up/blow-down sequence.

    Fits a plane through the origin to the finest (last) scaled graph by
    least squares; below threshold the plane is labelled by the Lorentz
    norm of its normal (a, b, 1).  Otherwise the upper/lower half light
    cone u = +-|y| is tried.  Residuals are sup-distances on the annulus.
    """
    if len(blown) < 3:
        raise DomainError("need at least 3 scales")
    smin = min(g.scale for g in blown)
    smax = max(g.scale for g in blown)
    if smax / smin < 100.0:
        raise DomainError("scales should span at least 2 decades")
    fin = blown[-1]
    a, b = region
    R, PHI = np.meshgrid(fin.r, fin.phi, indexing="ij")
    X1 = R * np.cos(PHI)
    X2 = R * np.sin(PHI)
    A = np.stack([X1.ravel(), X2.ravel()], axis=1)
    coef, *_ = np.linalg.lstsq(A, fin.u.ravel(), rcond=None)
    fit = A @ coef
    res_plane = float(np.abs(fin.u.ravel() - fit).max())
    thr = plane_fraction * b
    if res_plane < thr:
        normal = np.array([coef[0], coef[1], 1.0])
        n2 = coef[0] ** 2 + coef[1] ** 2 - 1.0
        if abs(n2) <= LIGHTLIKE_NORM_TOL:
            return LimitFit("lightlike_plane", normal, res_plane)
        if n2 < 0:
            return LimitFit("spacelike_plane", normal, res_plane)
        return LimitFit("undetermined", normal, res_plane)
    res_up = float(np.abs(fin.u - R).max())
    res_dn = float(np.abs(fin.u + R).max())
    if min(res_up, res_dn) < thr:
        if res_up <= res_dn:
            return LimitFit("light_cone_upper", np.zeros(3), res_up)
        return LimitFit("light_cone_lower", np.zeros(3), res_dn)
    return LimitFit("undetermined", None, min(res_plane, res_up, res_dn))


def lightlike_ray_direction(arc, tail_fraction=0.25):
    """Tail-averaged unit tangent of a sampled arc and its lightlike defect.

    arc: (k, 3) array or list of LorentzVec, ordered along the arc and
    parameterized by (projected) arclength.  Returns (direction, defect)
    with direction Euclidean-normalized; defect = |<d, d>| which tends to 0
    exactly for lightlike rays.  ShortArcError below 16 samples.
    """
    if isinstance(arc, (list, tuple)):
        arc = np.stack([p.array() if isinstance(p, LorentzVec) else np.asarray(p, float)
                        for p in arc])
    arc = np.asarray(arc, dtype=float)
    if arc.ndim != 2 or arc.shape[1] != 3:
        raise DomainError("arc must be (k, 3) samples")
    if arc.shape[0] < 16:
        raise ShortArcError("need at least 16 samples for a direction estimate")
    k = arc.shape[0]
    start = max(0, int(round((1.0 - tail_fraction) * (k - 1))))
    diffs = np.diff(arc[start:], axis=0)
    mean = diffs.mean(axis=0)
    nrm = np.linalg.norm(mean)
    if nrm == 0:
        raise DomainError("degenerate arc (zero tail displacement)")
    d = mean / nrm
    defect = abs(d[0] ** 2 + d[1] ** 2 - d[2] ** 2)
    return d, float(defect)
