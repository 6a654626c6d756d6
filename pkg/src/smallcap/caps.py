"""Cap families on the truncated parabola and cone, plus the auxiliary boxes.

Parabola: P = {(t, t^2): |t| <= 1}.  Cone: C = {xi3 (cos phi, sin phi, 1): 1/2 <= xi3 <= 1}.

A cap is the delta-neighbourhood of the piece of curve over one parameter
interval, where "over" means by nearest-point foot.  Each cap is stored as
the tight oriented bounding box of that set in the local frame at the
interval midpoint (tangent/normal for the parabola; generator/tangent/normal
for the cone), so coverage of the neighbourhood holds by construction.

Counting: ceil(2 R^alpha) intervals of [-1, 1] and ceil(2 R^beta) arcs of the
circle.  Both counts sit at the upper end of the ~R^exponent window.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .boxgeom import OrientedBox, dual_box, minkowski_sum_aligned

SQRT2 = math.sqrt(2.0)
_NSAMP = 129


def nceil(x: float) -> int:
    """ceil that ignores float noise, so ceil(2 * 4096**0.75) == 1024."""
    return int(math.ceil(x - 1e-9))


def check_dyadic(R, minimum=2) -> int:
    r = int(R)
    if r != R or r < minimum or r & (r - 1):
        raise ValueError(f"R must be a power of two >= {minimum}, got {R}")
    return r


def _check_exponent(e):
    if not 0.5 - 1e-12 <= e <= 1 + 1e-12:
        raise ValueError(f"exponent must lie in [1/2, 1], got {e}")


@dataclass(frozen=True, eq=False)
class CapFamily:
    curve: str                  # "parabola" or "cone"
    R: int
    exponent: float             # alpha / beta, or s for sector families
    caps: tuple
    anchors: np.ndarray         # interval midpoint (parabola) or arc midpoint angle (cone)
    bounds: np.ndarray          # (n, 2) parameter interval of each cap
    thickness: float            # neighbourhood radius the caps cover
    kind: str = "gamma"         # gamma | sector | pi

    def __len__(self):
        return len(self.caps)

    def __getitem__(self, i):
        return self.caps[i]

    @property
    def dim(self) -> int:
        return 2 if self.curve == "parabola" else 3

    def to_dict(self) -> dict:
        return {
            "curve": self.curve, "R": self.R, "exponent": float(self.exponent),
            "kind": self.kind, "thickness": float(self.thickness),
            "caps": [c.to_dict() for c in self.caps],
            "anchors": [float(a) for a in self.anchors],
            "bounds": [[float(a), float(b)] for a, b in self.bounds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(d["curve"], d["R"], d["exponent"],
                   tuple(OrientedBox.from_dict(c) for c in d["caps"]),
                   np.asarray(d["anchors"], float), np.asarray(d["bounds"], float),
                   d["thickness"], d.get("kind", "gamma"))

    def members(self, parent_index: int, parent: "CapFamily") -> np.ndarray:
        """Indices of caps of this family assigned to parent[parent_index]."""
        return np.flatnonzero(assign(self, parent) == parent_index)


# parabola --------------------------------------------------------------------

def parabola_point(t):
    t = np.asarray(t, float)
    return np.stack([t, t * t], axis=-1)


def parabola_normal(t):
    t = np.asarray(t, float)
    v = np.stack([-2 * t, np.ones_like(t)], axis=-1)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def parabola_frame(m: float) -> np.ndarray:
    u = np.array([1.0, 2 * m]) / math.hypot(1.0, 2 * m)
    return np.array([u, [-u[1], u[0]]])


def _tight_box(anchor_point, frame, pts) -> OrientedBox:
    loc = (pts - anchor_point) @ frame.T
    lo, hi = loc.min(axis=0), loc.max(axis=0)
    half = 0.5 * (hi - lo)
    half = half * (1 + 1e-9) + 1e-15
    center = anchor_point + (0.5 * (lo + hi)) @ frame
    return OrientedBox(center, frame, half)


def _parabola_cap(a: float, b: float, delta: float, end_a: bool, end_b: bool) -> OrientedBox:
    m = 0.5 * (a + b)
    frame = parabola_frame(m)
    t = np.linspace(a, b, _NSAMP)
    base = parabola_point(t)
    nrm = parabola_normal(t)
    pts = [base + delta * nrm, base - delta * nrm]
    # round ends of the truncated curve
    for flag, e in ((end_a, a), (end_b, b)):
        if flag:
            p = parabola_point(e)
            for s1 in (-1, 1):
                for s2 in (-1, 1):
                    pts.append((p + delta * (s1 * frame[0] + s2 * frame[1]))[None])
    return _tight_box(parabola_point(m), frame, np.concatenate(pts))


def parabola_family(R: int, n: int, delta: float, exponent: float, kind="gamma") -> CapFamily:
    edges = np.linspace(-1.0, 1.0, n + 1)
    caps = tuple(_parabola_cap(edges[k], edges[k + 1], delta, k == 0, k == n - 1)
                 for k in range(n))
    bounds = np.stack([edges[:-1], edges[1:]], axis=1)
    return CapFamily("parabola", R, exponent, caps, bounds.mean(axis=1), bounds, delta, kind)


def parabola_caps(R, alpha: float) -> CapFamily:
    """Gamma_alpha: ceil(2 R^alpha) equal intervals of [-1, 1], thickness 1/R."""
    R = check_dyadic(R, 4)
    _check_exponent(alpha)
    return parabola_family(R, nceil(2 * R**alpha), 1.0 / R, alpha)


# cone ------------------------------------------------------------------------

def cone_frame(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c / SQRT2, s / SQRT2, 1 / SQRT2],
                     [-s, c, 0.0],
                     [c / SQRT2, s / SQRT2, -1 / SQRT2]])


def _cone_prototype(width: float, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Tight box (center, half) of the delta-neighbourhood of the sector |phi| <= width/2."""
    frame = cone_frame(0.0)
    d = np.linspace(-width / 2, width / 2, _NSAMP)
    pts = []
    for z in (0.5, 1.0):
        v = z * np.stack([np.cos(d), np.sin(d), np.ones_like(d)], axis=1)
        nrm = np.stack([np.cos(d), np.sin(d), -np.ones_like(d)], axis=1) / SQRT2
        pts += [v + delta * nrm, v - delta * nrm]
        # balls around the two rim arcs
        for e in frame:
            pts += [v + delta * e, v - delta * e]
    anchor = np.array([0.75, 0.0, 0.75])
    box = _tight_box(anchor, frame, np.concatenate(pts))
    return frame @ box.center, box.half_lengths


def cone_family(R: int, n: int, delta: float, exponent: float, kind="gamma",
                lo: float = 0.0, hi: float = 2 * math.pi) -> CapFamily:
    """n equal arcs of [lo, hi], each with its delta-neighbourhood box."""
    width = (hi - lo) / n
    cloc, half = _cone_prototype(width, delta)
    starts = lo + width * np.arange(n)
    mids = starts + width / 2
    caps = []
    for phi in mids:
        frame = cone_frame(phi)
        caps.append(OrientedBox(cloc @ frame, frame, half))
    bounds = np.stack([starts, starts + width], axis=1)
    return CapFamily("cone", R, exponent, tuple(caps), mids, bounds, delta, kind)


def cone_caps(R, beta: float) -> CapFamily:
    """Gamma_beta: ceil(2 R^beta) equal arcs, thickness 1/R."""
    R = check_dyadic(R, 4)
    _check_exponent(beta)
    return cone_family(R, nceil(2 * R**beta), 1.0 / R, beta)


def canonical_caps(R, curve: str = "cone") -> CapFamily:
    return cone_caps(R, 0.5) if curve == "cone" else parabola_caps(R, 0.5)


def _check_scale(s: float, R: int):
    if not R**-0.5 * (1 - 1e-9) <= s <= 1 + 1e-9:
        raise ValueError(f"scale s={s} outside [R^-1/2, 1] for R={R}")


def sector_planks(R, s: float) -> CapFamily:
    """S_s: ceil(2/s) arcs with s^2-neighbourhoods (1 x s x s^2 planks)."""
    R = check_dyadic(R, 4)
    _check_scale(s, R)
    delta = 1.0 / R if abs(s * s * R - 1) < 1e-9 else s * s
    return cone_family(R, nceil(2 / s), delta, s, kind="sector")


def dyadic_scales(R) -> list[float]:
    """R^-1/2, 2 R^-1/2, ... while below 1, then 1."""
    R = check_dyadic(R, 4)
    out = []
    s = R**-0.5
    while s < 1 - 1e-9:
        out.append(s)
        s *= 2
    out.append(1.0)
    return out


# nesting -------------------------------------------------------------------

def assign(child: CapFamily, parent: CapFamily) -> np.ndarray:
    """Parent index holding each child anchor; boundary ties go to the lower index."""
    if child.curve != parent.curve:
        raise ValueError("families live on different curves")
    lo = parent.bounds[:, 0]
    hi = parent.bounds[:, 1]
    a = child.anchors[:, None]
    inside = (a > lo[None]) & (a <= hi[None])
    inside[:, 0] |= child.anchors == lo[0]
    idx = np.argmax(inside, axis=1)
    if not np.all(inside[np.arange(len(idx)), idx]):
        raise ValueError("child anchor outside every parent cap")
    return idx


# physical envelopes and auxiliary boxes --------------------------------------

def envelope_dims(s: float, R: int) -> np.ndarray:
    """Full edges (R s^2, R s, R) paired with (generator, tangent, normal)."""
    return np.array([R * s * s, R * s, float(R)])


def envelope_box(tau_family: CapFamily, tau_index: int, R=None) -> OrientedBox:
    """U_tau: origin-centred R s^2 x R s x R box on tau's frame."""
    if tau_family.curve != "cone":
        raise ValueError("envelope boxes are defined for cone sector families")
    R = tau_family.R if R is None else R
    s = tau_family.exponent if tau_family.kind == "sector" else R**-0.5
    tau = tau_family.caps[tau_index]
    return OrientedBox(np.zeros(3), tau.axes, envelope_dims(s, R) / 2)


def envelope_box_on(theta: OrientedBox, s: float, R: int) -> OrientedBox:
    """U_{theta,s}: the same dimensions as U_tau but on theta's frame."""
    return OrientedBox(np.zeros(3), theta.axes, envelope_dims(s, R) / 2)


def nu_box(theta: OrientedBox, beta: float, R: int) -> OrientedBox:
    """nu_theta: R^{1/2-beta} x R^-beta x R^-1 on theta's frame, at the origin."""
    edges = np.array([R ** (0.5 - beta), R ** (-beta), 1.0 / R])
    return OrientedBox(np.zeros(3), theta.axes, edges / 2)


def v_box(tau_family: CapFamily, tau_index: int, theta_family: CapFamily,
          theta_index: int, beta: float, R=None) -> OrientedBox:
    """V_theta = U + nu_theta^* with U taken on theta's own frame.

    U_tau and U_{theta,s} are comparable for theta inside tau, and using the
    theta-aligned copy keeps the sum well defined for every s.
    """
    R = tau_family.R if R is None else R
    owner = assign(theta_family, tau_family)[theta_index]
    if owner != tau_index:
        raise ValueError(f"theta {theta_index} is not inside tau {tau_index}")
    theta = theta_family.caps[theta_index]
    U = envelope_box_on(theta, tau_family.exponent, R)
    return minkowski_sum_aligned(U, dual_box(nu_box(theta, beta, R)))


def pi_planks(theta_family: CapFamily, theta_index: int, s: float, R=None) -> CapFamily:
    """Split theta's arc into ~R^{1/2} s pieces of width ~R^-1 s^-1 (thickness 1/R)."""
    R = theta_family.R if R is None else R
    if s < R**-0.5 * (1 - 1e-9):
        raise ValueError("pi width R^-1 s^-1 exceeds the canonical width R^-1/2")
    _check_scale(s, R)
    lo, hi = theta_family.bounds[theta_index]
    m = max(1, int(round((hi - lo) * R * s / math.pi)))
    return cone_family(R, m, 1.0 / R, s, kind="pi", lo=lo, hi=hi)


# distances -----------------------------------------------------------------

def parabola_distance(points) -> np.ndarray:
    """Distance from 2D points to the arc {(t, t^2): |t| <= 1}."""
    p = np.asarray(points, float)
    x, y = p[..., 0], p[..., 1]
    t = np.clip(x, -1.5, 1.5)
    for _ in range(40):
        g = 2 * t**3 + (1 - 2 * y) * t - x
        dg = 6 * t**2 + 1 - 2 * y
        dg = np.where(np.abs(dg) < 1e-6, 1e-6, dg)
        t = np.clip(t - g / dg, -1.5, 1.5)
    best = np.full(x.shape, np.inf)
    for cand in (np.clip(t, -1, 1), -np.ones_like(x), np.ones_like(x)):
        best = np.minimum(best, np.hypot(x - cand, y - cand**2))
    return best


def cone_distance(points) -> np.ndarray:
    """Distance from 3D points to the truncated cone surface 1/2 <= xi3 <= 1."""
    p = np.asarray(points, float)
    rho = np.hypot(p[..., 0], p[..., 1])
    z = p[..., 2]
    # segment (1/2, 1/2) -> (1, 1) in the (rho, z) half plane
    t = np.clip(((rho - 0.5) + (z - 0.5)) / 1.0, 0.0, 1.0)
    fr = 0.5 + 0.5 * t
    return np.hypot(rho - fr, z - fr)


def curve_distance(curve: str, points) -> np.ndarray:
    return parabola_distance(points) if curve == "parabola" else cone_distance(points)


def sample_neighbourhood(curve: str, n: int, delta: float, rng) -> np.ndarray:
    """n random points within delta of the curve (foot uniform in parameter)."""
    if curve == "parabola":
        t = rng.uniform(-1, 1, n)
        off = rng.uniform(-delta, delta, n)
        return parabola_point(t) + off[:, None] * parabola_normal(t)
    phi = rng.uniform(0, 2 * math.pi, n)
    z = rng.uniform(0.5, 1.0, n)
    off = rng.uniform(-delta, delta, n)
    v = z[:, None] * np.stack([np.cos(phi), np.sin(phi), np.ones(n)], axis=1)
    nrm = np.stack([np.cos(phi), np.sin(phi), -np.ones(n)], axis=1) / SQRT2
    return v + off[:, None] * nrm


# parabolic rescaling -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AffineMap:
    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        L = np.array(self.linear, float)
        if abs(np.linalg.det(L)) <= 1e-14:
            raise ValueError("affine map is degenerate")
        object.__setattr__(self, "linear", L)
        object.__setattr__(self, "translation", np.array(self.translation, float))

    def __call__(self, points):
        return np.asarray(points, float) @ self.linear.T + self.translation

    def inverse(self) -> "AffineMap":
        Li = np.linalg.inv(self.linear)
        return AffineMap(Li, -Li @ self.translation)

    def physical(self) -> "AffineMap":
        """Action on physical space: x -> L^{-T} x (phases from the shift dropped)."""
        return AffineMap(np.linalg.inv(self.linear).T, np.zeros(len(self.translation)))


def parabolic_rescaling(a: float, delta: float) -> AffineMap:
    """Map the parabola piece over [a, a + delta] onto the piece over [0, 1]."""
    if not 0 < delta <= 1:
        raise ValueError(f"degenerate scale delta={delta}")
    if a < -1 - 1e-12 or a + delta > 1 + 1e-12:
        raise ValueError("interval leaves [-1, 1]")
    L = np.array([[1 / delta, 0.0], [-2 * a / delta**2, 1 / delta**2]])
    return AffineMap(L, np.array([-a / delta, a * a / delta**2]))
