"""Horizontal slices of the cone's gamma* planks: counts, regimes and integrals.

In the plane {x3 = r} each dual plank gamma* meets the slice in a 1 x R^beta
rectangle centred on the circle S_r of radius r, long side tangent to S_r.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .boxgeom import OrientedBox, overlap_counts
from .caps import check_dyadic, nceil
from .lattice import rect_power_sum

CORE_D = 10.0
MIN_R = 10.0
MAX_EVENTS = 50_000_000


@dataclass(frozen=True)
class SlicePlank:
    center: tuple
    tangent: tuple
    half_lengths: tuple         # (radial, tangential) = (1/2, R^beta / 2)
    r: float
    R: int
    beta: float

    def box(self) -> OrientedBox:
        t = np.asarray(self.tangent)
        return OrientedBox(self.center, np.array([[t[1], -t[0]], t]), self.half_lengths)


def plank_count(R, beta: float) -> int:
    return nceil(2 * R**beta)


def slice_family(R, beta: float, r: float) -> list[SlicePlank]:
    """One plank per gamma, centres equally spaced in angle on S_r."""
    R = check_dyadic(R, 4)
    if not 0 <= r <= R:
        raise ValueError(f"slice height r={r} outside [0, R]")
    n = plank_count(R, beta)
    phi = 2 * math.pi * (np.arange(n) + 0.5) / n
    half = (0.5, 0.5 * R**beta)
    out = []
    for c, s in zip(np.cos(phi), np.sin(phi)):
        out.append(SlicePlank((r * c, r * s), (-s, c), half, float(r), R, float(beta)))
    return out


def plank_arrays(planks):
    """(centers, axes, half) arrays in the layout used by the lattice counter."""
    centers = np.array([p.center for p in planks], float)
    t = np.array([p.tangent for p in planks], float)
    radial = np.stack([t[:, 1], -t[:, 0]], axis=1)
    axes = np.stack([radial, t], axis=1)
    half = np.array([p.half_lengths for p in planks], float)
    return centers, axes, half


def brute_overlap(P, planks) -> np.ndarray | int:
    """Exact number of closed planks containing each point."""
    pts = np.atleast_2d(np.asarray(P, float))
    counts = overlap_counts([p.box() for p in planks], pts)
    return int(counts[0]) if np.ndim(P) == 1 else counts


def distance_to_circle(P, r: float) -> np.ndarray:
    return np.abs(np.linalg.norm(np.atleast_2d(P), axis=1) - r)


def d_limit(r: float, R: int, beta: float) -> float:
    """Largest d with a prediction: R^beta, or r^-1 R^{2 beta} once r >= R^beta."""
    Rb = R**beta
    return Rb if r <= Rb else Rb * Rb / r


def predicted_overlap(d: float, r: float, R, beta: float) -> tuple[float, str]:
    """Predicted plank count at distance d from S_r, with its regime name.

    core  d <= 10:               r^-1/2 R^beta
    inner 10 <= d <= r:          R^beta (r d)^-1/2
    outer r <= d <= R^beta:      R^beta / d
    Out of range d returns (0, "out_of_range").
    """
    if r < MIN_R:
        raise ValueError(f"regime formulas need r >= {MIN_R}, got {r}")
    Rb = R**beta
    lim = d_limit(r, R, beta)
    if d < 0 or d > lim * (1 + 1e-12):
        return 0.0, "out_of_range"
    if d <= CORE_D:
        return r**-0.5 * Rb, "core"
    if d <= r:
        return Rb / math.sqrt(r * d), "inner"
    return Rb / d, "outer"


@dataclass(frozen=True)
class RegimeReport:
    point: tuple
    d: float
    regime: str
    predicted: float
    measured: int

    @property
    def ratio(self) -> float:
        return self.measured / self.predicted if self.predicted else math.inf

    def to_dict(self) -> dict:
        out = asdict(self)
        out["point"] = list(self.point)
        return out


def support_edge(r: float, R, beta: float) -> float:
    """Largest distance from S_r reached by any plank (its far corners)."""
    h = R**beta / 2
    return math.hypot(r, h) - r


def regime_windows(r: float, R, beta: float, seam: float = 2.0) -> dict[str, tuple[float, float]]:
    """d-ranges per regime, excluding factor-`seam` bands around d = 10 and d = r.

    Samples also stay below half the support edge so that the far ends of the
    planks, where the count drops to zero, are not mistaken for a regime.
    """
    top = min(d_limit(r, R, beta), support_edge(r, R, beta) / 2)
    wins = {"core": (0.0, CORE_D / seam),
            "inner": (CORE_D * seam, min(r / seam, top)),
            "outer": (r * seam, top)}
    return {k: v for k, v in wins.items() if v[1] > v[0]}


def sample_regimes(R, beta: float, r: float, n: int = 100, seed: int = 0) -> list[RegimeReport]:
    """n random points per available regime, outside S_r at sampled distances."""
    rng = np.random.default_rng(seed)
    planks = slice_family(R, beta, r)
    reports = []
    for name, (lo, hi) in regime_windows(r, R, beta).items():
        d = rng.uniform(lo, hi, n)
        psi = rng.uniform(0, 2 * math.pi, n)
        pts = (r + d)[:, None] * np.stack([np.cos(psi), np.sin(psi)], axis=1)
        counts = brute_overlap(pts, planks)
        for x, dd, c in zip(pts, d, counts):
            val, reg = predicted_overlap(float(dd), r, R, beta)
            reports.append(RegimeReport((float(x[0]), float(x[1])), float(dd), reg, val, int(c)))
    return reports


def slice_integral(r: float, p: float, R, beta: float, method: str = "brute") -> float:
    """integral over the slice of (sum_gamma 1_{gamma*_r})^{p/2}."""
    R = check_dyadic(R, 4)
    if p < 2:
        raise ValueError("p must be >= 2")
    if method == "analytic":
        return analytic_slice(r, p, R, beta)
    if method != "brute":
        raise ValueError(f"unknown method {method!r}")
    n = plank_count(R, beta)
    if n * (R**beta + 2) > MAX_EVENTS:
        raise ValueError(f"slice needs ~{n * R**beta:.3g} row events, cap is {MAX_EVENTS}")
    c, a, h = plank_arrays(slice_family(R, beta, r))
    return rect_power_sum(c, a, h, None, p / 2, 1.0)[0]


def analytic_slice(r: float, p: float, R, beta: float) -> float:
    Rb = R**beta
    if not 0 <= r <= R:
        raise ValueError(f"slice height r={r} outside [0, R]")
    if r <= MIN_R:
        return Rb**2 + Rb ** (p / 2)
    lead = r ** (1 - p / 4) * Rb ** (p / 2)
    if r <= Rb:
        return lead + r ** (2 - p / 2) * Rb ** (p / 2) + Rb**2
    return lead + Rb**2


def slice_heights(R) -> list[float]:
    """0 and the dyadic heights 1, 2, ..., R/2; height 2^k stands for [2^k, 2^{k+1}]."""
    R = check_dyadic(R, 4)
    return [0.0] + [float(2**k) for k in range(int(math.log2(R)))]


def total_integral(p: float, R, beta: float, method: str = "brute") -> float:
    """integral over R^3 of (sum_gamma 1_{gamma*})^{p/2}."""
    R = check_dyadic(R, 4)
    if p < 2:
        raise ValueError("p must be >= 2")
    if method == "analytic":
        return (R ** (p * beta / 2) + R ** (2 - p / 4 + p * beta / 2) + R ** (1 + 2 * beta))
    if method != "brute":
        raise ValueError(f"unknown method {method!r}")
    heights = slice_heights(R)
    vals = [slice_integral(r, p, R, beta, "brute") for r in heights]
    # |r| <= 1 contributes one unit of height, each dyadic band its length; both signs of r
    widths = [1.0] + heights[1:]
    return 2.0 * float(sum(w * v for w, v in zip(widths, vals)))


def slice_report(R, beta: float, r: float, p: float, n: int = 100, seed: int = 0) -> dict:
    brute = slice_integral(r, p, R, beta, "brute")
    analytic = slice_integral(r, p, R, beta, "analytic")
    reports = sample_regimes(R, beta, r, n, seed) if r >= MIN_R else []
    return {"params": {"R": int(R), "beta": beta, "r": r, "p": p},
            "analytic": analytic, "brute": brute, "ratio": brute / analytic,
            "regime_reports": [x.to_dict() for x in reports]}
