"""Sharp examples, the indicator model of their wave packets, predicted exponents."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxgeom import OrientedBox, dual_box, overlap_counts
from .caps import CapFamily, assign, check_dyadic, cone_caps, parabola_caps
from .lattice import rect_power_sum
from .signal import (GridFunction, GridSpec, Partition, curve_grid, default_side,
                     lp_norm, neighbourhood_bump, smooth_partition, square_function)


@dataclass(frozen=True)
class ExponentQuery:
    curve: str
    exponent: float
    p: float

    def __post_init__(self):
        if self.curve not in ("parabola", "cone"):
            raise ValueError(f"unknown curve {self.curve!r}")
        if not 0.5 <= self.exponent <= 1:
            raise ValueError("exponent must lie in [1/2, 1]")
        if self.p < 2:
            raise ValueError("p must be >= 2")


def parabola_branches(alpha: float, p: float) -> tuple[float, float]:
    """(concentrated, flat) exponents."""
    return alpha * (0.5 - 2 / p), (alpha - 0.5) * (0.5 - 1 / p)


def cone_branches(beta: float, p: float) -> tuple[float, float, float]:
    """(p >= 8, 4 <= p <= 8, 2 <= p <= 4) formulas."""
    return beta / 2, beta / 2 + 0.25 - 2 / p, (beta - 0.5) * (1 - 2 / p)


def predicted_exponent(q: ExponentQuery) -> float:
    if q.curve == "parabola":
        conc, flat = parabola_branches(q.exponent, q.p)
        return conc if q.p >= 4 * q.exponent + 2 else flat
    high, mid, low = cone_branches(q.exponent, q.p)
    if q.p >= 8:
        return high
    return mid if q.p >= 4 else low


def remark_exponent(q: ExponentQuery) -> float:
    """Exponent of the two-sided closed forms (max of parabola branches;
    min{beta/2, max(mid, flat)} for the cone with the flat-example term)."""
    if q.curve == "parabola":
        return max(parabola_branches(q.exponent, q.p))
    b, p = q.exponent, q.p
    return min(b / 2, max(b / 2 + 0.25 - 2 / p, (b - 0.5) * (0.5 - 1 / p)))


# FFT examples --------------------------------------------------------------

def concentrated_parabola(R) -> GridFunction:
    """f_hat = smooth bump of the 1/R neighbourhood of the parabola."""
    R = check_dyadic(R, 4)
    grid = curve_grid("parabola", R)
    return GridFunction.from_spectrum(grid, neighbourhood_bump("parabola", grid, R))


def flat_grid(theta: OrientedBox, R: int, oversample: float = 4.0) -> GridSpec:
    lo, hi = theta.dilate(2.0).bounding_interval()
    return GridSpec.fitting(lo, hi, default_side("parabola", R), oversample=oversample)


def flat_parabola(R, theta_index: int, oversample: float = 4.0) -> GridFunction:
    """f_hat = psi_theta times the neighbourhood bump, on a grid fitted to theta."""
    R = check_dyadic(R, 4)
    Theta = parabola_caps(R, 0.5)
    if not 0 <= theta_index < len(Theta):
        raise IndexError(f"theta index {theta_index} outside 0..{len(Theta) - 1}")
    grid = flat_grid(Theta[theta_index], R, oversample)
    part = smooth_partition(Theta, grid)
    F = part[theta_index].dense() * neighbourhood_bump("parabola", grid, R)
    return GridFunction.from_spectrum(grid, F)


def cone_bump(R) -> GridFunction:
    R = check_dyadic(R, 4)
    grid = curve_grid("cone", R)
    return GridFunction.from_spectrum(grid, neighbourhood_bump("cone", grid, R))


def random_cone_function(R, seed: int) -> GridFunction:
    """Gaussian noise on the frequency lattice, cut off by the neighbourhood bump."""
    R = check_dyadic(R, 4)
    grid = curve_grid("cone", R)
    rng = np.random.default_rng(seed)
    noise = rng.normal(size=grid.N) + 1j * rng.normal(size=grid.N)
    return GridFunction.from_spectrum(grid, noise * neighbourhood_bump("cone", grid, R))


def neighbourhood_volume(curve: str, R: int) -> float:
    """Integral of the neighbourhood bump: surface measure times 1.5/R."""
    if curve == "parabola":
        t = 2.0
        arc = 0.5 * t * math.sqrt(1 + t * t) + 0.5 * math.asinh(t)   # length over [-1, 1]
        return arc * 1.5 / R
    area = math.pi * (0.5 + 1.0) * (0.5 * math.sqrt(2))             # lateral area, 1/2 <= xi3 <= 1
    return area * 1.5 / R


def empirical_ratio(f: GridFunction, partition: Partition, p: float) -> float:
    den = lp_norm(square_function(f, partition), p)
    if den == 0:
        raise ZeroDivisionError("square function vanished")
    return lp_norm(f, p) / den


# indicator model -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IdealizedField:
    boxes: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, float)
        if a.shape != (len(self.boxes),) or np.any(a <= 0):
            raise ValueError("need one positive amplitude per box")
        object.__setattr__(self, "amplitudes", a)

    @property
    def dim(self):
        return self.boxes[0].dim

    def subset(self, idx) -> "IdealizedField":
        idx = np.asarray(idx)
        return IdealizedField(tuple(self.boxes[i] for i in idx), self.amplitudes[idx])

    def evaluate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, float))
        out = np.zeros(len(pts))
        for b, a in zip(self.boxes, self.amplitudes):
            out += a * b.contains(pts)
        return out

    def multiplicity(self, points) -> np.ndarray:
        return overlap_counts(self.boxes, points)

    def _arrays(self):
        if self.dim != 2:
            raise NotImplementedError("exact lattice sums are implemented for planar fields")
        return (np.stack([b.center for b in self.boxes]), np.stack([b.axes for b in self.boxes]),
                np.stack([b.half_lengths for b in self.boxes]))

    def power_sum(self, q: float, spacing: float = 1.0, shell_radii=None, squared: bool = False):
        """sum over the lattice of F^q (or of (sum a^2 1)^q when squared); returns (total, shells)."""
        c, a, h = self._arrays()
        w = self.amplitudes**2 if squared else self.amplitudes
        return rect_power_sum(c, a, h, w, q, spacing, shell_radii)

    def lp_norm(self, p: float, spacing: float = 1.0) -> float:
        return self.power_sum(p, spacing)[0] ** (1 / p)

    def square_lp_norm(self, p: float, spacing: float = 1.0) -> float:
        """|| (sum a_g^2 1_g)^{1/2} ||_p, the square function of the model."""
        return self.power_sum(p / 2, spacing, squared=True)[0] ** (1 / p)


def indicator_model(family: CapFamily) -> IdealizedField:
    duals = tuple(dual_box(c) for c in family.caps)
    return IdealizedField(duals, np.array([1.0 / d.volume for d in duals]))


def dyadic_radii(rmax: float) -> np.ndarray:
    k = math.ceil(math.log2(max(rmax, 1.0)))
    return 2.0 ** np.arange(0, k + 1)


def unit_ball_points(dim: int) -> np.ndarray:
    g = np.arange(-1, 2)
    mesh = np.meshgrid(*[g] * dim, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1).astype(float)
    return pts[np.sum(pts**2, axis=1) <= 1]


def concentrated_indicator(R, alpha: float, p: float) -> tuple[float, float]:
    """(lhs, rhs): ||F||_{L^p(B(0,1))} and the model square-function norm."""
    field = indicator_model(parabola_caps(R, alpha))
    pts = unit_ball_points(2)
    lhs = float(np.sum(field.evaluate(pts) ** p) ** (1 / p))
    return lhs, field.square_lp_norm(p)


def middle_theta(R) -> int:
    return len(parabola_caps(R, 0.5)) // 2


def flat_indicator(R, alpha: float, p: float, theta_index: int | None = None) -> tuple[float, float]:
    """(lhs, rhs) for a single canonical cap against the gamma caps it contains."""
    Theta = parabola_caps(R, 0.5)
    k = len(Theta) // 2 if theta_index is None else theta_index
    Gamma = parabola_caps(R, alpha)
    lhs = indicator_model(Theta).subset([k]).lp_norm(p)
    inside = np.flatnonzero(assign(Gamma, Theta) == k)
    rhs = indicator_model(Gamma).subset(inside).square_lp_norm(p)
    return lhs, rhs


def cone_indicator(R, beta: float, p: float) -> tuple[float, float]:
    """(lhs, rhs) for the cone bump in the indicator model.

    lhs: the larger of the bush value on B(0,1) and the far halves of the
    essentially disjoint theta* planks.  rhs: |gamma*|^-1 times the p/2
    moment of the plank count, assembled from horizontal slices.
    """
    from .coneoverlap import total_integral

    R = check_dyadic(R, 4)
    duals = [dual_box(c) for c in cone_caps(R, 0.5).caps]
    vols = np.array([d.volume for d in duals])
    bush = float(np.sum(1.0 / vols)) * (math.pi ** (1 / p))
    far = float(0.5 * np.sum(vols ** (1 - p))) ** (1 / p)
    lhs = max(bush, far)
    rhs = total_integral(p, R, beta, "brute") ** (1 / p) / R ** (1 + beta)
    return lhs, rhs
