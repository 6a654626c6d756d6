"""Periodic grids, Fourier transforms, frequency partitions and cap pieces.

Conventions
-----------
Physical space is the torus of side L per axis, sampled at N_i points with
spacing dx_i = L / N_i; sample k sits at (k - N_i/2) dx_i.  The frequency
lattice has spacing 1/L and covers a window of width P_i = 1/dx_i centred at
``freq_center[i]``.  Choosing dx per axis lets the window hug the frequency
support (the cone only needs xi3 in [1/2, 1]) while sample values stay the
true values of f: shifting a frequency by P_i does not change
exp(2 pi i x xi) on the grid.

``spectrum()`` returns continuum-normalised Fourier coefficients,
f_hat(xi) ~ sum_x f(x) e^{-2 pi i x xi} dx^d, so integrals over frequency carry
the lattice measure (1/L)^d and f(0) = sum f_hat / L^d.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .boxgeom import OrientedBox
from .caps import CapFamily, curve_distance

MAX_POINTS = 2**25


class GridOverflowError(ValueError):
    pass


class CoverageError(ValueError):
    pass


class SupportError(ValueError):
    def __init__(self, outside: float):
        super().__init__(f"spectrum has relative mass {outside:.3e} outside the partition support")
        self.outside = outside


def _pow2_at_least(x: float) -> float:
    return 2.0 ** math.ceil(math.log2(x) - 1e-12)


@dataclass(frozen=True)
class GridSpec:
    L: float
    N: tuple
    freq_center: tuple

    def __post_init__(self):
        for n in self.N:
            if n < 1 or (n & (n - 1)):
                raise ValueError(f"grid sizes must be powers of two, got {self.N}")
        if len(self.freq_center) != len(self.N):
            raise ValueError("freq_center length must match dimension")

    @property
    def dim(self) -> int:
        return len(self.N)

    @property
    def spacing(self) -> tuple:
        return tuple(self.L / n for n in self.N)

    @property
    def size(self) -> int:
        return int(np.prod(self.N))

    @property
    def cell(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(self.L) ** self.dim

    @property
    def freq_cell(self) -> float:
        return float(self.L) ** (-self.dim)

    def positions(self, axis: int) -> np.ndarray:
        n = self.N[axis]
        return (np.arange(n) - n // 2) * self.spacing[axis]

    def freqs(self, axis: int) -> np.ndarray:
        """Frequencies in FFT order, wrapped into this axis' window."""
        n = self.N[axis]
        P = n / self.L
        lo = self.freq_center[axis] - P / 2
        raw = np.arange(n) / self.L
        return lo + np.mod(raw - lo, P)

    def position_grid(self):
        return np.meshgrid(*[self.positions(i) for i in range(self.dim)], indexing="ij", sparse=True)

    def freq_grid(self):
        return np.meshgrid(*[self.freqs(i) for i in range(self.dim)], indexing="ij", sparse=True)

    def freq_points(self, flat_idx) -> np.ndarray:
        multi = np.unravel_index(flat_idx, self.N)
        return np.stack([self.freqs(i)[m] for i, m in enumerate(multi)], axis=-1)

    def to_dict(self) -> dict:
        return {"L": float(self.L), "N": list(self.N), "freq_center": [float(c) for c in self.freq_center],
                "spacing": list(self.spacing), "dim": self.dim}

    @classmethod
    def fitting(cls, lo, hi, L: float, oversample: float = 1.0, max_points: int = MAX_POINTS):
        """Smallest power-of-two grid whose frequency window holds [lo, hi]."""
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        P = [_pow2_at_least(max(h - l, 1e-9) * oversample) for l, h in zip(lo, hi)]
        N = tuple(max(1, int(round(L * p))) for p in P)
        spec = cls(float(L), N, tuple(float(c) for c in 0.5 * (lo + hi)))
        if spec.size > max_points:
            raise GridOverflowError(f"grid {N} has {spec.size} points, cap is {max_points}")
        return spec


def curve_window(curve: str, R: int, margin: float | None = None):
    """Frequency bounding box of the 2/R neighbourhood of the curve."""
    m = 2.0 / R if margin is None else margin
    if curve == "parabola":
        return np.array([-1 - m, -m]), np.array([1 + m, 1 + m])
    return np.array([-1 - m, -1 - m, 0.5 - m]), np.array([1 + m, 1 + m, 1 + m])


def default_side(curve: str, R: int) -> float:
    # 3D uses a torus of side R to keep 2^6 within memory; 2D can afford 2R
    return float(2 * R if curve == "parabola" else R)


def curve_grid(curve: str, R: int, max_points: int = MAX_POINTS) -> GridSpec:
    lo, hi = curve_window(curve, R)
    try:
        return GridSpec.fitting(lo, hi, default_side(curve, R), max_points=max_points)
    except GridOverflowError as e:
        best = R
        while best > 4:
            best //= 2
            lo, hi = curve_window(curve, best)
            if GridSpec.fitting(lo, hi, default_side(curve, best), max_points=2**62).size <= max_points:
                break
        raise GridOverflowError(f"{e}; largest feasible R is {best}") from None


@dataclass(eq=False)
class GridFunction:
    grid: GridSpec
    values: np.ndarray
    domain: str = "space"

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != tuple(self.grid.N):
            raise ValueError(f"values shape {self.values.shape} != grid {self.grid.N}")

    @property
    def dim(self):
        return self.grid.dim

    def spectrum(self) -> np.ndarray:
        if self.domain != "space":
            raise ValueError("spectrum() needs a space-domain function")
        g = self.grid
        return sfft.fftn(sfft.ifftshift(self.values)) * g.cell

    @classmethod
    def from_spectrum(cls, grid: GridSpec, F: np.ndarray) -> "GridFunction":
        vals = sfft.fftshift(sfft.ifftn(F)) * (grid.size / grid.volume)
        return cls(grid, vals)

    def at_origin(self) -> complex:
        return complex(self.values[tuple(n // 2 for n in self.grid.N)])

    def scaled(self, c) -> "GridFunction":
        return GridFunction(self.grid, self.values * c, self.domain)

    def shifted(self, steps) -> "GridFunction":
        return GridFunction(self.grid, np.roll(self.values, steps, axis=tuple(range(self.dim))), self.domain)


def transform(f: GridFunction, direction: str = "forward") -> GridFunction:
    """Unitary DFT with the origin at sample N/2 (space) and index 0 (frequency)."""
    if direction == "forward":
        if f.domain != "space":
            raise ValueError("forward transform expects a space-domain function")
        return GridFunction(f.grid, sfft.fftn(sfft.ifftshift(f.values), norm="ortho"), "frequency")
    if direction == "inverse":
        if f.domain != "frequency":
            raise ValueError("inverse transform expects a frequency-domain function")
        return GridFunction(f.grid, sfft.fftshift(sfft.ifftn(f.values, norm="ortho")), "space")
    raise ValueError(f"unknown direction {direction!r}")


# tapers --------------------------------------------------------------------

def taper(u, core: float, edge: float = 2.0) -> np.ndarray:
    """C^2 profile: 1 for u <= core, 0 for u >= edge, cosine-smoothed in between."""
    u = np.asarray(u, float)
    t = np.clip((u - core) / (edge - core), 0.0, 1.0)
    return 1.0 - (t - np.sin(2 * np.pi * t) / (2 * np.pi))


def _band_indices(curve: str, grid: GridSpec, radius: float):
    """Flat indices and distances of lattice points within radius of the curve."""
    if curve == "parabola":
        x, y = grid.freqs(0), grid.freqs(1)
        v = y[None, :] - (x**2)[:, None]
        cand = np.flatnonzero((np.abs(v) <= 4 * radius) & (np.abs(x)[:, None] <= 1 + radius))
    else:
        x, y, z = grid.freqs(0), grid.freqs(1), grid.freqs(2)
        rho = np.hypot(x[:, None], y[None, :])
        near = (np.abs(rho[:, :, None] - z[None, None, :]) <= 2 * radius) \
            & (z[None, None, :] >= 0.5 - 2 * radius) & (z[None, None, :] <= 1 + 2 * radius)
        cand = np.flatnonzero(near)
    d = curve_distance(curve, grid.freq_points(cand))
    keep = d < radius
    return cand[keep], d[keep]


def neighbourhood_bump(curve: str, grid: GridSpec, R: int) -> np.ndarray:
    """Dense spectrum: 1 within 1/(2R) of the curve, smoothly 0 beyond 1/R."""
    idx, d = _band_indices(curve, grid, 1.0 / R)
    F = np.zeros(grid.size)
    F[idx] = taper(d * R, 0.5, 1.0)
    return F.reshape(grid.N)


# partitions ----------------------------------------------------------------

@dataclass(eq=False)
class Multiplier:
    grid: GridSpec
    box: OrientedBox
    idx: np.ndarray      # flat indices (FFT order) of the support
    values: np.ndarray

    def dense(self) -> np.ndarray:
        out = np.zeros(self.grid.size)
        out[self.idx] = self.values
        return out.reshape(self.grid.N)

    def apply(self, F: np.ndarray) -> np.ndarray:
        G = np.zeros(self.grid.size, dtype=complex)
        G[self.idx] = self.values * F.reshape(-1)[self.idx]
        return G.reshape(self.grid.N)


@dataclass(eq=False)
class Partition:
    family: CapFamily
    grid: GridSpec
    multipliers: list
    support_idx: np.ndarray      # lattice points with cutoff > 0
    covered_idx: np.ndarray      # lattice points where the pieces sum to exactly 1

    def __len__(self):
        return len(self.multipliers)

    def __iter__(self):
        return iter(self.multipliers)

    def __getitem__(self, i):
        return self.multipliers[i]

    def total(self) -> np.ndarray:
        out = np.zeros(self.grid.size)
        for m in self.multipliers:
            np.add.at(out, m.idx, m.values)
        return out.reshape(self.grid.N)


def _box_lattice(box: OrientedBox, grid: GridSpec, dilate: float):
    """Flat indices and local coordinates of lattice points inside dilate*box."""
    lo, hi = box.dilate(dilate).bounding_interval()
    per_axis = []
    for i in range(grid.dim):
        f = grid.freqs(i)
        per_axis.append(np.flatnonzero((f >= lo[i]) & (f <= hi[i])))
    if any(a.size == 0 for a in per_axis):
        return np.zeros(0, np.int64), np.zeros((0, grid.dim))
    mesh = np.meshgrid(*per_axis, indexing="ij")
    flat = np.ravel_multi_index(tuple(m.ravel() for m in mesh), grid.N)
    pts = np.stack([grid.freqs(i)[m.ravel()] for i, m in enumerate(mesh)], axis=1)
    u = box.local(pts) / box.half_lengths
    inside = np.all(np.abs(u) < dilate, axis=1)
    return flat[inside], u[inside]


def smooth_partition(family: CapFamily, grid: GridSpec, smoothness: float = 0.5) -> Partition:
    """Normalised bump partition: psi_g = cutoff * b_g / sum b.

    b_g is a product of per-axis C^2 tapers, flat on the inner (1 - smoothness)
    fraction of the cap and zero outside its 2-dilate.  The cutoff is 1 on the
    family's delta-neighbourhood and vanishes beyond 2 delta, so the pieces sum
    to exactly 1 where the functions of interest live and remain smooth at
    the outer edge.
    """
    if not 0 < smoothness <= 1:
        raise ValueError("smoothness must lie in (0, 1]")
    delta = family.thickness
    band_idx, band_d = _band_indices(family.curve, grid, 2 * delta)
    cutoff = np.zeros(grid.size)
    cutoff[band_idx] = taper(band_d / delta, 1.0, 2.0)

    raw = []
    bsum = np.zeros(grid.size)
    for cap in family.caps:
        idx, u = _box_lattice(cap, grid, 2.0)
        b = np.prod(taper(np.abs(u), 1.0 - smoothness, 2.0), axis=1)
        keep = (b > 0) & (cutoff[idx] > 0)
        idx, b = idx[keep], b[keep]
        raw.append((idx, b))
        np.add.at(bsum, idx, b)

    support = band_idx[cutoff[band_idx] > 0]
    bad = support[bsum[support] <= 0]
    if bad.size:
        pts = grid.freq_points(bad[:3])
        raise CoverageError(f"{bad.size} lattice points near the curve lie in no cap, e.g. {pts.tolist()}")
    mults = [Multiplier(grid, cap, idx, cutoff[idx] * b / bsum[idx])
             for cap, (idx, b) in zip(family.caps, raw)]
    covered = band_idx[cutoff[band_idx] >= 1.0]
    return Partition(family, grid, mults, support, covered)


def outside_mass(F: np.ndarray, partition: Partition) -> float:
    """Relative L2 mass of F away from the points where the partition sums to 1."""
    a = np.abs(F.reshape(-1)) ** 2
    tot = a.sum()
    if tot == 0:
        return 0.0
    return float((tot - a[partition.covered_idx].sum()) / tot)


def check_support(F: np.ndarray, partition: Partition, tol: float = 1e-10):
    m = outside_mass(F, partition)
    if m > tol:
        raise SupportError(m)


def cap_projection(f: GridFunction, psi: Multiplier, F: np.ndarray | None = None) -> GridFunction:
    """f_g with spectrum psi_g * f_hat."""
    F = f.spectrum() if F is None else F
    return GridFunction.from_spectrum(f.grid, psi.apply(F))


def decompose(f: GridFunction, partition: Partition, check: bool = True):
    """Yield (index, f_g) for every cap; the spectrum is computed once."""
    F = f.spectrum()
    if check:
        check_support(F, partition)
    for i, m in enumerate(partition):
        yield i, cap_projection(f, m, F)


def square_function(f: GridFunction, partition: Partition, check: bool = True) -> GridFunction:
    acc = np.zeros(f.grid.N)
    for _, fg in decompose(f, partition, check):
        acc += np.abs(fg.values) ** 2
    return GridFunction(f.grid, np.sqrt(acc))


# norms -----------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float


def region_mask(grid: GridSpec, region) -> np.ndarray:
    X = grid.position_grid()
    if isinstance(region, Ball):
        r2 = sum((x - c) ** 2 for x, c in zip(X, region.center))
        return r2 <= region.radius**2
    if isinstance(region, OrientedBox):
        ok = np.ones(grid.N, dtype=bool)
        for a, h in zip(region.axes, region.half_lengths):
            u = sum(ai * (x - ci) for ai, x, ci in zip(a, X, region.center))
            ok &= np.abs(u) <= h
        return ok
    raise TypeError(f"unsupported region {type(region).__name__}")


def lp_norm(f: GridFunction, p: float, region=None) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    a = np.abs(f.values)
    if region is not None:
        a = a[region_mask(f.grid, region)]
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((np.sum(a**p) * f.grid.cell) ** (1.0 / p))


def box_weight(grid: GridSpec, box: OrientedBox, power: int = 20) -> np.ndarray:
    """1 on the box, (1 + dist/edge)^-power per axis outside it."""
    X = grid.position_grid()
    w = np.ones(grid.N)
    for a, h in zip(box.axes, box.half_lengths):
        u = sum(ai * (x - ci) for ai, x, ci in zip(a, X, box.center))
        w = w * (1 + np.maximum(np.abs(u) - h, 0) / (2 * h)) ** (-power)
    return w


def local_orthogonality_defect(parts, box: OrientedBox) -> float:
    """int_box |sum f_i|^2 / int sum |f_i|^2 w_box^2."""
    grid = parts[0].grid
    total = np.zeros(grid.N, dtype=complex)
    sq = np.zeros(grid.N)
    for g in parts:
        total += g.values
        sq += np.abs(g.values) ** 2
    mask = region_mask(grid, box)
    num = float(np.sum(np.abs(total[mask]) ** 2))
    den = float(np.sum(sq * box_weight(grid, box) ** 2))
    if den == 0:
        if num == 0:
            return 0.0
        raise ZeroDivisionError("weighted denominator vanished")
    return num / den


# file format ---------------------------------------------------------------

def save_grid_function(f: GridFunction, path) -> tuple[Path, Path]:
    """Raw little-endian complex64 samples plus a JSON sidecar."""
    path = Path(path)
    f.values.astype("<c8").tofile(path)
    meta = {"schema_version": 1, "dim": f.dim, "N": list(f.grid.N), "spacing": list(f.grid.spacing),
            "L": float(f.grid.L), "freq_center": list(f.grid.freq_center), "domain": f.domain}
    side = path.with_suffix(path.suffix + ".json")
    side.write_text(json.dumps(meta, sort_keys=True, indent=1))
    return path, side


def load_grid_function(path) -> GridFunction:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    grid = GridSpec(meta["L"], tuple(meta["N"]), tuple(meta["freq_center"]))
    vals = np.fromfile(path, dtype="<c8").astype(complex).reshape(grid.N)
    return GridFunction(grid, vals, meta.get("domain", "space"))
