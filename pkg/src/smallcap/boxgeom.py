"""Oriented boxes, dual boxes, comparability, tilings and overlap counts.

A box is stored as a center, an orthonormal frame (rows of ``axes``) and
half-lengths along the frame axes.  Full edge lengths are ``2 * half``.
"""
from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-12
DEFAULT_C = 100.0
MAX_TILES = 10_000_000


class GeometryError(ValueError):
    pass


def _frozen(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class OrientedBox:
    center: np.ndarray
    axes: np.ndarray
    half_lengths: np.ndarray

    def __post_init__(self):
        c = _frozen(self.center)
        a = _frozen(self.axes)
        h = _frozen(self.half_lengths)
        n = c.shape[0]
        if c.ndim != 1 or a.shape != (n, n) or h.shape != (n,):
            raise GeometryError(f"inconsistent box shapes {c.shape}, {a.shape}, {h.shape}")
        if not np.all(h > 0):
            raise GeometryError(f"half lengths must be positive, got {h}")
        gram = a @ a.T
        if np.max(np.abs(gram - np.eye(n))) > ORTHO_TOL:
            raise GeometryError("axes are not orthonormal")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "axes", a)
        object.__setattr__(self, "half_lengths", h)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def edges(self) -> np.ndarray:
        return 2.0 * self.half_lengths

    @property
    def volume(self) -> float:
        return float(np.prod(self.edges))

    def local(self, points) -> np.ndarray:
        """Coordinates of points in the box frame, relative to the center."""
        pts = np.asarray(points, dtype=float)
        return (pts - self.center) @ self.axes.T

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        u = self.local(points)
        return np.all(np.abs(u) <= self.half_lengths * (1 + tol), axis=-1)

    def vertices(self) -> np.ndarray:
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=self.dim)))
        return self.center + (signs * self.half_lengths) @ self.axes

    def dilate(self, factor: float) -> "OrientedBox":
        return OrientedBox(self.center, self.axes, self.half_lengths * factor)

    def translate(self, shift) -> "OrientedBox":
        return OrientedBox(self.center + np.asarray(shift, float), self.axes, self.half_lengths)

    def at_origin(self) -> "OrientedBox":
        return OrientedBox(np.zeros(self.dim), self.axes, self.half_lengths)

    def bounding_interval(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box (lo, hi) in ambient coordinates."""
        reach = np.abs(self.axes.T) @ self.half_lengths
        return self.center - reach, self.center + reach

    def distance_from(self, point) -> float:
        """Euclidean distance from a point to the (closed) box."""
        u = self.local(np.asarray(point, float))
        gap = np.maximum(np.abs(u) - self.half_lengths, 0.0)
        return float(np.sqrt(np.sum(gap**2)))

    def to_dict(self) -> dict:
        return {
            "center": [float(x) for x in self.center],
            "axes": [[float(x) for x in row] for row in self.axes],
            "half_lengths": [float(x) for x in self.half_lengths],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OrientedBox":
        return cls(d["center"], d["axes"], d["half_lengths"])

    def to_json(self) -> str:
        # float repr is the shortest string that round-trips, at most 17 digits
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "OrientedBox":
        return cls.from_dict(json.loads(s))

    def __eq__(self, other):
        if not isinstance(other, OrientedBox):
            return NotImplemented
        return (np.array_equal(self.center, other.center)
                and np.array_equal(self.axes, other.axes)
                and np.array_equal(self.half_lengths, other.half_lengths))

    def __repr__(self):
        return (f"OrientedBox(center={self.center.tolist()}, "
                f"edges={self.edges.tolist()})")


def axis_box(center, half_lengths) -> OrientedBox:
    n = len(half_lengths)
    return OrientedBox(center, np.eye(n), half_lengths)


def dual_box(b: OrientedBox) -> OrientedBox:
    """Origin-centered box on the same axes with reciprocal edge lengths."""
    return OrientedBox(np.zeros(b.dim), b.axes, 1.0 / (4.0 * b.half_lengths))


def _check_dims(a: OrientedBox, b: OrientedBox):
    if a.dim != b.dim:
        raise GeometryError(f"dimension mismatch: {a.dim} vs {b.dim}")


def essentially_contained(a: OrientedBox, b: OrientedBox, C: float = DEFAULT_C) -> bool:
    """True iff a lies inside the C-dilate of b (dilated about b's center)."""
    _check_dims(a, b)
    return bool(np.all(b.dilate(C).contains(a.vertices(), tol=1e-12)))


def comparable(a: OrientedBox, b: OrientedBox, C: float = DEFAULT_C) -> bool:
    # For concentric boxes a ⊂ C·b is the same as (1/C)·a ⊂ b.
    return essentially_contained(a, b, C) and essentially_contained(b, a, C)


def axis_pairing(a: OrientedBox, b: OrientedBox) -> list[tuple[int, int, float]]:
    """Pair axes of a and b by best alignment; returns (i_a, i_b, angle).

    Chooses the permutation maximising sum |<a_i, b_pi(i)>|; the first
    maximiser in lexicographic order wins, so the result is deterministic.
    """
    _check_dims(a, b)
    cos = np.abs(a.axes @ b.axes.T)
    best = max(itertools.permutations(range(a.dim)),
               key=lambda pi: round(sum(cos[i, pi[i]] for i in range(a.dim)), 12))
    return [(i, best[i], float(np.arccos(min(1.0, cos[i, best[i]])))) for i in range(a.dim)]


def minkowski_sum_aligned(a: OrientedBox, b: OrientedBox, angle_tol: float = 0.1) -> OrientedBox:
    """Box on a's axes whose half-lengths are the componentwise max.

    This is the size formula for sums of nearly aligned boxes, valid up to a
    factor 2 (max <= sum <= 2 max).  Axes are matched by best alignment.
    """
    pairs = axis_pairing(a, b)
    h = a.half_lengths.copy()
    for ia, ib, ang in pairs:
        if ang > angle_tol:
            raise GeometryError(f"axes misaligned by {ang:.3g} rad > {angle_tol}")
        h[ia] = max(a.half_lengths[ia], b.half_lengths[ib])
    return OrientedBox(a.center + b.center, a.axes, h)


def minkowski_hull(a: OrientedBox, b: OrientedBox) -> OrientedBox:
    """Smallest box on a's axes containing the exact Minkowski sum a + b.

    No alignment is required; the extra reach of b along each axis of a is
    sum_j |<a_i, b_j>| h_j.
    """
    _check_dims(a, b)
    reach = np.abs(a.axes @ b.axes.T) @ b.half_lengths
    return OrientedBox(a.center + b.center, a.axes, a.half_lengths + reach)


@dataclass(frozen=True, eq=False)
class Tiling:
    prototype: OrientedBox
    offsets: np.ndarray
    radius: float

    def __len__(self):
        return len(self.offsets)

    def centers(self) -> np.ndarray:
        return self.prototype.center + (self.offsets * self.prototype.edges) @ self.prototype.axes

    def boxes(self) -> list[OrientedBox]:
        p = self.prototype
        return [OrientedBox(c, p.axes, p.half_lengths) for c in self.centers()]

    def locate(self, points) -> np.ndarray:
        """Integer tile coordinates of each point (half-open cells, exact partition)."""
        u = self.prototype.local(points)
        return np.floor(u / self.prototype.edges + 0.5).astype(np.int64)


def tile_region(prototype: OrientedBox, radius: float, max_tiles: int = MAX_TILES) -> Tiling:
    """Translates of prototype (by whole edges along its own axes) meeting B(0, radius)."""
    if radius <= 0:
        raise GeometryError("radius must be positive")
    p = prototype
    c_loc = p.axes @ p.center
    kmax = np.ceil((radius + np.abs(c_loc)) / p.edges + 0.5).astype(np.int64)
    total = int(np.prod(2 * kmax + 1))
    if total > max_tiles:
        raise GeometryError(f"tiling needs up to {total} tiles, cap is {max_tiles}")
    grids = np.meshgrid(*[np.arange(-k, k + 1) for k in kmax], indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=1)
    # distance from origin to each tile, computed in the box frame
    centers_loc = c_loc + ks * p.edges
    gap = np.maximum(np.abs(centers_loc) - p.half_lengths, 0.0)
    keep = np.sum(gap**2, axis=1) <= radius**2
    return Tiling(p, ks[keep], float(radius))


def overlap_counts(boxes, samples, chunk: int = 4096) -> np.ndarray:
    """Number of boxes containing each sample point."""
    pts = np.atleast_2d(np.asarray(samples, float))
    if not len(boxes):
        return np.zeros(len(pts), dtype=np.int64)
    C = np.stack([b.center for b in boxes])
    A = np.stack([b.axes for b in boxes])
    H = np.stack([b.half_lengths for b in boxes])
    counts = np.zeros(len(pts), dtype=np.int64)
    for lo in range(0, len(pts), chunk):
        x = pts[lo:lo + chunk]
        d = x[:, None, :] - C[None, :, :]
        u = np.einsum("pbj,bij->pbi", d, A)
        counts[lo:lo + chunk] = np.all(np.abs(u) <= H[None], axis=2).sum(axis=1)
    return counts


def overlap_multiplicity(boxes, samples) -> tuple[int, dict[int, int]]:
    """Max multiplicity over the samples and the count histogram."""
    if not len(boxes):
        raise GeometryError("empty box list")
    counts = overlap_counts(boxes, samples)
    if counts.size == 0:
        raise GeometryError("empty sample list")
    hist = Counter(int(c) for c in counts)
    return int(counts.max()), dict(sorted(hist.items()))


# sample generators ---------------------------------------------------------

def lattice_samples(lo, hi, spacing: float) -> np.ndarray:
    axes = [np.arange(l, h + 0.5 * spacing, spacing) for l, h in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def ball_samples(radius: float, dim: int, spacing: float) -> np.ndarray:
    pts = lattice_samples([-radius] * dim, [radius] * dim, spacing)
    return pts[np.sum(pts**2, axis=1) <= radius**2]


def shell_samples(r_in: float, r_out: float, dim: int, n: int, rng) -> np.ndarray:
    """n points uniform in the spherical shell r_in <= |x| <= r_out."""
    v = rng.normal(size=(n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    u = rng.uniform(r_in**dim, r_out**dim, size=n) ** (1.0 / dim)
    return v * u[:, None]
