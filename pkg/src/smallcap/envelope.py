"""Wave envelopes S_U f over the sector families, and the envelope inequalities.

For a sector tau of S_s the envelope of f on a tile U parallel to U_tau is
    ||S_U f||_2^2 = int_U sum_{theta in tau} |f_theta|^2.
The canonical pieces f_theta are computed once and reused at every scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxgeom import OrientedBox
from .caps import (assign, canonical_caps, check_dyadic, dyadic_scales, envelope_box,
                   envelope_dims, sector_planks)
from .signal import GridFunction, decompose, smooth_partition

G_CONSTANT = 1.0


@dataclass(frozen=True)
class EnvelopeCell:
    s: float
    tau: int
    U: OrientedBox
    l2sq: float


class ThetaDecomposition:
    """|f_theta|^2 for every canonical cap, plus the tile bookkeeping per scale."""

    def __init__(self, f: GridFunction, R, check: bool = True):
        self.R = check_dyadic(R, 4)
        if f.dim != 3:
            raise ValueError("wave envelopes are defined for 3D cone functions")
        self.f = f
        self.theta = canonical_caps(self.R, "cone")
        part = smooth_partition(self.theta, f.grid)
        self.energy = [np.abs(fg.values) ** 2 for _, fg in decompose(f, part, check)]
        self.cell = f.grid.cell
        mesh = np.meshgrid(*[f.grid.positions(i) for i in range(3)], indexing="ij")
        self.points = np.stack([m.ravel() for m in mesh], axis=1)
        self._scales = {}

    @property
    def l2sq(self) -> float:
        return float(np.sum(np.abs(self.f.values) ** 2) * self.cell)

    def scale(self, s: float) -> "ScaleData":
        key = round(math.log2(s), 9)
        if key not in self._scales:
            self._scales[key] = ScaleData(self, s)
        return self._scales[key]

    def tau_energy(self, family, tau: int) -> np.ndarray:
        owner = assign(self.theta, family)
        acc = np.zeros(self.f.grid.N)
        for k in np.flatnonzero(owner == tau):
            acc += self.energy[k]
        return acc


class ScaleData:
    """Per-tile envelope masses ||S_U f||_2^2 for every tau at one scale s."""

    def __init__(self, dec: ThetaDecomposition, s: float):
        self.s = float(s)
        self.family = sector_planks(dec.R, s)
        self.volume = float(np.prod(envelope_dims(s, dec.R)))      # R^3 s^3
        self.tiles = []                 # per tau: (tile index array (m, 3), masses (m,))
        owner = assign(dec.theta, self.family)
        for tau in range(len(self.family)):
            U = envelope_box(self.family, tau, dec.R)
            energy = np.zeros(dec.points.shape[0])
            for k in np.flatnonzero(owner == tau):
                energy += dec.energy[k].reshape(-1)
            keys = np.floor(U.local(dec.points) / U.edges + 0.5).astype(np.int64)
            lo = keys.min(axis=0)
            shape = tuple(keys.max(axis=0) - lo + 1)
            flat = np.ravel_multi_index(tuple((keys - lo).T), shape)
            hit = np.bincount(flat, minlength=int(np.prod(shape))) > 0
            mass = np.bincount(flat, weights=energy, minlength=hit.size)[hit] * dec.cell
            uniq = np.stack(np.unravel_index(np.flatnonzero(hit), shape), axis=1) + lo
            self.tiles.append((U, uniq, mass))

    @property
    def n_tau(self) -> int:
        return len(self.family)

    def masses(self) -> np.ndarray:
        return np.concatenate([m for _, _, m in self.tiles])

    def total(self) -> float:
        return float(sum(np.sum(m) for _, _, m in self.tiles))

    def gwz_terms(self) -> np.ndarray:
        return self.masses() ** 2 / self.volume

    def threshold(self, lam: float, R: int) -> float:
        return G_CONSTANT * lam**2 / (math.log(R) * self.n_tau**2)

    def cells(self, lam: float, R: int) -> list[EnvelopeCell]:
        out = []
        thr = self.threshold(lam, R)
        for tau, (U, keys, mass) in enumerate(self.tiles):
            for k, m in zip(keys, mass):
                if m > 0 and m / self.volume >= thr:
                    c = (k * U.edges) @ U.axes
                    out.append(EnvelopeCell(self.s, tau, U.translate(c), float(m)))
        return out


def tile_box(U: OrientedBox, key) -> OrientedBox:
    return U.translate((np.asarray(key) * U.edges) @ U.axes)


def wave_envelope(dec: ThetaDecomposition, s: float, tau_index: int, U: OrientedBox) -> float:
    """||S_U f||_2^2 by a direct lattice sum over the samples inside U."""
    fam = sector_planks(dec.R, s)
    if not 0 <= tau_index < len(fam):
        raise IndexError(f"tau index {tau_index} outside 0..{len(fam) - 1}")
    inside = U.contains(dec.points)
    return float(np.sum(dec.tau_energy(fam, tau_index).reshape(-1)[inside]) * dec.cell)


def l2_decomposition_defect(dec: ThetaDecomposition, s: float) -> float:
    """||f||_2^2 over sum_tau sum_U ||S_U f||_2^2."""
    den = dec.scale(s).total()
    if den <= 0:
        raise ZeroDivisionError("all envelopes vanish")
    return dec.l2sq / den


def gwz_rhs(dec: ThetaDecomposition) -> float:
    """sum over dyadic s, tau in S_s and tiles U of |U|^-1 ||S_U f||_2^4."""
    return float(sum(np.sum(dec.scale(s).gwz_terms()) for s in dyadic_scales(dec.R)))


def lp_power(f: GridFunction, p: float) -> float:
    return float(np.sum(np.abs(f.values) ** p) * f.grid.cell)


def significant_cells(dec: ThetaDecomposition, lam: float, s: float) -> list[EnvelopeCell]:
    """Tiles with |U|^-1 ||S_U f||^2 >= lam^2 / (log R (#S_s)^2)."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return dec.scale(s).cells(lam, dec.R)


def restricted_rhs(dec: ThetaDecomposition, lam: float) -> float:
    total = 0.0
    for s in dyadic_scales(dec.R):
        sd = dec.scale(s)
        terms = sd.gwz_terms()
        total += float(np.sum(terms[sd.masses() / sd.volume >= sd.threshold(lam, dec.R)]))
    return total


def sup_norm(f: GridFunction) -> float:
    return float(np.max(np.abs(f.values)))


def amplitude_check(dec: ThetaDecomposition, lam: float) -> tuple[float, float]:
    """(lam^4 |{|f| > lam}|, sum over significant cells of |U|^-1 ||S_U f||^4)."""
    top = sup_norm(dec.f)
    if lam <= 0 or lam < dec.R**-100 * top:
        raise ValueError(f"lambda {lam} below the admissible range")
    return lam**4 * superlevel_measure(dec.f, lam), restricted_rhs(dec, lam)


def superlevel_measure(f: GridFunction, lam: float) -> float:
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return float(np.count_nonzero(np.abs(f.values) > lam) * f.grid.cell)


def layer_cake(f: GridFunction, p: float) -> float:
    """sum over dyadic bins (2^{k-1}, 2^k] of (2^{k-1/2})^p times the bin measure."""
    a = np.abs(f.values).reshape(-1)
    a = a[a > 0]
    if a.size == 0:
        return 0.0
    k = np.ceil(np.log2(a)).astype(np.int64)
    ks, counts = np.unique(k, return_counts=True)
    return float(np.sum(2.0 ** ((ks - 0.5) * p) * counts) * f.grid.cell)


def envelope_summary(dec: ThetaDecomposition, scales=None, lam: float | None = None) -> dict:
    scales = dyadic_scales(dec.R) if scales is None else scales
    per = []
    for s in scales:
        sd = dec.scale(s)
        row = {"s": s, "n_tau": sd.n_tau, "n_cells": int(sd.masses().size), "sum": sd.total()}
        if lam is not None:
            row["n_significant"] = len(sd.cells(lam, dec.R))
        per.append(row)
    lhs = lp_power(dec.f, 4)
    rhs = gwz_rhs(dec)
    out = {"R": dec.R, "per_scale": per, "gwz_lhs": lhs, "gwz_rhs": rhs, "ratio": lhs / rhs,
           "g_constant": G_CONSTANT}
    if lam is not None:
        a, b = amplitude_check(dec, lam)
        out.update({"lambda": lam, "amplitude_lhs": a, "amplitude_rhs": b})
    return out
