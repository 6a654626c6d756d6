"""R-sweeps of empirical square-function ratios and log-log exponent fits."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import linregress

from .caps import check_dyadic, cone_caps, parabola_caps
from .extremals import (ExponentQuery, concentrated_indicator, concentrated_parabola, cone_bump,
                        cone_indicator, flat_indicator, flat_parabola, middle_theta,
                        predicted_exponent)
from .signal import lp_norm, smooth_partition, square_function

SCHEMA_VERSION = 1
EXAMPLES = {"concentrated": "parabola", "flat": "parabola", "cone_bump": "cone"}
DEFAULT_TOLERANCE = {"concentrated": 0.06, "flat": 0.04, "cone_bump": 0.08}


@dataclass(frozen=True)
class SweepConfig:
    example: str
    exponent: float
    p: float
    R_list: tuple
    backend: str = "indicator"
    jobs: int = 1
    tolerance: float | None = None
    theta_index: int | None = None
    output: str | None = None

    def __post_init__(self):
        if self.example not in EXAMPLES:
            raise ValueError(f"unknown example {self.example!r}; choose from {sorted(EXAMPLES)}")
        if self.backend not in ("indicator", "fft"):
            raise ValueError(f"unknown backend {self.backend!r}")
        Rs = tuple(check_dyadic(R, 4) for R in self.R_list)
        if len(Rs) < 3 or any(b <= a for a, b in zip(Rs, Rs[1:])):
            raise ValueError("R_list must hold at least 3 ascending powers of two")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        object.__setattr__(self, "R_list", Rs)
        ExponentQuery(self.curve, self.exponent, self.p)

    @property
    def curve(self) -> str:
        return EXAMPLES[self.example]

    @property
    def tol(self) -> float:
        return DEFAULT_TOLERANCE[self.example] if self.tolerance is None else self.tolerance

    def to_dict(self) -> dict:
        d = asdict(self)
        d["R_list"] = list(self.R_list)
        d["curve"] = self.curve
        d["tolerance"] = self.tol
        return d


@dataclass
class SweepResult:
    config: dict
    records: list
    fitted_slope: float
    slope_stderr: float
    predicted_slope: float
    tolerance: float
    fit_R: list
    verdict: str
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepResult":
        d = {k: v for k, v in d.items() if k != "schema_version"}
        return cls(**d)


def fit_exponent(points) -> tuple[float, float]:
    """OLS slope and its standard error for log(value) against log(R)."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    R = np.array([p[0] for p in pts], float)
    v = np.array([p[1] for p in pts], float)
    if np.any(v <= 0) or np.any(R <= 0):
        raise ValueError("values and R must be positive")
    fit = linregress(np.log(R), np.log(v))
    return float(fit.slope), float(fit.stderr)


def evaluate(cfg: SweepConfig, R: int) -> dict:
    """lhs = ||f||_p, rhs = ||(sum |f_gamma|^2)^{1/2}||_p for one R."""
    t0 = time.perf_counter()
    a, p = cfg.exponent, cfg.p
    if cfg.backend == "indicator":
        if cfg.example == "concentrated":
            lhs, rhs = concentrated_indicator(R, a, p)
        elif cfg.example == "flat":
            lhs, rhs = flat_indicator(R, a, p, cfg.theta_index)
        else:
            lhs, rhs = cone_indicator(R, a, p)
    else:
        if cfg.example == "concentrated":
            f, fam = concentrated_parabola(R), parabola_caps(R, a)
        elif cfg.example == "flat":
            k = middle_theta(R) if cfg.theta_index is None else cfg.theta_index
            f, fam = flat_parabola(R, k), parabola_caps(R, a)
        else:
            f, fam = cone_bump(R), cone_caps(R, a)
        lhs = lp_norm(f, p)
        rhs = lp_norm(square_function(f, smooth_partition(fam, f.grid)), p)
    return {"R": int(R), "lhs": float(lhs), "rhs": float(rhs), "ratio": float(lhs / rhs),
            "time": time.perf_counter() - t0}


def _evaluate(args):
    return evaluate(*args)


def fit_records(records) -> tuple[list, str | None]:
    """Records used in the fit: the smallest R is dropped once there are >= 4."""
    recs = sorted(records, key=lambda r: r["R"])
    if len(recs) >= 4:
        return recs[1:], f"smallest R={recs[0]['R']} excluded from the fit"
    return recs, None


def verdict(result: dict) -> str:
    """Recompute pass/fail from a serialized result."""
    recs, _ = fit_records(result["records"])
    slope, _ = fit_exponent([(r["R"], r["ratio"]) for r in recs])
    return "pass" if abs(slope - result["predicted_slope"]) <= result["tolerance"] else "fail"


def run_sweep(cfg: SweepConfig) -> SweepResult:
    tasks = [(cfg, R) for R in cfg.R_list]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            records = list(ex.map(_evaluate, tasks))
    else:
        records = [evaluate(*t) for t in tasks]
    records.sort(key=lambda r: r["R"])
    used, note = fit_records(records)
    slope, err = fit_exponent([(r["R"], r["ratio"]) for r in used])
    pred = predicted_exponent(ExponentQuery(cfg.curve, cfg.exponent, cfg.p))
    ok = math.isfinite(slope) and abs(slope - pred) <= cfg.tol
    return SweepResult(cfg.to_dict(), records, slope, err, pred, cfg.tol,
                       [r["R"] for r in used], "pass" if ok else "fail",
                       [note] if note else [])
