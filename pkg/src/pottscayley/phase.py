"""Phase-diagram tools: classification, grid scans, regime search, critical beta."""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .enumeration import exact_partition_vector
from .fixed_points import (
    Branch,
    RegimeError,
    all_fixed_points,
    eta_thresholds,
    k0_slope,
    single_root_threshold,
    theta1_star,
    theta1_star_star,
)
from .model import FREE, BoundarySpec, ModelParams, ThetaParams, thetas_from
from .recursion import partition_after, ratio_map_terms
from .tree import TripleDeltaVariant


class PhaseClass(enum.Enum):
    UNIQUE = "unique"
    SYMMETRIC_MULTI = "symmetric_multi"
    FIVE_SOLUTION = "five_solution"
    OTHER = "other"


@dataclass(frozen=True)
class PhasePoint:
    thetas: ThetaParams
    total_solutions: int
    stable_solutions: int
    symmetric_count: int
    classification: PhaseClass


def classify(thetas: ThetaParams) -> PhasePoint:
    fps = all_fixed_points(thetas)
    total = len(fps)
    n_sym = sum(1 for p in fps if p.branch is Branch.SYMMETRIC)
    if total == 1:
        cls = PhaseClass.UNIQUE
    elif total == 3 and n_sym == 3:
        cls = PhaseClass.SYMMETRIC_MULTI
    elif total == 5:
        cls = PhaseClass.FIVE_SOLUTION
    else:
        cls = PhaseClass.OTHER
    return PhasePoint(thetas, total, len(fps.stable), n_sym, cls)


@dataclass(frozen=True)
class RegionBounds:
    """Bounds of the five-solution region; ``None`` where a prerequisite fails."""

    theta1_star: float | None
    theta1_star_star: float | None
    A_bound: float | None
    B_bound: float | None
    C_bound: float | None
    k0: float | None = None
    single_root_threshold: float | None = None
    eta: tuple[float, float] | None = None
    notes: dict = field(default_factory=dict)

    def contains(self, theta3: float) -> bool:
        return (self.B_bound is not None and self.C_bound is not None
                and self.B_bound < theta3 < self.C_bound)


def region_bounds(thetas: ThetaParams) -> RegionBounds:
    notes = {}

    def attempt(name, fn):
        try:
            return fn()
        except RegimeError as exc:
            notes[name] = str(exc)
            return None

    T = thetas.theta_tilde
    t1s = theta1_star(thetas) if T > 1 else None
    if t1s is None:
        notes["theta1_star"] = "no inflection point for theta_tilde <= 1"
    t1ss = attempt("theta1_star_star", lambda: theta1_star_star(thetas))
    A = max(t1s, t1ss) if t1s is not None and t1ss is not None else None
    if A is None:
        notes.setdefault("A_bound", "needs both theta1* and theta1**")
    eta = attempt("eta", lambda: eta_thresholds(thetas))
    srt = attempt("single_root_threshold", lambda: single_root_threshold(thetas))
    k0 = attempt("k0", lambda: k0_slope(thetas))
    B = max(eta[0], srt) if eta is not None and srt is not None else None
    C = (min(eta[1], thetas.theta1 * (T + 1) / k0)
         if eta is not None and k0 is not None else None)
    return RegionBounds(t1s, t1ss, A, B, C, k0, srt, eta, notes)


# -- scanning -----------------------------------------------------------------

THETA_AXES = ("theta", "theta1", "theta2", "theta3")
PHYSICAL_AXES = ("J", "J1", "J2", "h", "beta")


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    steps: int = 1
    log: bool = False

    def values(self) -> np.ndarray:
        if self.steps < 1:
            raise ValueError(f"axis {self.name}: steps must be >= 1")
        if self.steps == 1:
            return np.array([self.lo])
        if self.log:
            return np.geomspace(self.lo, self.hi, self.steps)
        return np.linspace(self.lo, self.hi, self.steps)

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """``name=lo:hi:steps`` with an optional ``:log`` suffix."""
        try:
            name, rng = text.split("=", 1)
            parts = rng.split(":")
            log = parts[-1] == "log"
            if log:
                parts = parts[:-1]
            lo, hi = float(parts[0]), float(parts[1])
            steps = int(parts[2]) if len(parts) > 2 else 1
        except (ValueError, IndexError) as exc:
            raise ValueError(f"bad axis spec {text!r}; expected name=lo:hi:steps") from exc
        return cls(name.strip(), lo, hi, steps, log)


def grid_points(axes: Sequence[Axis], base: dict) -> Iterator[dict]:
    """Row-major grid over ``axes``; unspecified coordinates come from ``base``."""
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise ValueError("repeated axis")
    space = THETA_AXES if set(names) <= set(THETA_AXES) else PHYSICAL_AXES
    if not set(names) <= set(space) or not set(base) <= set(space):
        raise ValueError(f"axes must all come from {THETA_AXES} or from {PHYSICAL_AXES}")
    for a in axes:
        if space is THETA_AXES and min(a.lo, a.hi) <= 0:
            raise ValueError(f"theta axis {a.name} must be positive")
    for combo in itertools.product(*(a.values() for a in axes)):
        point = dict(base)
        point.update(zip(names, (float(c) for c in combo)))
        yield point


def _thetas_of(point: dict) -> ThetaParams:
    if "theta" in point or "theta3" in point or "theta1" in point:
        return ThetaParams(point.get("theta", 1.0), point.get("theta1", 1.0),
                           point.get("theta2", 1.0), point.get("theta3", 1.0))
    return thetas_from(ModelParams(point.get("J", 0.0), point.get("J1", 0.0),
                                   point.get("J2", 0.0), point.get("h", 0.0),
                                   point.get("beta", 1.0)))


def _classify_point(point: dict) -> PhasePoint:
    return classify(_thetas_of(point))


def scan(axes: Sequence[Axis], base: dict | None = None, jobs: int = 1,
         progress=None) -> Iterator[PhasePoint]:
    """Classify every grid node, yielding results in row-major grid order."""
    points = list(grid_points(axes, base or {}))
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map() yields in submission order regardless of completion order.
            for k, res in enumerate(pool.map(_classify_point, points, chunksize=8)):
                if progress:
                    progress(k + 1, len(points))
                yield res
    else:
        for k, p in enumerate(points):
            res = _classify_point(p)
            if progress:
                progress(k + 1, len(points))
            yield res


# -- regime search ---------------------------------------------------------------

def find_regime(target: PhaseClass, search_budget: int = 4000,
                theta_tilde_values: Iterable[float] = (2.0, 2.5, 3.0, 4.0, 1.5, 6.0, 1.2),
                theta1_values: Iterable[float] = (3.0, 5.0, 2.0, 8.0, 1.5, 15.0),
                theta3_steps: int = 61, refine_steps: int = 40,
                theta2: float = 2.0) -> ThetaParams | None:
    """Deterministic search for parameters with the target class.

    Only theta_tilde = theta * sqrt(theta2) enters the fixed-point equations;
    ``theta2`` just fixes how it splits.


    A coarse log grid in theta3 is scanned for each (theta_tilde, theta1); the
    first run of target nodes has its edges bisected and the midpoint of the
    resulting theta3 window (in log scale) is returned, re-verified.
    """
    if search_budget < 1:
        raise ValueError("search_budget must be >= 1")
    if target is PhaseClass.UNIQUE:
        th = ThetaParams(1.0, 1.0, 1.0, 1.0)
        return th if classify(th).classification is target else None
    calls = 0

    def hit(T, t1, t3):
        nonlocal calls
        calls += 1
        return classify(ThetaParams.from_tilde(T, t1, t3, theta2)).classification is target

    t3_grid = np.geomspace(0.02, 50.0, theta3_steps)
    for T in theta_tilde_values:
        for t1 in theta1_values:
            flags = []
            for t3 in t3_grid:
                if calls >= search_budget:
                    return None
                flags.append(hit(T, t1, t3))
            if not any(flags):
                continue
            k = flags.index(True)
            j = k
            while j + 1 < len(flags) and flags[j + 1]:
                j += 1
            lo_out = t3_grid[k - 1] if k > 0 else t3_grid[0] / 2
            hi_out = t3_grid[j + 1] if j + 1 < len(t3_grid) else t3_grid[-1] * 2
            lo_in, hi_in = t3_grid[k], t3_grid[j]
            for _ in range(refine_steps):
                if calls + 2 > search_budget:
                    break
                m = math.sqrt(lo_out * lo_in)
                if hit(T, t1, m):
                    lo_in = m
                else:
                    lo_out = m
                m = math.sqrt(hi_in * hi_out)
                if hit(T, t1, m):
                    hi_in = m
                else:
                    hi_out = m
            center = math.sqrt(lo_in * hi_in)
            th = ThetaParams.from_tilde(T, t1, center, theta2)
            if classify(th).classification is target:
                return th
    return None


# -- critical temperature ---------------------------------------------------------

class NoTransitionError(ValueError):
    """Solution count equal at both ends of the beta interval."""


@dataclass(frozen=True)
class CriticalBracket:
    beta_low: float
    beta_high: float
    count_low: int
    count_high: int
    bisections: int


def solution_count(J: float, J1: float, J2: float, h: float, beta: float) -> int:
    return len(all_fixed_points(thetas_from(ModelParams(J, J1, J2, h, beta))))


def critical_beta_bracket(J: float, J1: float, J2: float, h: float,
                          beta_range: tuple[float, float], width: float = 1e-6,
                          max_bisections: int = 200) -> CriticalBracket:
    lo, hi = beta_range
    if not 0 < lo < hi:
        raise ValueError("beta_range must satisfy 0 < low < high")
    c_lo = solution_count(J, J1, J2, h, lo)
    c_hi = solution_count(J, J1, J2, h, hi)
    if c_lo == c_hi:
        raise NoTransitionError(f"{c_lo} solutions at both beta={lo} and beta={hi}")
    steps = 0
    while hi - lo > width and steps < max_bisections:
        mid = 0.5 * (lo + hi)
        c = solution_count(J, J1, J2, h, mid)
        if c == c_lo:
            lo = mid
        else:
            hi, c_hi = mid, c
        steps += 1
    return CriticalBracket(lo, hi, c_lo, c_hi, steps)


# -- verification harness -----------------------------------------------------------

def subtraction_defect(u, v, thetas: ThetaParams, *, misprinted_v: bool = False):
    """Relative gap between theta3 (u' - v') and its closed form."""
    T, t1 = thetas.theta_tilde, thetas.theta1
    nu, nv, d = ratio_map_terms(u, v, thetas, misprinted_v=misprinted_v)
    direct = (nu - nv) / d
    closed = ((2 * (T - 1) * (u - v) + t1 * (T * T - 1) * (u * u - v * v))
              / (T * T * t1 + 2 * T * (u + v) + 2 * u * v + t1 * (u * u + v * v)))
    scale = np.maximum(np.abs(closed), np.maximum(np.abs(direct), 1e-300))
    return np.abs(direct - closed) / np.maximum(scale, 1.0)


def random_params(rng: np.random.Generator) -> ModelParams:
    J, J1, J2, h = rng.uniform(-2.0, 2.0, size=4)
    beta = 2.0 - rng.uniform(0.0, 2.0)  # in (0, 2]
    return ModelParams(float(J), float(J1), float(J2), float(h), float(beta))


def oracle_deviation(n: int, params: ModelParams, variant: TripleDeltaVariant,
                     boundary: BoundarySpec = FREE) -> float:
    exact = exact_partition_vector(n, params, boundary, variant).as_array()
    rec = partition_after(n, thetas_from(params), boundary, variant).as_array()
    return float(np.max(np.abs(exact - rec) / np.maximum(np.abs(exact), 1.0)))


def verify(n: int, draws: int = 20, seed: int = 0, *, misprinted_v: bool = False,
           threshold: float = 1e-9, identity_points: int = 1000) -> dict:
    if not 0 <= n <= 3:
        raise ValueError("verification depth must be 0..3")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        params = random_params(rng)
        for variant in TripleDeltaVariant:
            worst = max(worst, oracle_deviation(n, params, variant))
    # Subtraction identity on random positive points, for random couplings.
    th = thetas_from(random_params(rng))
    u = np.exp(rng.uniform(-3, 3, identity_points))
    v = np.exp(rng.uniform(-3, 3, identity_points))
    ident = float(np.max(subtraction_defect(u, v, th, misprinted_v=misprinted_v)))
    return {
        "n": n,
        "draws": draws,
        "seed": seed,
        "max_log_deviation": worst,
        "recursion_ok": worst <= threshold,
        "subtraction_identity_max_defect": ident,
        "subtraction_identity_ok": ident <= 1e-12,
        "misprinted_v": misprinted_v,
        "passed": worst <= threshold and ident <= 1e-12,
    }
