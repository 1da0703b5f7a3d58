"""The branch mu -> u_mu of positive solutions on the unit disk and its energy curve."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .ode_engine import (
    MU_MAX,
    MU_MIN,
    RadialProfile,
    ShootConfig,
    ShootingError,
    integrate_profile,
)

FOUR_PI = 4.0 * math.pi
J0_FIRST_ZERO = 2.404825557695773
NEAR_CRITICAL = 1e-6

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverControls:
    """Numerical controls shared by every solve in a sweep."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 200_000
    zero_tol: float = 1e-12

    def for_mu(self, mu: float) -> ShootConfig:
        return ShootConfig(
            mu=mu,
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            max_steps=self.max_steps,
            zero_tol=self.zero_tol,
        )


DEFAULT_CONTROLS = SolverControls()


@dataclass(frozen=True)
class BranchPoint:
    mu: float
    log_lambda_mu: float
    dirichlet_energy: float
    mt_value: float
    s_hat: float
    step_count: int
    energy_identity_gap: float

    @property
    def lambda_mu(self) -> float:
        return math.exp(self.log_lambda_mu)


@dataclass(frozen=True)
class BranchCurve:
    points: tuple
    lambda_sharp: float
    mu_sharp: float
    grid: dict = field(default_factory=dict)
    failures: tuple = ()
    n_local_maxima: int = 0
    refined: bool = False
    warnings: tuple = ()

    @property
    def mus(self) -> np.ndarray:
        return np.array([p.mu for p in self.points])

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.dirichlet_energy for p in self.points])


def mt_functional(p: RadialProfile) -> float:
    """E(u_mu) = int_{B_1} (e^{u^2} - 1) dx from a bubble-coordinate profile.

    After the dilation r -> r/tau_hat the integrand is
    2 pi (e^{u^2} - 1) e^{2(s - s_hat)} ds, which is bounded for every mu.
    """
    s_hat = p.s_hat
    total = 0.0
    for seg in p.segments:
        for x, wt in zip(_GL_X, _GL_W):
            s = seg.t0 + 0.5 * seg.h * (x + 1.0)
            u = seg(s)[0]
            u2 = u * u
            d = 2.0 * (s - s_hat)
            if u2 < 30.0:
                val = math.exp(d) * math.expm1(u2)
            else:
                val = math.exp(u2 + d) - math.exp(d)
            total += 0.5 * seg.h * wt * val
    # the disk (0, r0] where u ~ mu
    mu, d0 = p.mu, 2.0 * (p.s_start - s_hat)
    inner = 0.5 * (math.exp(mu * mu + d0) - math.exp(d0)) if mu * mu >= 30 else 0.5 * math.exp(d0) * math.expm1(mu * mu)
    return 2.0 * math.pi * float(total + inner)


def point_from_profile(p: RadialProfile) -> BranchPoint:
    return BranchPoint(
        mu=p.mu,
        log_lambda_mu=p.log_lambda_mu,
        dirichlet_energy=p.dirichlet_energy,
        mt_value=float(mt_functional(p)),
        s_hat=p.s_hat,
        step_count=p.step_count,
        energy_identity_gap=p.energy_identity_gap,
    )


def solve_mu(mu: float, controls: SolverControls = DEFAULT_CONTROLS) -> BranchPoint:
    if not MU_MIN <= mu <= MU_MAX:
        raise ValueError(f"mu={mu!r} outside the supported range [{MU_MIN}, {MU_MAX}]")
    return point_from_profile(integrate_profile(controls.for_mu(mu)))


def disk_value(p: RadialProfile, rho: float) -> float:
    """u_mu at radius rho of the unit disk."""
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    s = p.s_hat + math.log(rho)
    if s < p.s_start:
        return p.mu
    return p.evaluate(s)[0]


def default_grid(n: int = 400, mu_min: float = MU_MIN, mu_max: float = 24.0,
                 dense_lo: float = 0.5, dense_hi: float = 4.0, factor: int = 4) -> np.ndarray:
    """Log-spaced nodes, with `factor`-fold refinement on (dense_lo, dense_hi)."""
    base = np.geomspace(mu_min, mu_max, n)
    extra = []
    for a, b in zip(base[:-1], base[1:]):
        if a >= dense_lo and b <= dense_hi:
            extra.extend(np.geomspace(a, b, factor + 1)[1:-1])
    return np.unique(np.concatenate([base, extra]))


def _solve_node(args):
    mu, controls = args
    try:
        return solve_mu(mu, controls), None
    except (ShootingError, ArithmeticError, ValueError) as exc:
        return None, (mu, str(exc))


def _count_local_maxima(vals: np.ndarray) -> int:
    if len(vals) < 3:
        return 0
    mid = vals[1:-1]
    return int(np.sum((mid > vals[:-2]) & (mid >= vals[2:])))


def sweep_branch(mu_grid: Sequence[float], controls: SolverControls = DEFAULT_CONTROLS,
                 jobs: int = 1) -> BranchCurve:
    """Solve every node of a strictly increasing mu grid."""
    grid = np.asarray(mu_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty mu grid")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("mu grid must be strictly increasing")
    if grid[0] < MU_MIN or grid[-1] > MU_MAX:
        raise ValueError(f"mu grid must lie within [{MU_MIN}, {MU_MAX}]")
    tasks = [(float(m), controls) for m in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_solve_node, tasks, chunksize=8))
    else:
        results = [_solve_node(t) for t in tasks]
    points = tuple(r for r, _ in results if r is not None)
    failures = tuple(f for _, f in results if f is not None)
    if not points:
        raise ShootingError("every node of the sweep failed")
    energies = np.array([p.dirichlet_energy for p in points])
    i = int(np.argmax(energies))
    nmax = _count_local_maxima(energies)
    warns = []
    if nmax > 1:
        warns.append(f"energy curve has {nmax} interior local maxima; the sharp level uses the global one")
    return BranchCurve(
        points=points,
        lambda_sharp=float(energies[i]),
        mu_sharp=points[i].mu,
        grid={"mu_min": float(grid[0]), "mu_max": float(grid[-1]), "nodes": int(grid.size)},
        failures=failures,
        n_local_maxima=nmax,
        warnings=tuple(warns),
    )


def _golden_max(f, a: float, b: float, tol: float):
    """Golden-section search for a maximum of f on [a, b]; returns (a, b, best_x, best_f)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    best = max((fc, c), (fd, d))
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
            best = max(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
            best = max(best, (fd, d))
    return a, b, best[1], best[0]


def find_lambda_sharp(curve: BranchCurve, controls: SolverControls = DEFAULT_CONTROLS,
                      tol: float = 1e-6) -> tuple[float, float]:
    """Refine the sampled maximum of Lambda(mu) with fresh solves.

    Returns (mu_sharp, lambda_sharp).
    """
    pts = curve.points
    if len(pts) < 3:
        raise BracketError("need at least 3 points to bracket the maximum")
    energies = np.array([p.dirichlet_energy for p in pts])
    i = int(np.argmax(energies))
    if i == 0 or i == len(pts) - 1:
        raise BracketError("bracket failure, extend grid: maximum sits on the grid boundary")

    def energy(mu):
        return integrate_profile(controls.for_mu(mu)).dirichlet_energy

    a, b, _, best_f = _golden_max(energy, pts[i - 1].mu, pts[i + 1].mu, tol)
    mid = 0.5 * (a + b)
    lam_mid = energy(mid)
    return mid, max(lam_mid, best_f, float(energies[i]))


def refine_curve(curve: BranchCurve, controls: SolverControls = DEFAULT_CONTROLS) -> BranchCurve:
    mu_s, lam_s = find_lambda_sharp(curve, controls)
    return replace(curve, mu_sharp=mu_s, lambda_sharp=lam_s, refined=True)


@dataclass(frozen=True)
class CrossingCount:
    Lambda: float
    crossings: tuple
    regime: str
    mu_window: tuple
    lambda_sharp: float
    warning: Optional[str] = None

    @property
    def observed_count(self) -> Optional[int]:
        return None if self.warning else len(self.crossings)


def regime_label(Lambda: float, lambda_sharp: float) -> str:
    if abs(Lambda - lambda_sharp) < NEAR_CRITICAL:
        return "near Lambda_sharp"
    if Lambda <= FOUR_PI:
        return "below 4pi"
    if Lambda < lambda_sharp:
        return "supercritical window"
    return "above Lambda_sharp"


def count_solutions(Lambda: float, curve: BranchCurve, controls: SolverControls = DEFAULT_CONTROLS,
                    mu_tol: float = 1e-8) -> CrossingCount:
    """Crossings of the sampled curve with the level Lambda, refined by bisection.

    The result is an observed count on the searched mu-window, not a
    certified multiplicity.
    """
    if not Lambda > 0:
        raise ValueError("Lambda must be positive")
    pts = curve.points
    window = (pts[0].mu, pts[-1].mu)
    regime = regime_label(Lambda, curve.lambda_sharp)
    if abs(Lambda - curve.lambda_sharp) < NEAR_CRITICAL:
        return CrossingCount(Lambda, (), regime, window, curve.lambda_sharp,
                             warning="near-critical level, count unreliable")

    def gap(mu):
        return integrate_profile(controls.for_mu(mu)).dirichlet_energy - Lambda

    found = []
    for p, q in zip(pts[:-1], pts[1:]):
        ga, gb = p.dirichlet_energy - Lambda, q.dirichlet_energy - Lambda
        if ga == 0.0:
            found.append(p.mu)
            continue
        if ga * gb > 0 or gb == 0.0:
            continue
        a, b = p.mu, q.mu
        while b - a > mu_tol:
            m = 0.5 * (a + b)
            gm = gap(m)
            if gm == 0.0:
                a = b = m
                break
            if (gm > 0) == (ga > 0):
                a, ga = m, gm
            else:
                b = m
        found.append(0.5 * (a + b))
    if pts[-1].dirichlet_energy == Lambda:
        found.append(pts[-1].mu)
    return CrossingCount(Lambda, tuple(found), regime, window, curve.lambda_sharp)


def eigenvalue_limit_report(curve: BranchCurve) -> dict:
    """Small-mu limit of lambda_mu next to the two candidate reference values."""
    lam = curve.points[0].lambda_mu
    j0sq = J0_FIRST_ZERO**2
    return {
        "mu": curve.points[0].mu,
        "lambda_mu": lam,
        "j0_squared": j0sq,
        "two_pi": 2.0 * math.pi,
        "closest": "j0_squared" if abs(lam - j0sq) < abs(lam - 2 * math.pi) else "two_pi",
    }
