"""Shooting for the radial problem -u'' - u'/r = lambda u exp(u^2), u(0)=mu.

Everything here works in bubble-normalised coordinates: the coefficient is
fixed to lambda* = 4/(mu^2 e^{mu^2}), which puts the concentration scale at
r = 1, and the radius is replaced by s = log r.  The equation becomes

    u_ss = -e^{2s} g(u),    g(u) = (4u/mu^2) exp(u^2 - mu^2),

which never forms e^{mu^2}.  Two quadratures ride along with (u, u_s): the
Dirichlet integral int u_s^2 ds and the nonlinear mass int u g(u) e^{2s} ds.

The first zero s_hat of u fixes everything on the unit disk: by the scaling
u_{mu,lam}(sqrt(lam'/lam) r) = u_{mu,lam'}(r) the Dirichlet problem on B_1 is
solved with lambda_mu = lambda* exp(2 s_hat).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dopri

DEFAULT_R0 = 1e-4
MU_MIN, MU_MAX = 1e-3, 30.0


class ShootingError(RuntimeError):
    """A solve could not produce a profile."""


class NoZeroError(ShootingError):
    pass


class BlowUpError(ShootingError):
    pass


class StartRadiusError(ValueError):
    pass


def series_r4_coefficient(mu: float) -> float:
    """Coefficient b of r^4 in u(r) = mu - r^2/mu + b r^4 + O(r^6)."""
    return (1.0 + 2.0 * mu * mu) / (4.0 * mu**3)


def _natural_scale(mu: float) -> float:
    # u and u_s are O(mu) for small mu and O(1)..O(mu) otherwise
    return min(1.0, mu)


def auto_start_radius(mu: float, abs_tol: float) -> float:
    """Largest r0 <= 1e-4 whose r^4 series term (in u_s) is below abs_tol scaled to mu."""
    b = series_r4_coefficient(mu)
    r_tol = (0.1 * abs_tol * _natural_scale(mu) / (4.0 * b)) ** 0.25
    return min(DEFAULT_R0, r_tol)


@dataclass(frozen=True)
class ShootConfig:
    mu: float
    s_start: Optional[float] = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 200_000
    zero_tol: float = 1e-12
    s_max: Optional[float] = None

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"mu must be positive and finite, got {self.mu!r}")
        for name in ("rel_tol", "abs_tol", "zero_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.start >= self.end:
            raise ValueError("s_start must be below s_max")
        r0 = math.exp(self.start)
        if series_r4_coefficient(self.mu) * r0**4 >= self.abs_tol:
            raise StartRadiusError(
                f"start radius too large: r0={r0:.3g} leaves an r^4 series "
                f"term above abs_tol={self.abs_tol:g} at mu={self.mu:g}"
            )

    @property
    def start(self) -> float:
        if self.s_start is not None:
            return self.s_start
        return math.log(auto_start_radius(self.mu, self.abs_tol))

    @property
    def end(self) -> float:
        if self.s_max is not None:
            return self.s_max
        return 0.5 * self.mu * self.mu + 20.0


@dataclass(frozen=True)
class OdeState:
    s: float
    u: float
    v: float
    lam_acc: float
    mass_acc: float

    def as_tuple(self):
        return (self.u, self.v, self.lam_acc, self.mass_acc)


def normalized_rhs(u: float, mu: float) -> float:
    """g(u) = lambda* u e^{u^2} with lambda* = 4/(mu^2 e^{mu^2}), overflow-free."""
    if not 0.0 <= u <= mu:
        raise ValueError(f"u={u!r} outside [0, mu={mu!r}]")
    return 4.0 * u / (mu * mu) * math.exp((u - mu) * (u + mu))


def series_initial_state(cfg: ShootConfig) -> OdeState:
    """State at s_start from the expansion about the origin.

    u = mu - r0^2/mu, u_s = -2 r0^2/mu; the accumulators carry their
    contributions from (0, r0].
    """
    mu, s0 = cfg.mu, cfg.start
    r2 = math.exp(2.0 * s0)
    return OdeState(
        s=s0,
        u=mu - r2 / mu,
        v=-2.0 * r2 / mu,
        lam_acc=r2 * r2 / (mu * mu),
        mass_acc=2.0 * r2 - (2.0 + 2.0 / (mu * mu)) * r2 * r2,
    )


def _make_rhs(mu: float):
    c = 4.0 / (mu * mu)

    def f(s, y):
        u, v = y[0], y[1]
        force = c * u * math.exp(2.0 * s + (u - mu) * (u + mu))
        return (v, -force, v * v, u * force)

    return f


@dataclass(frozen=True)
class RadialProfile:
    mu: float
    tau_hat: float
    s_hat: float
    log_lambda_mu: float
    dirichlet_energy: float
    nonlinear_mass: float
    segments: tuple = field(repr=False)
    step_count: int = 0
    rejected_count: int = 0
    max_local_error: float = 0.0
    error_sum: float = 0.0
    config: Optional[ShootConfig] = field(default=None, repr=False)

    @property
    def s_start(self) -> float:
        return self.segments[0].t0

    @property
    def lambda_mu(self) -> float:
        return math.exp(self.log_lambda_mu)

    @property
    def energy_identity_gap(self) -> float:
        return abs(self.dirichlet_energy - self.nonlinear_mass) / self.dirichlet_energy

    def state(self, s: float) -> tuple:
        """Dense (u, u_s, lam_acc, mass_acc) at log-radius s."""
        if not (self.s_start <= s <= self.s_hat):
            raise ValueError(f"s={s!r} outside [{self.s_start!r}, {self.s_hat!r}]")
        starts = self._starts
        i = int(np.searchsorted(starts, s, side="right")) - 1
        i = min(max(i, 0), len(self.segments) - 1)
        return self.segments[i](s)

    def evaluate(self, s: float) -> tuple[float, float]:
        y = self.state(s)
        return y[0], y[1]

    @property
    def _starts(self):
        try:
            return self.__dict__["_starts_cache"]
        except KeyError:
            arr = np.array([seg.t0 for seg in self.segments])
            object.__setattr__(self, "_starts_cache", arr)
            return arr

    def knots(self) -> np.ndarray:
        """Accepted step boundaries, s_start through s_hat."""
        return np.append(self._starts, self.s_hat)


def evaluate_profile(p: RadialProfile, s: float) -> tuple[float, float]:
    return p.evaluate(s)


def _refine_crossing(f, seg: dopri.Segment, zero_tol: float):
    """Shorten the final step so that it lands on u = 0.

    Start from the root of the dense interpolant, then Newton on the length
    of a genuine RK step (slope = u_s at the end point).
    """
    lo, hi = 0.0, seg.h
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if seg(seg.t0 + mid)[0] > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(seg.t0)):
            break
    d = 0.5 * (lo + hi)
    best = None
    for _ in range(30):
        y1, err, trial = dopri.step(f, seg.t0, seg.y0, d, seg.k1)
        if best is None or abs(y1[0]) < abs(best[0][0]):
            best = (y1, err, trial)
        if abs(y1[0]) <= 0.25 * zero_tol or y1[1] == 0.0:
            break
        corr = y1[0] / y1[1]
        d -= corr
        if abs(corr) <= 4e-16 * max(1.0, abs(seg.t0 + d)):
            break
    return best


def integrate_profile(cfg: ShootConfig) -> RadialProfile:
    """Shoot from the origin to the first zero of u."""
    mu = cfg.mu
    f = _make_rhs(mu)
    st = series_initial_state(cfg)
    sc = _natural_scale(mu)
    atol = (cfg.abs_tol * sc, cfg.abs_tol * sc, cfg.abs_tol * sc * sc, cfg.abs_tol * sc * sc)
    s, y = st.s, st.as_tuple()
    s_end = cfg.end
    k1 = f(s, y)
    # initial step from the curvature scale at the start (forcing ~ r0^2)
    h = 0.05
    ctl = dopri.PIController()
    segs: list[dopri.Segment] = []
    rejected = 0
    max_err = 0.0
    err_sum = 0.0
    h_max = 2.0
    while True:
        if len(segs) + rejected >= cfg.max_steps:
            raise NoZeroError(
                f"no zero before s_max: step budget of {cfg.max_steps} exhausted at s={s:.6g} (mu={mu:g})"
            )
        if s >= s_end:
            raise NoZeroError(f"no zero before s_max={s_end:g} (mu={mu:g})")
        h = min(h, h_max, s_end - s)
        y1, e, seg = dopri.step(f, s, y, h, k1)
        if not all(math.isfinite(x) for x in y1):
            raise BlowUpError(f"integration blew up at s={s:.6g} (mu={mu:g})")
        err = dopri.error_norm(e, y, y1, atol, cfg.rel_tol)
        if not math.isfinite(err):
            raise BlowUpError(f"integration blew up: non-finite error estimate at s={s:.6g}")
        if err > 1.0:
            rejected += 1
            h = ctl.propose(h, err, False)
            if h < 1e-14 * max(1.0, abs(s)):
                raise BlowUpError(f"integration blew up: step size underflow at s={s:.6g}")
            continue
        if y1[0] <= 0.0:
            y_hat, e_hat, seg_hat = _refine_crossing(f, seg, cfg.zero_tol)
            if abs(y_hat[0]) > cfg.zero_tol:
                raise ShootingError(
                    f"crossing refinement stalled at |u|={abs(y_hat[0]):.3g} (mu={mu:g})"
                )
            segs.append(seg_hat)
            max_err = max(max_err, abs(e_hat[0]))
            err_sum += abs(e_hat[0])
            break
        segs.append(seg)
        max_err = max(max_err, abs(e[0]))
        err_sum += abs(e[0])
        s, y, k1 = s + h, y1, seg.k7
        h = ctl.propose(h, err, True)

    last = segs[-1]
    s_hat = last.t1
    _, _, lam_acc, mass_acc = last.y1
    log_lam = math.log(4.0) + 2.0 * s_hat - mu * mu - 2.0 * math.log(mu)
    return RadialProfile(
        mu=mu,
        tau_hat=math.exp(s_hat),
        s_hat=s_hat,
        log_lambda_mu=log_lam,
        dirichlet_energy=2.0 * math.pi * lam_acc,
        nonlinear_mass=2.0 * math.pi * mass_acc,
        segments=tuple(segs),
        step_count=len(segs),
        rejected_count=rejected,
        max_local_error=max_err,
        error_sum=err_sum,
        config=cfg,
    )


def dense_samples(p: RadialProfile, per_segment: int = 4) -> np.ndarray:
    """(s, u, u_s) rows at equally spaced points inside every segment.

    Includes s_start and s_hat.  Returned as an array of shape (n, 3).
    """
    rows = []
    for seg in p.segments:
        for j in range(per_segment):
            t = seg.t0 + seg.h * j / per_segment
            y = seg(t)
            rows.append((t, y[0], y[1]))
    end = p.segments[-1].y1
    rows.append((p.s_hat, end[0], end[1]))
    return np.array(rows)


def f_density(u, mu: float):
    """u g(u), i.e. lambda* u^2 e^{u^2} in bubble units."""
    u = np.asarray(u, dtype=float)
    return 4.0 * u * u / (mu * mu) * np.exp((u - mu) * (u + mu))


def integrate_to(cfg: ShootConfig, s: float) -> OdeState:
    """Plain integration from the series start to log-radius s (no zero search)."""
    st = series_initial_state(cfg)
    if s < st.s:
        raise ValueError("s lies before the start radius")
    if s == st.s:
        return st
    sc = _natural_scale(cfg.mu)
    atol = (cfg.abs_tol * sc, cfg.abs_tol * sc, cfg.abs_tol * sc * sc, cfg.abs_tol * sc * sc)
    segs = dopri.integrate(_make_rhs(cfg.mu), st.s, st.as_tuple(), s, 0.05, cfg.rel_tol, atol,
                           max_steps=cfg.max_steps, h_max=2.0)
    u, v, lam, mass = segs[-1].y1
    return OdeState(s, u, v, lam, mass)
