"""Bubble profile, its second-order correction, and checks against solved profiles.

Radii here are in bubble units (concentration scale = 1), which is exactly
the normalisation ``ode_engine`` integrates in, so a profile's own radius is
the rescaled variable of the blow-up analysis.

    eta0(r) = -log(1 + r^2)                 solves  -Lap eta0 = 4 e^{2 eta0}
    w(r)    = eta0 + 2r^2/(1+r^2) - eta0^2/2 + (1-r^2)/(1+r^2) I(1+r^2)
    I(x)    = int_1^x log t / (1 - t) dt

and w solves -Lap w = 4 e^{2 eta0} (eta0 + eta0^2 + 2w), w(0) = w'(0) = 0.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from . import dopri
from .ode_engine import RadialProfile, f_density

SERIES_EDGE = 0.5  # I(1+z) by power series for z <= SERIES_EDGE
K_LARGE_DECAY = 6.0  # smallest mu at which decay/density checks are meaningful
K_LARGE_RATE = 8.0


class QuadratureError(ArithmeticError):
    pass


# -- auxiliary integral -------------------------------------------------------

def _aux_series(z: float) -> float:
    # log(1+y)/(-y) = -1 + y/2 - y^2/3 + ...  =>  I(1+z) = sum_n (-1)^n z^n / n^2
    total, zn, n = 0.0, 1.0, 0
    while True:
        n += 1
        zn *= -z
        term = zn / (n * n)
        total += term
        if abs(term) <= 1e-18 * max(abs(total), 1e-300) or n > 400:
            return total


def _log_integrand(y: float) -> float:
    # log t/(1-t) dt with t = e^y
    return y / math.expm1(-y)


_I_EDGE = _aux_series(SERIES_EDGE)


def aux_integral(x: float) -> float:
    """I(x) = int_1^x log t/(1-t) dt for x >= 1."""
    if x < 1.0:
        raise ValueError("aux_integral is defined here for x >= 1")
    z = x - 1.0
    if z <= SERIES_EDGE:
        return _aux_series(z)
    a, b = math.log1p(SERIES_EDGE), math.log(x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(_log_integrand, a, b, epsabs=1e-14, epsrel=1e-14, limit=200, full_output=1)
    val, abserr = out[0], out[1]
    if not math.isfinite(val) or abserr > 1e-12 * max(1.0, abs(val)):
        raise QuadratureError(f"quadrature for I({x!r}) did not converge (err={abserr:.3g})")
    return _I_EDGE + val


# -- closed forms --------------------------------------------------------------

def eta0(r):
    return -np.log1p(np.square(r))


def eta0_prime(r):
    r = np.asarray(r, dtype=float)
    return -2.0 * r / (1.0 + r * r)


def _scalar_w(r: float) -> float:
    r2 = r * r
    e0 = -math.log1p(r2)
    return e0 + 2.0 * r2 / (1.0 + r2) - 0.5 * e0 * e0 + (1.0 - r2) / (1.0 + r2) * aux_integral(1.0 + r2)


def _scalar_w_prime(r: float) -> float:
    if r == 0.0:
        return 0.0
    r2 = r * r
    q = 1.0 + r2
    return (
        2.0 * r * (1.0 - r2) / (q * q)
        - 2.0 * math.log1p(r2) / (r * q)
        - 4.0 * r / (q * q) * aux_integral(q)
    )


def w_closed_form(r):
    """Second-order correction w(r); accepts scalars or arrays."""
    if np.ndim(r) == 0:
        return _scalar_w(float(r))
    return np.array([_scalar_w(float(x)) for x in np.ravel(r)]).reshape(np.shape(r))


def w_prime(r):
    if np.ndim(r) == 0:
        return _scalar_w_prime(float(r))
    return np.array([_scalar_w_prime(float(x)) for x in np.ravel(r)]).reshape(np.shape(r))


def w_source(r, w):
    """Right-hand side 4 e^{2 eta0} (eta0 + eta0^2 + 2w) of -Lap w."""
    e0 = eta0(r)
    return 4.0 * np.exp(2.0 * e0) * (e0 + e0 * e0 + 2.0 * w)


def radial_laplacian_fd(fun, r: float) -> float:
    """f'' + f'/r by five-point central differences, h = max(1e-4, 1e-4 r)."""
    h = max(1e-4, 1e-4 * r)
    fm2, fm1, f0, fp1, fp2 = (fun(r + k * h) for k in (-2, -1, 0, 1, 2))
    d2 = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
    d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h)
    return d2 + d1 / r


def w_bound_check(R_max: float, n: int = 4000) -> float:
    """sup |w - eta0| over a grid on [0, R_max] (bounded, plateaus at 2 + pi^2/6)."""
    if R_max <= 0:
        raise ValueError("R_max must be positive")
    r = np.concatenate([[0.0], np.geomspace(min(1e-3, R_max), R_max, n)])
    return float(np.max(np.abs(w_closed_form(r) - eta0(r))))


def find_R0(r_hi: float = 1e6, n: int = 2000) -> float:
    """Radius beyond which w <= -1, refined by bisection."""
    r = np.geomspace(1e-3, r_hi, n)
    w = w_closed_form(r)
    above = np.nonzero(w > -1.0)[0]
    if len(above) == 0 or above[-1] == n - 1:
        raise RuntimeError("w never settles below -1 on the search grid")
    i = above[-1]
    return optimize.brentq(lambda x: _scalar_w(x) + 1.0, r[i], r[i + 1], xtol=1e-12)


def cauchy_w_numeric(r_max: float = 50.0, rtol: float = 1e-11, atol: float = 1e-13):
    """Solve -Lap w = 4e^{2eta0}(eta0 + eta0^2 + 2w), w(0)=w'(0)=0 by shooting.

    Same stepper as the branch solver, log-radius variable, series start
    w = r^4/4.  Returns a callable r -> (w, r w').
    """
    s0 = math.log(1e-4)
    r0 = 1e-4

    def f(s, y):
        r2 = math.exp(2.0 * s)
        e0 = -math.log1p(r2)
        src = 4.0 / (1.0 + r2) ** 2 * (e0 + e0 * e0 + 2.0 * y[0])
        return (y[1], -r2 * src)

    segs = dopri.integrate(f, s0, (r0**4 / 4.0, r0**4), math.log(r_max), 1e-2, rtol, (atol, atol))
    starts = np.array([sg.t0 for sg in segs])

    def evaluate(r: float):
        if r < r0:
            return r**4 / 4.0, r**4
        s = math.log(r)
        i = min(max(int(np.searchsorted(starts, s, side="right")) - 1, 0), len(segs) - 1)
        return segs[i](s)

    return evaluate


# -- comparison with solved profiles ------------------------------------------

def _profile_u(p: RadialProfile, r: np.ndarray) -> np.ndarray:
    """u at bubble radii r (series inside the start radius)."""
    r0 = math.exp(p.s_start)
    out = np.empty(len(r))
    for j, x in enumerate(r):
        if x < r0:
            out[j] = p.mu - x * x / p.mu
        else:
            out[j] = p.evaluate(min(math.log(x), p.s_hat))[0]
    return out


def _profile_ur(p: RadialProfile, r: np.ndarray) -> np.ndarray:
    r0 = math.exp(p.s_start)
    out = np.empty(len(r))
    for j, x in enumerate(r):
        if x < r0:
            out[j] = -2.0 * x / p.mu
        else:
            out[j] = p.evaluate(min(math.log(x), p.s_hat))[1] / x
    return out


@dataclass(frozen=True)
class BlowupDecomposition:
    mu: float
    r_grid: np.ndarray = field(repr=False)
    eta_num: np.ndarray = field(repr=False)
    eta0_vals: np.ndarray = field(repr=False)
    w_num: np.ndarray = field(repr=False)
    w_vals: np.ndarray = field(repr=False)
    phi_res: np.ndarray = field(repr=False)
    sup_err_w: float = math.nan
    sup_err_eta: float = math.nan
    sup_err_eta_prime: float = math.nan
    decay_ok: bool | None = None
    density_ok: bool | None = None


def decompose(p: RadialProfile, R_cmp: float = 5.0, n: int = 201, with_checks: bool = True) -> BlowupDecomposition:
    """Split the rescaled profile into bubble + mu^-2 w + remainder on [0, R_cmp]."""
    if not 0 < R_cmp <= p.tau_hat:
        raise ValueError(f"R_cmp={R_cmp!r} outside (0, tau_hat={p.tau_hat!r}]")
    mu = p.mu
    r = np.linspace(0.0, R_cmp, n)
    u = _profile_u(p, r)
    eta_num = mu * (u - mu)
    e0 = eta0(r)
    w_num = mu * mu * (eta_num - e0)
    w = w_closed_form(r)
    phi = eta_num - e0 - w / (mu * mu)
    deta = mu * _profile_ur(p, r) - eta0_prime(r)
    checks = decay_check(p) if with_checks and mu >= K_LARGE_DECAY else None
    return BlowupDecomposition(
        mu=mu,
        r_grid=r,
        eta_num=eta_num,
        eta0_vals=e0,
        w_num=w_num,
        w_vals=w,
        phi_res=phi,
        sup_err_w=float(np.max(np.abs(w_num - w))),
        sup_err_eta=float(np.max(np.abs(eta_num - e0))),
        sup_err_eta_prime=float(np.max(np.abs(deta))),
        decay_ok=None if checks is None else checks.decay_ok,
        density_ok=None if checks is None else checks.density_ok,
    )


@dataclass(frozen=True)
class DecayCheck:
    mu: float
    decay_ok: bool | None
    density_ok: bool | None
    R0: float
    max_eta_excess: float = math.nan  # max over [R0, tau] of eta_num - eta0
    max_density: float = math.nan  # max of (2 log r)^2 r^2 u g(u)
    warning: str | None = None


_R0_CACHE: list[float] = []


def R0() -> float:
    if not _R0_CACHE:
        _R0_CACHE.append(find_R0())
    return _R0_CACHE[0]


def _samples_beyond(p: RadialProfile, s_lo: float, per_segment: int = 8):
    ss, us = [], []
    for seg in p.segments:
        if seg.t1 < s_lo:
            continue
        for j in range(per_segment + 1):
            t = seg.t0 + seg.h * j / per_segment
            if t < s_lo:
                continue
            ss.append(t)
            us.append(seg(t)[0])
    return np.array(ss), np.array(us)


def decay_check(p: RadialProfile) -> DecayCheck:
    """Pointwise decay below the bubble and the weighted density bound on [R0, tau_hat]."""
    rad0 = R0()
    if p.mu < K_LARGE_DECAY:
        return DecayCheck(
            p.mu, None, None, rad0,
            warning=f"asymptotic regime not reached: mu={p.mu:g} < {K_LARGE_DECAY:g}",
        )
    s, u = _samples_beyond(p, math.log(rad0))
    u = np.maximum(u, 0.0)  # the last sample sits on the zero
    eta_num = p.mu * (u - p.mu)
    excess = eta_num - eta0(np.exp(s))
    dens = (2.0 * s) ** 2 * np.exp(2.0 * s) * f_density(u, p.mu)
    return DecayCheck(
        mu=p.mu,
        decay_ok=bool(np.all(excess <= 1e-9)),
        density_ok=bool(np.all(dens <= 16.0 * (1.0 + 1e-9))),
        R0=rad0,
        max_eta_excess=float(np.max(excess)),
        max_density=float(np.max(dens)),
    )


@dataclass(frozen=True)
class QuantizationProfile:
    mu: float
    R_grid: np.ndarray = field(repr=False)
    P_vals: np.ndarray = field(repr=False)
    bubble_prediction: np.ndarray = field(repr=False)
    tail_bound: np.ndarray = field(repr=False)
    total_mass: float = math.nan


def quantization_profile(p: RadialProfile, R_grid) -> QuantizationProfile:
    """Cumulative energy mass P(R) inside bubble radius R."""
    R = np.asarray(R_grid, dtype=float)
    if np.any(R <= 0) or np.any(R > p.tau_hat * (1 + 1e-15)):
        raise ValueError("R_grid must lie in (0, tau_hat]")
    r0 = math.exp(p.s_start)
    P = np.empty(len(R))
    for j, x in enumerate(R):
        if x >= p.tau_hat:
            P[j] = p.nonlinear_mass
        elif x < r0:
            P[j] = 2.0 * math.pi * 2.0 * x * x
        else:
            P[j] = 2.0 * math.pi * p.state(math.log(x))[3]
    rad0 = R0()
    with np.errstate(divide="ignore"):
        tail = np.where(R >= rad0, 32.0 * math.pi / np.log(R), np.nan)
    return QuantizationProfile(
        mu=p.mu,
        R_grid=R,
        P_vals=P,
        bubble_prediction=4.0 * math.pi * R * R / (1.0 + R * R),
        tail_bound=tail,
        total_mass=p.nonlinear_mass,
    )
