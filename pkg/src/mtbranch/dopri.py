"""Dormand-Prince 5(4) stepping with a continuous extension.

Plain-float implementation: states are tuples of floats.  The systems solved
in this package have four components or fewer, where per-step numpy overhead
would dominate the arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

State = tuple  # tuple[float, ...]
Rhs = Callable[[float, State], State]

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)
# Shampine's dense-output weights
D1, D3, D4, D5, D6, D7 = (
    -12715105075 / 11282082432,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)


@dataclass(frozen=True)
class Segment:
    """One accepted step with the data for its quartic interpolant."""

    t0: float
    h: float
    y0: State
    y1: State
    k1: State
    k3: State
    k4: State
    k5: State
    k6: State
    k7: State

    @property
    def t1(self) -> float:
        return self.t0 + self.h

    def __call__(self, t: float) -> State:
        h = self.h
        th = (t - self.t0) / h
        th1 = 1.0 - th
        out = []
        for i in range(len(self.y0)):
            r1 = self.y0[i]
            r2 = self.y1[i] - r1
            r3 = h * self.k1[i] - r2
            r4 = r2 - h * self.k7[i] - r3
            r5 = h * (
                D1 * self.k1[i] + D3 * self.k3[i] + D4 * self.k4[i]
                + D5 * self.k5[i] + D6 * self.k6[i] + D7 * self.k7[i]
            )
            out.append(r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5))))
        return tuple(out)


def step(f: Rhs, t: float, y: State, h: float, k1: State):
    """Take one trial step; return (y1, err_vec, segment)."""
    n = len(y)
    y2 = tuple(y[i] + h * A21 * k1[i] for i in range(n))
    k2 = f(t + C2 * h, y2)
    y3 = tuple(y[i] + h * (A31 * k1[i] + A32 * k2[i]) for i in range(n))
    k3 = f(t + C3 * h, y3)
    y4 = tuple(y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]) for i in range(n))
    k4 = f(t + C4 * h, y4)
    y5 = tuple(
        y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        for i in range(n)
    )
    k5 = f(t + C5 * h, y5)
    y6 = tuple(
        y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
        for i in range(n)
    )
    k6 = f(t + h, y6)
    y7 = tuple(
        y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i])
        for i in range(n)
    )
    k7 = f(t + h, y7)
    err = tuple(
        h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        for i in range(n)
    )
    return y7, err, Segment(t, h, y, y7, k1, k3, k4, k5, k6, k7)


def error_norm(err: State, y0: State, y1: State, atol: Sequence[float], rtol: float) -> float:
    acc = 0.0
    for i in range(len(err)):
        sc = atol[i] + rtol * max(abs(y0[i]), abs(y1[i]))
        acc += (err[i] / sc) ** 2
    return math.sqrt(acc / len(err))


class PIController:
    """Hairer's PI step-size control for a 5(4) pair."""

    beta = 0.04
    expo = 0.2 - 0.75 * 0.04
    safe = 0.9
    fac_min, fac_max = 0.2, 10.0

    def __init__(self) -> None:
        self.err_old = 1e-4

    def propose(self, h: float, err: float, accepted: bool) -> float:
        err = max(err, 1e-16)
        fac = err**self.expo / self.err_old**self.beta / self.safe
        if accepted:
            fac = min(1.0 / self.fac_min, max(1.0 / self.fac_max, fac))
            self.err_old = max(err, 1e-4)
            return h / fac
        return h / min(1.0 / self.fac_min, fac)


def integrate(
    f: Rhs,
    t0: float,
    y0: State,
    t1: float,
    h0: float,
    rtol: float,
    atol: Sequence[float],
    max_steps: int = 100_000,
    h_max: float = math.inf,
) -> list[Segment]:
    """Integrate to exactly ``t1`` and return the accepted segments.

    No event handling; the shooting loop in ``ode_engine`` has its own.
    """
    ctl = PIController()
    t, y, h = t0, tuple(y0), h0
    k1 = f(t, y)
    segs: list[Segment] = []
    attempts = 0
    while t < t1:
        attempts += 1
        if attempts > max_steps:
            raise RuntimeError("step budget exhausted")
        h = min(h, h_max, t1 - t)
        if h <= 1e-14 * max(1.0, abs(t)):
            raise FloatingPointError(f"step size underflow at t={t:.6g}")
        y1, e, seg = step(f, t, y, h, k1)
        err = error_norm(e, y, y1, atol, rtol)
        if not math.isfinite(err):
            h *= 0.2
        elif err <= 1.0:
            segs.append(seg)
            t = t1 if t1 - (t + h) < 1e-14 * max(1.0, abs(t1)) else t + h
            y, k1 = y1, seg.k7
            h = ctl.propose(h, err, True)
        else:
            h = ctl.propose(h, err, False)
    return segs
