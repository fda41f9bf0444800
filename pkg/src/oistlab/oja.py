"""Overlap dynamics of the plain Oja algorithm (no thresholding).

With phi = 0 the limiting overlap q(t) between the running estimate
and the signal obeys the scalar ODE

    dq/dt = alpha2 * q - alpha1 * q^3,
    alpha1 = tau * omega * (1 + tau/2),
    alpha2 = tau * (omega - tau/2),

which integrates in closed form and relaxes to
sqrt(max(0, (omega - tau/2) / (omega * (1 + tau/2)))). The steady state
is positive only for omega > tau/2; larger step sizes leave the
estimate asymptotically uncorrelated with the signal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

ALPHA2_SWITCH = 1e-12


@dataclass(frozen=True)
class OjaParams:
    """Step size tau > 0 and SNR omega >= 0."""

    tau: float
    omega: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")

    @property
    def alpha1(self) -> float:
        return self.tau * self.omega * (1.0 + self.tau / 2.0)

    @property
    def alpha2(self) -> float:
        return self.tau * (self.omega - self.tau / 2.0)


def closed_form_q(t: float, q0: float, params: OjaParams) -> float:
    """Overlap at rescaled time t >= 0 from initial overlap q0 != 0.

    Evaluates the logistic-type solution of the overlap ODE; the
    degenerate branch is used when |alpha2| < 1e-12. The sign of q0 is
    preserved (the ODE never crosses zero).
    """
    if q0 == 0.0:
        raise ValueError("initial overlap q0 must be nonzero")
    if t < 0:
        raise ValueError(f"time t must be >= 0, got {t}")
    a1, a2 = params.alpha1, params.alpha2
    if abs(a2) < ALPHA2_SWITCH:
        qsq = 1.0 / (2.0 * a1 * t + q0 ** -2)
    elif a2 > 0:
        qsq = a2 / (a1 + (a2 / q0 ** 2 - a1) * math.exp(-2.0 * a2 * t))
    else:
        # growth-free form: exp(2*a2*t) decays, so nothing overflows
        decay = math.exp(2.0 * a2 * t)
        qsq = a2 * decay / (a1 * decay + a2 / q0 ** 2 - a1)
    return math.copysign(math.sqrt(qsq), q0)


def steady_state_q(params: OjaParams) -> float:
    """Long-time overlap limit; zero at or beyond the step-size threshold tau = 2*omega."""
    if params.omega == 0.0:
        return 0.0
    value = (params.omega - params.tau / 2.0) / (params.omega * (1.0 + params.tau / 2.0))
    return math.sqrt(max(0.0, value))


def ode_q(t: float, q0: float, params: OjaParams, dt: float = 1e-3) -> float:
    """Overlap at time t by 4th-order Runge-Kutta integration of the ODE.

    Independent cross-check of closed_form_q; agrees to better than
    1e-8 for dt <= 1e-3 on t in [0, 20].
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if t < 0:
        raise ValueError(f"time t must be >= 0, got {t}")
    a1, a2 = params.alpha1, params.alpha2

    def f(q):
        return a2 * q - a1 * q ** 3

    if t == 0.0:
        return float(q0)
    n = max(1, math.ceil(t / dt))
    h = t / n
    q = float(q0)
    for _ in range(n):
        k1 = f(q)
        k2 = f(q + 0.5 * h * k1)
        k3 = f(q + 0.5 * h * k2)
        k4 = f(q + h * k3)
        q += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return q
