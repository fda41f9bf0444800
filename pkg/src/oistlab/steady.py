"""Stationary densities, fixed points and the SNR phase transition.

Setting the time derivative of the limit equations to zero gives a
Boltzmann-form conditional density per signal atom,

    P(x | xi) = exp(-[h x^2 + beta |x| - tau*omega*q*xi*x] / g) / Z_xi,
    g = tau^2 (1 + omega q^2) / 2,
    h = (tau*omega*q^2 - r + g) / 2,

whose own moments must reproduce the macroscopic pair: q = E[x xi] and
r = E[x phi(x)]. Reducing those moment integrals to Gaussian half-line
integrals turns the self-consistency into two closed-form equations in
(q, r) built from the scaled complementary error function

    f(z) = (2/pi) exp(z^2) Integral_z^inf exp(-u^2) du = erfcx(z)/sqrt(pi)

evaluated at z_pm = (beta +- tau*omega*xi*q) / (2 sqrt(g h)).

(q, r) = (0, tau^2/2) always solves the system; its density is a
signal-independent Laplace law with rate 2*beta/tau^2 (uninformative,
h = 0 there, handled in closed form). Above a critical SNR a second,
informative solution with q != 0 appears; ``sweep_omega`` locates that
transition. A damped fixed-point iteration with multi-start
initialization separates the branches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace

import numpy as np
from scipy.integrate import quad
from scipy.special import erfcx as _erfcx

from .errors import ConfigError, NonNormalizableError
from .nonlinearity import SoftThreshold, beta_of
from .priors import Prior

SQRT_PI = math.sqrt(math.pi)
TWO_OVER_SQRT_PI = 2.0 / SQRT_PI
H_MIN = 1e-8
EPS_UNINFORMATIVE = 1e-6
EPS_TRANSITION = 1e-3


@dataclass(frozen=True)
class SteadyConfig:
    """Dynamics parameters the stationary analysis depends on."""

    tau: float
    omega: float
    threshold: SoftThreshold | None

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if self.omega < 0:
            raise ConfigError(f"omega must be >= 0, got {self.omega}")

    @property
    def beta(self) -> float:
        return beta_of(self.threshold)


def erfcx_scaled(x):
    """f(x) = (2/pi) e^{x^2} Integral_x^inf e^{-u^2} du, stable for large positive x.

    Never forms e^{x^2} and the tail integral separately, so f stays
    accurate out to x = 30 and far beyond; f(0) = 1/sqrt(pi) and
    x f(x) -> 1/pi as x -> inf.
    """
    return _erfcx(x) / SQRT_PI


def g_scale(q: float, cfg: SteadyConfig) -> float:
    """Diffusion scale g = tau^2 (1 + omega q^2) / 2."""
    return 0.5 * cfg.tau ** 2 * (1.0 + cfg.omega * q * q)


def h_curvature(q: float, r: float, cfg: SteadyConfig) -> float:
    """Quadratic-confinement coefficient h = (tau*omega*q^2 - r + g)/2."""
    return 0.5 * (cfg.tau * cfg.omega * q * q - r + g_scale(q, cfg))


def _scaled_pair(z_minus: float, z_plus: float) -> tuple[float, float, float]:
    """erfcx at (z_minus, z_plus) jointly rescaled by exp(-M).

    M is the largest z^2 among the negative arguments (0 if both are
    nonnegative), so both returned terms and every downstream ratio
    stay finite even where erfcx itself would overflow.
    """
    m = 0.0
    if z_minus < 0:
        m = z_minus * z_minus
    if z_plus < 0:
        m = max(m, z_plus * z_plus)

    def term(z):
        if z >= 0:
            return _erfcx(z) * math.exp(-m) if m < 700 else 0.0
        return 2.0 * math.exp(z * z - m) - (_erfcx(-z) * math.exp(-m) if m < 700 else 0.0)

    return m, term(z_minus), term(z_plus)


class SteadyDensity:
    """Stationary conditional density for one atom at macroscopic state (q, r).

    Callable as a pdf; normalization is computed in closed form from
    Gaussian half-line integrals. The h = 0, beta > 0 boundary (the
    uninformative solution) degenerates to an exact Laplace law with
    rate beta / g and is handled as such.
    """

    def __init__(self, xi: float, q: float, r: float, cfg: SteadyConfig):
        self.xi = float(xi)
        self.q = float(q)
        self.r = float(r)
        self.cfg = cfg
        self.g = g_scale(q, cfg)
        self.h = h_curvature(q, r, cfg)
        self.beta = cfg.beta
        self.tilt = cfg.tau * cfg.omega * q * xi

        if self.h > 0.0:
            self.is_laplace = False
            root = math.sqrt(self.g * self.h)
            z_minus = (self.beta - self.tilt) / (2.0 * root)
            z_plus = (self.beta + self.tilt) / (2.0 * root)
            m, t_minus, t_plus = _scaled_pair(z_minus, z_plus)
            # Z = sqrt(pi g / h)/2 * (erfcx(z-) + erfcx(z+))
            self.log_z = (
                0.5 * math.log(math.pi * self.g / self.h)
                - math.log(2.0)
                + m
                + math.log(t_minus + t_plus)
            )
        elif self.h > -1e-12 and self.beta > 0.0 and abs(self.q) <= 1e-12:
            self.is_laplace = True
            self.rate = self.beta / self.g
        else:
            raise NonNormalizableError(
                f"stationary density not normalizable: h={self.h:.3e} <= 0 "
                "away from the zero-overlap Laplace boundary"
            )

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_laplace:
            return np.log(self.rate / 2.0) - self.rate * np.abs(x)
        potential = (self.h * x * x + self.beta * np.abs(x) - self.tilt * x) / self.g
        return -potential - self.log_z

    def __call__(self, x):
        return np.exp(self.log_pdf(x))


def steady_density(xi: float, q: float, r: float, cfg: SteadyConfig) -> SteadyDensity:
    """Stationary conditional density of x given one atom value."""
    return SteadyDensity(xi, q, r, cfg)


def fixed_point_map(q: float, r: float, cfg: SteadyConfig, prior: Prior) -> tuple[float, float]:
    """One application of the self-consistency map (q, r) -> (q', r').

    Closed form via erfcx ratios: with s = sqrt(g/h),

        q' = s * E_xi[ xi * (z+ f(z+) - z- f(z-)) / (f(z+) + f(z-)) ]
        r' = beta * s * E_xi[ (2/pi - z+ f(z+) - z- f(z-)) / (f(z+) + f(z-)) ]

    computed with jointly rescaled erfcx terms so large |z| cannot
    overflow. Requires h(q, r) > 0.
    """
    if not prior.is_discrete:
        raise ConfigError("fixed-point map needs a discrete prior; discretize it first")
    g = g_scale(q, cfg)
    h = h_curvature(q, r, cfg)
    if h <= 0:
        raise NonNormalizableError(f"fixed-point map outside its domain: h={h:.3e} <= 0")
    beta = cfg.beta
    scale = math.sqrt(g / h)
    root = math.sqrt(g * h)
    q_new = 0.0
    r_new = 0.0
    for xi, w in zip(prior.atom_values, prior.atom_weights):
        tilt = cfg.tau * cfg.omega * xi * q
        z_minus = (beta - tilt) / (2.0 * root)
        z_plus = (beta + tilt) / (2.0 * root)
        m, t_minus, t_plus = _scaled_pair(z_minus, z_plus)
        den = t_minus + t_plus
        # ratios of f(z) = erfcx(z)/sqrt(pi); the sqrt(pi) cancels except
        # in the 2/pi constant, which becomes 2/sqrt(pi) in erfcx units
        mean_ratio = (z_plus * t_plus - z_minus * t_minus) / den
        abs_ratio = (TWO_OVER_SQRT_PI * (math.exp(-m) if m < 700 else 0.0)
                     - z_plus * t_plus - z_minus * t_minus) / den
        q_new += w * xi * scale * mean_ratio
        r_new += w * beta * scale * abs_ratio
    return q_new, r_new


def _unnormalized_logpdf(x, g, h, beta, tilt, shift):
    return -(h * x * x + beta * abs(x) - tilt * x) / g - shift


def fixed_point_map_quadrature(q: float, r: float, cfg: SteadyConfig, prior: Prior) -> tuple[float, float]:
    """Self-consistency map evaluated by adaptive quadrature of the density.

    Independent oracle for fixed_point_map: integrates the Boltzmann
    form directly (no erfcx anywhere) with the exponent shifted by its
    maximum for overflow safety.
    """
    if not prior.is_discrete:
        raise ConfigError("fixed-point map needs a discrete prior; discretize it first")
    g = g_scale(q, cfg)
    h = h_curvature(q, r, cfg)
    if h <= 0:
        raise NonNormalizableError(f"fixed-point map outside its domain: h={h:.3e} <= 0")
    beta = cfg.beta
    q_new = 0.0
    r_new = 0.0
    for xi, w in zip(prior.atom_values, prior.atom_weights):
        tilt = cfg.tau * cfg.omega * xi * q
        # exponent maxima sit at the zero-gradient points of each branch
        peaks = [0.0]
        right = (tilt - beta) / (2.0 * h)
        if right > 0:
            peaks.append(right)
        left = (tilt + beta) / (2.0 * h)
        if left < 0:
            peaks.append(left)
        shift = max(
            _unnormalized_logpdf(xp, g, h, beta, tilt, 0.0) for xp in peaks
        )

        def f0(x):
            return math.exp(_unnormalized_logpdf(x, g, h, beta, tilt, shift))

        breaks = sorted(set(peaks))
        segs = [(-np.inf, breaks[0])] + list(zip(breaks[:-1], breaks[1:])) + [(breaks[-1], np.inf)]

        def integrate(fn):
            total = 0.0
            for a, b in segs:
                val, _ = quad(fn, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
                total += val
            return total

        z = integrate(f0)
        mean = integrate(lambda x: x * f0(x)) / z
        mean_abs = integrate(lambda x: abs(x) * f0(x)) / z
        q_new += w * xi * mean
        r_new += w * beta * mean_abs
    return q_new, r_new


@dataclass
class FixedPoint:
    """Converged (or best-effort) solution of the self-consistency system."""

    q: float
    r: float
    residual: float
    branch: str
    converged: bool
    iterations: int


def _project_h(q: float, r: float, cfg: SteadyConfig) -> float:
    """Pull r back so that h(q, r) >= H_MIN."""
    r_cap = cfg.tau * cfg.omega * q * q + g_scale(q, cfg) - 2.0 * H_MIN
    return min(r, r_cap)


def default_r_init(q: float, cfg: SteadyConfig, prior: Prior | None = None) -> float:
    """An r start safely inside the h > 0 domain for a given q start.

    With a prior at hand the start is pulled onto the r-nullcline
    (damped r-only iterations at fixed q): near the transition the
    overlap collapses faster than r can equilibrate, so joint iterates
    launched far off the nullcline can escape the informative basin
    that the fixed-overlap map would retain.
    """
    r = 0.5 * g_scale(q, cfg)
    if prior is None:
        return r
    for _ in range(200):
        r = _project_h(q, r, cfg)
        _, r_new = fixed_point_map(q, r, cfg, prior)
        r = 0.5 * r + 0.5 * r_new
    return _project_h(q, r, cfg)


def solve_fixed_point(
    cfg: SteadyConfig,
    prior: Prior,
    init: tuple[float, float],
    damping: float = 0.5,
    tol: float = 1e-9,
    max_iter: int = 10000,
) -> FixedPoint:
    """Damped iteration (q, r) <- (1 - damping)(q, r) + damping * map(q, r).

    Iterates are projected back to h >= 1e-8 whenever they overshoot
    the domain boundary (the uninformative solution sits exactly on
    it). Stops at residual <= tol; otherwise returns the best iterate
    seen with converged=False.
    """
    if not 0.0 < damping <= 1.0:
        raise ConfigError(f"damping must lie in (0, 1], got {damping}")
    q, r = float(init[0]), float(init[1])
    r = _project_h(q, r, cfg)
    if h_curvature(q, r, cfg) <= 0:
        raise ConfigError(f"initial point (q={q}, r={r}) lies outside the h > 0 domain")

    best = (math.inf, q, r, 0)
    for iteration in range(1, max_iter + 1):
        q_new, r_new = fixed_point_map(q, r, cfg, prior)
        residual = max(abs(q_new - q), abs(r_new - r))
        if residual < best[0]:
            best = (residual, q, r, iteration)
        if residual <= tol:
            branch = "uninformative" if abs(q) <= EPS_UNINFORMATIVE else "informative"
            return FixedPoint(q=q, r=r, residual=residual, branch=branch,
                              converged=True, iterations=iteration)
        q = (1.0 - damping) * q + damping * q_new
        r = (1.0 - damping) * r + damping * r_new
        r = _project_h(q, r, cfg)

    residual, q, r, iteration = best
    branch = "uninformative" if abs(q) <= EPS_UNINFORMATIVE else "informative"
    return FixedPoint(q=q, r=r, residual=residual, branch=branch,
                      converged=False, iterations=max_iter)


@dataclass
class SweepPoint:
    """Fixed-point summary at one SNR value of a sweep."""

    omega: float
    q_star: float
    converged: bool
    branch: str
    distinct_q: tuple[float, ...]


@dataclass
class SweepResult:
    """Per-SNR fixed points and the detected transition location."""

    points: list
    omega_c: float | None


def sweep_omega(
    cfg: SteadyConfig,
    prior: Prior,
    omega_grid,
    starts: tuple[float, ...] = (0.2, 0.5, 0.9),
    damping: float = 0.5,
    tol: float = 1e-9,
    max_iter: int = 10000,
) -> SweepResult:
    """Largest-overlap fixed point at each SNR on an increasing grid.

    Each SNR is solved from several informative-side overlap starts;
    the largest converged |q| is reported (all distinct converged
    values are kept, since uniqueness is not assumed). The transition
    SNR is the smallest grid value whose converged overlap exceeds
    1e-3, with the grid spacing as its uncertainty.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    if np.any(np.diff(omega_grid) <= 0):
        raise ConfigError("omega_grid must be strictly increasing")
    points = []
    omega_c = None
    for omega in omega_grid:
        cfg_w = dc_replace(cfg, omega=float(omega))
        solutions = [
            solve_fixed_point(cfg_w, prior, (q0, default_r_init(q0, cfg_w, prior)),
                              damping=damping, tol=tol, max_iter=max_iter)
            for q0 in starts
        ]
        converged = [s for s in solutions if s.converged]
        if converged:
            top = max(converged, key=lambda s: abs(s.q))
            distinct = tuple(sorted(set(round(abs(s.q), 9) for s in converged)))
            point = SweepPoint(omega=float(omega), q_star=abs(top.q),
                               converged=True, branch=top.branch, distinct_q=distinct)
            if omega_c is None and point.q_star > EPS_TRANSITION:
                omega_c = float(omega)
        else:
            top = min(solutions, key=lambda s: s.residual)
            point = SweepPoint(omega=float(omega), q_star=abs(top.q),
                               converged=False, branch=top.branch, distinct_q=())
        points.append(point)
    return SweepResult(points=points, omega_c=omega_c)
