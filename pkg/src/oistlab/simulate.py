"""Online estimator on a spiked sample stream, with streaming metrics.

One update consumes one sample and never stores it:

    x_tilde = x + (tau / p) * y * (y . x)
    x'      = sqrt(p) * eta(x_tilde) / ||eta(x_tilde)||

With thresholding off this is the classical Oja recursion. Metrics
(overlap with the signal, conditional coordinate histograms, support
misclassification) are recorded at requested rescaled times t = k / p.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateStateError
from .nonlinearity import SoftThreshold, eta_map
from .priors import (
    Prior,
    SampleStreamConfig,
    SignalVector,
    draw_signal_with_rng,
    make_rng,
    next_sample,
)


@dataclass(frozen=True)
class AlgoConfig:
    """Step size, shrinkage choice and dimension of the online estimator."""

    tau: float
    threshold: SoftThreshold | None
    p: int

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if self.p < 2:
            raise ConfigError(f"dimension p must be >= 2, got {self.p}")


@dataclass
class EstimateState:
    """Current estimate x (norm sqrt(p) after every completed step) and step count."""

    x: np.ndarray
    k: int = 0


@dataclass
class AtomHistogram:
    """Normalized histogram of estimate coordinates on one signal atom.

    ``density`` is None when no coordinate sits on the atom (flagged
    empty rather than fabricated).
    """

    atom: float
    count: int
    density: np.ndarray | None


@dataclass
class TrajectoryRecord:
    """Metrics of a single replica along the rescaled-time grid."""

    replica_id: int
    seed: int
    times: np.ndarray
    q_values: np.ndarray
    misclass: np.ndarray
    histogram_times: np.ndarray
    histograms: list  # list over histogram_times of list[AtomHistogram]
    bin_edges: np.ndarray


def oist_step(state: EstimateState, y: np.ndarray, cfg: AlgoConfig) -> EstimateState:
    """One online update followed by renormalization to norm sqrt(p)."""
    p = cfg.p
    x = state.x
    x_tilde = x + (cfg.tau / p) * (y @ x) * y
    shrunk = eta_map(x_tilde, cfg.threshold, p)
    nrm = np.linalg.norm(shrunk)
    if nrm == 0.0:
        raise DegenerateStateError(
            f"estimate vanished after thresholding at step {state.k + 1}"
        )
    return EstimateState(x=shrunk * (math.sqrt(p) / nrm), k=state.k + 1)


def cosine_similarity(x: np.ndarray, xi: np.ndarray) -> float:
    """Normalized inner product of estimate and signal, clipped to [-1, 1]."""
    nx = np.linalg.norm(x)
    nxi = np.linalg.norm(xi)
    if nx == 0.0 or nxi == 0.0:
        raise ValueError("cosine similarity undefined for a zero vector")
    value = float(x @ xi) / (nx * nxi)
    return min(1.0, max(-1.0, value))


def joint_histogram(x: np.ndarray, signal: SignalVector, bin_edges: np.ndarray) -> list[AtomHistogram]:
    """Per-atom normalized histograms of the coordinates {x_i : xi_i = atom}.

    Each histogram integrates to 1 over the binned range; atoms without
    occupants come back flagged empty.
    """
    if signal.atoms is None:
        raise ConfigError("conditional histograms require a discrete-prior signal")
    bin_edges = np.asarray(bin_edges, dtype=float)
    if bin_edges.ndim != 1 or bin_edges.size < 2 or np.any(np.diff(bin_edges) <= 0):
        raise ConfigError("bin edges must be strictly increasing with >= 2 entries")
    widths = np.diff(bin_edges)
    out = []
    for atom in signal.atoms:
        vals = x[signal.xi == atom]
        counts, _ = np.histogram(vals, bins=bin_edges)
        total = int(counts.sum())
        if total == 0:
            out.append(AtomHistogram(atom=atom, count=0, density=None))
        else:
            out.append(AtomHistogram(atom=atom, count=total, density=counts / (total * widths)))
    return out


def misclassification_rate(x: np.ndarray, signal: SignalVector, theta: float) -> float:
    """Fraction of coordinates whose support call |x_i| > theta disagrees with xi_i != 0."""
    if theta <= 0:
        raise ValueError(f"support threshold theta must be > 0, got {theta}")
    est_support = np.abs(x) > theta
    true_support = signal.xi != 0.0
    return float(np.mean(est_support != true_support))


def _steps_for(times, p: int) -> np.ndarray:
    # epsilon guards against p*t landing just below an integer for decimal t
    return np.floor(np.asarray(times, dtype=float) * p + 1e-9).astype(np.int64)


def _run_replica(args):
    (prior, stream_cfg, algo_cfg, t_max, record_times, histogram_times,
     x0_mean, x0_var, bin_edges, theta, replica) = args
    p = algo_cfg.p
    rng = make_rng(stream_cfg.seed, replica)
    signal = draw_signal_with_rng(prior, p, rng)
    x = x0_mean + math.sqrt(x0_var) * rng.standard_normal(p)

    k_final = int(math.floor(t_max * p + 1e-9))
    record_steps = _steps_for(record_times, p)
    hist_steps = _steps_for(histogram_times, p)
    events = sorted(set(record_steps.tolist()) | set(hist_steps.tolist()) | {k_final})

    q_values = np.empty(len(record_times))
    misclass = np.empty(len(record_times))
    histograms = [None] * len(histogram_times)

    def record_at(k):
        for i in np.nonzero(record_steps == k)[0]:
            q_values[i] = cosine_similarity(x, signal.xi)
            misclass[i] = misclassification_rate(x, signal, theta)
        for i in np.nonzero(hist_steps == k)[0]:
            histograms[i] = joint_histogram(x, signal, bin_edges)

    state = EstimateState(x=x, k=0)
    record_at(0)
    try:
        for k_target in events:
            if k_target == 0:
                continue
            while state.k < k_target:
                y = next_sample(signal, stream_cfg.omega, rng)
                state = oist_step(state, y, algo_cfg)
            x = state.x
            record_at(k_target)
    except DegenerateStateError as exc:
        raise DegenerateStateError(f"replica {replica}: {exc}") from exc

    return TrajectoryRecord(
        replica_id=replica,
        seed=stream_cfg.seed,
        times=np.asarray(record_times, dtype=float),
        q_values=q_values,
        misclass=misclass,
        histogram_times=np.asarray(histogram_times, dtype=float),
        histograms=histograms,
        bin_edges=np.asarray(bin_edges, dtype=float),
    )


def default_bin_edges(rho: float, n_bins: int = 101, lo: float = -2.0, hi: float | None = None) -> np.ndarray:
    """Uniform bin edges covering both conditional densities of the default prior."""
    if hi is None:
        hi = 2.0 + 1.0 / math.sqrt(rho)
    return np.linspace(lo, hi, n_bins + 1)


def default_theta(rho: float) -> float:
    """Support threshold at the midpoint between the default prior's atoms."""
    return 0.5 / math.sqrt(rho)


def run_trajectory(
    prior: Prior,
    stream_cfg: SampleStreamConfig,
    algo_cfg: AlgoConfig,
    t_max: float,
    record_times,
    replicas: int,
    x0_spec: tuple[float, float] = (1.0 / math.sqrt(2.0), 0.5),
    histogram_times=None,
    bin_edges: np.ndarray | None = None,
    theta: float | None = None,
    n_workers: int = 1,
) -> list[TrajectoryRecord]:
    """Run independent replicas of the online estimator and record metrics.

    Each replica draws a fresh signal and a fresh i.i.d. initial
    estimate x0 ~ N(mean, var) from its own (seed, replica) stream,
    then takes floor(p * t_max) updates. Metrics are recorded at the
    requested rescaled times (step k = floor(p * t)); histograms only
    at histogram_times (defaults to record_times). Replicas are
    deterministic functions of (seed, replica) and may run in parallel.
    """
    if t_max < 0:
        raise ConfigError(f"t_max must be >= 0, got {t_max}")
    if replicas < 1:
        raise ConfigError(f"replicas must be >= 1, got {replicas}")
    if stream_cfg.p != algo_cfg.p:
        raise ConfigError("stream and algorithm dimensions differ")
    record_times = np.asarray(record_times, dtype=float)
    if record_times.size == 0:
        raise ConfigError("record_times must not be empty")
    if np.any(record_times < 0) or np.any(record_times > t_max):
        raise ConfigError("record_times must lie in [0, t_max]")
    if histogram_times is None:
        histogram_times = record_times
    histogram_times = np.asarray(histogram_times, dtype=float)
    if histogram_times.size and (
        np.any(histogram_times < 0) or np.any(histogram_times > t_max)
    ):
        raise ConfigError("histogram_times must lie in [0, t_max]")
    if bin_edges is None:
        bin_edges = default_bin_edges(prior.rho)
    if theta is None:
        theta = default_theta(prior.rho)

    x0_mean, x0_var = float(x0_spec[0]), float(x0_spec[1])
    if x0_var <= 0:
        raise ConfigError(f"x0 variance must be > 0, got {x0_var}")
    if prior.is_discrete and x0_mean * prior.mean == 0.0:
        warnings.warn(
            "configured x0 law gives zero expected initial overlap; the "
            "deterministic limit requires a nonzero starting overlap",
            stacklevel=2,
        )

    jobs = [
        (prior, stream_cfg, algo_cfg, t_max, record_times, histogram_times,
         x0_mean, x0_var, bin_edges, theta, replica)
        for replica in range(replicas)
    ]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(_run_replica, jobs))
    return [_run_replica(job) for job in jobs]
