"""Monte Carlo strongest-BS selection over K-tier Poisson networks.

Each tier is truncated to its ``n_max`` nearest base stations, generated
exactly from cumulative unit-exponential sums (``lambda*pi*r_n**2`` is a sum
of ``n`` i.i.d. Exp(1) variables).  Randomness is counter-based: every
(trial, tier, purpose) triple owns a Philox stream keyed by the master
seed, so a trial's outcome depends only on ``(seed, trial index)``, never
on execution order or worker count.  Distances and gains use separate
streams, which makes the first ``n`` candidates of a tier identical for any
``n_max >= n``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .association import NetworkConfig
from .fading import FadingModel
from .specfun import DomainError, regularized_lower_gamma, log_gamma

__all__ = [
    "DEFAULT_N_MAX",
    "SimulationError",
    "EffectiveFadingSample",
    "SimulationResult",
    "TrialStream",
    "trial_stream",
    "sample_ordered_distances",
    "nth_distance_pdf",
    "nth_distance_cdf",
    "run_trial",
    "run_campaign",
]

DEFAULT_N_MAX = 500

_DISTANCE = 0
_GAIN = 1


class SimulationError(RuntimeError):
    def __init__(self, message: str, completed_trials: int, requested_trials: int):
        super().__init__(f"{message} after {completed_trials}/{requested_trials} trials")
        self.completed_trials = completed_trials
        self.requested_trials = requested_trials


def _master_key(seed: int) -> np.ndarray:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise DomainError(f"seed must be a nonnegative integer, got {seed!r}")
    return np.random.SeedSequence(int(seed)).generate_state(2, dtype=np.uint64)


@dataclass(frozen=True)
class TrialStream:
    """Randomness for one trial: independent Philox streams per tier and purpose."""

    key: tuple[int, int]
    trial: int

    def generator(self, tier: int, purpose: int) -> np.random.Generator:
        # Words 0-1 are left for the stream's own increments.
        counter = np.array([0, 0, 2 * tier + purpose, self.trial], dtype=np.uint64)
        bitgen = np.random.Philox(key=np.array(self.key, dtype=np.uint64), counter=counter)
        return np.random.Generator(bitgen)

    def distances(self, tier: int) -> np.random.Generator:
        return self.generator(tier, _DISTANCE)

    def gains(self, tier: int) -> np.random.Generator:
        return self.generator(tier, _GAIN)


def trial_stream(seed: int, trial: int) -> TrialStream:
    if trial < 0:
        raise DomainError("trial index must be >= 0")
    key = _master_key(seed)
    return TrialStream((int(key[0]), int(key[1])), int(trial))


def sample_ordered_distances(density: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Distances from the origin to the ``count`` nearest points of a PPP."""
    if not density > 0:
        raise DomainError(f"density must be > 0, got {density!r}")
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count!r}")
    areas = np.cumsum(rng.standard_exponential(count))
    return np.sqrt(areas / (density * math.pi))


def nth_distance_pdf(density: float, n: int, r):
    """Density of the n-th nearest point distance of a planar PPP.

    ``2 (lambda pi)**n r**(2n-1) exp(-lambda pi r**2) / Gamma(n)``; the
    exponents carry the order index ``n``.
    """
    r = np.asarray(r, dtype=float)
    lp = density * math.pi
    with np.errstate(divide="ignore"):
        log_pdf = math.log(2.0) + n * math.log(lp) + (2 * n - 1) * np.log(r) - lp * r * r - log_gamma(n)
    out = np.where(r > 0, np.exp(log_pdf), 0.0)
    return float(out) if out.ndim == 0 else out


def nth_distance_cdf(density: float, n: int, r):
    r = np.asarray(r, dtype=float)
    out = np.asarray(regularized_lower_gamma(n, density * math.pi * r * r))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EffectiveFadingSample:
    h_star: float
    serving_tier: int
    serving_order: int
    serving_distance: float


def _trial(config: NetworkConfig, model: FadingModel, n_max: int, stream: TrialStream):
    alpha = config.alpha
    log_power = np.empty(config.K * n_max)
    gains = np.empty(config.K * n_max)
    dists = np.empty(config.K * n_max)
    for i, tier in enumerate(config.tiers):
        sl = slice(i * n_max, (i + 1) * n_max)
        r = sample_ordered_distances(tier.density, n_max, stream.distances(i))
        h = np.asarray(model.sample(stream.gains(i), n_max), dtype=float)
        with np.errstate(divide="ignore"):
            log_power[sl] = math.log(tier.power) + np.log(h) - alpha * np.log(r)
        gains[sl] = h
        dists[sl] = r
    # argmax takes the first maximum: lowest tier, then nearest BS, on ties.
    best = int(np.argmax(log_power))
    tier_idx, order_idx = divmod(best, n_max)
    sample = EffectiveFadingSample(float(gains[best]), tier_idx + 1, order_idx + 1, float(dists[best]))
    return sample, gains


def run_trial(config: NetworkConfig, model: FadingModel, n_max: int, stream: TrialStream) -> EffectiveFadingSample:
    """One network realization; returns the strongest candidate's metadata."""
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    return _trial(config, model, n_max, stream)[0]


@dataclass(frozen=True)
class SimulationResult:
    """Column-oriented outcome of a campaign; row ``i`` is trial ``i``."""

    config: NetworkConfig
    model: FadingModel
    seed: int
    trials: int
    n_max: int
    h_star: np.ndarray
    serving_tier: np.ndarray
    serving_order: np.ndarray
    serving_distance: np.ndarray
    gains: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.trials

    def __getitem__(self, i: int) -> EffectiveFadingSample:
        return EffectiveFadingSample(float(self.h_star[i]), int(self.serving_tier[i]),
                                     int(self.serving_order[i]), float(self.serving_distance[i]))

    @property
    def samples(self) -> list[EffectiveFadingSample]:
        return [self[i] for i in range(self.trials)]

    def tier_fractions(self) -> np.ndarray:
        counts = np.bincount(self.serving_tier, minlength=self.config.K + 1)[1:]
        return counts / self.trials

    def order_counts(self, tier: int, n_max: int) -> np.ndarray:
        """Counts of serving order ``1..n_max`` among trials served by ``tier``."""
        orders = self.serving_order[self.serving_tier == tier]
        return np.bincount(orders, minlength=n_max + 1)[1:n_max + 1]


def _run_chunk(config, model, n_max, key, start, stop, record_gains):
    count = stop - start
    h_star = np.empty(count)
    tier = np.empty(count, dtype=np.int64)
    order = np.empty(count, dtype=np.int64)
    dist = np.empty(count)
    gains = np.empty((count, config.K * n_max)) if record_gains else None
    done = 0
    try:
        for j, trial in enumerate(range(start, stop)):
            sample, g = _trial(config, model, n_max, TrialStream(key, trial))
            h_star[j] = sample.h_star
            tier[j] = sample.serving_tier
            order[j] = sample.serving_order
            dist[j] = sample.serving_distance
            if record_gains:
                gains[j] = g
            done += 1
    except MemoryError as exc:
        raise SimulationError("out of memory", start + done, stop) from exc
    return h_star, tier, order, dist, gains


def run_campaign(
    config: NetworkConfig,
    model: FadingModel,
    trials: int,
    n_max: int = DEFAULT_N_MAX,
    seed: int = 0,
    workers: int = 1,
    record_gains: bool = False,
    chunk_size: int = 2048,
) -> SimulationResult:
    """Run ``trials`` independent realizations.

    The result is identical for any ``workers`` and ``chunk_size``.  With
    ``record_gains`` every drawn original gain is kept, shape
    ``(trials, K * n_max)``.
    """
    if isinstance(trials, bool) or not isinstance(trials, (int, np.integer)) or trials < 1:
        raise DomainError(f"trials must be an integer >= 1, got {trials!r}")
    if isinstance(n_max, bool) or not isinstance(n_max, (int, np.integer)) or n_max < 1:
        raise DomainError(f"n_max must be an integer >= 1, got {n_max!r}")
    if workers < 1:
        raise DomainError("workers must be >= 1")
    key_arr = _master_key(seed)
    key = (int(key_arr[0]), int(key_arr[1]))
    bounds = [(s, min(s + chunk_size, trials)) for s in range(0, trials, chunk_size)]
    args = [(config, model, n_max, key, s, e, record_gains) for s, e in bounds]

    try:
        if workers == 1 or len(bounds) == 1:
            parts = [_run_chunk(*a) for a in args]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_run_chunk, *zip(*args)))
    except MemoryError as exc:
        raise SimulationError("out of memory while assembling results", 0, trials) from exc

    return SimulationResult(
        config=config,
        model=model,
        seed=int(seed),
        trials=int(trials),
        n_max=int(n_max),
        h_star=np.concatenate([p[0] for p in parts]),
        serving_tier=np.concatenate([p[1] for p in parts]),
        serving_order=np.concatenate([p[2] for p in parts]),
        serving_distance=np.concatenate([p[3] for p in parts]),
        gains=np.concatenate([p[4] for p in parts]) if record_gains else None,
    )
