"""Sharded Monte Carlo mean estimation.

A run of N samples is split over `cfg.shards` shards (remainder to the
lowest shard indices) and each shard over chunks of `cfg.chunk_size`. Every
chunk draws from its own generator keyed by (seed, shard, chunk), so a
shard's stream does not depend on how many shards run beside it. Chunk
moments are merged with Chan's pairwise update, first within a shard and
then across shards in shard-index order.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, List, Optional

import numpy as np

from stiefel_xform.core.exceptions import DimensionError, NonFiniteSample
from stiefel_xform.core.logging import get_logger
from stiefel_xform.schemas.mc import MCConfig, MCEstimate
from stiefel_xform.services.manifold import RandomSource

logger = get_logger(__name__)

Sampler = Callable[[np.random.Generator, int], Any]
Integrand = Callable[[Any], np.ndarray]
Batch = Callable[[np.random.Generator, int], np.ndarray]
InnerMean = Callable[[Any, int, np.random.Generator], np.ndarray]

# inner evaluations per nested chunk, in units of cfg.chunk_size
NESTED_CHUNK_FACTOR = 16


@dataclass
class Moments:
    """Running count, mean and sum of squared deviations."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        if values.size == 0:
            return cls()
        mean = float(np.mean(values))
        return cls(count=int(values.size), mean=mean, m2=float(np.sum((values - mean) ** 2)))

    def merge(self, other: "Moments") -> "Moments":
        if other.count == 0:
            return Moments(self.count, self.mean, self.m2)
        if self.count == 0:
            return Moments(other.count, other.mean, other.m2)
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return Moments(count, mean, m2)

    @property
    def se(self) -> float:
        if self.count < 2:
            return 0.0
        return float(np.sqrt(max(self.m2, 0.0) / (self.count - 1) / self.count))


def shard_sizes(total: int, shards: int) -> List[int]:
    base, extra = divmod(total, shards)
    return [base + (1 if index < extra else 0) for index in range(shards)]


def _checked(values, size: int, offset: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (size,):
        raise DimensionError(f"integrand returned shape {values.shape}, expected ({size},)")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NonFiniteSample(sample_index=offset + int(bad[0]), value=float(values[bad[0]]))
    return values


def _run_shard(batch: Batch, source: RandomSource, shard: int, size: int, offset: int,
               chunk_size: int) -> Moments:
    moments = Moments()
    stream = source.shard(shard)
    for chunk, start in enumerate(range(0, size, chunk_size)):
        count = min(chunk_size, size - start)
        rng = stream.spawn(chunk).generator()
        values = _checked(batch(rng, count), count, offset + start)
        moments = moments.merge(Moments.of(values))
    logger.debug("Shard %d done: %d samples, mean %.6g", shard, moments.count, moments.mean)
    return moments


def _run(batch: Batch, total: int, cfg: MCConfig, source: RandomSource, chunk_size: int) -> Moments:
    sizes = shard_sizes(total, cfg.shards)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
    jobs = [(shard, size, int(offset)) for shard, (size, offset) in enumerate(zip(sizes, offsets))]

    def work(job):
        shard, size, offset = job
        return _run_shard(batch, source, shard, size, offset, chunk_size)

    if cfg.threads > 1 and cfg.shards > 1:
        with ThreadPoolExecutor(max_workers=min(cfg.threads, cfg.shards)) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(job) for job in jobs]

    merged = Moments()
    for result in results:
        merged = merged.merge(result)
    return merged


def estimate_batches(batch: Batch, cfg: MCConfig, source: Optional[RandomSource] = None,
                     samples: Optional[int] = None) -> MCEstimate:
    """Mean of `batch(rng, size)` values over `samples` (default cfg.samples) draws."""
    source = source or RandomSource(cfg.seed)
    total = cfg.samples if samples is None else samples
    moments = _run(batch, total, cfg, source, cfg.chunk_size)
    return MCEstimate(mean=moments.mean, se=moments.se, samples=moments.count, seed=cfg.seed)


def estimate(integrand: Integrand, sampler: Sampler, cfg: MCConfig,
             source: Optional[RandomSource] = None, samples: Optional[int] = None) -> MCEstimate:
    return estimate_batches(
        lambda rng, size: integrand(sampler(rng, size)),
        cfg,
        source=source,
        samples=samples,
    )


def nested(outer: Sampler, inner: InnerMean, cfg: MCConfig,
           source: Optional[RandomSource] = None, n_outer: Optional[int] = None,
           n_inner: Optional[int] = None) -> MCEstimate:
    """Outer mean of inner Monte Carlo means.

    `inner(points, n_inner, rng)` returns one inner mean per outer point. The
    standard error is the outer spread of those means, so it already carries
    the inner noise. Inner draws come from a generator separate from the
    outer one, keyed by the chunk of outer samples.
    """
    source = source or RandomSource(cfg.seed)
    n_outer = cfg.n_outer if n_outer is None else n_outer
    n_inner = cfg.n_inner if n_inner is None else n_inner
    chunk = max(1, cfg.chunk_size * NESTED_CHUNK_FACTOR // n_inner)

    def batch(rng: np.random.Generator, size: int) -> np.ndarray:
        points = outer(rng, size)
        # inner stream seeded from the outer chunk stream
        inner_rng = np.random.default_rng(rng.integers(0, 2 ** 63, size=4))
        return inner(points, n_inner, inner_rng)

    moments = _run(batch, n_outer, cfg, source, chunk)
    return MCEstimate(mean=moments.mean, se=moments.se, samples=moments.count, seed=cfg.seed)
