"""Time-and-size batching: flush at `max_batch` commitments or after
`max_wait_s`, whichever comes first.

The analytic model treats per-event waits as uniform over the fill-and-flush
window (mean w/2, p95 at 0.95*w where w = min(max_wait_s, max_batch/rate))
and inclusion after flush as a deterministic constant, matching the chain's
next-block inclusion behaviour. The event-driven simulation reproduces the
same quantities empirically for deterministic or Poisson arrivals.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import DomainError
from .rng import substream
from .stats import percentile_nearest_rank

DETERMINISTIC = "deterministic"
POISSON = "poisson"

# Arrivals landing exactly on a flush deadline ride the flushing batch; the
# epsilon absorbs float error in deadline comparisons (real gaps are >= 1/rate).
_TIE_EPS = 1e-9


@dataclass(frozen=True)
class BatchPolicy:
    max_batch: int = 512
    max_wait_s: float = 1.0

    def __post_init__(self):
        if self.max_batch < 1:
            raise DomainError(f"max_batch must be >= 1, got {self.max_batch}")
        if self.max_wait_s <= 0:
            raise DomainError(f"max_wait_s must be > 0, got {self.max_wait_s}")


@dataclass(frozen=True)
class ArrivalModel:
    rate: float
    kind: str = DETERMINISTIC

    def __post_init__(self):
        if self.rate <= 0:
            raise DomainError(f"arrival rate must be > 0, got {self.rate}")
        if self.kind not in (DETERMINISTIC, POISSON):
            raise DomainError(f"arrival kind must be deterministic or poisson, got {self.kind!r}")

    def times_until(self, duration_s: float, rng: random.Random) -> list[float]:
        """Arrival instants in [0, duration_s)."""
        times: list[float] = []
        if self.kind == DETERMINISTIC:
            count = int(self.rate * duration_s)
            times = [k / self.rate for k in range(count)]
            while times and times[-1] >= duration_s:
                times.pop()
        else:
            t = 0.0
            while True:
                t += rng.expovariate(self.rate)
                if t >= duration_s:
                    break
                times.append(t)
        return times


@dataclass(frozen=True)
class DelaySummary:
    """Analytic waiting/delay profile for one arrival rate."""

    rate: float
    max_wait: float
    mean_wait: float
    wait_p95: float
    mean_delay: float
    delay_p95: float


def max_wait(rate: float, policy: BatchPolicy) -> float:
    """Worst-case batching wait: the window fills in max_batch/rate seconds
    or times out at max_wait_s."""
    if rate <= 0:
        raise DomainError(f"arrival rate must be > 0, got {rate}")
    return min(policy.max_wait_s, policy.max_batch / rate)


def analytic_delay(rate: float, policy: BatchPolicy, inclusion_s: float = 2.0) -> DelaySummary:
    """Closed-form wait and anchoring-delay profile.

    Waits are uniform within the flush window; total delay adds the
    deterministic inclusion constant.
    """
    if inclusion_s < 0:
        raise DomainError(f"inclusion_s must be >= 0, got {inclusion_s}")
    w = max_wait(rate, policy)
    return DelaySummary(
        rate=rate,
        max_wait=w,
        mean_wait=w / 2.0,
        wait_p95=0.95 * w,
        mean_delay=w / 2.0 + inclusion_s,
        delay_p95=0.95 * w + inclusion_s,
    )


@dataclass(frozen=True)
class BatchingRun:
    """Empirical statistics from one simulated batching run."""

    rate: float
    kind: str
    duration_s: float
    n_arrivals: int
    n_events: int
    n_flushes: int
    mean_wait: Optional[float]
    wait_p95: Optional[float]
    mean_delay: Optional[float]
    delay_p95: Optional[float]
    mean_batch_size: Optional[float]
    size_triggered: int
    time_triggered: int


def simulate(arrivals: ArrivalModel, policy: BatchPolicy, duration_s: float,
             flush_sink: Optional[Callable[[int, float], None]] = None,
             inclusion_s: float = 2.0, seed: int = 0) -> BatchingRun:
    """Drive events through the batcher and measure waits and delays.

    A window opens at its first event's arrival and flushes when it holds
    max_batch events or when max_wait_s elapses; an arrival landing exactly
    on the deadline joins the flushing batch. Per-event wait is flush minus
    arrival; delay adds the deterministic inclusion constant. The batch
    still open when arrivals run out is dropped from the statistics so the
    numbers estimate steady state, not horizon truncation.
    """
    if duration_s <= 0:
        raise DomainError(f"duration must be > 0, got {duration_s}")
    if inclusion_s < 0:
        raise DomainError(f"inclusion_s must be >= 0, got {inclusion_s}")
    rng = substream(seed, "batching", arrivals.kind, arrivals.rate)
    times = arrivals.times_until(duration_s, rng)

    waits: list[float] = []
    batch_sizes: list[int] = []
    size_triggered = 0
    time_triggered = 0
    i = 0
    n = len(times)
    while i < n:
        deadline = times[i] + policy.max_wait_s
        j = i + 1
        while j < n and (j - i) < policy.max_batch and times[j] <= deadline + _TIE_EPS:
            j += 1
        count = j - i
        if count == policy.max_batch:
            flush_time = times[j - 1]
            size_triggered += 1
        elif j < n:
            flush_time = deadline
            time_triggered += 1
        else:
            break  # arrivals exhausted with the window still open: drop it
        batch_sizes.append(count)
        waits.extend(flush_time - times[k] for k in range(i, j))
        if flush_sink is not None:
            flush_sink(count, flush_time)
        i = j

    if not waits:
        return BatchingRun(arrivals.rate, arrivals.kind, duration_s, n, 0, 0,
                           None, None, None, None, None, 0, 0)
    delays = [w + inclusion_s for w in waits]
    return BatchingRun(
        rate=arrivals.rate,
        kind=arrivals.kind,
        duration_s=duration_s,
        n_arrivals=n,
        n_events=len(waits),
        n_flushes=len(batch_sizes),
        mean_wait=sum(waits) / len(waits),
        wait_p95=percentile_nearest_rank(waits, 0.95),
        mean_delay=sum(delays) / len(delays),
        delay_p95=percentile_nearest_rank(delays, 0.95),
        mean_batch_size=sum(batch_sizes) / len(batch_sizes),
        size_triggered=size_triggered,
        time_triggered=time_triggered,
    )
