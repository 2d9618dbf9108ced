"""Stochastic oracle: path simulation of the compound Poisson surplus process.

Independent of every analytic routine in the library, this module samples
claim arrival paths and estimates tail probabilities, ruin frequencies and
ruin-time statistics with standard errors. Reproducibility is strict:
paths are generated in fixed-size chunks, each from its own counter-based
substream keyed by (seed, chunk index), and all reductions run in a fixed
pairwise order, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import BudgetError, DomainError, InsufficientRuinsError
from .ruin import RiskSystem, lundberg
from .severity import (
    Exponential,
    Gamma,
    Lattice,
    MixtureOfExponentials,
    PointMass,
    SeverityModel,
)

__all__ = [
    "SimulationPlan",
    "EstimateWithError",
    "SimulationResult",
    "RuinTimeStudy",
    "simulate",
    "ruin_time_samples",
    "severity_sampler",
    "estimates_csv",
    "ruin_times_text",
]

Sampler = Callable[[np.random.Generator, int], np.ndarray]


# ---------------------------------------------------------------------------
# Severity sampling (inversion / alias; no data-dependent rejection loops)
# ---------------------------------------------------------------------------


def _alias_table(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Walker alias table; construction order is deterministic."""
    k = p.size
    prob = np.zeros(k)
    alias = np.zeros(k, dtype=np.int64)
    scaled = list(p * k)
    small = [i for i in range(k) if scaled[i] < 1.0]
    large = [i for i in range(k) if scaled[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        (small if scaled[l] < 1.0 else large).append(l)
    for i in large:
        prob[i] = 1.0
    for i in small:
        prob[i] = 1.0
    return prob, alias


def severity_sampler(severity: SeverityModel) -> Sampler:
    """Vectorized sampler with a fixed draw schedule per event."""
    if isinstance(severity, Exponential):
        rate = severity.rate

        def sample(rng: np.random.Generator, n: int) -> np.ndarray:
            return -np.log1p(-rng.random(n)) / rate

    elif isinstance(severity, PointMass):
        location = severity.location

        def sample(rng: np.random.Generator, n: int) -> np.ndarray:
            return np.full(n, location)

    elif isinstance(severity, MixtureOfExponentials):
        cumw = np.cumsum(np.asarray(severity.weights))
        rates = np.asarray(severity.rates)

        def sample(rng: np.random.Generator, n: int) -> np.ndarray:
            comp = np.minimum(
                np.searchsorted(cumw, rng.random(n), side="right"), rates.size - 1
            )
            return -np.log1p(-rng.random(n)) / rates[comp]

    elif isinstance(severity, Gamma):
        shape, scale = severity.shape, severity.scale

        def sample(rng: np.random.Generator, n: int) -> np.ndarray:
            return special.gammaincinv(shape, rng.random(n)) * scale

    elif isinstance(severity, Lattice):
        prob, alias = _alias_table(np.asarray(severity.masses))
        span = severity.span
        k = prob.size

        def sample(rng: np.random.Generator, n: int) -> np.ndarray:
            v = rng.random(n) * k
            idx = v.astype(np.int64)
            frac = v - idx
            chosen = np.where(frac < prob[idx], idx, alias[idx])
            return (chosen + 1) * span

    else:
        raise DomainError(f"no sampler for severity {type(severity).__name__}")
    return sample


# ---------------------------------------------------------------------------
# Plans and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimulationPlan:
    """Everything needed to reproduce a simulation bit-for-bit.

    Estimators: ``tail_probes`` asks for P(S(t) >= t*x) per (t, x);
    ``ruin_levels`` for the frequency of ruin by the horizon per capital u;
    ``hitting_levels`` for passage of U to -u by the horizon;
    ``collect_ruin_times`` keeps the conditional ruin-time samples at one
    capital level, and ``conditional_probe`` additionally records
    E[S(t) | ruin] at the probe time t.
    """

    system: RiskSystem
    horizon: float
    n_paths: int
    seed: int
    tail_probes: tuple[tuple[float, float], ...] = ()
    ruin_levels: tuple[float, ...] = ()
    hitting_levels: tuple[float, ...] = ()
    collect_ruin_times: float | None = None
    conditional_probe: float | None = None
    count_probe: float | None = None
    workers: int = 1
    chunk_paths: int | None = None
    event_budget: float = 2e9

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError(f"need at least one path, got {self.n_paths}")
        if not self.horizon > 0.0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        if self.conditional_probe is not None and self.collect_ruin_times is None:
            raise DomainError("conditional probe needs collect_ruin_times")


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    std_error: float
    n_effective: int


@dataclass
class SimulationResult:
    seed: int
    n_paths: int
    horizon: float
    estimates: dict[str, EstimateWithError]
    ruin_times: np.ndarray | None
    diagnostics: dict[str, float]


def _frequency(hits: float, n: int) -> EstimateWithError:
    p = hits / n
    se = math.sqrt(max(p * (1.0 - p), 0.0) / max(n - 1, 1))
    return EstimateWithError(p, se, n)


# ---------------------------------------------------------------------------
# Chunked vectorized engine
# ---------------------------------------------------------------------------


@dataclass
class _ChunkOut:
    tail_hits: np.ndarray
    ruin_hits: np.ndarray
    hit_hits: np.ndarray
    ruin_times: np.ndarray | None
    cond_losses: np.ndarray | None
    count_sum: float
    count_sq_sum: float
    n_events: int


def _draw_chunk(
    rng: np.random.Generator,
    n_paths: int,
    lam: float,
    horizon: float,
    sampler: Sampler,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Counts, segment starts, sorted arrival times and claim sizes for one chunk.

    Arrival times use the exponential-spacings representation of uniform
    order statistics, so no sort is needed and the draw schedule is fixed:
    one Poisson count per path, one uniform per gap (inner and final), and
    the severity sampler's fixed schedule per event.
    """
    counts = rng.poisson(lam * horizon, n_paths)
    total = int(counts.sum())
    ends = np.cumsum(counts)
    starts = (ends - counts).astype(np.int64)
    gaps = -np.log1p(-rng.random(total))
    closing = -np.log1p(-rng.random(n_paths))
    cum = np.concatenate([[0.0], np.cumsum(gaps)])
    seg_total = cum[ends] - cum[starts]
    denom = seg_total + closing
    t_ev = horizon * (cum[1:] - np.repeat(cum[starts], counts)) / np.repeat(denom, counts)
    x_ev = sampler(rng, total)
    return counts, starts, t_ev, x_ev


def _segment_sum(values: np.ndarray, starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    out = np.zeros(counts.size)
    nz = np.flatnonzero(counts > 0)
    if nz.size:
        out[nz] = np.add.reduceat(values, starts[nz])
    return out


def _segment_min(values: np.ndarray, starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    out = np.full(counts.size, np.inf)
    nz = np.flatnonzero(counts > 0)
    if nz.size:
        out[nz] = np.minimum.reduceat(values, starts[nz])
    return out


def _first_ruin_times(
    u: float,
    t_ev: np.ndarray,
    cum_loss: np.ndarray,
    starts: np.ndarray,
    counts: np.ndarray,
    premium: float,
) -> np.ndarray:
    """First jump epoch with S - c*t > u per path (inf when none).

    Ruin can only happen at a jump, so checking the post-jump values is
    exact."""
    breach = cum_loss - premium * t_ev > u
    return _segment_min(np.where(breach, t_ev, np.inf), starts, counts)


def _first_hitting_times(
    u: float,
    t_ev: np.ndarray,
    cum_loss: np.ndarray,
    starts: np.ndarray,
    counts: np.ndarray,
    premium: float,
    horizon: float,
) -> np.ndarray:
    """First time U(t) = -u per path (inf when none within the horizon).

    The passage happens while drifting down between jumps; within each
    inter-jump segment the crossing time solves S - c*s = -u linearly.
    """
    ends = starts + counts
    nz = np.flatnonzero(counts > 0)
    t_next = np.empty_like(t_ev)
    if t_ev.size:
        t_next[:-1] = t_ev[1:]
    if nz.size:
        t_next[ends[nz] - 1] = horizon
    candidate = (cum_loss + u) / premium
    valid = (candidate > t_ev) & (candidate <= t_next)
    first = _segment_min(np.where(valid, candidate, np.inf), starts, counts)
    # the initial drift segment, before any jump
    first_event = np.full(counts.size, horizon)
    if nz.size:
        first_event[nz] = t_ev[starts[nz]]
    s0 = u / premium
    hit0 = s0 <= first_event
    return np.where(hit0 & (s0 < first), s0, first)


def _run_chunk(plan: SimulationPlan, sampler: Sampler, n_paths: int, chunk_id: int) -> _ChunkOut:
    sys = plan.system
    lam, c, horizon = sys.model.rate, sys.premium_rate, plan.horizon
    rng = np.random.Generator(np.random.Philox(key=[plan.seed & (2**64 - 1), chunk_id]))
    counts, starts, t_ev, x_ev = _draw_chunk(rng, n_paths, lam, horizon, sampler)
    cum_all = np.cumsum(x_ev)
    cum_loss = cum_all - np.repeat(
        np.concatenate([[0.0], cum_all])[starts], counts
    )

    tail_hits = np.zeros(len(plan.tail_probes))
    for i, (t, x) in enumerate(plan.tail_probes):
        loss_at_t = _segment_sum(np.where(t_ev <= t, x_ev, 0.0), starts, counts)
        tail_hits[i] = float(np.count_nonzero(loss_at_t >= t * x))

    ruin_hits = np.zeros(len(plan.ruin_levels))
    for i, u in enumerate(plan.ruin_levels):
        first = _first_ruin_times(u, t_ev, cum_loss, starts, counts, c)
        ruin_hits[i] = float(np.count_nonzero(np.isfinite(first)))

    hit_hits = np.zeros(len(plan.hitting_levels))
    for i, u in enumerate(plan.hitting_levels):
        first = _first_hitting_times(u, t_ev, cum_loss, starts, counts, c, horizon)
        hit_hits[i] = float(np.count_nonzero(np.isfinite(first)))

    ruin_times = None
    cond_losses = None
    if plan.collect_ruin_times is not None:
        first = _first_ruin_times(
            plan.collect_ruin_times, t_ev, cum_loss, starts, counts, c
        )
        ruined = np.isfinite(first)
        ruin_times = first[ruined]
        if plan.conditional_probe is not None:
            t = plan.conditional_probe
            loss_at_t = _segment_sum(np.where(t_ev <= t, x_ev, 0.0), starts, counts)
            cond_losses = loss_at_t[ruined]

    count_sum = count_sq = 0.0
    if plan.count_probe is not None:
        n_t = _segment_sum((t_ev <= plan.count_probe).astype(float), starts, counts)
        count_sum = float(n_t.sum())
        count_sq = float(np.dot(n_t, n_t))

    return _ChunkOut(
        tail_hits, ruin_hits, hit_hits, ruin_times, cond_losses,
        count_sum, count_sq, int(counts.sum()),
    )


def _resolve_chunk_paths(plan: SimulationPlan) -> int:
    if plan.chunk_paths is not None:
        return max(1, plan.chunk_paths)
    expected = plan.system.model.rate * plan.horizon
    return max(256, min(65536, int(2_000_000 / max(expected, 1.0))))


def _pairwise_sum(blocks: list[np.ndarray]) -> np.ndarray:
    while len(blocks) > 1:
        blocks = [
            blocks[i] + blocks[i + 1] if i + 1 < len(blocks) else blocks[i]
            for i in range(0, len(blocks), 2)
        ]
    return blocks[0]


def simulate(plan: SimulationPlan) -> SimulationResult:
    """Run the plan and return every requested estimator with its error.

    Expected event count lambda * horizon * n_paths is checked against the
    plan's budget before any work happens.
    """
    sys = plan.system
    expected_events = sys.model.rate * plan.horizon * plan.n_paths
    if expected_events > plan.event_budget:
        raise BudgetError(
            f"expected {expected_events:.3g} events exceed the budget {plan.event_budget:.3g}"
        )
    sampler = severity_sampler(sys.model.severity)
    chunk = _resolve_chunk_paths(plan)
    n_chunks = (plan.n_paths + chunk - 1) // chunk

    def job(cid: int) -> _ChunkOut:
        start = cid * chunk
        return _run_chunk(plan, sampler, min(chunk, plan.n_paths - start), cid)

    if plan.workers == 1 or n_chunks == 1:
        outs = [job(cid) for cid in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            outs = list(pool.map(job, range(n_chunks)))

    n = plan.n_paths
    estimates: dict[str, EstimateWithError] = {}
    tail_tot = _pairwise_sum([o.tail_hits for o in outs])
    for i, (t, x) in enumerate(plan.tail_probes):
        estimates[f"tail(t={t:g};x={x:g})"] = _frequency(float(tail_tot[i]), n)
    ruin_tot = _pairwise_sum([o.ruin_hits for o in outs])
    for i, u in enumerate(plan.ruin_levels):
        estimates[f"ruin(u={u:g})"] = _frequency(float(ruin_tot[i]), n)
    hit_tot = _pairwise_sum([o.hit_hits for o in outs])
    for i, u in enumerate(plan.hitting_levels):
        estimates[f"hitting(u={u:g})"] = _frequency(float(hit_tot[i]), n)

    ruin_times = None
    if plan.collect_ruin_times is not None:
        ruin_times = np.concatenate([o.ruin_times for o in outs])
        estimates[f"ruin(u={plan.collect_ruin_times:g})"] = _frequency(
            float(ruin_times.size), n
        )
        if plan.conditional_probe is not None:
            cond = np.concatenate([o.cond_losses for o in outs])
            if cond.size >= 2:
                mean = float(cond.mean())
                se = float(cond.std(ddof=1)) / math.sqrt(cond.size)
                estimates[
                    f"conditional_loss(t={plan.conditional_probe:g})"
                ] = EstimateWithError(mean, se, int(cond.size))

    diagnostics: dict[str, float] = {
        "events": float(sum(o.n_events for o in outs)),
        "chunk_paths": float(chunk),
    }
    if plan.count_probe is not None:
        tot = sum(o.count_sum for o in outs)
        sq = sum(o.count_sq_sum for o in outs)
        mean = tot / n
        var = sq / n - mean * mean
        diagnostics[f"count_mean(t={plan.count_probe:g})"] = mean
        diagnostics[f"count_var(t={plan.count_probe:g})"] = var * n / max(n - 1, 1)
    return SimulationResult(plan.seed, n, plan.horizon, estimates, ruin_times, diagnostics)


# ---------------------------------------------------------------------------
# Conditional ruin-time study
# ---------------------------------------------------------------------------


@dataclass
class RuinTimeStudy:
    """Conditional ruin-time samples with moments and their targets."""

    times: np.ndarray
    mean: float
    mean_se: float
    variance: float
    expected_mean: float
    expected_variance: float
    ruin_frequency: EstimateWithError
    pre_asymptotic: bool


def ruin_time_samples(plan: SimulationPlan) -> RuinTimeStudy:
    """Simulate and summarize T(u) among ruined paths.

    Requires positive loading and a horizon of at least five times the
    asymptotic mean ruin time so the conditional law is essentially fully
    observed. Small R*u is flagged: the normal regime has not set in yet.
    """
    if plan.collect_ruin_times is None:
        raise DomainError("plan must set collect_ruin_times")
    u = plan.collect_ruin_times
    plan.system._require_positive_loading("the ruin-time study")
    sol = lundberg(plan.system)
    if plan.horizon < 5.0 * u * sol.time_scale * (1.0 - 1e-12):
        raise DomainError(
            f"horizon {plan.horizon} is below five mean ruin times "
            f"{5.0 * u * sol.time_scale:g}"
        )
    result = simulate(plan)
    times = result.ruin_times
    if times.size < 100:
        raise InsufficientRuinsError(
            f"only {times.size} ruined paths; need at least 100 for conditional statistics"
        )
    mean = float(times.mean())
    var = float(times.var(ddof=1))
    return RuinTimeStudy(
        times=times,
        mean=mean,
        mean_se=math.sqrt(var / times.size),
        variance=var,
        expected_mean=u * sol.time_scale,
        expected_variance=u * sol.time_scale**3 * sol.sigma_sq,
        ruin_frequency=result.estimates[f"ruin(u={u:g})"],
        pre_asymptotic=sol.R * u < 2.0,
    )


# ---------------------------------------------------------------------------
# Text interfaces
# ---------------------------------------------------------------------------


def estimates_csv(result: SimulationResult) -> str:
    """CSV rows (estimator, value, std_error, n, seed), no header."""
    lines = []
    for name, est in result.estimates.items():
        lines.append(
            f"{name},{est.value:.12g},{est.std_error:.12g},{est.n_effective},{result.seed}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def ruin_times_text(times: np.ndarray) -> str:
    """Raw conditional ruin-time samples, one per line, full precision."""
    return "\n".join(repr(float(t)) for t in times) + ("\n" if times.size else "")
