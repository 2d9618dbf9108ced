"""Ruin-probability analytics for the net loss process U(t) = S(t) - c*t.

The positive-loading theory runs through the ladder decomposition: ruin
probability equals the tail of a compound-geometric sum of ladder heights,
evaluated exactly on a lattice, asymptotically through the adjustment
coefficient, or in closed form for mixtures of exponentials. Finite-time
questions are answered by the ballot-type conditioning (non-ruin at zero,
Seal's formula, hitting times below) and by entropy-based exponential
bounds with the ruin-time central limit theorem at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .cumulant import CompoundModel, entropy
from .errors import (
    DomainError,
    GridError,
    LoadingError,
    NoRootError,
    RootBracketError,
)
from .lattice import LatticeDistribution, compound_geometric, panjer
from .rootfind import safeguarded_newton
from .severity import (
    Exponential,
    Lattice,
    MixtureOfExponentials,
    PointMass,
    SeverityModel,
    discretize,
    discretize_ladder,
)

__all__ = [
    "RiskSystem",
    "LadderLaw",
    "RuinCurve",
    "LundbergSolution",
    "CramerLundberg",
    "LundbergSeries",
    "MixtureRuin",
    "SealDecomposition",
    "HittingBelow",
    "FiniteTimeBound",
    "RuinTimeNormal",
    "CompositeSplit",
    "RuinEstimate",
    "RuinReport",
    "ladder",
    "ruin_panjer",
    "lundberg",
    "cramer_lundberg_approx",
    "lundberg_series",
    "mixture_exact",
    "non_ruin_zero",
    "seal",
    "hitting_below",
    "finite_time_bound",
    "ruin_time_clt",
    "composite_split",
]


@dataclass(frozen=True)
class RiskSystem:
    """A compound Poisson loss model with premium rate and initial capital."""

    model: CompoundModel
    premium_rate: float
    initial_capital: float = 0.0

    def __post_init__(self):
        if not self.premium_rate > 0.0:
            raise DomainError(f"premium rate must be positive, got {self.premium_rate}")
        if self.initial_capital < 0.0:
            raise DomainError(
                f"initial capital must be nonnegative, got {self.initial_capital}"
            )

    @property
    def loading(self) -> float:
        """Safety loading c - lambda*mu; its sign gates which formulas apply."""
        return self.premium_rate - self.model.mean_rate

    def _require_positive_loading(self, what: str) -> None:
        if self.loading <= 0.0:
            raise LoadingError(
                f"{what} requires premium rate above the mean loss rate "
                f"({self.premium_rate} <= {self.model.mean_rate}); ruin is certain",
                ruin_probability=1.0,
            )


# ---------------------------------------------------------------------------
# Ladder decomposition and the exact recursion for r(u)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LadderLaw:
    """Upcrossing probability r = lambda*mu/c and the ladder-height law.

    Each new record of U(t) occurs with probability r and its height has
    density (1 - F(u)) / mu.
    """

    upcross_probability: float
    severity: SeverityModel

    def density(self, u: float) -> float:
        return self.severity.sf(u) / self.severity.mean

    def discretized(
        self, d: float, n_max: int | None = None, tail_tol: float = 1e-10
    ) -> LatticeDistribution:
        return discretize_ladder(self.severity, d, n_max=n_max, tail_tol=tail_tol)


def ladder(system: RiskSystem) -> LadderLaw:
    system._require_positive_loading("the ladder decomposition")
    return LadderLaw(system.model.mean_rate / system.premium_rate, system.model.severity)


@dataclass(frozen=True)
class RuinCurve:
    """Ruin probabilities on a money lattice.

    ``upper[n]`` is the probability that the all-time maximum of the
    discretized net loss reaches at least n lattice steps; ``value(u)``
    reads off P(max > u). At u = 0 this excludes the atom of the
    compound-geometric law at zero and equals r exactly.
    """

    span: float
    upper: np.ndarray

    def value(self, u: float) -> float:
        if u < 0.0:
            raise DomainError(f"capital must be nonnegative, got {u}")
        idx = int(math.floor(u / self.span + 1e-9)) + 1
        if idx >= self.upper.size:
            raise DomainError(f"capital {u} beyond the computed grid")
        return float(self.upper[idx])

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.upper.size - 1) * self.span

    @property
    def values(self) -> np.ndarray:
        return self.upper[1:]


def ruin_panjer(
    system: RiskSystem, d: float, u_max: float, tail_tol: float = 1e-10
) -> RuinCurve:
    """r(u) for u in [0, u_max] by the compound-geometric recursion.

    The ladder-height density is discretized on span ``d`` and fed to the
    lattice recursion with r = lambda*mu/c. The curve is nonincreasing,
    starts at r, and carries the right-endpoint discretization's upward
    bias (conservative for solvency purposes).
    """
    if not d > 0.0:
        raise DomainError(f"span must be positive, got {d}")
    if not u_max > 0.0:
        raise DomainError(f"u_max must be positive, got {u_max}")
    law = ladder(system)
    k = law.discretized(d, tail_tol=tail_tol)
    n_out = int(math.ceil(u_max / d - 1e-9)) + 1
    cg = compound_geometric(law.upcross_probability, k, n_out)
    return RuinCurve(d, cg.upper)


# ---------------------------------------------------------------------------
# Adjustment coefficient and asymptotics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LundbergSolution:
    """Nonzero root R of g(a) = c*a with the constants it determines.

    R is positive exactly when the loading is positive. ``constant`` is
    the asymptotic ratio C = (c - g'(0)) / (g'(R) - c), ``time_scale``
    the characteristic ruin-time scale 1/|g'(R) - c|, and ``sigma_sq``
    the tilted variance rate g''(R).
    """

    R: float
    constant: float
    time_scale: float
    sigma_sq: float
    positive_loading: bool


def lundberg(system: RiskSystem) -> LundbergSolution:
    model, c = system.model, system.premium_rate
    mean = model.mean_rate
    if abs(system.loading) <= 1e-14 * max(1.0, c):
        raise LoadingError(
            "premium rate equals the mean loss rate: the root equation is tangent at zero",
            ruin_probability=1.0,
        )
    nu = model.rate * model.severity.moment(2)
    mu3 = model.rate * model.severity.moment(3)

    def phi(a: float) -> float:
        if abs(a) < 1e-12:
            return mean - c + 0.5 * nu * a
        return model.g(a) / a - c

    def phi_prime(a: float) -> float:
        if abs(a) < 1e-5:
            return 0.5 * nu + mu3 * a / 3.0
        return (model.g_prime(a) - model.g(a) / a) / a

    positive = system.loading > 0.0
    if positive:
        # expand hi toward the abscissa; phi(0) < 0 and phi -> +inf for our variants
        lo, hi = 0.0, 0.0
        limit = model.xi_bar
        best = -math.inf
        found = False
        for _ in range(200):
            hi = hi * 2.0 if limit == math.inf and hi > 0 else (
                1.0 if limit == math.inf else limit - 0.5 * (limit - hi)
            )
            val = phi(hi)
            best = max(best, val)
            if val > 0.0:
                found = True
                break
        if not found:
            raise NoRootError(
                f"g(a)/a stays below the premium rate {c} on (0, {limit}); "
                f"supremum reached {best + c}",
                supremum=best + c,
            )
    else:
        hi = 0.0
        lo = -1.0
        while phi(lo) >= 0.0:
            lo *= 2.0
            if lo < -1e12:
                raise NoRootError("no negative root found", supremum=None)
    root = safeguarded_newton(phi, phi_prime, lo, hi, rtol=1e-15)
    residual = model.g(root) - c * root
    if abs(residual) > 1e-12 * max(1.0, abs(c * root)):
        raise NoRootError(f"root residual {residual} out of tolerance", supremum=None)
    gp = model.g_prime(root)
    constant = (c - mean) / (gp - c)
    time_scale = 1.0 / (gp - c) if positive else 1.0 / (c - gp)
    return LundbergSolution(root, constant, time_scale, model.g_second(root), positive)


@dataclass(frozen=True)
class CramerLundberg:
    """Asymptotic ruin estimate C*exp(-R*u) with the bound exp(-R*u)."""

    value: float
    bound: float
    solution: LundbergSolution


def cramer_lundberg_approx(system: RiskSystem, u: float) -> CramerLundberg:
    system._require_positive_loading("the asymptotic ruin approximation")
    sol = lundberg(system)
    bound = math.exp(-sol.R * u)
    value = sol.constant * bound
    if sol.constant <= 1.0:
        assert value <= bound * (1.0 + 1e-15)
    return CramerLundberg(value, bound, sol)


@dataclass(frozen=True)
class LundbergSeries:
    """Small-loading expansion of the adjustment coefficient and constant."""

    R1: float
    R2: float
    C1: float


def lundberg_series(mu1: float, mu2: float, mu3: float, rho: float) -> LundbergSeries:
    """Moment expansion for loading rho = 1/r - 1 close to zero.

    First order R1 = (2 mu1 / mu2) rho, second order subtracts
    (4/3)(mu3 mu1^2 / mu2^3) rho^2, and the constant to first order is
    C1 = (mu2/2 + mu3 R1 / 6) / (mu2/2 + mu3 R1 / 3).
    """
    if min(mu1, mu2, mu3) <= 0.0:
        raise DomainError("moments must be positive")
    if not rho > 0.0:
        raise DomainError(f"relative loading must be positive, got {rho}")
    r1 = 2.0 * mu1 / mu2 * rho
    r2 = r1 - (4.0 / 3.0) * (mu3 * mu1**2 / mu2**3) * rho**2
    c1 = (mu2 / 2.0 + mu3 * r1 / 6.0) / (mu2 / 2.0 + mu3 * r1 / 3.0)
    return LundbergSeries(r1, r2, c1)


@dataclass(frozen=True)
class MixtureRuin:
    """Exact ruin probability for a mixture-of-exponentials severity.

    r(u) = sum_i C_i exp(-R_i u) where the decay rates interlace the
    mixture rates: 0 < R_1 < b_1 < R_2 < ... < R_n < b_n.
    """

    decay_rates: tuple[float, ...]
    constants: tuple[float, ...]
    value: float
    dominant: float


def _as_mixture(severity: SeverityModel) -> MixtureOfExponentials:
    if isinstance(severity, MixtureOfExponentials):
        return severity
    if isinstance(severity, Exponential):
        return MixtureOfExponentials((1.0,), (severity.rate,))
    raise DomainError("exact evaluation needs an exponential or mixture severity")


def mixture_exact(system: RiskSystem, u: float) -> MixtureRuin:
    system._require_positive_loading("the exact mixture formula")
    if u < 0.0:
        raise DomainError(f"capital must be nonnegative, got {u}")
    mix = _as_mixture(system.model.severity)
    lam, c = system.model.rate, system.premium_rate
    w = np.asarray(mix.weights)
    b = np.asarray(mix.rates)
    r = system.model.mean_rate / c

    def psi(xi: float) -> float:
        return float(lam * np.sum(w / (b - xi))) - c

    def psi_prime(xi: float) -> float:
        return float(lam * np.sum(w / (b - xi) ** 2))

    def gp_extended(xi: float) -> float:
        # analytic continuation of g' beyond the abscissa (rational function)
        return float(lam * np.sum(w * b / (b - xi) ** 2))

    roots: list[float] = []
    edges = np.concatenate([[0.0], b])
    for i in range(b.size):
        left, right = float(edges[i]), float(edges[i + 1])
        width = right - left
        lo = left if i == 0 else _approach(psi, left, width, sign=-1)
        hi = _approach(psi, right, width, sign=+1)
        roots.append(safeguarded_newton(psi, psi_prime, lo, hi, rtol=1e-15))

    constants = [c * (1.0 - r) / (gp_extended(root) - c) for root in roots]
    terms = [ci * math.exp(-ri * u) for ri, ci in zip(roots, constants)]
    return MixtureRuin(tuple(roots), tuple(constants), sum(terms), terms[0])


def _approach(f, pole: float, width: float, sign: int) -> float:
    """Point near ``pole`` (from the left when sign > 0) where f has the
    sign expected between interlacing poles."""
    eps = 0.25 * width
    for _ in range(200):
        x = pole - eps if sign > 0 else pole + eps
        if x != pole and sign * f(x) > 0.0:
            return x
        eps *= 0.25
    raise RootBracketError(
        f"could not bracket a root near rate {pole}; rates may be nearly coincident"
    )


# ---------------------------------------------------------------------------
# Finite-time formulas on the lattice
# ---------------------------------------------------------------------------


def _non_ruin_value(masses: np.ndarray, d: float, ct: float) -> float:
    n_top = min(int(math.floor(ct / d + 1e-9)), masses.size - 1)
    n = np.arange(n_top + 1)
    weights = np.maximum(1.0 - n * d / ct, 0.0)
    return float(np.dot(weights, masses[: n_top + 1]))


def non_ruin_zero(system: RiskSystem, t: float, aggregate: LatticeDistribution) -> float:
    """Probability of no ruin by time t with zero initial capital.

    Evaluates sum over lattice points x = n*d <= c*t of (1 - x/(c*t))
    times the aggregate mass, the ballot-type conditioning applied to the
    exact aggregate distribution at horizon t.
    """
    if not t > 0.0:
        raise DomainError(f"horizon must be positive, got {t}")
    ct = system.premium_rate * t
    d = aggregate.span
    if ct / d < 10.0:
        raise GridError(f"span {d} does not resolve the premium income {ct} (need >= 10 cells)")
    if (aggregate.size - 1) * d < ct - 1e-9 * ct:
        raise GridError(
            f"aggregate support {(aggregate.size - 1) * d} does not cover c*t = {ct}"
        )
    return _non_ruin_value(aggregate.masses, d, ct)


def _lattice_severity(system: RiskSystem, d: float | None, tail_tol: float) -> tuple[LatticeDistribution, float]:
    """Severity as lattice masses (index 0 present, zero there) plus span."""
    sev = system.model.severity
    if isinstance(sev, Lattice):
        if d is not None and abs(d - sev.span) > 1e-12 * sev.span:
            raise GridError(f"severity lattice has span {sev.span}, requested {d}")
        return sev.as_distribution(), sev.span
    if isinstance(sev, PointMass):
        span = d if d is not None else sev.location
        return discretize(sev, span, tail_tol=tail_tol), span
    if d is None:
        raise GridError("continuous severity: a discretization span is required")
    return discretize(sev, d, tail_tol=tail_tol), d


@dataclass(frozen=True)
class SealDecomposition:
    """Finite-time ruin probability split into its two exact parts.

    ``beyond`` is the probability that the net loss at the horizon already
    exceeds the capital; ``crossings`` collects the last-downcrossing sum
    over lattice levels.
    """

    value: float
    beyond: float
    crossings: float
    span: float


def seal(
    system: RiskSystem, t: float, d: float | None = None, tail_tol: float = 1e-10
) -> SealDecomposition:
    """Ruin probability by time t for initial capital u (from the system).

    Uses the exact lattice form of the two-term decomposition: the tail of
    the aggregate at the horizon plus, for every lattice level m*d crossed
    by the premium line, the aggregate mass at the crossing time weighted
    by the non-ruin probability over the remaining time. For lattice
    severities the evaluation is exact; continuous severities are
    discretized first on span ``d``.
    """
    if not t > 0.0:
        raise DomainError(f"horizon must be positive, got {t}")
    u = system.initial_capital
    c = system.premium_rate
    lam = system.model.rate
    sev_dist, span = _lattice_severity(system, d, tail_tol)
    ct = c * t
    if ct / span < 10.0:
        raise GridError(
            f"span {span} does not resolve the premium income {ct} (need >= 10 cells)"
        )
    j = u / span
    if abs(j - round(j)) > 1e-9 * max(1.0, j):
        raise GridError(f"initial capital {u} is not a multiple of the span {span}")
    j = int(round(j))

    top = int(math.floor((u + ct) / span + 1e-9))
    agg_t = panjer(lam * t, sev_dist, max(top, 1))
    beyond = agg_t.tail(top)

    crossings = 0.0
    for m in range(j + 1, top + 1):
        s_m = (m * span - u) / c
        mass_at_crossing = float(panjer(lam * s_m, sev_dist, m).masses[m])
        remaining = t - s_m
        if remaining * c / span < 0.5:
            # less than one lattice step of premium left: only the empty path matters
            survive = math.exp(-lam * remaining) if remaining > 0 else 1.0
        else:
            n_rem = int(math.floor(c * remaining / span + 1e-9))
            agg_rem = panjer(lam * remaining, sev_dist, max(n_rem, 1))
            survive = _non_ruin_value(agg_rem.masses, span, c * remaining)
        crossings += mass_at_crossing * survive
    value = beyond + crossings
    if value > 1.0 + 1e-9:
        raise DomainError(f"finite-time ruin probability {value} exceeds one")
    return SealDecomposition(min(max(value, 0.0), 1.0), beyond, crossings, span)


@dataclass(frozen=True)
class HittingBelow:
    """Probability of the net loss reaching the level -u.

    ``value`` is the infinite-horizon probability (one under positive
    loading, exp(R*u) with the negative root otherwise); ``value_by_t``
    is the finite-horizon value when a horizon was requested.
    """

    value: float
    value_by_t: float | None
    root: float | None


def hitting_below(
    system: RiskSystem,
    u: float,
    t: float | None = None,
    d: float | None = None,
    tail_tol: float = 1e-10,
) -> HittingBelow:
    """Distribution of the first passage of U(t) to the level -u.

    The passage happens while drifting between jumps, so U equals -u
    exactly at that time. With positive loading the passage is certain;
    with negative loading the exact probability is exp(R*u) with the
    negative adjustment coefficient. A finite horizon is evaluated by the
    explicit crossing-time sum over lattice levels.
    """
    if not u > 0.0:
        raise DomainError(f"barrier depth must be positive, got {u}")
    loading = system.loading
    if abs(loading) <= 1e-14 * max(1.0, system.premium_rate):
        raise LoadingError("premium rate equals the mean loss rate", ruin_probability=1.0)
    if loading > 0.0:
        value, root = 1.0, None
    else:
        sol = lundberg(system)
        value, root = math.exp(sol.R * u), sol.R

    value_by_t = None
    if t is not None:
        if not t > u / system.premium_rate:
            value_by_t = 0.0  # the drift cannot reach -u before u/c
        else:
            value_by_t = _hitting_by(system, u, t, d, tail_tol)
    return HittingBelow(value, value_by_t, root)


def _hitting_by(
    system: RiskSystem, u: float, t: float, d: float | None, tail_tol: float
) -> float:
    c = system.premium_rate
    lam = system.model.rate
    sev_dist, span = _lattice_severity(system, d, tail_tol)
    top = int(math.floor((c * t - u) / span + 1e-9))
    total = math.exp(-lam * u / c)  # no-claim path reaches -u at time u/c
    for m in range(1, top + 1):
        s_m = (m * span + u) / c
        mass = float(panjer(lam * s_m, sev_dist, m).masses[m])
        total += (u / (c * s_m)) * mass
    return min(total, 1.0)


# ---------------------------------------------------------------------------
# Exponential bounds on the ruin time and its normal limit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteTimeBound:
    """Exponential bound exp(-u*H(t)) on early or late ruin.

    H(t) = t*h(c + 1/t) (positive loading) is strictly convex with minimum
    |R| at the time scale t_bar; ``side`` says whether the bound applies
    to ruin by u*t (early) or after u*t (late).
    """

    exponent: float
    bound: float
    side: str
    time_scale: float
    exponent_at_scale: float
    R: float


def finite_time_bound(system: RiskSystem, u: float, t: float) -> FiniteTimeBound:
    if not u > 0.0:
        raise DomainError(f"capital must be positive, got {u}")
    if not t > 0.0:
        raise DomainError(f"time ratio must be positive, got {t}")
    sol = lundberg(system)
    c = system.premium_rate
    if sol.positive_loading:
        level = c + 1.0 / t
        level_at_scale = c + 1.0 / sol.time_scale
    else:
        if t <= 1.0 / c:
            raise DomainError(
                f"time ratio {t} must exceed 1/c = {1.0 / c} on the negative branch"
            )
        level = c - 1.0 / t
        level_at_scale = c - 1.0 / sol.time_scale
    exponent = t * entropy(system.model, level).h
    side = "early" if t <= sol.time_scale else "late"
    at_scale = sol.time_scale * entropy(system.model, level_at_scale).h
    return FiniteTimeBound(
        exponent, math.exp(-u * exponent), side, sol.time_scale, at_scale, sol.R
    )


@dataclass(frozen=True)
class RuinTimeNormal:
    """Gaussian localization of the ruin time around u times the time scale."""

    probability: float
    mean: float
    variance: float
    solution: LundbergSolution


def ruin_time_clt(system: RiskSystem, u: float, x: float) -> RuinTimeNormal:
    """P(T(u) <= u*t_bar + sigma*t_bar^{3/2}*sqrt(u)*x) ~ C e^{-Ru} Phi(x).

    Also exposes the asymptotic conditional mean u*t_bar and variance
    u*t_bar^3*g''(R) of the ruin time.
    """
    system._require_positive_loading("the ruin-time normal approximation")
    if not u > 0.0:
        raise DomainError(f"capital must be positive, got {u}")
    sol = lundberg(system)
    prob = sol.constant * math.exp(-sol.R * u) * float(special.ndtr(x))
    return RuinTimeNormal(
        prob,
        u * sol.time_scale,
        u * sol.time_scale**3 * sol.sigma_sq,
        sol,
    )


# ---------------------------------------------------------------------------
# Composite systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompositeSplit:
    """Decentralized split of premium and capital across two subsystems.

    With a shared decay rate R and planning scale T, each unit gets
    c_i = g_i(R)/R and u_i = T*(g_i'(R) - c_i); the pooled system then has
    c = c_1 + c_2 and u = u_1 + u_2, and the pooled ruin estimate factors
    approximately into the units' estimates.
    """

    premium_split: tuple[float, float]
    capital_split: tuple[float, float]
    pooled_premium: float
    pooled_capital: float
    constants: tuple[float, float]
    pooled_constant: float
    product_value: float
    pooled_value: float
    constant_ratio: float


def composite_split(
    model_a: CompoundModel,
    model_b: CompoundModel,
    R: float,
    planning_scale: float,
) -> CompositeSplit:
    if not R > 0.0:
        raise DomainError(f"shared decay rate must be positive, got {R}")
    if R >= min(model_a.xi_bar, model_b.xi_bar):
        raise DomainError(
            f"shared rate {R} must lie below both abscissas "
            f"({model_a.xi_bar}, {model_b.xi_bar})"
        )
    if not planning_scale > 0.0:
        raise DomainError(f"planning scale must be positive, got {planning_scale}")

    def unit(model: CompoundModel) -> tuple[float, float, float]:
        c_i = model.g(R) / R
        u_i = planning_scale * (model.g_prime(R) - c_i)
        const = (c_i - model.mean_rate) / (model.g_prime(R) - c_i)
        return c_i, u_i, const

    c1, u1, k1 = unit(model_a)
    c2, u2, k2 = unit(model_b)

    pooled_g = model_a.g(R) + model_b.g(R)
    pooled_gp = model_a.g_prime(R) + model_b.g_prime(R)
    c = pooled_g / R
    u = planning_scale * (pooled_gp - c)
    if abs(c - (c1 + c2)) > 1e-10 * max(1.0, c):
        raise DomainError(f"premium split inconsistency: {c} vs {c1 + c2}")
    if abs(u - (u1 + u2)) > 1e-10 * max(1.0, abs(u)):
        raise DomainError(f"capital split inconsistency: {u} vs {u1 + u2}")
    pooled_const = (c - (model_a.mean_rate + model_b.mean_rate)) / (pooled_gp - c)
    product = k1 * math.exp(-R * u1) * k2 * math.exp(-R * u2)
    pooled_value = pooled_const * math.exp(-R * u)
    return CompositeSplit(
        (c1, c2),
        (u1, u2),
        c,
        u,
        (k1, k2),
        pooled_const,
        product,
        pooled_value,
        k1 * k2 / pooled_const,
    )


# ---------------------------------------------------------------------------
# Report container (serialized by the CLI)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuinEstimate:
    """One ruin-probability figure with its provenance."""

    method: str
    u: float
    t: float | None
    value: float
    error: float | None = None


@dataclass
class RuinReport:
    """Adjustment-coefficient constants plus per-method ruin estimates."""

    solution: LundbergSolution | None
    entries: list[RuinEstimate]
