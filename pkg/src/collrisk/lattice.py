"""Exact discrete-distribution engines on a money lattice.

Two linear recursions drive everything exact in this library: the
aggregate-loss recursion for compound Poisson masses and the
compound-geometric recursion behind the ruin-probability curve. Both act
on :class:`LatticeDistribution`, probabilities on the grid
``{0, d, 2d, ...}`` with the upper-tail sequence maintained alongside.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParseError, UnderflowWarning

logger = logging.getLogger(__name__)

_MASS_TOL = 1e-12
# work values above this trigger a rescale in the scaled recursion
_RESCALE_AT = 1e280
_RESCALE_LOG = 600.0


def _tails_from_masses(masses: np.ndarray) -> np.ndarray:
    """Upper tails G_m = P(> m*d) by the sequential update G_m = G_{m-1} - g_m."""
    tails = np.empty_like(masses)
    running = 1.0
    for m, g in enumerate(masses):
        running -= g
        tails[m] = running
    return tails


@dataclass(frozen=True)
class LatticeDistribution:
    """Probability masses on ``{0, d, 2d, ...}`` with cached upper tails.

    ``masses[n]`` is the probability of the point ``n*span``. ``tails[n]``
    is ``P(> n*span)``; the last tail equals the truncation remainder, the
    probability mass beyond the stored support.
    """

    span: float
    masses: np.ndarray
    tails: np.ndarray = field(init=False)

    def __post_init__(self):
        if not self.span > 0.0:
            raise DomainError(f"span must be positive, got {self.span}")
        masses = np.asarray(self.masses, dtype=float)
        if masses.ndim != 1 or masses.size == 0:
            raise DomainError("masses must be a nonempty 1-D array")
        if masses.min() < -1e-15:
            raise DomainError(f"negative mass {masses.min()} on the lattice")
        masses = np.maximum(masses, 0.0)
        total = float(masses.sum())
        if total > 1.0 + _MASS_TOL:
            raise DomainError(f"masses sum to {total} > 1")
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)
        tails = _tails_from_masses(masses)
        tails.setflags(write=False)
        object.__setattr__(self, "tails", tails)

    @property
    def size(self) -> int:
        return int(self.masses.size)

    @property
    def remainder(self) -> float:
        """Probability mass beyond the stored support."""
        return float(self.tails[-1])

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.masses.size) * self.span

    def tail(self, m: int) -> float:
        """P(> m*span). For ``m`` beyond the stored support this is the remainder."""
        if m < 0:
            return 1.0
        return float(self.tails[min(m, self.masses.size - 1)])

    def survival_from(self, n: int) -> float:
        """P(>= n*span)."""
        return self.tail(n - 1)

    def mean(self) -> float:
        """Mean of the stored part (the remainder carries no location)."""
        return float(np.dot(np.arange(self.masses.size), self.masses)) * self.span

    def variance(self) -> float:
        mu = self.mean()
        second = float(np.dot(np.arange(self.masses.size) ** 2, self.masses)) * self.span**2
        return second - mu * mu

    # -- serialization: two columns (point, mass), full decimal precision --

    def to_text(self) -> str:
        lines = [f"# lattice span={float(self.span)!r} remainder={self.remainder!r}"]
        for n, g in enumerate(self.masses):
            lines.append(f"{float(n * self.span)!r} {float(g)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LatticeDistribution":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise ParseError("lattice text must start with a '# lattice span=...' header")
        header = lines[0]
        try:
            fields = dict(
                tok.split("=", 1) for tok in header.lstrip("#").split() if "=" in tok
            )
            span = float(fields["span"])
            remainder = float(fields["remainder"])
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad lattice header: {header}") from exc
        masses = []
        for i, ln in enumerate(lines[1:]):
            parts = ln.split()
            if len(parts) != 2:
                raise ParseError(f"expected two columns, got: {ln}")
            point, mass = float(parts[0]), float(parts[1])
            index = int(round(point / span))
            if index != i or abs(point - index * span) > 1e-9 * max(1.0, abs(point)):
                raise ParseError(f"point {point} is not lattice index {i} of span {span}")
            masses.append(mass)
        dist = cls(span, np.asarray(masses))
        if abs(dist.remainder - remainder) > 1e-9:
            raise ParseError(
                f"header remainder {remainder} inconsistent with masses "
                f"(recomputed {dist.remainder})"
            )
        return dist


def _checked_severity(severity: LatticeDistribution, what: str) -> np.ndarray:
    """Validate and renormalize lattice severity masses (no mass at zero)."""
    f = severity.masses
    if f[0] != 0.0:
        raise DomainError(f"{what} must place no mass at zero, got f0={f[0]}")
    total = float(f.sum())
    if total > 1.0 + _MASS_TOL:
        raise DomainError(f"{what} masses sum to {total} > 1")
    if abs(total - 1.0) > 1e-15:
        if abs(total - 1.0) > 1e-9:
            logger.warning(
                "%s masses sum to %.17g; renormalizing (check the discretization)",
                what,
                total,
            )
        f = f / total
    return f


def panjer(rate: float, severity: LatticeDistribution, n_out: int) -> LatticeDistribution:
    """Compound Poisson masses on the lattice by the aggregate recursion.

    ``rate`` is the expected claim count over the period (lambda*t).
    ``severity`` holds the claim-size masses f_1..f_N on the same span with
    f_0 = 0. Returns masses g_0..g_{n_out}, seeded with g_0 = exp(-rate)
    and advanced by n*g_n = rate * sum_x x*f_x*g_{n-x}.

    For rate beyond ~700 the seed underflows; the recursion then runs in a
    scaled representation (mantissas sharing one exponent) and an
    UnderflowWarning is issued.
    """
    if not rate > 0.0:
        raise DomainError(f"rate must be positive, got {rate}")
    if n_out < 1:
        raise DomainError(f"n_out must be >= 1, got {n_out}")
    f = _checked_severity(severity, "severity")
    if rate > 700.0:
        warnings.warn(
            f"seed exp(-{rate:g}) underflows; computing in scaled form",
            UnderflowWarning,
            stacklevel=2,
        )

    n_sev = f.size - 1
    xf = np.arange(f.size) * f
    work = np.zeros(n_out + 1)
    work[0] = 1.0
    log_scale = -rate
    for n in range(1, n_out + 1):
        m = min(n, n_sev)
        acc = float(np.dot(xf[1 : m + 1], work[n - 1 :: -1][:m]))
        work[n] = (rate / n) * acc
        if work[n] > _RESCALE_AT:
            work[: n + 1] *= math.exp(-_RESCALE_LOG)
            log_scale += _RESCALE_LOG

    if log_scale > -700.0:
        masses = work * math.exp(log_scale)
    else:
        with np.errstate(divide="ignore"):
            masses = np.where(work > 0.0, np.exp(np.log(np.maximum(work, 1e-320)) + log_scale), 0.0)
    return LatticeDistribution(severity.span, masses)


@dataclass(frozen=True)
class CompoundGeometric:
    """Result of the compound-geometric recursion.

    ``dist`` carries the masses l_0..l_{n_out}; ``upper`` is the running
    tail sequence r_n = sum_{m >= n} l_m for n = 0..n_out+1, computed by
    r_0 = 1, r_n = r_{n-1} - l_{n-1}.
    """

    dist: LatticeDistribution
    upper: np.ndarray


def compound_geometric(
    r: float, ladder: LatticeDistribution, n_out: int
) -> CompoundGeometric:
    """Masses of a geometric number of ladder-height summands.

    Solves the renewal equation l = (1-r)*delta + r*(k (*) l) on the
    lattice: l_0 = 1-r and l_n = r*(k_1 l_{n-1} + ... + k_n l_0).
    """
    if not 0.0 < r < 1.0:
        raise DomainError(f"upcrossing probability must lie in (0, 1), got {r}")
    if n_out < 1:
        raise DomainError(f"n_out must be >= 1, got {n_out}")
    k = _checked_severity(ladder, "ladder-height")
    n_lad = k.size - 1

    l = np.zeros(n_out + 1)
    l[0] = 1.0 - r
    for n in range(1, n_out + 1):
        m = min(n, n_lad)
        l[n] = r * float(np.dot(k[1 : m + 1], l[n - 1 :: -1][:m]))

    upper = np.empty(n_out + 2)
    upper[0] = 1.0
    for n in range(1, n_out + 2):
        upper[n] = upper[n - 1] - l[n - 1]
    upper = np.maximum(upper, 0.0)
    upper.setflags(write=False)
    return CompoundGeometric(LatticeDistribution(ladder.span, l), upper)
