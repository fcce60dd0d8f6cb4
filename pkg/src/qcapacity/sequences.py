"""Achievable-rate sequence logic on finite prefixes.

Block sizes are Python integers, so superexponential sequences such as
N_mu = 2^(mu^2) are handled exactly. All limit statements are verdicts over
a stated trailing window of a finite prefix, never claims about the tail.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

from .errors import ValidationError

GRID = 20
_TOL = 1e-12


# ---------------------------------------------------------------------------
# Error functions
# ---------------------------------------------------------------------------


class DeltaFunction:
    """Error function Delta(n, m) >= 0 with declared structural properties.

    ``monotone`` means Delta(n+1, m) <= Delta(n, m) <= Delta(n, m+1);
    ``subadditive`` means Delta(n1+n2, m1+m2) <= Delta(n1, m1) + Delta(n2, m2).
    Declared properties are checked on a ``grid x grid`` box at construction.
    """

    def __init__(self, evaluator: Callable[[int, int], float], monotone: bool = True,
                 subadditive: bool = False, grid: int = GRID, name: str = "delta"):
        self._eval = lru_cache(maxsize=None)(evaluator)
        self.monotone = monotone
        self.subadditive = subadditive
        self.name = name
        self.grid = grid
        problems = self.grid_violations(grid)
        if problems:
            raise ValidationError(f"{name}: declared property fails at {problems[0]}")

    def __call__(self, n: int, m: int) -> float:
        val = self._eval(int(n), int(m))
        if val < 0:
            raise ValidationError(f"{self.name}({n}, {m}) = {val} is negative")
        return val

    def grid_violations(self, grid: int = GRID) -> list[tuple]:
        bad = []
        if self.monotone:
            for n in range(1, grid + 1):
                for m in range(1, grid + 1):
                    if self(n + 1, m) > self(n, m) + _TOL:
                        bad.append(("mono_n", n, m))
                    if self(n, m) > self(n, m + 1) + _TOL:
                        bad.append(("mono_m", n, m))
        if self.subadditive:
            for n1 in range(1, grid):
                for n2 in range(1, grid - n1 + 1):
                    for m1 in range(1, grid):
                        for m2 in range(1, grid - m1 + 1):
                            if self(n1 + n2, m1 + m2) > self(n1, m1) + self(n2, m2) + _TOL:
                                bad.append(("sub", n1, n2, m1, m2))
        return bad


def ideal_delta(d: int = 2) -> DeltaFunction:
    """Delta(n, m) = 0 if d^m <= d^n, else 1 - d^n/d^m: the noiseless lower bound for id_d."""
    if d < 2:
        raise ValidationError("local dimension must be at least 2")

    def ev(n: int, m: int) -> float:
        return 0.0 if m <= n else 1.0 - float(d) ** (n - m)

    return DeltaFunction(ev, monotone=True, subadditive=True, name=f"ideal_delta_{d}")


# ---------------------------------------------------------------------------
# Sequences
# ---------------------------------------------------------------------------


def generate_sequence(spec: dict) -> list[int]:
    """Prefix N_1, ..., N_L from ``{"rule", "params", "prefix_len"}``.

    Rules: ``poly`` floor(coeff mu^power), ``exp`` floor(coeff base^mu),
    ``superexp`` base^(mu^power), ``explicit`` the listed values.
    """
    try:
        rule = spec["rule"]
        params = spec.get("params", {}) or {}
    except (KeyError, TypeError) as exc:
        raise ValidationError("sequence spec needs a 'rule'") from exc
    if rule == "explicit":
        vals = params.get("values") if isinstance(params, dict) else params
        if not isinstance(vals, list) or not all(isinstance(v, int) for v in vals):
            raise ValidationError("explicit rule needs an integer list 'values'")
        return [int(v) for v in vals]
    length = spec.get("prefix_len")
    if not isinstance(length, int) or length < 1:
        raise ValidationError("prefix_len must be a positive integer")
    coeff = Fraction(str(params.get("coeff", 1)))
    if rule == "poly":
        power = int(params.get("power", 1))
        return [math.floor(coeff * mu**power) for mu in range(1, length + 1)]
    if rule == "exp":
        base = int(params.get("base", 2))
        return [math.floor(coeff * base**mu) for mu in range(1, length + 1)]
    if rule == "superexp":
        base, power = int(params.get("base", 2)), int(params.get("power", 2))
        return [base ** (mu**power) for mu in range(1, length + 1)]
    raise ValidationError(f"unknown sequence rule {rule!r}")


@dataclass(frozen=True)
class RatePair:
    """Finite prefixes of (n_nu) and (m_nu), indexed from 1."""

    n_seq: tuple
    m_seq: tuple
    rule: str = "explicit"

    def __init__(self, n_seq: Sequence[int], m_seq: Sequence[int], rule: str = "explicit"):
        n_seq, m_seq = tuple(int(x) for x in n_seq), tuple(int(x) for x in m_seq)
        if len(n_seq) != len(m_seq) or not n_seq:
            raise ValidationError("rate pair prefixes must be non-empty and of equal length")
        if any(x < 1 for x in n_seq) or any(x < 0 for x in m_seq):
            raise ValidationError("block sizes must be positive and message sizes non-negative")
        object.__setattr__(self, "n_seq", n_seq)
        object.__setattr__(self, "m_seq", m_seq)
        object.__setattr__(self, "rule", rule)

    def __len__(self) -> int:
        return len(self.n_seq)

    def rates(self) -> list[float]:
        return [_ratio(m, n) for n, m in zip(self.n_seq, self.m_seq)]


def _ratio(a: int, b: int) -> float:
    """a/b for possibly huge integers."""
    return float(Fraction(a, b))


def _log2(x: int) -> float:
    return math.log2(x)


@dataclass(frozen=True)
class GrowthVerdict:
    subexponential: bool
    superexponential: bool
    log2_ratios: tuple
    window: int
    tolerance: float

    def __bool__(self) -> bool:
        return self.subexponential


def is_subexponential(n_seq: Sequence[int], tolerance: float = 0.05, window: int = 10) -> GrowthVerdict:
    """Finite-prefix verdict on N_{mu+1}/N_mu -> 1 over the last ``window`` ratios.

    Subexponential: every ratio in the window lies within 1 + tolerance.
    Superexponential: the ratios increase strictly and the last exceeds 1/tolerance.
    """
    if not 0 < tolerance < 1:
        raise ValidationError("tolerance must lie in (0, 1)")
    if window < 2 or len(n_seq) < window + 1:
        raise ValidationError(f"need at least window + 1 = {window + 1} terms and window >= 2")
    if any(x < 1 for x in n_seq):
        raise ValidationError("sequence terms must be positive")
    tail = list(n_seq)[-(window + 1):]
    lr = tuple(_log2(b) - _log2(a) for a, b in zip(tail, tail[1:]))
    sub = all(abs(x) <= math.log2(1 + tolerance) for x in lr)
    sup = all(b > a for a, b in zip(lr, lr[1:])) and lr[-1] > math.log2(1 / tolerance)
    return GrowthVerdict(sub, sup, lr, window, tolerance)


@dataclass(frozen=True)
class IndexResult:
    mu: int
    vacuous: bool
    beyond_prefix: bool


def index_map(n: int, n_seq: Sequence[int]) -> IndexResult:
    """mu(n) = max{alpha : N_alpha <= n}, so that N_mu <= n < N_{mu+1}.

    ``vacuous`` is set (and mu = 0) when n < N_1; ``beyond_prefix`` when the
    upper neighbour N_{mu+1} is not in the stored prefix.
    """
    seq = list(n_seq)
    if any(b < a for a, b in zip(seq, seq[1:])):
        raise ValidationError("block-size sequence must be nondecreasing")
    mu = bisect.bisect_right(seq, n)
    return IndexResult(mu, mu == 0, mu == len(seq))


# ---------------------------------------------------------------------------
# Rate extension
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TranscriptEntry:
    nu: int
    n: int
    m: int
    mu: int
    certified: bool
    delta_bound: float
    chain: tuple
    chain_ok: bool
    failing_factor: str | None
    factors: tuple


@dataclass(frozen=True)
class ExtensionTranscript:
    entries: tuple
    limsup_target: float
    liminf_given: float
    r_minus: float
    r_plus: float
    burn_in: int | None
    window: int
    given_growth: GrowthVerdict | None
    failures: tuple = field(default=())

    @property
    def passed(self) -> bool:
        return self.burn_in is not None and not self.failures

    def summary(self) -> dict:
        return {
            "entries": len(self.entries),
            "certified": sum(e.certified for e in self.entries),
            "burn_in": self.burn_in,
            "failures": len(self.failures),
            "limsup_target_rate": self.limsup_target,
            "liminf_given_rate": self.liminf_given,
            "r_minus": self.r_minus,
            "r_plus": self.r_plus,
            "window": self.window,
            "passed": self.passed,
        }


_FACTOR_NAMES = ("m/n", "n/N_{mu+1}", "N_{mu+1}/N_mu", "N_mu/M_mu")


def extend_coding(delta: DeltaFunction, given: RatePair, target: RatePair, window: int | None = None) -> ExtensionTranscript:
    """Transfer vanishing error from (N_mu, M_mu) to (n_nu, m_nu) through monotonicity.

    For every nu, mu = index_map(n_nu, N); the entry is certified when
    N_mu <= n_nu and m_nu <= M_mu, and then the chain
    Delta(n, m) <= Delta(n, M_mu) <= Delta(N_mu, M_mu) is re-evaluated. The
    rates are estimated over the trailing ``window`` (default: last tenth,
    at least 10 terms). With R_-, R_+ at the thirds of the rate gap, the
    burn-in nu_0 is the first index from which m/n <= R_-,
    N_{mu+1}/N_mu <= R_+/R_- and M_mu/N_mu >= R_+ hold throughout the prefix.
    """
    if not delta.monotone:
        raise ValidationError("rate extension needs a monotone error function")
    w = window or max(10, len(target) // 10)
    if len(target) < w or len(given) < min(w, len(given)):
        raise ValidationError("prefix shorter than the window")
    wg = min(w, len(given))
    limsup = max(target.rates()[-w:])
    liminf = min(given.rates()[-wg:])
    if not limsup < liminf:
        raise ValidationError(
            f"rate gap violated: lim sup m/n = {limsup:.6g} is not below lim inf M/N = {liminf:.6g}"
        )
    r_minus = limsup + (liminf - limsup) / 3
    r_plus = limsup + 2 * (liminf - limsup) / 3
    big_n, big_m = given.n_seq, given.m_seq
    growth = is_subexponential(big_n) if len(big_n) >= 11 else None
    entries = []
    good = []
    for nu, (n, m) in enumerate(zip(target.n_seq, target.m_seq), start=1):
        idx = index_map(n, big_n)
        mu = idx.mu
        if mu == 0 or mu >= len(big_n):
            entries.append(TranscriptEntry(nu, n, m, mu, False, math.inf, (), True,
                                           "index outside prefix", ()))
            good.append(False)
            continue
        nm, mm, nn = big_n[mu - 1], big_m[mu - 1], big_n[mu]
        factors = (Fraction(m, n), Fraction(n, nn), Fraction(nn, nm), Fraction(nm, mm) if mm else math.inf)
        certified = nm <= n and m <= mm
        bound = delta(nm, mm)
        chain: tuple = ()
        chain_ok = True
        failing = None
        if certified:
            chain = (delta(n, m), delta(n, mm), bound)
            chain_ok = chain[0] <= chain[1] <= chain[2]
        else:
            limits = (r_minus, 1, r_plus / r_minus, 1 / r_plus)
            failing = next((name for name, f, lim in zip(_FACTOR_NAMES, factors, limits) if f > lim), "product")
        cond = (float(factors[0]) <= r_minus and float(factors[2]) <= r_plus / r_minus
                and mm >= r_plus * nm)
        good.append(cond)
        entries.append(TranscriptEntry(nu, n, m, mu, certified, bound, chain, chain_ok, failing,
                                       tuple(float(f) for f in factors)))
    burn_in = None
    for i in range(len(good) - 1, -1, -1):
        if not good[i]:
            break
        burn_in = i + 1
    failures = tuple(
        e for e in entries
        if not e.chain_ok or (burn_in is not None and e.nu >= burn_in and not e.certified)
    )
    return ExtensionTranscript(tuple(entries), limsup, liminf, r_minus, r_plus, burn_in, w, growth, failures)


# ---------------------------------------------------------------------------
# Counterexample
# ---------------------------------------------------------------------------


def counterexample_delta(n_seq: Sequence[int], eps_seq: Sequence[float], grid: int = GRID) -> DeltaFunction:
    """Delta(n, m) = min { sum_k eps_{mu_k} : m <= sum_k N_{mu_k} <= n } over the stored blocks.

    Branch and bound from the largest usable block down; the lower bound
    eps_mu * ceil(r / N_mu) for a remaining requirement r prunes. Infeasible
    pairs give ``inf``.
    """
    blocks = [int(x) for x in n_seq]
    eps = [float(e) for e in eps_seq]
    if len(blocks) != len(eps) or not blocks:
        raise ValidationError("need one epsilon per block size")
    if any(b <= a for a, b in zip(blocks, blocks[1:])) or blocks[0] < 1:
        raise ValidationError("block sizes must be positive and strictly increasing")
    if any(e < 0 for e in eps) or any(b > a for a, b in zip(eps, eps[1:])):
        raise ValidationError("epsilons must be non-negative and nonincreasing")

    @lru_cache(maxsize=None)
    def best(i: int, lo: int, hi: int) -> float:
        if hi < 0:
            return math.inf
        if lo <= 0:
            return 0.0
        if i < 0:
            return math.inf
        size, e = blocks[i], eps[i]
        result = math.inf
        c = min(hi // size, -(-lo // size))
        while c >= 0:
            rest_lo = lo - c * size
            lower = c * e + (eps[i - 1] * -(-rest_lo // blocks[i - 1]) if i > 0 and rest_lo > 0 else 0.0)
            if i == 0 and rest_lo > 0:
                lower = math.inf
            if lower >= result:
                break
            result = min(result, c * e + best(i - 1, rest_lo, hi - c * size))
            c -= 1
        return result

    def ev(n: int, m: int) -> float:
        if m <= 0:
            return 0.0
        top = bisect.bisect_right(blocks, n) - 1
        return best(top, m, n)

    return DeltaFunction(ev, monotone=True, subadditive=True, grid=grid, name="counterexample_delta")


@dataclass(frozen=True)
class CounterexampleRow:
    mu: int
    n: int
    m: int
    delta: float
    lower_bound: float
    log2_rate: float
    sporadic_delta: float


def demo_sequences(mu_max: int):
    """N_mu = 2^(mu^2) and eps_mu = sqrt(N_mu / N_{mu+1}) / 2 for mu = 1..mu_max+1."""
    big_n = [2 ** (mu * mu) for mu in range(1, mu_max + 2)]
    eps = [2.0 ** (-(2 * mu + 1) / 2) / 2 for mu in range(1, mu_max + 2)]
    return big_n, eps


def counterexample_demo(mu_values: Sequence[int]) -> list[CounterexampleRow]:
    """Delta along n_mu = N_{mu+1} - 1, m_mu = ceil(sqrt(N_mu N_{mu+1})) and along (N_mu, N_mu)."""
    mu_max = max(mu_values)
    big_n, eps = demo_sequences(mu_max)
    delta = counterexample_delta(big_n, eps)
    rows = []
    for mu in mu_values:
        if mu < 1:
            raise ValidationError("mu starts at 1")
        nm, nn = big_n[mu - 1], big_n[mu]
        n = nn - 1
        prod = nm * nn
        m = math.isqrt(prod - 1) + 1
        lb = eps[mu - 1] * (m // nm)
        rows.append(CounterexampleRow(mu, n, m, delta(n, m), lb, _log2(m) - _log2(n), delta(nm, nm)))
    return rows
