"""Closed-form rates, concentration bounds and file-size thresholds.

Everything here is a pure function of the system parameters.  ``M`` may be
given as int, float or Fraction; ``c`` below always means ``ceil(N/M)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats
from scipy.special import gammaln, logsumexp

__all__ = [
    'peak_rate_asymptotic',
    'uncoded_rate',
    'mu_new',
    'mu_old',
    'expected_max_binomial',
    'expected_rate_semianalytic',
    'concentration_bound_new',
    'concentration_bound_old',
    'rate_floor_and_threshold',
    'filesize_lowerbound_cliquecover',
    'balls_in_bins_max_bound',
    'modified_delivery_target',
    'modified_delivery_condition',
    'grouped_modified_params',
    'deterministic_grouped_rate',
    'BoundReport',
    'bound_report',
]


def _ceil_ratio(N, M):
    return math.ceil(Fraction(N) / Fraction(M))


def _ratio(M, N):
    return float(Fraction(M) / Fraction(N))


def peak_rate_asymptotic(K, N, M, grouped=False):
    """Limiting peak rate ``K(1-q)/(Kq) * (1-(1-q)^K)`` with ``q = M/N``.

    With ``grouped=True``, ``q = 1/ceil(N/M)`` (the limit under grouped
    random placement).
    """
    if M <= 0:
        raise ValueError('peak rate is undefined at M=0; use uncoded_rate')
    if M > N or K < 1:
        raise ValueError(f'need 0 < M <= N and K >= 1, got K={K}, N={N}, M={M}')
    q = 1.0 / _ceil_ratio(N, M) if grouped else _ratio(M, N)
    return K * (1 - q) / (K * q) * (1 - (1 - q) ** K)


def uncoded_rate(K, N, M):
    """Rate with local cache hits only: ``K(1-M/N)``."""
    if not 0 <= M <= N:
        raise ValueError(f'need 0 <= M <= N, got M={M}, N={N}')
    return K * (1 - _ratio(M, N))


def mu_new(s, K, N, M):
    """Per-group success probability for subset size ``s`` under grouped placement:
    ``c * (1/c)^(s-1) * (1-1/c)^(K-s+1)``.

    For ``s >= 2`` this is the probability that a group holds a packet of
    the requested file cached exactly by a given ``(s-1)``-set.  For ``s = 1``
    it is the *expected number* of uncached packets per group and can
    exceed 1.
    """
    if not 1 <= s <= K:
        raise ValueError(f'need 1 <= s <= K, got s={s}, K={K}')
    if M < 1:
        raise ValueError('mu_new needs M >= 1')
    c = _ceil_ratio(N, M)
    return c * (1 / c) ** (s - 1) * (1 - 1 / c) ** (K - s + 1)


def mu_old(s, K, N, M):
    """``(M/N)^(s-1) * (1-M/N)^(K-s+1)``, the probability a packet is cached exactly by a given ``(s-1)``-set."""
    if not 1 <= s <= K:
        raise ValueError(f'need 1 <= s <= K, got s={s}, K={K}')
    if M < 1:
        raise ValueError('mu_old needs M >= 1')
    q = _ratio(M, N)
    return q ** (s - 1) * (1 - q) ** (K - s + 1)


def expected_max_binomial(n, p, s):
    """``E[max of s i.i.d. Binomial(n, p)]`` computed as ``sum_y 1 - CDF(y)^s``."""
    if s < 1:
        raise ValueError('need s >= 1')
    if p <= 0 or n == 0:
        return 0.0
    if p >= 1:
        return float(n)
    y = np.arange(n)
    log_cdf = stats.binom.logcdf(y, n, p)
    # 1 - CDF^s without cancellation when CDF is close to 1
    return float(np.sum(-np.expm1(s * log_cdf)))


def _log_comb(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def expected_rate_semianalytic(K, N, M, F_prime):
    """Expected greedy rate under grouped random placement with distinct demands.

    Sums, over subset sizes ``s``, ``C(K, s) * E[max_{k in S} |V_k|] / (F' c)``,
    where for ``s >= 2`` the ``|V_k|`` are i.i.d. ``Binomial(F', mu_new(s))``.
    For ``s = 1`` the maximum is over one variable, so its expectation is
    ``F' * mu_new(1)`` by linearity (the per-group count is not Bernoulli there).
    """
    if K > 30:
        raise ValueError(f'semi-analytic rate supports K <= 30, got K={K}')
    if M < 1:
        raise ValueError('needs M >= 1')
    c = _ceil_ratio(N, M)
    if c == 1:
        return 0.0
    log_terms = [math.log(K) + math.log(F_prime * mu_new(1, K, N, M))]
    for s in range(2, K + 1):
        e = expected_max_binomial(F_prime, mu_new(s, K, N, M), s)
        if e > 0:
            log_terms.append(_log_comb(K, s) + math.log(e))
    return float(np.exp(logsumexp(log_terms) - math.log(F_prime * c)))


def _concentration(eps, expected_rate, F, denom):
    return 2.0 * math.exp(-2.0 * eps ** 2 * expected_rate ** 2 * F / denom)


def concentration_bound_new(eps, expected_rate, F, K, N, M):
    """``2 exp(-2 eps^2 E[R]^2 F / (K (N/M)^2))`` for grouped random placement."""
    return _concentration(eps, expected_rate, F, K * float(Fraction(N) / Fraction(M)) ** 2)


def concentration_bound_old(eps, expected_rate, F, K):
    """``2 exp(-2 eps^2 E[R]^2 F / (K (K+1)^2))`` for the per-file random placement."""
    return _concentration(eps, expected_rate, F, K * (K + 1) ** 2)


def rate_floor_and_threshold(placement, K, N, M):
    """Rate floor ``K(1-M/N)/2`` and the file size below which greedy delivery stays above it.

    ``placement`` is ``'new'`` (``r = ceil(N/M)``, ``t = K/r``) or ``'old'``
    (``r = N/M``, ``t = KM/N``); the threshold is
    ``r/(2K) * (1-1/r) * exp(2t(1-t/K)(1-1/K))``.
    """
    if N <= K:
        raise ValueError(f'needs N > K, got N={N}, K={K}')
    if placement == 'new':
        r = _ceil_ratio(N, M)
        t = K / r
    elif placement == 'old':
        r = float(Fraction(N) / Fraction(M))
        t = K * _ratio(M, N)
    else:
        raise ValueError(f"placement must be 'new' or 'old', got {placement!r}")
    floor = K * (1 - _ratio(M, N)) / 2
    threshold = r / (2 * K) * (1 - 1 / r) * math.exp(2 * t * (1 - t / K) * (1 - 1 / K))
    return floor, threshold


def filesize_lowerbound_cliquecover(g, K, N, M):
    """Minimum ``F`` for any clique cover to reach mean rate ``K(1-M/N)/(4g/3)``:
    ``g/(2et) * (N/M)^(g-2)``, ``t = KM/N``.
    """
    if g <= 2:
        raise ValueError(f'needs g > 2, got g={g}')
    t = K * _ratio(M, N)
    return g / (2 * math.e * t) * float(Fraction(N) / Fraction(M)) ** (g - 2)


def balls_in_bins_max_bound(m, n):
    """High-probability bound on the fullest bin for ``m`` balls in ``n`` bins:
    ``r log n (1 + 2 sqrt(2)/r)`` with ``m = r n log n``.
    """
    if n == 1:
        return float(m)
    log_n = math.log(n)
    r = m / (n * log_n)
    return r * log_n * (1 + 2 * math.sqrt(2) / r)


def modified_delivery_target(K, g):
    """Mean-rate target ``(4/3) K/(g+1)`` for pull-down delivery."""
    return 4 / 3 * K / (g + 1)


def modified_delivery_condition(K, N, M, g):
    """Which hypotheses of the pull-down rate guarantee hold for ``(K, N, M, g)``.

    Returns a dict of booleans; ``'all'`` is their conjunction.  The
    evaluator reports rather than refuses.
    """
    c = _ceil_ratio(N, M)
    checks = {
        'g_range': 2 <= g <= K / (3 * c),
        'c_small': K > 1 and c <= K / (27 / 4 * math.log(K)),
        'N_gt_K': N > K,
        'exp_condition': (g + 1) * K ** 2 * c < math.exp(4 * K / (9 * c)),
    }
    checks['all'] = all(checks.values())
    return checks


def grouped_modified_params(g, N, M, const=1.0):
    """Group size ``K' = ceil(N/M) 3g log(N/M)`` (rounded up) and ``F' = const C(K',g) log(C(K',g))^2``."""
    c = _ceil_ratio(N, M)
    k_group = math.ceil(c * 3 * g * math.log(float(Fraction(N) / Fraction(M))))
    n_bins = math.comb(k_group, g)
    f_prime = math.ceil(const * n_bins * math.log(n_bins) ** 2)
    return k_group, f_prime


def deterministic_grouped_rate(K, N, M, g):
    """Exact rate ``(K/K') (K'-g)/(g+1)`` of grouped deterministic delivery, ``K' = g ceil(N/M)``."""
    size = g * _ceil_ratio(N, M)
    if K % size:
        raise ValueError(f"K'={size} does not divide K={K}")
    return Fraction(K, size) * Fraction(size - g, g + 1)


@dataclass
class BoundReport:
    K: int
    N: int
    M: float
    F: int
    g: int | None
    eps: float
    target_rate: float | None
    peak_rate_asymptotic: float | None
    uncoded_rate: float
    concentration_bound: float | None
    concentration_vacuous: bool | None
    rate_floor: float | None
    filesize_threshold: float | None
    filesize_lowerbound: float | None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def bound_report(K, N, M, F, g=None, eps=0.1, target_rate=None, placement='new'):
    """Evaluate every applicable closed form at one parameter point.

    ``target_rate`` is the expected rate fed to the concentration bound;
    it defaults to the asymptotic peak rate.
    """
    notes = []
    peak = peak_rate_asymptotic(K, N, M, grouped=placement == 'new') if M > 0 else None
    if target_rate is None:
        target_rate = peak
    conc = None
    if target_rate is not None and M > 0:
        if placement == 'new':
            conc = concentration_bound_new(eps, target_rate, F, K, N, M)
        else:
            conc = concentration_bound_old(eps, target_rate, F, K)
    floor = threshold = None
    if N > K and M > 0:
        floor, threshold = rate_floor_and_threshold(placement, K, N, M)
    else:
        notes.append('rate floor needs N > K')
    lower = None
    if g is not None and g > 2 and M > 0:
        lower = filesize_lowerbound_cliquecover(g, K, N, M)
    if conc is not None and conc >= 1:
        notes.append('concentration bound >= 1 (vacuous)')
    return BoundReport(K, N, float(M), F, g, eps, target_rate, peak, uncoded_rate(K, N, M),
                       conc, None if conc is None else conc >= 1, floor, threshold, lower, notes)
