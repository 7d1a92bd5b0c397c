"""
How fast does the rate approach its limit?
==========================================

For K=8 users, N=16 files and caches of M=4 files, the peak rate tends to
about 2.70 as files are split into ever more packets.  Here we follow the
Monte Carlo mean against the semi-analytic expectation as F' grows.
"""

from codedcaching import ExperimentConfig, analysis, run_trials

K, N, M = 8, 16, 4
limit = analysis.peak_rate_asymptotic(K, N, M)
print(f'uncoded rate {analysis.uncoded_rate(K, N, M):.3f}, limit {limit:.4f}')
print(f"{'F_prime':>8} {'F':>6} {'Monte Carlo':>12} {'+-':>6} {'semi-analytic':>14}")

# A handful of trials is enough to see the trend; the acceptance suite uses more.
for fp in (1, 4, 16, 64, 256):
    stats, _ = run_trials(ExperimentConfig(K, N, M, F_prime=fp, trials=40, seed=1))
    ref = analysis.expected_rate_semianalytic(K, N, M, fp)
    print(f'{fp:>8} {4 * fp:>6} {stats.mean:>12.4f} {stats.stderr:>6.3f} {ref:>14.4f}')

# With a few hundred packets per file the rate is still visibly above the limit,
# and a 24-user system is stuck above half the uncoded rate for files this small:
floor, threshold = analysis.rate_floor_and_threshold('new', 24, 48, 12)
print(f'K=24: rate stays above {floor} unless F exceeds about {threshold:.0f}')
