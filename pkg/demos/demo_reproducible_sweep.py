"""
Reproducible sweeps
===================

Each trial draws from its own labelled random stream, so results do not
depend on the number of workers, and a sweep with a cache directory can be
interrupted and resumed.
"""

import dataclasses
import tempfile

from codedcaching import ExperimentConfig, run_trials, sweep
from codedcaching.harness import write_records

cfg = ExperimentConfig(K=6, N=12, M=3, F_prime=8, g=2, trials=20, seed=11,
                       demand_mode='uniform_random', resample_demand=True)
serial, records = run_trials(cfg)
parallel, _ = run_trials(dataclasses.replace(cfg, workers=2))
print(f'serial mean {serial.mean:.4f}, two workers {parallel.mean:.4f}')
print(write_records(records[:3]))

with tempfile.TemporaryDirectory() as cache:
    rows = sweep(cfg, {'F_prime': [1, 4, 16], 'delivery': ['greedy', 'modified']}, cache_dir=cache)
    for row in rows:
        print(f"F'={row['F_prime']:>2} {row['delivery']:>8}: mean {row['mean']:.3f} +- {row['stderr']:.3f}")
