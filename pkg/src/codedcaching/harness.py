"""Monte Carlo driver: demands, seeded trials, statistics, sweeps and property batteries."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import itertools
import json
import logging
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import seeding
from .analysis import deterministic_grouped_rate
from .delivery import (MAX_OLD_USERS, DeliverySpec, deliver, deliver_greedy, deliver_modified,
                       deliver_old, deliver_optimal, pull_down)
from .model import (CapabilityError, DemandVector, InstanceError, SystemParams,
                    build_side_info_view, check_decodable)
from .placement import PlacementSpec, UserGrouping, place, place_deterministic_grouped

logger = logging.getLogger(__name__)

__all__ = [
    'DecodabilityError',
    'ExperimentConfig',
    'RateStats',
    'gen_demand',
    'run_trial',
    'run_trials',
    'sweep',
    'verify_suite',
    'write_records',
    'CSV_COLUMNS',
]

CSV_COLUMNS = ('trial', 'placement', 'delivery', 'K', 'N', 'M', 'F', 'g', 'demand_mode',
               'transmissions', 'rate', 'seed')
DEMAND_MODES = ('distinct_worst_case', 'uniform_random', 'fixed')


class DecodabilityError(RuntimeError):
    """A delivery plan failed structural decoding; always a bug, never noise."""


def gen_demand(params: SystemParams, mode: str, seed=None, fixed=None) -> DemandVector:
    """Demand vector for ``mode``.

    ``distinct_worst_case`` gives ``d_k = k``; ``uniform_random`` draws each
    entry uniformly from the library; ``fixed`` echoes ``fixed``.
    """
    if mode == 'distinct_worst_case':
        if params.N < params.K:
            raise InstanceError(f'distinct demands need N >= K, got N={params.N}, K={params.K}')
        return DemandVector(range(params.K), 'distinct')
    if mode == 'uniform_random':
        rng = seeding.generator(seed)
        return DemandVector(rng.integers(params.N, size=params.K).tolist())
    if mode == 'fixed':
        if fixed is None or len(fixed) != params.K:
            raise InstanceError(f'fixed demand needs {params.K} entries, got {fixed!r}')
        return DemandVector(fixed)
    raise InstanceError(f'unknown demand mode {mode!r}')


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``F_prime`` is required for ``new_random`` placement (``F`` is then
    derived).  For ``deterministic_grouped`` placement ``F`` defaults to
    ``C(g ceil(N/M), g)`` and the grouping is implied.  ``grouping_size``
    splits users into blocks that are placed and served independently; the
    transmissions of all blocks are added up.
    """

    K: int
    N: int
    M: Fraction
    F: int | None = None
    F_prime: int | None = None
    placement: str = 'new_random'
    delivery: str = 'greedy'
    g: int | None = None
    demand_mode: str = 'distinct_worst_case'
    fixed_demand: tuple | None = None
    resample_demand: bool = False
    grouping_size: int | None = None
    trials: int = 1
    seed: int = 0
    workers: int = 1
    output_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, 'M', Fraction(self.M))
        if self.fixed_demand is not None:
            object.__setattr__(self, 'fixed_demand', tuple(self.fixed_demand))
        if self.trials < 1:
            raise InstanceError('trials must be >= 1')
        if self.demand_mode not in DEMAND_MODES:
            raise InstanceError(f'unknown demand mode {self.demand_mode!r}')
        self.placement_spec
        self.delivery_spec
        self.params
        if self.grouping_size is not None:
            UserGrouping(self.K, self.grouping_size)
            if self.placement == 'deterministic_grouped':
                raise InstanceError('deterministic_grouped placement sets its own grouping')

    @property
    def placement_spec(self):
        g = self.g if self.placement == 'deterministic_grouped' else None
        return PlacementSpec(self.placement, g=g)

    @property
    def delivery_spec(self):
        return DeliverySpec(self.delivery, g=self.g if self.delivery in ('modified', 'deterministic') else None)

    @property
    def block_users(self):
        return self.grouping_size or self.K

    @property
    def params(self) -> SystemParams:
        """Parameters of the whole system (all ``K`` users)."""
        if self.placement == 'new_random':
            if self.F_prime is None:
                if self.F is None:
                    raise InstanceError('new_random placement needs F_prime (or F)')
                c = math.ceil(Fraction(self.N) / self.M) if self.M else 0
                if not c or self.F % c:
                    raise InstanceError(f'F={self.F} is not a multiple of ceil(N/M)')
                return SystemParams.grouped(self.K, self.N, self.M, self.F // c)
            p = SystemParams.grouped(self.K, self.N, self.M, self.F_prime)
            if self.F is not None and self.F != p.F:
                raise InstanceError(f'F={self.F} inconsistent with F_prime={self.F_prime}')
            return p
        if self.placement == 'deterministic_grouped':
            if self.g is None:
                raise InstanceError('deterministic_grouped placement needs g')
            if self.M == 0:
                raise InstanceError('deterministic_grouped placement needs M > 0')
            size = self.g * math.ceil(Fraction(self.N) / self.M)
            return SystemParams(self.K, self.N, self.M, self.F or math.comb(size, self.g))
        if self.F is None:
            raise InstanceError('old_random placement needs F')
        return SystemParams(self.K, self.N, self.M, self.F)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d['M'] = str(self.M)
        if self.fixed_demand is not None:
            d['fixed_demand'] = list(self.fixed_demand)
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InstanceError(f'unknown config fields {sorted(unknown)}')
        return cls(**d)

    def cell_key(self):
        """Content hash of everything that affects results."""
        d = self.to_dict()
        d.pop('workers')
        d.pop('output_path')
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class RateStats:
    """Summary of per-trial rates (file-transmission units)."""

    rates: tuple = field(repr=False)
    mean: float = 0.0
    std: float = 0.0
    min: float = 0.0
    max: float = 0.0
    p50: float = 0.0
    p95: float = 0.0
    p99: float = 0.0

    @classmethod
    def from_rates(cls, rates):
        x = np.array([float(r) for r in rates])
        p50, p95, p99 = np.quantile(x, [0.5, 0.95, 0.99])
        std = float(x.std(ddof=1)) if len(x) > 1 else 0.0
        return cls(tuple(rates), float(x.mean()), std, float(x.min()), float(x.max()),
                   float(p50), float(p95), float(p99))

    @property
    def trials(self):
        return len(self.rates)

    @property
    def stderr(self):
        return self.std / math.sqrt(self.trials)

    def tail_prob(self, eps):
        """Fraction of trials with ``|R - mean| >= eps * mean``."""
        x = np.array([float(r) for r in self.rates])
        return float(np.mean(np.abs(x - self.mean) >= eps * self.mean))

    def to_dict(self):
        return {'mean': self.mean, 'std': self.std, 'stderr': self.stderr, 'min': self.min,
                'max': self.max, 'p50': self.p50, 'p95': self.p95, 'p99': self.p99,
                'trials': self.trials}


def _fixed_demand(cfg):
    if cfg.demand_mode == 'uniform_random' and not cfg.resample_demand:
        return gen_demand(cfg.params, 'uniform_random', seeding.child(cfg.seed, seeding.DEMAND))
    return None


def run_trial(cfg: ExperimentConfig, i: int, demand: DemandVector | None = None):
    """Run trial ``i``: place, demand, deliver and verify in every user block.

    Returns the CSV record for the trial.  Raises
    :class:`DecodabilityError` if any block's plan does not decode.
    """
    params = cfg.params
    seed_i = seeding.split(cfg.seed, i)
    if demand is None:
        if cfg.demand_mode == 'uniform_random':
            demand = gen_demand(params, 'uniform_random', seeding.child(seed_i, seeding.DEMAND))
        else:
            demand = gen_demand(params, cfg.demand_mode, fixed=cfg.fixed_demand)
    transmissions = 0
    if cfg.placement == 'deterministic_grouped':
        config, grouping = place_deterministic_grouped(params, cfg.g)
        plan = deliver(config, demand, cfg.delivery_spec, grouping,
                       seed=seeding.child(seed_i, seeding.PULL_DOWN, 0))
        _verify(plan, config, demand, cfg, i, seed_i)
        transmissions = plan.transmissions
    else:
        size = cfg.block_users
        sub = params.with_users(size)
        for b in range(cfg.K // size):
            users = slice(b * size, (b + 1) * size)
            block_demand = DemandVector(demand.d[users])
            config, _ = place(sub, cfg.placement_spec, seed=seeding.child(seed_i, seeding.PLACEMENT, b))
            plan = deliver(config, block_demand, cfg.delivery_spec,
                           seed=seeding.child(seed_i, seeding.PULL_DOWN, b))
            _verify(plan, config, block_demand, cfg, i, seed_i)
            transmissions += plan.transmissions
    return {
        'trial': i, 'placement': cfg.placement, 'delivery': cfg.delivery, 'K': cfg.K,
        'N': cfg.N, 'M': str(cfg.M), 'F': params.F, 'g': cfg.g, 'demand_mode': cfg.demand_mode,
        'transmissions': transmissions, 'rate': Fraction(transmissions, params.F), 'seed': seed_i,
    }


def _verify(plan, config, demand, cfg, i, seed_i):
    problem = check_decodable(plan, config, demand)
    if problem is not None:
        raise DecodabilityError(f'trial {i} (seed {seed_i}, root seed {cfg.seed}): {problem}')


def _run_chunk(args):
    cfg, indices, demand = args
    return [run_trial(cfg, i, demand) for i in indices]


def run_trials(cfg: ExperimentConfig):
    """Run ``cfg.trials`` independent trials.

    Returns ``(RateStats, records)`` with records ordered by trial index, so
    the output does not depend on ``cfg.workers``.
    """
    demand = _fixed_demand(cfg)
    indices = list(range(cfg.trials))
    if cfg.workers > 1 and cfg.trials > 1:
        chunks = [indices[w::cfg.workers] for w in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = [r for chunk in pool.map(_run_chunk, [(cfg, c, demand) for c in chunks])
                       for r in chunk]
        records.sort(key=lambda r: r['trial'])
    else:
        records = [run_trial(cfg, i, demand) for i in indices]
    stats = RateStats.from_rates([r['rate'] for r in records])
    if cfg.output_path:
        fmt = 'json' if str(cfg.output_path).endswith('.json') else 'csv'
        Path(cfg.output_path).write_text(write_records(records, fmt))
    return stats, records


def _render(value):
    if isinstance(value, Fraction):
        return repr(float(value))
    return '' if value is None else str(value)


def write_records(records, fmt='csv'):
    """Render trial records as CSV (frozen column order) or a JSON list with the same keys."""
    if fmt == 'json':
        rows = [{c: (float(r[c]) if isinstance(r[c], Fraction) else r[c]) for c in CSV_COLUMNS}
                for r in records]
        return json.dumps(rows, indent=1)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([_render(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def sweep(base: ExperimentConfig, axes: dict, cache_dir=None):
    """Run the Cartesian product of ``axes`` (field name -> values) over ``base``.

    Each cell is keyed by :meth:`ExperimentConfig.cell_key`; with
    ``cache_dir`` set, finished cells are stored there and reused on rerun.
    Returns one row per cell: the varied fields plus the cell's statistics.
    """
    names = list(axes)
    rows = []
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
    for values in itertools.product(*(axes[n] for n in names)):
        cfg = dataclasses.replace(base, output_path=None, **dict(zip(names, values)))
        key = cfg.cell_key()
        path = cache_dir / f'{key}.json' if cache_dir is not None else None
        if path is not None and path.exists():
            row = json.loads(path.read_text())
        else:
            stats, _ = run_trials(cfg)
            row = {'cell': key, 'config': cfg.to_dict(), **dict(zip(names, values)),
                   'F': cfg.params.F, **stats.to_dict(),
                   'rates': [str(r) for r in stats.rates]}
            if path is not None:
                path.write_text(json.dumps(row))
        rows.append(row)
    return rows


# property batteries

def _random_instance(rng, K_range, F_max, placements=('old_random', 'new_random'), duplicates=True):
    K = rng.randint(*K_range)
    scheme = rng.choice(placements)
    N = rng.randint(K, K + 4)
    M = rng.randint(1, N)
    if scheme == 'new_random':
        c = math.ceil(N / M)
        params = SystemParams.grouped(K, N, M, max(1, rng.randint(1, max(1, F_max // c))))
    else:
        step = Fraction(N, M).numerator  # F must make M*F/N integral
        F = step * rng.randint(1, max(1, F_max // step))
        params = SystemParams(K, N, M, F)
    config, _ = place(params, PlacementSpec(scheme), seed=rng.getrandbits(63))
    if duplicates and rng.random() < 0.5:
        demand = DemandVector([rng.randrange(N) for _ in range(K)])
    else:
        demand = DemandVector(rng.sample(range(N), K), 'distinct')
    return config, demand


def _battery_equality(rng, count, K_max):
    if K_max > MAX_OLD_USERS:
        return {'status': 'skipped', 'checked': 0,
                'detail': f'deliver_old capability limit: K={K_max} > {MAX_OLD_USERS}'}
    for n in range(count):
        config, demand = _random_instance(rng, (2, K_max), 40)
        old, new = deliver_old(config, demand), deliver_greedy(config, demand)
        if old.transmissions != new.transmissions:
            return {'status': 'fail', 'checked': n + 1,
                    'detail': f'{config!r} d={demand.d}: old={old.transmissions} greedy={new.transmissions}'}
    return {'status': 'pass', 'checked': count}


def _battery_decodability(rng, count, inject_fault):
    for n in range(count):
        config, demand = _random_instance(rng, (2, 8), 24)
        scheme = ('old_enum', 'greedy', 'modified')[n % 3]
        plan = deliver(config, demand, DeliverySpec(scheme, g=2 if scheme == 'modified' else None),
                       seed=rng.getrandbits(63))
        if inject_fault == 'drop_clique' and plan.cliques:
            plan = plan.without_clique(0)
        problem = check_decodable(plan, config, demand)
        if problem:
            return {'status': 'fail', 'checked': n + 1, 'detail': f'{scheme}: {problem}'}
    return {'status': 'pass', 'checked': count}


def _battery_optimal(rng, count):
    for n in range(count):
        config, demand = _random_instance(rng, (2, 4), 4)
        if len(build_side_info_view(config, demand)) > 20:
            continue
        opt, greedy = deliver_optimal(config, demand), deliver_greedy(config, demand)
        needed = len(build_side_info_view(config, demand))
        if not opt.transmissions <= greedy.transmissions <= needed or check_decodable(opt, config, demand):
            return {'status': 'fail', 'checked': n + 1,
                    'detail': f'optimal={opt.transmissions} greedy={greedy.transmissions} needed={needed}'}
    return {'status': 'pass', 'checked': count}


def _battery_deterministic():
    from .delivery import deliver_deterministic
    cases = [(8, 16, 4, 2), (32, 64, 16, 2), (6, 6, 3, 3), (12, 12, 4, 2)]
    for K, N, M, g in cases:
        size = g * math.ceil(N / M)
        params = SystemParams(K, N, M, math.comb(size, g))
        config, grouping = place_deterministic_grouped(params, g)
        demand = DemandVector(range(K), 'distinct') if N >= K else None
        plan = deliver_deterministic(config, demand, grouping, g)
        if plan.rate != deterministic_grouped_rate(K, N, M, g) or check_decodable(plan, config, demand):
            return {'status': 'fail', 'checked': len(cases), 'detail': f'K={K} N={N} M={M} g={g}'}
    return {'status': 'pass', 'checked': len(cases)}


def _battery_pull_down(rng, count, g=2):
    for n in range(count):
        config, demand = _random_instance(rng, (3, 8), 24)
        seed = rng.getrandbits(63)
        virtual = pull_down(config, demand, g, seed)
        for f_idx in set(demand):
            for real, fake in zip(config.store[f_idx], virtual.store[f_idx]):
                real, fake = int(real), int(fake)
                if fake & ~real or fake.bit_count() > g or (real.bit_count() <= g and fake != real):
                    return {'status': 'fail', 'checked': n + 1, 'detail': f'{real:b} -> {fake:b}'}
        problem = check_decodable(deliver_modified(config, demand, g, seed), config, demand)
        if problem:
            return {'status': 'fail', 'checked': n + 1, 'detail': problem}
    return {'status': 'pass', 'checked': count}


def verify_suite(seed=0, count=100, equality_K_max=10, inject_fault=None):
    """Run the cross-scheme property batteries.

    Returns ``(ok, report)``; ``report`` maps battery name to a dict with
    ``status`` in ``{'pass', 'fail', 'skipped'}``.  ``inject_fault='drop_clique'``
    removes one clique from every plan in the decodability battery.
    """
    rng = random.Random(seed)
    report = {
        'old_equals_greedy': _battery_equality(rng, count, equality_K_max),
        'decodability': _battery_decodability(rng, count, inject_fault),
        'optimal_le_greedy': _battery_optimal(rng, count),
        'deterministic_exact': _battery_deterministic(),
        'pull_down_level': _battery_pull_down(rng, count),
    }
    ok = all(r['status'] != 'fail' for r in report.values())
    return ok, report
