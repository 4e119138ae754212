"""
QSBA Strategy Sweeps

Runs the protocol for every (malicious subset, strategy) pair and tabulates
the interactive-consistency verdicts. Runs are independent simulations and
fan out over a thread pool; results come back in canonical order regardless
of completion order.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from typing import Iterable, List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel

from .adversary import DEFAULT_FAMILY, build_strategy
from .gf2hash import BitString
from .keystore import PoolCapacities, derive_rng
from .logging_utils import get_logger
from .protocol import ProtocolParams, RunStatus, run_protocol

logger = get_logger("qsba.sweep")


class SweepRow(BaseModel):
    """Verdicts and ledger totals of one sweep run."""

    n: int
    m: int
    strategy: str
    controlled: List[int]
    seed: int
    status: str
    condition_I: Optional[bool] = None
    condition_II: Optional[bool] = None
    hash_ops: int
    key_strings: int
    auth_uses: int

    @property
    def violation(self) -> bool:
        return self.status == RunStatus.COMPLETED.value and not (self.condition_I and self.condition_II)


class SweepResult(BaseModel):
    rows: List[SweepRow] = []

    def violations(self) -> List[SweepRow]:
        return [row for row in self.rows if row.violation]

    def to_frame(self) -> pd.DataFrame:
        columns = list(SweepRow.model_fields) + ["violation"]
        records = [{**row.model_dump(), "violation": row.violation} for row in self.rows]
        frame = pd.DataFrame.from_records(records, columns=columns)
        frame["controlled"] = frame["controlled"].map(lambda c: ".".join(map(str, c)))
        return frame

    def to_csv(self, path=None) -> Optional[str]:
        return self.to_frame().to_csv(path, index=False)


def default_subsets(n: int, m: int) -> List[Tuple[int, ...]]:
    """Every node subset of size 1 through ``m``, the commander included."""
    return [c for size in range(1, m + 1) for c in combinations(range(n), size)]


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _run_one(task) -> SweepRow:
    params, command, strategy, controlled, strategy_params, seed, pools = task
    adversary = build_strategy(strategy, controlled, strategy_params)
    outcome = run_protocol(params, command, seed=seed, pools=pools, adversary=adversary)
    return SweepRow(
        n=params.n,
        m=params.m,
        strategy=strategy,
        controlled=sorted(controlled),
        seed=seed,
        status=outcome.status.value,
        condition_I=outcome.condition_I,
        condition_II=outcome.condition_II,
        hash_ops=outcome.ledger.hash_ops,
        key_strings=outcome.ledger.key_strings,
        auth_uses=outcome.ledger.auth_uses,
    )


def _execute(tasks: list, workers: int) -> SweepResult:
    if workers <= 1:
        rows = [_run_one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, tasks))
    return SweepResult(rows=rows)


def strategy_sweep(
    params: ProtocolParams,
    family: Iterable[str] = DEFAULT_FAMILY,
    subsets: Optional[Sequence[Iterable[int]]] = None,
    *,
    command: Optional[BitString] = None,
    seed: int = 0,
    workers: int = 1,
    pools: Optional[PoolCapacities] = None,
    strategy_params: Optional[dict] = None,
) -> SweepResult:
    """
    Run every strategy against every malicious subset.

    Args:
        params: Protocol parameters shared by all runs
        family: Strategy names from the adversary registry
        subsets: Malicious subsets; defaults to every subset of size 1..m
        command: The commander's command; random 16 bits from ``seed`` if omitted
        seed: Run seed
        workers: Thread-pool width
        pools: Pool capacities
        strategy_params: Extra parameters passed to every strategy

    Returns:
        One row per run, ordered by subset then strategy
    """
    family = list(family)
    if subsets is None:
        subsets = default_subsets(params.n, params.m)
    if command is None:
        command = BitString.random(derive_rng(seed, 5), 16)

    tasks = [
        (params, command, name, frozenset(subset), strategy_params, seed, pools)
        for subset in subsets
        for name in family
    ]
    result = _execute(tasks, workers)
    logger.info(
        "strategy_sweep_done",
        n=params.n,
        m=params.m,
        runs=len(result.rows),
        violations=len(result.violations()),
    )
    return result


def forgery_sweep(
    params: ProtocolParams,
    controlled: Iterable[int],
    trials: int,
    *,
    message_bits: int = 64,
    seed: int = 0,
    workers: int = 1,
) -> SweepResult:
    """
    Repeat the ``forge`` strategy under ``trials`` seeds with fresh commands.

    A row is a violation exactly when some forgery was accepted and split
    the honest lieutenants.
    """
    controlled = frozenset(controlled)
    tasks = [
        (
            params,
            BitString.random(derive_rng((seed, i), 5), message_bits),
            "forge",
            controlled,
            None,
            seed + i,
            None,
        )
        for i in range(trials)
    ]
    return _execute(tasks, workers)


def violation_rate(result: SweepResult) -> Tuple[float, Tuple[float, float]]:
    """Fraction of completed runs that violate a condition, with a Wilson 95% interval."""
    completed = [r for r in result.rows if r.status == RunStatus.COMPLETED.value]
    hits = sum(r.violation for r in completed)
    rate = hits / len(completed) if completed else 0.0
    return rate, wilson_interval(hits, len(completed))
