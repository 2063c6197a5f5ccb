"""Grid-search parameter tuning with a held-out ground-truth split.

The search is exhaustive over the Cartesian product of candidate values,
scored on the training pages only; the winner's score on the holdout pages
is reported separately so tuned parameters are never judged on the data
that selected them.
"""

from __future__ import annotations

import csv
import io
import itertools
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable


@dataclass
class TuningSpec:
    parameters: list[tuple[str, list]]
    objective: str = "field_accuracy"
    holdout_fraction: float = 0.2
    seed: int = 0

    def validate(self) -> None:
        if not self.parameters:
            raise ValueError("parameter grid must be non-empty")
        for name, values in self.parameters:
            if not values:
                raise ValueError(f"no candidate values for parameter {name!r}")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must be in [0, 1)")


@dataclass
class GridResult:
    best_params: dict
    train_metric: float
    holdout_metric: float | None
    table: list[dict] = field(default_factory=list)


def holdout_split(truth_pages: list, fraction: float, seed: int = 0) -> tuple[list, list]:
    """Seeded shuffle split; the holdout holds round(fraction * n) pages,
    at least one when fraction > 0."""
    if not truth_pages:
        raise ValueError("no pages to split")
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must be in [0, 1)")
    order = list(truth_pages)
    random.Random(seed).shuffle(order)
    k = int(fraction * len(order) + 0.5)
    if fraction > 0:
        k = max(1, k)
    holdout = order[:k]
    train = order[k:]
    return train, holdout


def _worker_count() -> int:
    env = os.environ.get("PIPELINE_WORKERS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def grid_search(spec: TuningSpec,
                evaluate: Callable[[dict, list], float],
                truth_pages: list) -> GridResult:
    """Exhaustive search over the parameter grid.

    `evaluate(params, pages)` scores one parameter combination on a page
    set. The best point maximizes the objective (minimizes it for cer),
    ties resolved by grid order. A combination whose evaluation raises is
    recorded with the worst possible score and the search continues.
    """
    spec.validate()
    train, holdout = holdout_split(truth_pages, spec.holdout_fraction, spec.seed)
    assert all(not any(p is q for q in train) for p in holdout), \
        "holdout page appears in the training split"
    if not train:
        raise ValueError("holdout fraction leaves no training pages")

    minimize = spec.objective == "cer"
    names = [name for name, _ in spec.parameters]
    combos = [dict(zip(names, values))
              for values in itertools.product(*(vals for _, vals in spec.parameters))]

    def score(params: dict) -> tuple[float, str]:
        try:
            return float(evaluate(params, train)), ""
        except Exception as exc:  # scored worst, search continues
            return (float("inf") if minimize else float("-inf")), f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        results = list(pool.map(score, combos))

    table = []
    best_index = None
    for i, (params, (value, error)) in enumerate(zip(combos, results)):
        table.append({**params, "objective_train": value, "error": error})
        if error:
            continue
        if best_index is None:
            best_index = i
        else:
            best_value = results[best_index][0]
            if (value < best_value) if minimize else (value > best_value):
                best_index = i
    if best_index is None:
        raise RuntimeError("every grid point failed to evaluate")

    best_params = combos[best_index]
    holdout_metric = None
    if holdout:
        holdout_metric = float(evaluate(best_params, holdout))
    return GridResult(
        best_params=best_params,
        train_metric=results[best_index][0],
        holdout_metric=holdout_metric,
        table=table,
    )


def tuning_report_csv(spec: TuningSpec, result: GridResult) -> bytes:
    """CSV table of every grid point plus a holdout summary line."""
    names = [name for name, _ in spec.parameters]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names + ["objective_train"])
    for row in result.table:
        writer.writerow([row[n] for n in names] + [row["objective_train"]])
    writer.writerow([])
    writer.writerow(["best"] + [result.best_params[n] for n in names[0:]] +
                    [f"holdout={result.holdout_metric}"])
    return buf.getvalue().encode("utf-8")
