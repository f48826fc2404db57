"""Ablation harness: full-factorial runs, metric aggregation, reports.

A grid enumerates every combination of backend, shape family, example
budget, memory budget, critique feedback, and surrogate feedback; each
combination runs once per benchmark instance with a fresh backend and a
fresh per-run memory. Aggregation produces one row per condition with
mean +/- standard error cells, rendered to CSV or a markdown pipe table.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agents import backend_from_config
from .curves import FAMILIES
from .memory import MemoryRepo
from .orchestrator import LoopConfig, RunRecord, run_task

REPORT_COLUMNS = [
    "Model",
    "Shape",
    "#Ex",
    "Fdbk",
    "SFB",
    "Mem",
    "Best chamf.",
    "Fcham",
    "Steps",
    "Fstep",
    "% Imp.",
    "% Semantic",
]

ABSENT = "—"


# --- Wilcoxon signed-rank test --------------------------------------------------

@dataclass
class WilcoxonResult:
    statistic: float  # W = min(W+, W-)
    p_value: float
    n: int  # pairs remaining after dropping zero differences
    degenerate: bool = False


def _mean_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    sv = values[order]
    while i < len(values):
        j = i
        while j + 1 < len(values) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_count_le(doubled_ranks, w2: int) -> float:
    """Number of sign assignments with doubled negative-rank sum <= w2."""
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks:
        counts[r:] = counts[r:] + counts[: total + 1 - r]
    return float(counts[: min(w2, total) + 1].sum())


EXACT_LIMIT = 25


def wilcoxon_signed_rank(x, y, paired: bool = True) -> WilcoxonResult:
    """Two-sided paired Wilcoxon signed-rank test.

    Zero differences are dropped; ties share mean ranks. The null
    distribution is enumerated exactly (via subset-sum counting over the
    observed ranks) up to n = 25 pairs, beyond which the normal
    approximation with tie correction is used.
    """
    if not paired:
        raise ValueError("only the paired test is implemented")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("x and y must have the same length")
    d = x - y
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(statistic=0.0, p_value=1.0, n=0, degenerate=True)
    if n < 5:
        raise ValueError("need at least 5 nonzero differences")
    ad = np.abs(d)
    ranks = _mean_ranks(ad)
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)

    if n <= EXACT_LIMIT:
        doubled = [int(round(2 * r)) for r in ranks]
        count = _exact_count_le(doubled, int(round(2 * w)))
        p = min(1.0, 2.0 * count / 2.0**n)
        return WilcoxonResult(statistic=w, p_value=p, n=n)

    mean = n * (n + 1) / 4.0
    tie_term = 0.0
    _, tie_counts = np.unique(ad, return_counts=True)
    for t in tie_counts:
        tie_term += (t**3 - t) / 48.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    z = (w - mean) / math.sqrt(var)
    p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))
    return WilcoxonResult(statistic=w, p_value=p, n=n)


# --- Per-run views and aggregation ------------------------------------------------

def pct_improvement(record: RunRecord) -> float | None:
    """Improvement of the best score over the first valid candidate's score,
    as a percentage; absent when the run never produced a valid candidate."""
    if record.best is None or record.first_valid_chamfer is None:
        return None
    first = record.first_valid_chamfer
    best = record.best["chamfer"]
    if first <= 0 or best >= first:
        return 0.0
    return 100.0 * (first - best) / first


def view_from_record(record: RunRecord, backend: str, shape: str) -> dict:
    cfg = record.config
    return {
        "backend": backend,
        "shape": shape,
        "num_examples": cfg["num_examples"],
        "feedback": cfg["feedback_enabled"],
        "sfb": cfg["sfb_enabled"],
        "mem": cfg["mem_k"],
        "best_chamfer": None if record.best is None else record.best["chamfer"],
        "best_iteration": None if record.best is None else record.best["iteration"],
        "first_valid_chamfer": record.first_valid_chamfer,
        "iterations": len(record.iterations),
        "generated": record.totals["candidates_generated"],
        "valid": record.totals["candidates_valid"],
        "task_id": record.task_id,
    }


def view_from_summary(summary: dict) -> dict:
    cfg = summary["config"]
    best = summary["best"]
    return {
        "backend": summary["backend"],
        "shape": summary["task_id"].rsplit("-", 1)[0],
        "num_examples": cfg["num_examples"],
        "feedback": cfg["feedback_enabled"],
        "sfb": cfg["sfb_enabled"],
        "mem": cfg["mem_k"],
        "best_chamfer": None if best is None else best["chamfer"],
        "best_iteration": None if best is None else best["iteration"],
        "first_valid_chamfer": summary["first_valid_chamfer"],
        "iterations": summary["iterations"],
        "generated": summary["totals"]["candidates_generated"],
        "valid": summary["totals"]["candidates_valid"],
        "task_id": summary["task_id"],
    }


def _view_pct(view: dict) -> float | None:
    if view["best_chamfer"] is None or view["first_valid_chamfer"] is None:
        return None
    first, best = view["first_valid_chamfer"], view["best_chamfer"]
    if first <= 0 or best >= first:
        return 0.0
    return 100.0 * (first - best) / first


def _mean_stderr(values) -> tuple | None:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    arr = np.asarray(vals, dtype=np.float64)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return (mean, stderr, len(arr))


@dataclass
class ConditionStats:
    backend: str
    shape: str
    num_examples: int
    feedback: bool
    sfb: bool
    mem: int
    best_chamfer: tuple | None  # (mean, stderr, n)
    final_chamfer: tuple | None  # "Fcham": the first-valid-candidate score
    steps: tuple | None
    final_step: tuple | None  # "Fstep": iteration at which the best was found
    pct_improvement: float | None
    semantic_success: float
    n_runs: int


_CONDITION_KEYS = ("backend", "shape", "num_examples", "feedback", "sfb", "mem")


def aggregate(views) -> list[ConditionStats]:
    """One stats row per condition, from per-run views."""
    groups: dict[tuple, list[dict]] = {}
    order: list[tuple] = []
    for v in views:
        key = tuple(v[k] for k in _CONDITION_KEYS)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(v)
    stats = []
    for key in order:
        runs = groups[key]
        generated = sum(r["generated"] for r in runs)
        valid = sum(r["valid"] for r in runs)
        pcts = [p for p in (_view_pct(r) for r in runs) if p is not None]
        stats.append(
            ConditionStats(
                backend=key[0],
                shape=key[1],
                num_examples=key[2],
                feedback=key[3],
                sfb=key[4],
                mem=key[5],
                best_chamfer=_mean_stderr([r["best_chamfer"] for r in runs]),
                final_chamfer=_mean_stderr([r["first_valid_chamfer"] for r in runs]),
                steps=_mean_stderr([r["iterations"] for r in runs]),
                final_step=_mean_stderr([r["best_iteration"] for r in runs]),
                pct_improvement=float(np.mean(pcts)) if pcts else None,
                semantic_success=valid / generated if generated else 0.0,
                n_runs=len(runs),
            )
        )
    return stats


# --- The full-factorial grid ---------------------------------------------------------

@dataclass
class AblationGrid:
    backends: dict  # name -> backend config dict or zero-arg factory
    shapes: tuple = FAMILIES
    num_examples_levels: tuple = (2, 3)
    mem_levels: tuple = (0, 2)
    feedback_levels: tuple = (False, True)
    sfb_levels: tuple = (False, True)
    instances_per_shape: int = 5
    seed: int = 0
    loop_overrides: dict = field(default_factory=dict)  # e.g. {"r_max": 4}


def _make_backend(entry, name: str):
    if callable(entry):
        return entry()
    cfg = dict(entry)
    cfg.setdefault("name", name)
    return backend_from_config(cfg)


def enumerate_runs(grid: AblationGrid, dataset) -> list[dict]:
    """The cartesian product of conditions and instances, in a fixed order."""
    by_family: dict[str, list] = {}
    for inst in dataset:
        by_family.setdefault(inst.curve.family, []).append(inst)
    jobs = []
    for backend_name in grid.backends:
        for shape in grid.shapes:
            tasks = by_family.get(shape, [])[: grid.instances_per_shape]
            for num_examples in grid.num_examples_levels:
                for feedback in grid.feedback_levels:
                    for sfb in grid.sfb_levels:
                        for mem in grid.mem_levels:
                            for task in tasks:
                                jobs.append(
                                    {
                                        "backend": backend_name,
                                        "shape": shape,
                                        "num_examples": num_examples,
                                        "feedback": feedback,
                                        "sfb": sfb,
                                        "mem": mem,
                                        "task": task,
                                    }
                                )
    return jobs


def _execute(job: dict, grid: AblationGrid) -> tuple[dict, RunRecord]:
    cfg = LoopConfig(
        num_examples=job["num_examples"],
        mem_k=job["mem"],
        feedback_enabled=job["feedback"],
        sfb_enabled=job["sfb"],
        **grid.loop_overrides,
    )
    backend = _make_backend(grid.backends[job["backend"]], job["backend"])
    record = run_task(job["task"], cfg, backend, MemoryRepo())
    return job, record


def run_ablation(grid: AblationGrid, dataset, jobs: int = 1):
    """Every condition x instance, one run each.

    Returns (stats, results) where results is a list of (job, RunRecord) in
    enumeration order regardless of worker scheduling.
    """
    all_jobs = enumerate_runs(grid, dataset)
    if jobs <= 1:
        results = [_execute(j, grid) for j in all_jobs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda j: _execute(j, grid), all_jobs))
    views = [view_from_record(rec, job["backend"], job["shape"]) for job, rec in results]
    return aggregate(views), results


def paired_feedback_test(views) -> WilcoxonResult | None:
    """Paired Wilcoxon on best Chamfer across the feedback factor, matching
    runs that agree on every other condition coordinate and task."""
    keyed = {}
    for v in views:
        if v["best_chamfer"] is None:
            continue
        key = (v["backend"], v["shape"], v["num_examples"], v["sfb"], v["mem"], v["task_id"])
        keyed.setdefault(key, {})[v["feedback"]] = v["best_chamfer"]
    with_fb, without_fb = [], []
    for pair in keyed.values():
        if True in pair and False in pair:
            with_fb.append(pair[True])
            without_fb.append(pair[False])
    if len(with_fb) < 5:
        return None
    try:
        return wilcoxon_signed_rank(with_fb, without_fb)
    except ValueError:
        return None


# --- Report emission --------------------------------------------------------------

def _cell(ms: tuple | None) -> str:
    if ms is None:
        return ABSENT
    return f"{ms[0]:.3f} ± {ms[1]:.3f}"


def _stats_row(s: ConditionStats) -> list[str]:
    return [
        s.backend,
        s.shape.capitalize(),
        str(s.num_examples),
        "Yes" if s.feedback else "No",
        "Yes" if s.sfb else "No",
        str(s.mem),
        _cell(s.best_chamfer),
        _cell(s.final_chamfer),
        _cell(s.steps),
        _cell(s.final_step),
        ABSENT if s.pct_improvement is None else f"{s.pct_improvement:.3f}",
        f"{s.semantic_success:.3f}",
    ]


def render_report(stats, fmt: str = "csv") -> str:
    rows = [_stats_row(s) for s in stats]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = [
            "| " + " | ".join(REPORT_COLUMNS) + " |",
            "|" + "|".join("---" for _ in REPORT_COLUMNS) + "|",
        ]
        for row in rows:
            lines.append("| " + " | ".join(row) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format: {fmt!r}")


def emit_report(stats, fmt: str, path) -> None:
    text = render_report(stats, fmt)
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"failed to write report to {path}: {exc}") from exc


def _parse_cell(cell: str):
    if cell == ABSENT:
        return None
    m, s = cell.split(" ± ")
    return (float(m), float(s))


def parse_report_csv(text: str) -> list[dict]:
    """Rows of a rendered CSV report back as values (at rendered precision)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != REPORT_COLUMNS:
        raise ValueError("unexpected report header")
    out = []
    for row in reader:
        out.append(
            {
                "backend": row[0],
                "shape": row[1].lower(),
                "num_examples": int(row[2]),
                "feedback": row[3] == "Yes",
                "sfb": row[4] == "Yes",
                "mem": int(row[5]),
                "best_chamfer": _parse_cell(row[6]),
                "final_chamfer": _parse_cell(row[7]),
                "steps": _parse_cell(row[8]),
                "final_step": _parse_cell(row[9]),
                "pct_improvement": None if row[10] == ABSENT else float(row[10]),
                "semantic_success": float(row[11]),
            }
        )
    return out
