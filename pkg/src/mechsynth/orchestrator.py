"""The dual-agent synthesis loop: design, simulate, score, critique, revise.

Each iteration samples a batch of candidate mechanisms from the designer
backend, simulates them, scores survivors by ICP-aligned Chamfer distance
against a dense resampling of the analytic target curve, stores valid
designs in memory, and (when feedback is enabled) runs one critique and
one revision pass on the iteration's best candidate. The loop stops as
soon as the best score reaches epsilon, else after r_max iterations.

Everything that happened is kept in a RunRecord (prompts, raw texts,
scores, critiques), which serializes to JSONL one iteration per line.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .agents import (
    DEFAULT_EXAMPLES,
    BackendError,
    Candidate,
    GenerationParams,
    PromptContext,
    compose_critic_prompt,
    compose_designer_prompt,
    compose_revision_prompt,
    format_points,
    generate_candidates,
    render_memory_block,
    render_sim_output,
)
from .curves import TaskInstance, sample_points
from .dsl import format_canonical
from .geometry import DegenerateGeometryError, chamfer_distance, icp_align
from .linkage import complexity, simulate
from .memory import MemoryEntry, MemoryRepo
from .surrogate import expr_to_text, fit_surrogate


@dataclass
class LoopConfig:
    b: int = 3  # candidates sampled per iteration
    r_max: int = 20
    epsilon: float = 0.05
    num_examples: int = 2
    mem_k: int = 2  # 0 disables retrieval (storage still happens)
    feedback_enabled: bool = True
    sfb_enabled: bool = True
    sim_steps: int | None = None
    eval_points: int = 128  # density of the scoring profile on the target curve
    temperature: float = 0.8
    max_tokens: int = 1024
    strict_levels: bool = True

    def __post_init__(self):
        if self.strict_levels:
            if self.num_examples not in (2, 3):
                raise ValueError("num_examples must be 2 or 3 (set strict_levels=False to override)")
            if self.mem_k not in (0, 2):
                raise ValueError("mem_k must be 0 or 2 (set strict_levels=False to override)")
        if self.b < 1 or self.r_max < 1 or self.epsilon <= 0:
            raise ValueError("b, r_max must be positive and epsilon > 0")


@dataclass
class CandidateRecord:
    source: str  # "designer" | "revision"
    raw_text: str | None
    mechanism_text: str | None = None
    parse_errors: list = field(default_factory=list)
    sim_success: bool = False
    failure_reason: str | None = None
    chamfer: float | None = None
    surrogate_text: str | None = None
    complexity: int | None = None

    @property
    def valid(self) -> bool:
        return self.sim_success


@dataclass
class IterationRecord:
    iteration: int
    designer_prompt: str
    candidates: list
    critique_prompt: str | None = None
    critique_text: str | None = None
    revision_prompt: str | None = None
    revision: CandidateRecord | None = None
    efficiency: str | None = None
    error: str | None = None


@dataclass
class RunRecord:
    task_id: str
    backend_name: str
    config: dict
    iterations: list
    best: dict | None
    first_valid_chamfer: float | None
    totals: dict
    terminated_by: str

    @property
    def semantic_success(self) -> float:
        g = self.totals["candidates_generated"]
        return self.totals["candidates_valid"] / g if g else 0.0


def task_description(task: TaskInstance) -> str:
    return (
        f'A planar mechanism whose end effector (the joint named "target") '
        f"traces a {task.curve.family} path defined by {task.equation_text}."
    )


def revision_efficiency_check(prev_spec, prev_chamfer, revised_spec, revised_chamfer) -> str:
    """Accept a revision that does not regress, or that strictly improves the
    distance regardless of added structure; flag everything else."""
    nonregressive = (
        complexity(revised_spec) <= complexity(prev_spec) and revised_chamfer <= prev_chamfer
    )
    if nonregressive or revised_chamfer < prev_chamfer:
        return "accept"
    return "flag"


class _TaskRunner:
    def __init__(self, task, cfg, backend, memory_repo):
        self.task = task
        self.cfg = cfg
        self.backend = backend
        self.memory = memory_repo
        self.params = GenerationParams(temperature=cfg.temperature, max_tokens=cfg.max_tokens)
        self.eval_target = sample_points(task.curve, cfg.eval_points, seed=0, mode="uniform")
        self.best: dict | None = None
        self.best_surrogate: str | None = None
        self.first_valid: float | None = None
        self.generated = 0
        self.valid = 0

    def score(self, trajectory) -> float:
        """ICP-aligned Chamfer against the dense target profile. Traces too
        short or too degenerate to align are scored unaligned."""
        try:
            return icp_align(trajectory, self.eval_target).chamfer
        except (DegenerateGeometryError, ValueError):
            return chamfer_distance(trajectory, self.eval_target)

    def evaluate(self, cand: Candidate, source: str, iteration: int):
        """Simulate, score, store; returns (record, sim_result)."""
        self.generated += 1
        rec = CandidateRecord(source=source, raw_text=cand.raw_text, parse_errors=list(cand.errors))
        if not cand.parsed:
            return rec, None
        rec.mechanism_text = format_canonical(cand.spec)
        rec.complexity = complexity(cand.spec)
        sim = simulate(cand.spec, self.cfg.sim_steps)
        rec.sim_success = sim.success
        if not sim.success:
            rec.failure_reason = sim.failure.reason
            self.memory.store(
                MemoryEntry(rec.mechanism_text, float("nan"), self.task.id, iteration), sim
            )
            return rec, sim
        self.valid += 1
        rec.chamfer = self.score(sim.trajectory)
        if self.first_valid is None:
            self.first_valid = rec.chamfer
        if self.cfg.sfb_enabled and len(sim.trajectory) >= 8:
            rec.surrogate_text = expr_to_text(fit_surrogate(sim.trajectory))
        self.memory.store(
            MemoryEntry(
                rec.mechanism_text,
                rec.chamfer,
                self.task.id,
                iteration,
                surrogate_text=rec.surrogate_text,
            ),
            sim,
        )
        if self.best is None or rec.chamfer < self.best["chamfer"]:
            self.best = {
                "mechanism_text": rec.mechanism_text,
                "chamfer": rec.chamfer,
                "iteration": iteration,
            }
            self.best_surrogate = rec.surrogate_text
        return rec, sim

    def base_context(self) -> PromptContext:
        memory_block = None
        if self.cfg.mem_k > 0 and len(self.memory) > 0:
            entries = self.memory.retrieve_topk(self.cfg.mem_k)
            if entries:
                memory_block = render_memory_block(entries)
        return PromptContext(
            examples=DEFAULT_EXAMPLES[: self.cfg.num_examples],
            memory_block=memory_block,
            description=task_description(self.task),
            points=format_points(self.task.target_points.points),
            target_equation=self.task.equation_text,
        )


def run_task(
    task: TaskInstance,
    cfg: LoopConfig,
    backend,
    memory_repo: MemoryRepo | None = None,
) -> RunRecord:
    runner = _TaskRunner(task, cfg, backend, memory_repo if memory_repo is not None else MemoryRepo())
    iterations = []
    terminated_by = "r_max"

    for it in range(1, cfg.r_max + 1):
        ctx = runner.base_context()
        if cfg.sfb_enabled and runner.best is not None:
            ctx.surrogate_line = runner.best_surrogate
            ctx.score_line = f"{runner.best['chamfer']:.6g}"
        prompt = compose_designer_prompt(ctx)
        batch = generate_candidates(backend, prompt, cfg.b, runner.params)

        records = []
        iter_best = None  # (chamfer, record, candidate, sim)
        for cand in batch:
            rec, sim = runner.evaluate(cand, "designer", it)
            records.append(rec)
            if rec.valid and (iter_best is None or rec.chamfer < iter_best[0]):
                iter_best = (rec.chamfer, rec, cand, sim)

        itrec = IterationRecord(iteration=it, designer_prompt=prompt, candidates=records)

        if cfg.feedback_enabled and iter_best is not None:
            _, brec, bcand, bsim = iter_best
            fb_ctx = runner.base_context()
            fb_ctx.designer_response = brec.raw_text
            fb_ctx.simulator_output = render_sim_output(bsim, brec.chamfer)
            if cfg.sfb_enabled:
                fb_ctx.surrogate_line = brec.surrogate_text
                fb_ctx.score_line = f"{brec.chamfer:.6g}"
            try:
                itrec.critique_prompt = compose_critic_prompt(fb_ctx)
                itrec.critique_text = backend.generate(itrec.critique_prompt, runner.params)
                fb_ctx.critique_response = itrec.critique_text
                itrec.revision_prompt = compose_revision_prompt(fb_ctx)
                rev_batch = generate_candidates(backend, itrec.revision_prompt, 1, runner.params)
                rev_rec, _ = runner.evaluate(rev_batch[0], "revision", it)
                itrec.revision = rev_rec
                if rev_rec.valid:
                    from .dsl import parse as dsl_parse

                    itrec.efficiency = revision_efficiency_check(
                        bcand.spec,
                        brec.chamfer,
                        dsl_parse(rev_rec.mechanism_text).spec,
                        rev_rec.chamfer,
                    )
            except BackendError as exc:
                itrec.error = f"feedback stage failed: {exc}"

        iterations.append(itrec)
        if runner.best is not None and runner.best["chamfer"] <= cfg.epsilon:
            terminated_by = "epsilon"
            break

    return RunRecord(
        task_id=task.id,
        backend_name=getattr(backend, "name", backend.__class__.__name__),
        config={k: v for k, v in asdict(cfg).items()},
        iterations=iterations,
        best=runner.best,
        first_valid_chamfer=runner.first_valid,
        totals={"candidates_generated": runner.generated, "candidates_valid": runner.valid},
        terminated_by=terminated_by,
    )


# --- Serialization -----------------------------------------------------------------

def _cand_dict(rec: CandidateRecord | None):
    return None if rec is None else asdict(rec)


def run_record_lines(record: RunRecord) -> list[str]:
    """JSONL form: one line per iteration plus a trailing summary line."""
    lines = []
    for it in record.iterations:
        lines.append(
            json.dumps(
                {
                    "type": "iteration",
                    "task_id": record.task_id,
                    "iteration": it.iteration,
                    "designer_prompt": it.designer_prompt,
                    "candidates": [_cand_dict(c) for c in it.candidates],
                    "critique_prompt": it.critique_prompt,
                    "critique_text": it.critique_text,
                    "revision_prompt": it.revision_prompt,
                    "revision": _cand_dict(it.revision),
                    "efficiency": it.efficiency,
                    "error": it.error,
                }
            )
        )
    lines.append(
        json.dumps(
            {
                "type": "summary",
                "task_id": record.task_id,
                "backend": record.backend_name,
                "config": record.config,
                "iterations": len(record.iterations),
                "best": record.best,
                "first_valid_chamfer": record.first_valid_chamfer,
                "totals": record.totals,
                "terminated_by": record.terminated_by,
            }
        )
    )
    return lines


def save_run(record: RunRecord, path) -> None:
    with open(path, "w") as fh:
        for line in run_record_lines(record):
            fh.write(line + "\n")


def load_run_summary(path) -> dict:
    """The summary line of a serialized run."""
    summary = None
    with open(path) as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                if d.get("type") == "summary":
                    summary = d
    if summary is None:
        raise ValueError(f"no summary line in {path}")
    return summary
