"""Prompt composition for the designer/critic/revision roles, plus
pluggable text-generation backends.

Prompts are assembled from ordered sections; optional sections (memory,
surrogate equation, score) are omitted wholesale when their data is
absent, so no unfilled placeholder ever reaches a backend. Rendering is a
pure function of the context: identical contexts give identical bytes.
"""
from __future__ import annotations

import json
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .dsl import API_DOC, fmt_number

GOAL_SENTENCE = (
    "Our goal is to minimise the distance. Therefore, the greater the distance, "
    "the more it is not following the target motion and deviating from the intended path."
)

# Static in-context examples shown to the designer; memory entries are
# appended after these when retrieval is enabled.
DEFAULT_EXAMPLES = [
    (
        "crank = Crank(joint0=(0, 0), distance=1, angle=0.1)\n"
        "target = Linear(joint0=crank, revolute_radius=1.5, la=(0, 0), lb=(1, 0))",
        None,
    ),
    (
        "base = Static(x=0, y=0)\n"
        "crank = Crank(joint0=base, distance=2, angle=0.1, x=2, y=0)\n"
        "target = Revolute(joint0=crank, distance0=5, joint1=(5, 0), distance1=4, x=4, y=3)",
        None,
    ),
    (
        "crank = Crank(joint0=(0, 0), distance=1.5, angle=0.2, x=1.5, y=0)\n"
        "target = Revolute(joint0=crank, distance0=3, joint1=(4, 0), distance1=3, x=2, y=2)",
        None,
    ),
]


class CompositionError(ValueError):
    """A mandatory prompt field is missing."""


class BackendError(RuntimeError):
    """The text-generation backend failed after all retries."""


@dataclass
class GenerationParams:
    temperature: float = 0.8
    max_tokens: int = 1024
    seed: int | None = None


@dataclass
class PromptContext:
    api_doc: str = API_DOC
    examples: list = field(default_factory=list)  # (mechanism_text, score|None)
    memory_block: str | None = None
    surrogate_line: str | None = None
    score_line: str | None = None
    description: str | None = None
    points: str | None = None
    target_equation: str | None = None
    designer_response: str | None = None
    critique_response: str | None = None
    simulator_output: str | None = None


def format_points(points) -> str:
    return ", ".join(f"({fmt_number(x)}, {fmt_number(y)})" for x, y in points)


def render_memory_block(entries) -> str:
    """Prompt text for retrieved memory entries (best first)."""
    parts = ["Previously validated mechanisms closest to the current target (best first):"]
    for i, e in enumerate(entries, start=1):
        parts.append(f"# Memory {i} (Chamfer distance: {e.chamfer:.6g})")
        parts.append(e.mechanism_text.rstrip("\n"))
    return "\n".join(parts)


def render_sim_output(sim, chamfer: float | None = None, max_points: int = 8) -> str:
    """Compact textual account of a simulation for critic/revision prompts."""
    if sim is None:
        return "No simulation was produced (the mechanism description did not parse)."
    if not sim.success:
        return f"Simulation failed: {sim.failure.reason}"
    pts = sim.trajectory.points
    head = ", ".join(f"({x:.4g}, {y:.4g})" for x, y in pts[:max_points])
    more = "" if len(pts) <= max_points else f", ... ({len(pts)} points total)"
    out = f"Simulation succeeded over {sim.steps} steps. Target joint trace: {head}{more}"
    if chamfer is not None:
        out += f"\nChamfer distance to the target profile: {chamfer:.6g}"
    return out


def _require(ctx: PromptContext, *fields_needed):
    for name in fields_needed:
        if getattr(ctx, name) in (None, "", []):
            raise CompositionError(f"prompt context is missing required field '{name}'")


def _memory_sections(ctx: PromptContext) -> list:
    sections = []
    if ctx.memory_block:
        sections.append(ctx.memory_block)
    lines = []
    if ctx.surrogate_line:
        lines.append(
            "The analytical equation describing the motion of the target joint "
            f"in the above code is given by: {ctx.surrogate_line}"
        )
    if ctx.score_line:
        lines.append(
            f"The Chamfer distance of the target equation in the above code is: {ctx.score_line}"
        )
    if lines:
        lines.append(GOAL_SENTENCE)
        sections.append("\n".join(lines))
    return sections


def compose_designer_prompt(ctx: PromptContext) -> str:
    _require(ctx, "api_doc", "examples", "description", "points", "target_equation")
    if not 2 <= len(ctx.examples) <= 3:
        raise CompositionError("designer prompt requires 2 or 3 examples")
    sections = [
        "You are an AI specialized in designing planar mechanisms. Based on the "
        "description, generate the appropriate mechanism using the mechanism "
        "design language below and explain each component step by step.",
        f"Commands (API Documentation):\n{ctx.api_doc.rstrip()}",
    ]
    ex_lines = ["Examples:"]
    for i, (text, score) in enumerate(ctx.examples, start=1):
        ex_lines.append(f"# Example {i}")
        ex_lines.append(text.rstrip("\n"))
        if score is not None:
            ex_lines.append(f"# Chamfer distance: {score:.6g}")
    sections.append("\n".join(ex_lines))
    sections.extend(_memory_sections(ctx))
    sections.append(f"Planar Mechanism Description:\n{ctx.description}")
    sections.append(
        f"The mechanism must pass as close as possible through all these points: {ctx.points}"
    )
    sections.append(
        f"Target analytical equation of the motion of the target joint: {ctx.target_equation}"
    )
    sections.append("Planar Mechanism Code:")
    return "\n\n".join(sections)


def compose_critic_prompt(ctx: PromptContext) -> str:
    _require(ctx, "description", "simulator_output", "designer_response")
    sections = [
        "You are a reviewer for a mechanical designer AI agent.",
        f"The following planar mechanism description: {ctx.description}",
        f"Simulator Output: {ctx.simulator_output}",
    ]
    sections.extend(_memory_sections(ctx))
    sections.append(
        "The following response was generated to fulfill the planar mechanism "
        f"description:\nResponse: {ctx.designer_response}"
    )
    sections.append(
        "Your task is to evaluate the correctness, completeness, and complexity "
        "of the designed planar mechanism.\n"
        "Check for consistency with the problem constraints and point out any "
        "errors or improvements needed.\n"
        "Evaluate the complexity of the mechanism design in terms of:\n"
        "Structural Complexity: Assess whether the design is overly complex or "
        "can be simplified while maintaining functionality.\n"
        "Design Elegance: Consider whether the design achieves the required "
        "functionality with minimal components or steps, adhering to principles "
        "of simplicity and elegance.\n"
        "Provide feedback in plain text. Point out areas where complexity could "
        "be reduced, and suggest improvements if necessary."
    )
    return "\n\n".join(sections)


def compose_revision_prompt(ctx: PromptContext) -> str:
    _require(ctx, "designer_response", "critique_response", "simulator_output")
    sections = [
        "You previously generated the following response for a planar mechanism "
        f"description: {ctx.designer_response}",
        f"The reviewer provided the following feedback: {ctx.critique_response}",
        f"Simulator Output: {ctx.simulator_output}",
    ]
    sections.extend(_memory_sections(ctx))
    sections.append(
        "Please revise your response to address the feedback and improve the "
        "planar mechanism.\n"
        "The model should structure the response ensuring each step has only one "
        "line of code, ensuring clarity and logical progression, strictly "
        "adhering to the commands provided."
    )
    sections.append("Planar Mechanism Code:")
    return "\n\n".join(sections)


# --- Backends --------------------------------------------------------------------

class ScriptedBackend:
    """Deterministic playback of canned responses, for tests and offline runs.

    Each item is either a plain string or {"response_text": ..,
    "expected_prompt_hash": optional sha256 hex prefix}. With ``loop`` the
    transcript repeats instead of exhausting.
    """

    def __init__(self, responses, loop: bool = False, name: str = "scripted"):
        self._items = list(responses)
        self._loop = loop
        self._pos = 0
        self.name = name
        self.calls: list[str] = []

    @classmethod
    def from_jsonl(cls, path, loop: bool = False, name: str = "scripted"):
        items = []
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    items.append(json.loads(line))
        return cls(items, loop=loop, name=name)

    def generate(self, prompt: str, params: GenerationParams) -> str:
        if self._pos >= len(self._items):
            if not self._loop:
                raise BackendError("scripted transcript exhausted")
            self._pos = 0
        item = self._items[self._pos]
        self._pos += 1
        self.calls.append(prompt)
        if isinstance(item, str):
            return item
        expected = item.get("expected_prompt_hash")
        if expected:
            import hashlib

            digest = hashlib.sha256(prompt.encode()).hexdigest()
            if not digest.startswith(expected):
                raise BackendError(
                    f"transcript prompt hash mismatch (expected {expected}, got {digest[:16]})"
                )
        return item["response_text"]


class HttpChatBackend:
    """Chat-completion endpoint over HTTP.

    Sends {model, messages=[{role: user, content}], temperature, max_tokens}
    and reads the first choice. The endpoint URL and model id come from
    configuration; the bearer token is read from the environment variable
    named by ``token_env``.
    """

    def __init__(
        self,
        url: str,
        model: str,
        token_env: str | None = None,
        timeout: float = 60.0,
        retries: int = 2,
        retry_wait: float = 0.5,
        name: str | None = None,
    ):
        self.url = url
        self.model = model
        self.token_env = token_env
        self.timeout = timeout
        self.retries = retries
        self.retry_wait = retry_wait
        self.name = name or model

    def generate(self, prompt: str, params: GenerationParams) -> str:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        if params.seed is not None:
            body["seed"] = params.seed
        headers = {"Content-Type": "application/json"}
        if self.token_env:
            import os

            token = os.environ.get(self.token_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        data = json.dumps(body).encode()
        last_err = None
        for attempt in range(self.retries + 1):
            try:
                req = urllib.request.Request(self.url, data=data, headers=headers)
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode())
                choice = payload["choices"][0]
                if "message" in choice:
                    return choice["message"]["content"]
                return choice["text"]
            except (urllib.error.URLError, OSError, KeyError, IndexError, ValueError) as exc:
                last_err = exc
                if attempt < self.retries:
                    time.sleep(self.retry_wait)
        raise BackendError(f"backend request failed after {self.retries + 1} attempts: {last_err}")


def backend_from_config(cfg: dict, base_dir=None):
    """Build a backend from a config mapping ({"kind": "scripted"|"http", ...})."""
    kind = cfg.get("kind")
    if kind == "scripted":
        name = cfg.get("name", "scripted")
        loop = bool(cfg.get("loop", False))
        if "responses" in cfg:
            return ScriptedBackend(cfg["responses"], loop=loop, name=name)
        path = cfg["transcript"]
        if base_dir is not None:
            import os

            path = os.path.join(base_dir, path)
        return ScriptedBackend.from_jsonl(path, loop=loop, name=name)
    if kind == "http":
        return HttpChatBackend(
            url=cfg["url"],
            model=cfg["model"],
            token_env=cfg.get("token_env"),
            timeout=cfg.get("timeout", 60.0),
            retries=cfg.get("retries", 2),
            retry_wait=cfg.get("retry_wait", 0.5),
            name=cfg.get("name"),
        )
    raise ValueError(f"unknown backend kind: {kind!r}")


@dataclass
class Candidate:
    raw_text: str | None
    spec: object = None
    errors: list = field(default_factory=list)

    @property
    def parsed(self) -> bool:
        return self.spec is not None


def generate_candidates(backend, prompt: str, b: int, params: GenerationParams) -> list:
    """Sample b candidates; unparseable or failed generations are carried as
    error-bearing candidates rather than dropped silently."""
    if b < 1:
        raise ValueError("batch size must be positive")
    from . import dsl

    out = []
    for _ in range(b):
        try:
            raw = backend.generate(prompt, params)
        except BackendError as exc:
            out.append(Candidate(raw_text=None, errors=[f"backend failure: {exc}"]))
            continue
        block = dsl.extract_block(raw)
        if block is None:
            out.append(Candidate(raw_text=raw, errors=["no mechanism code found in response"]))
            continue
        parsed = dsl.parse(block)
        if parsed.ok:
            out.append(Candidate(raw_text=raw, spec=parsed.spec))
        else:
            out.append(Candidate(raw_text=raw, errors=[str(e) for e in parsed.errors]))
    return out
