"""Prompt assembly for in-context CAD code generation, and extraction of
generated code from raw model responses."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

SYSTEM_PROMPT = (
    "You are an expert CAD engineer proficient in Python and the CadQuery "
    "library. Your task is to generate precise, executable CadQuery scripts "
    "according to given natural language descriptions."
)

INSTRUCTION = (
    "Please create a CadQuery Python code which can generate a model based "
    "on the instruction and description.\n"
    "The final CadQuery code MUST BE put in '''python code''' with ONLY the "
    "executable code inside the python box, nothing else.\n"
    "Relevant examples will be provided in sequence according to their "
    "similarity to the final query, and these examples may be helpful for "
    "answer generation.\n"
    "Please don't use the non-existent '.scale()' method on Workplane objects."
)

EXAMPLES_BEGIN = "#Examples Begin:"
EXAMPLES_END = "#Examples End"

STATUS_OK = "ok"
STATUS_NO_BLOCK = "no-block"
STATUS_MULTIPLE = "multiple-blocks-resolved"


@dataclass(frozen=True)
class Prompt:
    """A fully assembled prompt: fixed system/instruction texts, selected
    demonstrations in pick order, and the query specification."""

    system: str
    instruction: str
    demonstrations: tuple[tuple[str, str], ...]
    query_spec: str
    include_examples_block: bool = True

    def render_user(self) -> str:
        parts = [self.instruction]
        if self.include_examples_block:
            block = [EXAMPLES_BEGIN]
            for spec, code in self.demonstrations:
                block.append(f"Description: {spec}")
                block.append(f"'''\n{code}\n'''")
            block.append(EXAMPLES_END)
            parts.append("\n\n".join(block))
        parts.append(f"Description: {self.query_spec}")
        return "\n\n".join(parts)

    def as_messages(self) -> list[dict[str, str]]:
        return [
            {"role": "system", "content": self.system},
            {"role": "user", "content": self.render_user()},
        ]


@dataclass
class GenerationRecord:
    """Raw model response plus the code extracted from it."""

    prompt: Prompt
    raw_response: str
    extracted_code: str | None
    extraction_status: str


def build_prompt(
    chosen: Sequence[int],
    db_specs: Sequence[str],
    db_codes: Sequence[str],
    query_spec: str,
    *,
    include_examples_block: bool = True,
) -> Prompt:
    """Assemble the prompt with demonstrations in selection order.

    ``include_examples_block=False`` drops the examples block entirely
    (zero-shot mode); an empty selection with the flag on keeps the begin/end
    markers with no body.
    """
    if not query_spec:
        raise ValueError("query spec is empty")
    demos = []
    for i in chosen:
        if not 0 <= i < len(db_specs):
            raise IndexError(f"exemplar index {i} out of range")
        demos.append((db_specs[i], db_codes[i]))
    return Prompt(
        system=SYSTEM_PROMPT,
        instruction=INSTRUCTION,
        demonstrations=tuple(demos),
        query_spec=query_spec,
        include_examples_block=include_examples_block,
    )


_BACKTICK_BLOCK = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
# Triple-apostrophe fences: an opener line ("'''" or "'''python"), or the
# inline "'''python ...'''" shape the instruction asks for.
_QUOTE_BLOCK = re.compile(r"'''(?:python)?[ \t]*\n(.*?)'''", re.DOTALL)
_QUOTE_INLINE = re.compile(r"'''python[ \t]+(.*?)'''", re.DOTALL)


def extract_code(raw_response: str) -> tuple[str | None, str]:
    """Pull generated code out of a response; the last fenced block wins.

    Returns ``(code, status)`` where status is one of ``ok``, ``no-block``
    or ``multiple-blocks-resolved``.
    """
    spans: list[tuple[int, int, str]] = []
    for match in _BACKTICK_BLOCK.finditer(raw_response):
        spans.append((match.start(), match.end(), match.group(1)))

    def inside_existing(start: int) -> bool:
        return any(s <= start < e for s, e, _ in spans)

    for pattern in (_QUOTE_BLOCK, _QUOTE_INLINE):
        for match in pattern.finditer(raw_response):
            if not inside_existing(match.start()):
                spans.append((match.start(), match.end(), match.group(1)))

    if not spans:
        return None, STATUS_NO_BLOCK
    spans.sort()
    code = spans[-1][2]
    if code.endswith("\n"):
        code = code[:-1]
    status = STATUS_OK if len(spans) == 1 else STATUS_MULTIPLE
    return code, status
