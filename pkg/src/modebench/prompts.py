"""Narrative rendering of structured instances and prompt assembly.

Rendering converts one choice instance into a deterministic natural-language
description: traveller profile, trip context, then one block per available
mode with that mode's attributes and units. Exemplars additionally state the
chosen mode; the subject of a prompt never does.

The exact wording lives in a versioned template whose hash feeds the run
fingerprint, so any template edit shows up as a new experiment cell.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Sequence

from .dataset import Attribute, AttributeSchema, ChoiceInstance, Value

PROMPT_STYLES = ("direct", "cot_react")

# The answer cue marks the answer position in exemplar and training text;
# leakage scans search for it in subject/instruction text.
ANSWER_CUE = "Chosen mode:"

MISSING_TEXT = "not reported"


@dataclass(frozen=True)
class PromptTemplate:
    """Named text parts with placeholders; the fingerprint pins the wording."""

    version: str = "v1"
    system_direct: str = (
        "You are the commuter described below, deciding how to travel. "
        "Read your profile, the trip context, and the available options, then "
        "choose exactly one mode. Permitted answers: {modes}. "
        "Respond with a single JSON object of the form {{\"choice\": \"<mode>\"}} "
        "and output only the selected mode, with no explanation."
    )
    system_cot_react: str = (
        "You are the commuter described below, deciding how to travel. "
        "Read your profile, the trip context, and the available options, "
        "weigh the relevant trade-offs and contextual factors such as time, "
        "cost, and purpose, and articulate your rationale before stating your "
        "selected mode. Permitted answers: {modes}. "
        "Respond with a single JSON object of the form "
        "{{\"reasoning\": \"<your rationale>\", \"choice\": \"<mode>\"}}."
    )
    example_header: str = "Example {n}:"
    subject_header: str = "Now decide for the following situation:"
    profile_header: str = "Traveller profile:"
    context_header: str = "Trip context:"
    options_header: str = "Available options:"

    def fingerprint(self) -> str:
        doc = json.dumps(self.__dict__, sort_keys=True).encode("utf-8")
        return hashlib.sha256(doc).hexdigest()[:12]

    @classmethod
    def from_dict(cls, doc: dict) -> "PromptTemplate":
        return cls(**doc)


@dataclass(frozen=True)
class PromptBundle:
    """One fully assembled query: system text, exemplar blocks, subject."""

    system: str
    examples: tuple[str, ...]
    subject: str
    style: str
    expected_output_schema: tuple[str, ...]
    available_modes: tuple[str, ...]
    agent_id: str = ""

    def to_messages(self) -> list[dict]:
        """Chat-completion message array: one system turn, one user turn."""
        parts = list(self.examples) + [self.subject]
        return [
            {"role": "system", "content": self.system},
            {"role": "user", "content": "\n\n".join(parts)},
        ]


def _format_value(attr: Attribute, value: Value) -> str:
    if value is None:
        return MISSING_TEXT
    if attr.kind == "continuous":
        text = format(value, "g")
    else:
        text = str(value)
    if attr.unit:
        text = f"{text} {attr.unit}"
    return text


def _label(attr: Attribute, strip_mode: Optional[str] = None) -> str:
    name = attr.name
    if strip_mode and name.upper().startswith(strip_mode + "_"):
        name = name[len(strip_mode) + 1:]
    return name.replace("_", " ").strip().lower()


def render_instance(d: ChoiceInstance, schema: AttributeSchema,
                    include_choice: bool = False,
                    template: Optional[PromptTemplate] = None) -> str:
    """Deterministic narrative for one instance.

    Attributes whose name carries a '<MODE>_' prefix render inside that
    mode's option block; everything else renders in the profile (socio
    group) or trip context section. Only available modes get option blocks.
    """
    template = template or PromptTemplate()
    profile, context = [], []
    per_mode: dict[str, list[str]] = {m: [] for m in d.available_modes}
    for attr in schema.attributes:
        mode = schema.mode_of(attr.name)
        line = None
        if mode is not None:
            if mode in per_mode:
                per_mode[mode].append(
                    f"  - {_label(attr, mode)}: {_format_value(attr, d.values[attr.name])}"
                )
            continue
        line = f"- {_label(attr)}: {_format_value(attr, d.values[attr.name])}"
        if attr.group == "socio":
            profile.append(line)
        else:
            context.append(line)

    lines = [template.profile_header]
    lines += profile or ["- " + MISSING_TEXT]
    lines.append(template.context_header)
    lines += context or ["- " + MISSING_TEXT]
    lines.append(template.options_header)
    for mode in d.available_modes:
        lines.append(f"- {mode}")
        lines += per_mode[mode]
    if include_choice:
        lines.append(f"{ANSWER_CUE} {d.chosen_mode}")
    return "\n".join(lines)


def assemble_prompt(subject: ChoiceInstance,
                    examples: Sequence[ChoiceInstance],
                    style: str,
                    schema: AttributeSchema,
                    k: int = 5,
                    template: Optional[PromptTemplate] = None) -> PromptBundle:
    """Compose the system text and exemplar/subject blocks for one query.

    Zero-shot prompts carry no examples; few-shot prompts carry exactly k.
    The output instruction enumerates only the subject's available modes.
    """
    if style not in PROMPT_STYLES:
        raise ValueError(f"unknown prompt style {style!r}")
    if len(examples) not in (0, k):
        raise ValueError(f"expected 0 or {k} examples, got {len(examples)}")
    template = template or PromptTemplate()
    modes = ", ".join(subject.available_modes)
    if style == "direct":
        system = template.system_direct.format(modes=modes)
        output_schema = ("choice",)
    else:
        system = template.system_cot_react.format(modes=modes)
        output_schema = ("choice", "reasoning")
    example_blocks = tuple(
        template.example_header.format(n=n) + "\n"
        + render_instance(ex, schema, include_choice=True, template=template)
        for n, ex in enumerate(examples, start=1)
    )
    subject_block = (
        template.subject_header + "\n"
        + render_instance(subject, schema, include_choice=False, template=template)
    )
    return PromptBundle(
        system=system,
        examples=example_blocks,
        subject=subject_block,
        style=style,
        expected_output_schema=output_schema,
        available_modes=subject.available_modes,
        agent_id=subject.id,
    )


def leaks_answer(text: str, label: str) -> bool:
    """True when the text states the answer (answer cue followed by the
    label). Option listings naming the label are not leaks."""
    cue = ANSWER_CUE.lower()
    lowered = text.lower()
    start = 0
    while True:
        pos = lowered.find(cue, start)
        if pos < 0:
            return False
        tail = lowered[pos + len(cue):].lstrip()
        if tail.startswith(label.lower()):
            return True
        start = pos + len(cue)
