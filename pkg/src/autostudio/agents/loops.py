"""Agent call loops: prompt assembly, bounded parse retries, output checks.

Each call re-asks the backend with the parse error appended, up to the retry
limit; structural postconditions (id reuse, id conservation, one box per
entity) count as parse failures so a misbehaving backend gets feedback.
"""

from __future__ import annotations

import logging

from ..errors import MissingEntry, ParseFailure
from ..model import FrameSize, ManagerOutput, RawLayout, SubjectId, SupervisorAdvice
from .backends import ChatBackend
from .outputs import (
    parse_layout_response,
    parse_manager_output,
    parse_supervisor_advice,
    serialize_layout_for_prompt,
    serialize_manager_output,
)
from .prompts import format_size, render_prompt, system_text
from .synth import advice_context_block, manager_context_block

logger = logging.getLogger(__name__)

DEFAULT_RETRIES = 3


class AgentPipeline:
    """The three agent calls over one configured backend."""

    def __init__(self, backend: ChatBackend, retries: int = DEFAULT_RETRIES):
        self.backend = backend
        self.retries = retries

    # -- internals --

    def _ask(self, template: str, user: str, seed: int, parse):
        """Call the backend, parse, retry with the error appended."""
        last_error: ParseFailure | None = None
        prompt = user
        for attempt in range(self.retries):
            text = self.backend.complete(system_text(template), prompt, seed)
            try:
                return parse(text)
            except ParseFailure as exc:
                last_error = exc
                logger.warning("%s parse attempt %d failed: %s", template, attempt + 1, exc)
                prompt = (
                    f"{user}\n\nYour previous response could not be used: {exc} "
                    f"Answer again following the output format exactly."
                )
        raise ParseFailure(f"{template} output unusable after {self.retries} attempts: {last_error}")

    # -- the three agents --

    def run_manager(
        self,
        prompt: str,
        history: list[tuple[ManagerOutput, str]],
        seed: int = 0,
    ) -> ManagerOutput:
        """Interpret the turn prompt into captions and stable ids.

        Known subjects must reuse their prior ids; new subjects must take the
        next free top-level ids in order of appearance.
        """
        context = "\n".join(
            manager_context_block(i + 1, p, out) for i, (out, p) in enumerate(history)
        )
        user = render_prompt("manager", {"context": context, "content": prompt})
        known_ids = {sid.render() for out, _ in history for sid in out.all_ids()}
        next_free = 1 + max(
            (sid.path[0] for out, _ in history for sid in out.all_ids()), default=0
        )

        def parse(text: str) -> ManagerOutput:
            output = parse_manager_output(text)
            expected_new = next_free
            for sub in output.subjects:
                if sub.id.render() in known_ids:
                    continue
                if sub.id.path[0] != expected_new:
                    raise ParseFailure(
                        f"new subject {sub.id} must take the next free id {expected_new}"
                    )
                expected_new += 1
            return output

        return self._ask("manager", user, seed, parse)

    def run_layout(
        self,
        frame: FrameSize,
        manager: ManagerOutput,
        advice: SupervisorAdvice | None = None,
        prior_layouts: list[RawLayout] | None = None,
        seed: int = 0,
    ) -> RawLayout:
        """One bounding box per subject and component, ids carried verbatim.

        With advice present this is the refinement call: the previous layout
        and the advice ride along in the context.
        """
        context_parts = []
        for lay in prior_layouts or []:
            context_parts.append(serialize_layout_for_prompt(lay))
        if advice is not None:
            advice_text = advice.as_text()
            if advice.revised_layout is not None:
                advice_text += "\n" + serialize_layout_for_prompt(advice.revised_layout)
            context_parts.append(advice_context_block(advice_text))
        user = render_prompt(
            "layout",
            {
                "size": format_size(frame.width, frame.height),
                "context": "\n".join(context_parts),
                "content": serialize_manager_output(manager),
            },
        )
        wanted = {sid.render() for sid in manager.all_ids()}

        def parse(text: str) -> RawLayout:
            layout = parse_layout_response(text, frame, manager)
            got = {e.id.render() for e in layout.entries}
            invented = got - wanted
            if invented:
                raise ParseFailure(f"layout invented unknown ids: {sorted(invented)}")
            missing = wanted - got
            if missing:
                raise ParseFailure(f"layout is missing boxes for: {sorted(missing)}")
            return layout

        try:
            return self._ask("layout", user, seed, parse)
        except ParseFailure as exc:
            if "missing boxes" in str(exc):
                raise MissingEntry(str(exc)) from exc
            raise

    def run_supervisor(self, layout: RawLayout, seed: int = 0) -> SupervisorAdvice:
        """Critique a layout; always yields suggestions or the compliant marker."""
        user = render_prompt(
            "supervisor",
            {
                "size": format_size(layout.frame.width, layout.frame.height),
                "content": serialize_layout_for_prompt(layout),
            },
        )

        def parse(text: str) -> SupervisorAdvice:
            return parse_supervisor_advice(text, layout.frame)

        return self._ask("supervisor", user, seed, parse)
