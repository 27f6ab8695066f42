"""The three prompt-driven agents and their backends."""

from .backends import ChatBackend, HttpChatBackend, ScriptedMockBackend, transcript_key
from .loops import AgentPipeline
from .outputs import (
    parse_manager_output,
    parse_supervisor_advice,
    serialize_manager_output,
    serialize_supervisor_advice,
)
from .prompts import TEMPLATE_NAMES, render_prompt, system_text

__all__ = [
    "AgentPipeline",
    "ChatBackend",
    "HttpChatBackend",
    "ScriptedMockBackend",
    "TEMPLATE_NAMES",
    "parse_manager_output",
    "parse_supervisor_advice",
    "render_prompt",
    "serialize_manager_output",
    "serialize_supervisor_advice",
    "system_text",
    "transcript_key",
]
