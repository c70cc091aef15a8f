"""Prompt rendering and LLM access, live or scripted."""

from matagent.llm.client import ChatCompletionsClient, LlmClient, LlmRequest, LlmResponse, ProviderConfig
from matagent.llm.mock import MockClient, MockScript
from matagent.llm.prompts import (
    PromptTemplate,
    TemplateLibrary,
    extract_answer,
    render_prompt,
    wrap_in_fence,
)

__all__ = [
    "ChatCompletionsClient",
    "LlmClient",
    "LlmRequest",
    "LlmResponse",
    "MockClient",
    "MockScript",
    "PromptTemplate",
    "ProviderConfig",
    "TemplateLibrary",
    "extract_answer",
    "render_prompt",
    "wrap_in_fence",
]
