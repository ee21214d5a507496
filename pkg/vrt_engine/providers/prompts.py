"""Prompt registry used when asking an embedding or scoring service for vectors.

The strings are sent verbatim; a remote service renders `body` with the
item content in place of `{content}`.
"""

from dataclasses import dataclass
from types import MappingProxyType
from typing import List, Mapping

from ..core.models import ComposedOrder, QueryKind, QuerySpec
from ..errors import UnknownPrompt

EMBED_SYSTEM = "You are a helpful assistant."
RANKER_SYSTEM = "You are a strict video text matching judge."

VIDEO_INSTRUCTION = "Summarize this video in one word:"
TEXT_INSTRUCTION = "Summarize this text in one word:"
IMAGE_INSTRUCTION = "Summarize this image in one word:"
MATCH_INSTRUCTION = "Does the text match the video?"
COMPOSED_INSTRUCTION = (
    "Encode the representation by considering the semantic change the source "
    "video would undergo under this modification:"
)


@dataclass(frozen=True)
class PromptTemplate:
    """System prompt plus an instruction that follows the item content."""

    id: str
    system: str
    instruction: str

    @property
    def body(self) -> str:
        return "{content} " + self.instruction

    def render(self, content: str) -> str:
        return self.body.format(content=content)


PROMPTS: Mapping[str, PromptTemplate] = MappingProxyType(
    {
        "embed_video": PromptTemplate("embed_video", EMBED_SYSTEM, VIDEO_INSTRUCTION),
        "embed_text": PromptTemplate("embed_text", EMBED_SYSTEM, TEXT_INSTRUCTION),
        "embed_image": PromptTemplate("embed_image", EMBED_SYSTEM, IMAGE_INSTRUCTION),
        "rerank_match": PromptTemplate("rerank_match", RANKER_SYSTEM, MATCH_INSTRUCTION),
        "embed_composed": PromptTemplate(
            "embed_composed", EMBED_SYSTEM, COMPOSED_INSTRUCTION
        ),
    }
)

DEFAULT_PROMPT_BY_KIND = MappingProxyType(
    {
        QueryKind.TEXT: "embed_text",
        QueryKind.VIDEO: "embed_video",
        QueryKind.FRAME: "embed_image",
        QueryKind.COMPOSED: "embed_composed",
    }
)


def get_prompt(prompt_id: str) -> PromptTemplate:
    try:
        return PROMPTS[prompt_id]
    except KeyError:
        raise UnknownPrompt(f"Unknown prompt id: {prompt_id}") from None


def default_prompt_for(kind: QueryKind) -> str:
    return DEFAULT_PROMPT_BY_KIND[QueryKind(kind)]


def prompt_segments(spec: QuerySpec, prompt_id: str) -> List[str]:
    """Ordered prompt pieces after the system prompt, ending with the instruction.

    Video content is written as one `<frame:ref>` token per frame so frame
    order is visible in the output.
    """
    template = get_prompt(prompt_id)
    video = " ".join(f"<frame:{ref}>" for ref in spec.frame_refs or ())

    if spec.kind == QueryKind.TEXT:
        content = [spec.text or ""]
    elif spec.kind == QueryKind.COMPOSED:
        if spec.order == ComposedOrder.VIDEO_FIRST:
            content = [video, spec.modification or ""]
        else:
            content = [spec.modification or "", video]
    else:
        content = [video]
    return content + [template.instruction]
